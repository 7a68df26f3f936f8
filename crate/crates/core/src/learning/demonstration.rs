//! Recorded demonstrations, block-average resampling and the text log format.
//!
//! A log starts with a header line and an optional label line followed by one
//! whitespace-separated row per sample:
//!
//! ```text
//! #demo dim=2 rate=500
//! #label slide 1
//! 0 1 -0.85 0 0
//! 0.002 1 -0.85 0 0
//! ```
//!
//! Planar rows are `t x y fx fy`, spatial rows `t x y z fx fy fz`. Numbers are
//! written in shortest round-trip form so a log reloads bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Planar demonstrations keep their third component at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Planar,
    Spatial,
}

impl Dimension {
    pub fn count(self) -> usize {
        match self {
            Dimension::Planar => 2,
            Dimension::Spatial => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub position: Vector3<f64>,
    /// Estimated force of the tool on the environment [N].
    pub force: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub dimension: Dimension,
    /// [Hz]
    pub sample_rate: f64,
    pub label: String,
    pub samples: Vec<Sample>,
}

impl Demonstration {
    pub fn new(
        dimension: Dimension,
        sample_rate: f64,
        label: impl Into<String>,
        samples: Vec<Sample>,
    ) -> Result<Self> {
        let demo = Self {
            dimension,
            sample_rate,
            label: label.into(),
            samples,
        };
        demo.validate()?;
        Ok(demo)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if self.samples.len() < 2 {
            return Err(Error::invalid("a demonstration needs at least two samples"));
        }
        if self.samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::invalid("timestamps must be strictly increasing"));
        }
        if self.dimension == Dimension::Planar
            && self
                .samples
                .iter()
                .any(|s| s.position.z != 0.0 || s.force.z != 0.0)
        {
            return Err(Error::invalid(
                "planar demonstration has a nonzero z component",
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Block-averages down to `target_rate`. The rate ratio must be an integer;
    /// a trailing partial block is dropped.
    pub fn resample(&self, target_rate: f64) -> Result<Demonstration> {
        let mismatch = Error::RateMismatch {
            from: self.sample_rate,
            to: target_rate,
        };
        if !(target_rate > 0.0 && target_rate <= self.sample_rate) {
            return Err(mismatch);
        }
        let ratio = self.sample_rate / target_rate;
        let block = ratio.round();
        if (ratio - block).abs() > 1e-9 * ratio {
            return Err(mismatch);
        }
        let block = block as usize;
        let samples: Vec<Sample> = self
            .samples
            .chunks_exact(block)
            .map(|chunk| {
                let n = chunk.len() as f64;
                let mut t = 0.0;
                let mut position = Vector3::zeros();
                let mut force = Vector3::zeros();
                for s in chunk {
                    t += s.t;
                    position += s.position;
                    force += s.force;
                }
                Sample {
                    t: t / n,
                    position: position / n,
                    force: force / n,
                }
            })
            .collect();
        if samples.len() < 2 {
            return Err(Error::invalid(format!(
                "demonstration of {} samples is too short to resample by {block}",
                self.samples.len()
            )));
        }
        Ok(Demonstration {
            dimension: self.dimension,
            sample_rate: target_rate,
            label: self.label.clone(),
            samples,
        })
    }

    /// Applies a rotation to positions and forces.
    pub fn rotated(&self, rotation: &nalgebra::Rotation3<f64>) -> Demonstration {
        Demonstration {
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    t: s.t,
                    position: rotation * s.position,
                    force: rotation * s.force,
                })
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "#demo dim={} rate={}",
            self.dimension.count(),
            self.sample_rate
        );
        if !self.label.is_empty() {
            let _ = writeln!(out, "#label {}", self.label.replace('\n', " "));
        }
        for s in &self.samples {
            let p = &s.position;
            let f = &s.force;
            match self.dimension {
                Dimension::Planar => {
                    let _ = writeln!(out, "{} {} {} {} {}", s.t, p.x, p.y, f.x, f.y);
                }
                Dimension::Spatial => {
                    let _ = writeln!(
                        out,
                        "{} {} {} {} {} {} {}",
                        s.t, p.x, p.y, p.z, f.x, f.y, f.z
                    );
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Demonstration> {
        let mut dimension = None;
        let mut rate = None;
        let mut label = String::new();
        let mut samples = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#demo") {
                for field in rest.split_whitespace() {
                    let (key, value) = field.split_once('=').ok_or_else(|| {
                        Error::parse(line_no, format!("malformed header field `{field}`"))
                    })?;
                    match key {
                        "dim" => {
                            dimension = Some(match value {
                                "2" => Dimension::Planar,
                                "3" => Dimension::Spatial,
                                _ => {
                                    return Err(Error::parse(
                                        line_no,
                                        format!("unsupported dimension `{value}`"),
                                    ))
                                }
                            })
                        }
                        "rate" => {
                            rate = Some(value.parse::<f64>().map_err(|_| {
                                Error::parse(line_no, format!("bad rate `{value}`"))
                            })?)
                        }
                        _ => {
                            return Err(Error::parse(
                                line_no,
                                format!("unknown header field `{key}`"),
                            ))
                        }
                    }
                }
                continue;
            }
            if let Some(rest) = line.strip_prefix("#label") {
                label = rest.trim().to_string();
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let dim =
                dimension.ok_or_else(|| Error::parse(line_no, "sample before `#demo` header"))?;
            let values = line
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::parse(line_no, format!("bad number `{v}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let expected = 1 + 2 * dim.count();
            if values.len() != expected {
                return Err(Error::parse(
                    line_no,
                    format!("expected {expected} columns, found {}", values.len()),
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(line_no, "non-finite value"));
            }
            let sample = match dim {
                Dimension::Planar => Sample {
                    t: values[0],
                    position: Vector3::new(values[1], values[2], 0.0),
                    force: Vector3::new(values[3], values[4], 0.0),
                },
                Dimension::Spatial => Sample {
                    t: values[0],
                    position: Vector3::new(values[1], values[2], values[3]),
                    force: Vector3::new(values[4], values[5], values[6]),
                },
            };
            if let Some(prev) = samples.last() {
                let prev: &Sample = prev;
                if !(sample.t > prev.t) {
                    return Err(Error::parse(
                        line_no,
                        "timestamps must be strictly increasing",
                    ));
                }
            }
            samples.push(sample);
        }
        let dimension = dimension.ok_or_else(|| Error::parse(1, "missing `#demo` header"))?;
        let sample_rate = rate.ok_or_else(|| Error::parse(1, "header lacks `rate=`"))?;
        Demonstration::new(dimension, sample_rate, label, samples)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Demonstration> {
        Demonstration::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
