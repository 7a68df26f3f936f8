//! Master-input streams and scripted strokes that stand in for a human operator.
//!
//! A stream is a text file of `t x y` rows in master coordinates (seconds,
//! metres); `#` starts a comment. Between rows the master position is held.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::impedance::ReferenceTrajectory;
use crate::sim::Environment;

/// Height of the floor in the built-in environment [m].
pub const FLOOR_Y: f64 = -1.0;

/// A horizontal floor with normal `+y` at `y = -1` spanning `x ∈ [0.3, 3.0]`,
/// stiffness 2·10⁶ N/m, damping 2·10³ N·s/m and friction 0.5.
pub fn default_environment() -> Environment {
    floor(2e6, 0.5)
}

/// The built-in floor with another stiffness and friction.
pub fn floor(stiffness: f64, friction: f64) -> Environment {
    Environment::horizontal(FLOOR_Y, 0.3, 3.0, stiffness, 2e3, friction)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterInput {
    pub t: f64,
    pub position: Vector2<f64>,
}

impl MasterInput {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Self {
            t,
            position: Vector2::new(x, y),
        }
    }
}

pub fn parse_master_stream(text: &str) -> Result<Vec<MasterInput>> {
    let mut out: Vec<MasterInput> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::parse(i + 1, format!("bad number `{v}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != 3 {
            return Err(Error::parse(
                i + 1,
                format!("expected `t x y`, found {} fields", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(i + 1, "non-finite value"));
        }
        let input = MasterInput::new(values[0], values[1], values[2]);
        if out.last().is_some_and(|prev| input.t < prev.t) {
            return Err(Error::parse(i + 1, "master inputs must be ordered by time"));
        }
        out.push(input);
    }
    Ok(out)
}

pub fn master_stream_to_text(inputs: &[MasterInput]) -> String {
    let mut out = String::from("# t x y\n");
    for m in inputs {
        let _ = writeln!(out, "{} {} {}", m.t, m.position.x, m.position.y);
    }
    out
}

pub fn read_master_stream(path: impl AsRef<Path>) -> Result<Vec<MasterInput>> {
    parse_master_stream(&std::fs::read_to_string(path)?)
}

/// Samples a path through `keyframes` at `rate`, blending each leg with a
/// minimum-jerk profile.
pub fn keyframe_stream(keyframes: &[(f64, Vector2<f64>)], rate: f64) -> Result<Vec<MasterInput>> {
    if keyframes.is_empty() {
        return Ok(Vec::new());
    }
    if keyframes.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::invalid("keyframe times must increase"));
    }
    let end = keyframes[keyframes.len() - 1].0;
    let n = (end * rate).round() as usize;
    let mut leg = 0;
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 / rate;
        while leg + 2 < keyframes.len() && t > keyframes[leg + 1].0 {
            leg += 1;
        }
        let position = if keyframes.len() == 1 || t <= keyframes[0].0 {
            keyframes[0].1
        } else {
            let (t0, p0) = keyframes[leg];
            let (t1, p1) = keyframes[leg + 1];
            ReferenceTrajectory::new(p0, p1, t1 - t0)?
                .sample(t - t0)
                .position
        };
        out.push(MasterInput { t, position });
    }
    Ok(out)
}

/// Geometry of a scripted slide along the built-in floor, in slave coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlideStroke {
    /// How far below the floor the master commands the slave [m].
    pub depth: f64,
    /// Horizontal drag distance [m].
    pub length: f64,
    /// Duration of the drag [s].
    pub drag_time: f64,
}

impl SlideStroke {
    /// Four slightly different slides, as several operators would give.
    pub fn variants() -> [SlideStroke; 4] {
        [
            SlideStroke {
                depth: 0.25,
                length: 1.2,
                drag_time: 6.0,
            },
            SlideStroke {
                depth: 0.22,
                length: 1.1,
                drag_time: 5.5,
            },
            SlideStroke {
                depth: 0.28,
                length: 1.25,
                drag_time: 6.5,
            },
            SlideStroke {
                depth: 0.25,
                length: 1.15,
                drag_time: 5.0,
            },
        ]
    }

    /// Hold, press down into the floor, drag along `+x`, lift and hold.
    pub fn stream(
        &self,
        slave_start: Vector2<f64>,
        position_scale: f64,
        rate: f64,
    ) -> Result<Vec<MasterInput>> {
        let s = slave_start;
        let low = FLOOR_Y - self.depth;
        let t_drag = 1.5 + self.drag_time;
        let keys = [
            (0.0, s),
            (0.5, s),
            (1.5, Vector2::new(s.x, low)),
            (t_drag, Vector2::new(s.x + self.length, low)),
            (t_drag + 1.0, Vector2::new(s.x + self.length, s.y)),
            (t_drag + 1.5, Vector2::new(s.x + self.length, s.y)),
        ];
        let master: Vec<(f64, Vector2<f64>)> =
            keys.iter().map(|(t, p)| (*t, p / position_scale)).collect();
        keyframe_stream(&master, rate)
    }
}

/// Straight free-space stroke of `length` along the unit `direction` from
/// the slave start, in slave coordinates.
pub fn line_stream(
    slave_start: Vector2<f64>,
    direction: Vector2<f64>,
    length: f64,
    duration: f64,
    position_scale: f64,
    rate: f64,
) -> Result<Vec<MasterInput>> {
    let s = slave_start;
    let e = s + direction.normalize() * length;
    let keys = [(0.0, s), (0.5, s), (0.5 + duration, e), (1.5 + duration, e)];
    let master: Vec<(f64, Vector2<f64>)> =
        keys.iter().map(|(t, p)| (*t, p / position_scale)).collect();
    keyframe_stream(&master, rate)
}
