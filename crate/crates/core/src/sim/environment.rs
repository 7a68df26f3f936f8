//! Piecewise-linear compliant surfaces and the penalty contact law.
//!
//! Each surface is a segment that pushes back along its outward normal with a
//! spring-damper (compression only) and resists tangential sliding with
//! regularized Coulomb friction. Forces returned here are the force the tool
//! exerts on the environment, expressed in the base frame.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_util;

/// Below this tangential speed [m/s] friction ramps linearly to zero.
pub const FRICTION_REGULARIZATION_SPEED: f64 = 1e-3;

/// Upper bound on the friction coefficient accepted by [`Surface::validate`].
pub const MAX_FRICTION: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    #[serde(with = "serde_util::vector2")]
    pub start: Vector2<f64>,
    #[serde(with = "serde_util::vector2")]
    pub end: Vector2<f64>,
    /// Normal stiffness [N/m].
    pub stiffness: f64,
    /// Normal damping [N·s/m].
    pub damping: f64,
    /// Coulomb friction coefficient.
    pub friction: f64,
}

impl Surface {
    pub fn new(
        start: Vector2<f64>,
        end: Vector2<f64>,
        stiffness: f64,
        damping: f64,
        friction: f64,
    ) -> Self {
        Self {
            start,
            end,
            stiffness,
            damping,
            friction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !((self.end - self.start).norm() > 0.0) {
            return Err(Error::invalid("surface endpoints coincide"));
        }
        if !(self.stiffness > 0.0 && self.stiffness.is_finite()) {
            return Err(Error::invalid("surface stiffness must be positive"));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(Error::invalid("surface damping must be non-negative"));
        }
        if !(self.friction >= 0.0 && self.friction < MAX_FRICTION) {
            return Err(Error::invalid(format!(
                "friction coefficient must lie in [0, {MAX_FRICTION})"
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    pub fn tangent(&self) -> Vector2<f64> {
        (self.end - self.start) / self.length()
    }

    /// Unit outward normal: the segment direction rotated a quarter turn counter-clockwise.
    pub fn normal(&self) -> Vector2<f64> {
        let t = self.tangent();
        Vector2::new(-t.y, t.x)
    }

    /// Depth of `p` below the surface, if it lies within the segment's extent.
    ///
    /// Contact is only reported up to a depth equal to the segment length so
    /// that points far behind a surface are not captured by it.
    pub fn penetration(&self, p: Vector2<f64>) -> Option<f64> {
        let rel = p - self.start;
        let along = rel.dot(&self.tangent());
        if along < 0.0 || along > self.length() {
            return None;
        }
        let depth = -rel.dot(&self.normal());
        (depth > 0.0 && depth <= self.length()).then_some(depth)
    }

    /// Normal reaction magnitude and friction magnitude for a tool at `p`
    /// moving with velocity `v`. Both are zero without penetration.
    fn reaction(&self, depth: f64, v: Vector2<f64>) -> (f64, f64) {
        let n = self.normal();
        let normal = (self.stiffness * depth - self.damping * v.dot(&n)).max(0.0);
        let vt = v.dot(&self.tangent());
        let friction = self.friction * normal * regularized_sign(vt);
        (normal, friction)
    }
}

/// `sign(v)` smoothed linearly inside the regularization band.
fn regularized_sign(v: f64) -> f64 {
    (v / FRICTION_REGULARIZATION_SPEED).clamp(-1.0, 1.0)
}

/// Detailed contact evaluation at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContactSample {
    /// Force of the tool on the environment [N].
    pub force: Vector2<f64>,
    /// Sum of normal reaction magnitudes [N].
    pub normal_force: f64,
    /// Sum of friction magnitudes [N].
    pub friction_force: f64,
    /// Deepest penetration over all surfaces [m].
    pub penetration: f64,
}

impl ContactSample {
    pub fn in_contact(&self) -> bool {
        self.normal_force > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Environment {
    pub surfaces: Vec<Surface>,
}

impl Environment {
    pub fn new(surfaces: Vec<Surface>) -> Result<Self> {
        let env = Self { surfaces };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        self.surfaces.iter().try_for_each(Surface::validate)
    }

    /// A single horizontal surface at height `y` spanning `[x0, x1]`, normal `+y`.
    pub fn horizontal(
        y: f64,
        x0: f64,
        x1: f64,
        stiffness: f64,
        damping: f64,
        friction: f64,
    ) -> Self {
        Self {
            surfaces: vec![Surface::new(
                Vector2::new(x0, y),
                Vector2::new(x1, y),
                stiffness,
                damping,
                friction,
            )],
        }
    }

    pub fn contact(&self, p: Vector2<f64>, v: Vector2<f64>) -> ContactSample {
        let mut out = ContactSample::default();
        for s in &self.surfaces {
            let Some(depth) = s.penetration(p) else {
                continue;
            };
            let (normal, friction) = s.reaction(depth, v);
            // reaction on the tool is normal*n - friction*t; the tool pushes back with the opposite
            out.force -= s.normal() * normal - s.tangent() * friction;
            out.normal_force += normal;
            out.friction_force += friction.abs();
            out.penetration = out.penetration.max(depth);
        }
        out
    }

    /// Force exerted by the tool on the environment.
    pub fn contact_force(&self, p: Vector2<f64>, v: Vector2<f64>) -> Vector2<f64> {
        self.contact(p, v).force
    }

    pub fn max_penetration(&self, p: Vector2<f64>) -> f64 {
        self.surfaces
            .iter()
            .filter_map(|s| s.penetration(p))
            .fold(0.0, f64::max)
    }

    /// Velocity actually realized when the servo commands `servo_velocity` and
    /// yields `admittance` (m/s)/N to the reaction of every penetrated surface.
    ///
    /// The normal and friction laws depend on the realized velocity, so each
    /// contact is solved in closed form (surfaces handled in order).
    pub fn realized_velocity(
        &self,
        p: Vector2<f64>,
        servo_velocity: Vector2<f64>,
        admittance: f64,
    ) -> Vector2<f64> {
        let mut v = servo_velocity;
        if admittance <= 0.0 {
            return v;
        }
        for s in &self.surfaces {
            let Some(depth) = s.penetration(p) else {
                continue;
            };
            let n = s.normal();
            let t = s.tangent();
            let vn = v.dot(&n);
            let vt = v.dot(&t);

            // vn' = vn + C f, f = k d - c vn'
            let mut vn_new =
                (vn + admittance * s.stiffness * depth) / (1.0 + admittance * s.damping);
            let mut normal = s.stiffness * depth - s.damping * vn_new;
            if normal <= 0.0 {
                normal = 0.0;
                vn_new = vn;
            }

            // vt' = vt - g sat(vt'/eps), g = C mu f
            let g = admittance * s.friction * normal;
            let ramp = vt / (1.0 + g / FRICTION_REGULARIZATION_SPEED);
            let vt_new = if ramp.abs() <= FRICTION_REGULARIZATION_SPEED {
                ramp
            } else {
                vt - g * vt.signum()
            };

            v += n * (vn_new - vn) + t * (vt_new - vt);
        }
        v
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses the line-oriented environment format:
    /// `x1 y1 x2 y2 stiffness damping friction`, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut surfaces = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split_whitespace()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(i + 1, format!("bad number: {e}")))?;
            if fields.len() != 7 {
                return Err(Error::parse(
                    i + 1,
                    format!(
                        "expected 7 fields (x1 y1 x2 y2 k_env damping mu), found {}",
                        fields.len()
                    ),
                ));
            }
            let s = Surface::new(
                Vector2::new(fields[0], fields[1]),
                Vector2::new(fields[2], fields[3]),
                fields[4],
                fields[5],
                fields[6],
            );
            s.validate()
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
            surfaces.push(s);
        }
        Ok(Self { surfaces })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# x1 y1 x2 y2 k_env damping mu\n");
        for s in &self.surfaces {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {}",
                s.start.x, s.start.y, s.end.x, s.end.y, s.stiffness, s.damping, s.friction
            );
        }
        out
    }
}
