//! Controller assembled from a learned direction and compliance model.

use std::path::Path;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::compliance::build_stiffness;
use crate::error::{Error, Result};
use crate::impedance::{gains_from_impedance, ControlGains, ImpedanceSpec};
use crate::serde_util;

/// Planar controller ready for reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnedController {
    /// Unit desired direction.
    #[serde(with = "serde_util::vector2")]
    pub direction: Vector2<f64>,
    /// Trajectory length δ [m].
    pub trajectory_length: f64,
    /// Suggested start of the reproduction [m].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 2]>,
    #[serde(with = "serde_util::matrix2")]
    pub stiffness: Matrix2<f64>,
    #[serde(with = "serde_util::matrix2")]
    pub damping: Matrix2<f64>,
    pub gains: ControlGains<2>,
    #[serde(with = "serde_util::vector2_list")]
    pub compliant_directions: Vec<Vector2<f64>>,
    /// BIC per candidate number of compliant axes.
    #[serde(default)]
    pub bic: Vec<f64>,
}

/// Builds `K_d`, derives the gains and packages the trajectory.
pub fn assemble_controller(
    direction: Vector2<f64>,
    compliant: &[Vector2<f64>],
    k_stiff: f64,
    compliance_ratio: f64,
    damping: Matrix2<f64>,
    trajectory_length: f64,
) -> Result<LearnedController> {
    if !(direction.norm() > 0.0) {
        return Err(Error::invalid("desired direction must be nonzero"));
    }
    if !(trajectory_length > 0.0 && trajectory_length.is_finite()) {
        return Err(Error::invalid("trajectory length δ must be positive"));
    }
    let direction = direction.normalize();
    let stiffness = build_stiffness(&direction, compliant, k_stiff, compliance_ratio)?;
    let spec = ImpedanceSpec::new(damping, stiffness);
    spec.validate()?;
    let gains = gains_from_impedance(&spec)?;
    Ok(LearnedController {
        direction,
        trajectory_length,
        start: None,
        stiffness,
        damping,
        gains,
        compliant_directions: compliant.to_vec(),
        bic: Vec::new(),
    })
}

impl LearnedController {
    /// Re-derives the gains and checks the stored values agree.
    pub fn validate(&self) -> Result<()> {
        if (self.direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("controller direction is not a unit vector"));
        }
        if !(self.trajectory_length > 0.0) {
            return Err(Error::invalid("trajectory length δ must be positive"));
        }
        let spec = ImpedanceSpec::new(self.damping, self.stiffness);
        spec.validate()?;
        let gains = gains_from_impedance(&spec)?;
        let close =
            |a: &Matrix2<f64>, b: &Matrix2<f64>| (a - b).amax() <= 1e-9 * a.amax().max(1e-300);
        if !close(&gains.position, &self.gains.position) || !close(&gains.force, &self.gains.force)
        {
            return Err(Error::invalid("stored gains do not match D_d and K_d"));
        }
        Ok(())
    }

    pub fn impedance(&self) -> ImpedanceSpec<2> {
        ImpedanceSpec::new(self.damping, self.stiffness)
    }

    pub fn to_toml(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            controller: &'a LearnedController,
        }
        toml::to_string(&Doc { controller: self }).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            controller: LearnedController,
        }
        let doc: Doc = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        doc.controller.validate()?;
        Ok(doc.controller)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}
