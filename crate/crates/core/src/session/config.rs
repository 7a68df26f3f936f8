//! Session configuration document (TOML).
//!
//! Every table and key is optional; missing values take their defaults.
//!
//! ```toml
//! environment = "floor.env"
//! sim_rate = 500.0
//! slave_start = [1.0, -0.85]
//! trajectory_length = 1.2
//!
//! [coupling]
//! position_scale = 10.0
//!
//! [estimator]
//! noise_std = 50.0
//!
//! [learning]
//! k_stiff = 40000.0
//! ```

use std::path::{Path, PathBuf};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::EstimatorConfig;
use crate::learning::LearningParams;
use crate::sim::{Environment, ManipulatorModel};
use crate::teleop::CouplingConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Environment file; relative paths resolve against the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub environment: Option<PathBuf>,
    /// Physics and control rate [Hz].
    pub sim_rate: f64,
    /// Slave tip position at the start of a demonstration [m].
    pub slave_start: [f64; 2],
    /// Length δ of reproduced trajectories [m].
    pub trajectory_length: f64,
    /// Duration of the reproduced quintic [s].
    pub reproduction_duration: f64,
    /// Time simulated after the quintic ends [s].
    pub settle_time: f64,
    pub manipulator: ManipulatorModel,
    pub coupling: CouplingConfig,
    pub estimator: EstimatorConfig,
    pub learning: LearningParams,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            environment: None,
            sim_rate: 500.0,
            slave_start: [1.0, -0.85],
            trajectory_length: 1.2,
            reproduction_duration: 5.0,
            settle_time: 1.0,
            manipulator: ManipulatorModel::default(),
            coupling: CouplingConfig::default(),
            estimator: EstimatorConfig::default(),
            learning: LearningParams::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        let dt = 1.0 / self.sim_rate;
        if !(self.sim_rate.is_finite() && dt > 0.0 && dt <= crate::sim::world::MAX_STEP) {
            return Err(Error::Config(format!(
                "sim_rate must be at least {} Hz",
                1.0 / crate::sim::world::MAX_STEP
            )));
        }
        if !(self.trajectory_length > 0.0 && self.trajectory_length.is_finite()) {
            return Err(Error::Config("trajectory_length must be positive".into()));
        }
        if !(self.reproduction_duration > 0.0 && self.reproduction_duration.is_finite()) {
            return Err(Error::Config(
                "reproduction_duration must be positive".into(),
            ));
        }
        if !(self.settle_time >= 0.0 && self.settle_time.is_finite()) {
            return Err(Error::Config("settle_time must be non-negative".into()));
        }
        if !self.slave_start.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("slave_start must be finite".into()));
        }
        self.manipulator.validate()?;
        self.coupling.validate()?;
        self.estimator.validate()?;
        self.learning.validate()?;
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sim_rate
    }

    pub fn slave_start(&self) -> Vector2<f64> {
        Vector2::new(self.slave_start[0], self.slave_start[1])
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SessionConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a config file, resolving a relative environment path against it.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let (Some(env), Some(dir)) = (&cfg.environment, path.parent()) {
            if env.is_relative() {
                cfg.environment = Some(dir.join(env));
            }
        }
        Ok(cfg)
    }

    /// The configured environment file, or the built-in demonstration floor.
    pub fn load_environment(&self) -> Result<Environment> {
        match &self.environment {
            Some(p) => Environment::from_file(p),
            None => Ok(super::scripts::default_environment()),
        }
    }
}
