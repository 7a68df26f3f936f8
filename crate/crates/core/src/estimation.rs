//! Contact force estimate seen by the learner.
//!
//! The true simulated force is corrupted with the terms a pressure-based
//! estimate typically misses: a bias proportional to velocity (piston
//! friction), one proportional to acceleration (unmodelled inertia), a
//! constant offset and white noise.

use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_util;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// [N per m/s]
    pub velocity_bias_gain: f64,
    /// [N per m/s²]
    pub acceleration_bias_gain: f64,
    /// [N]
    #[serde(with = "serde_util::vector2")]
    pub constant_bias: Vector2<f64>,
    /// Standard deviation of the per-axis noise [N].
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            velocity_bias_gain: 200.0,
            acceleration_bias_gain: 0.0,
            constant_bias: Vector2::zeros(),
            noise_std: 50.0,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    /// An estimator that returns the true force.
    pub fn ideal() -> Self {
        Self {
            velocity_bias_gain: 0.0,
            acceleration_bias_gain: 0.0,
            constant_bias: Vector2::zeros(),
            noise_std: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.velocity_bias_gain.is_finite()
            && self.acceleration_bias_gain.is_finite()
            && self.constant_bias.iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("estimator gains must be finite"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("estimator noise_std must be non-negative"));
        }
        Ok(())
    }
}

/// Stateful estimator owning its random stream.
#[derive(Debug, Clone)]
pub struct ForceEstimator {
    pub config: EstimatorConfig,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl ForceEstimator {
    pub fn new(config: EstimatorConfig) -> Result<Self> {
        config.validate()?;
        let noise = if config.noise_std > 0.0 {
            Some(Normal::new(0.0, config.noise_std).map_err(|e| Error::invalid(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            noise,
        })
    }

    /// Deterministic part of the error for a given motion.
    pub fn bias(&self, velocity: Vector2<f64>, acceleration: Vector2<f64>) -> Vector2<f64> {
        velocity * self.config.velocity_bias_gain
            + acceleration * self.config.acceleration_bias_gain
            + self.config.constant_bias
    }

    pub fn estimate(
        &mut self,
        true_force: Vector2<f64>,
        velocity: Vector2<f64>,
        acceleration: Vector2<f64>,
    ) -> Vector2<f64> {
        let mut f = true_force + self.bias(velocity, acceleration);
        if let Some(n) = &self.noise {
            f.x += n.sample(&mut self.rng);
            f.y += n.sample(&mut self.rng);
        }
        f
    }
}
