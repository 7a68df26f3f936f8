//! Target impedance, the required-velocity control law and quintic references.
//!
//! The controller never renders inertia: the target behaviour is
//! `F_d - F = -D_d (ẋ_d - ẋ) - K_d (x_d - x)` and it is realized by commanding
//! the velocity servo with
//!
//! ```text
//! ẋ_r = ẋ_d + Λχ (x_d - x) + Λf (F_d - F),   Λf = D_d⁻¹,  Λχ = D_d⁻¹ K_d
//! ```
//!
//! When the servo tracks `ẋ_r` exactly, the two are algebraically identical.
//! Forces are those of the tool on the environment.

use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_util;

/// Desired inertia, damping and stiffness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceSpec<const N: usize> {
    /// Kept for completeness; the control law neglects inertia.
    #[serde(default, with = "serde_util::option_smatrix")]
    pub inertia: Option<SMatrix<f64, N, N>>,
    #[serde(with = "serde_util::smatrix")]
    pub damping: SMatrix<f64, N, N>,
    #[serde(with = "serde_util::smatrix")]
    pub stiffness: SMatrix<f64, N, N>,
}

/// Position and force gains of the required-velocity law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlGains<const N: usize> {
    /// Λχ [(m/s)/m].
    #[serde(with = "serde_util::smatrix")]
    pub position: SMatrix<f64, N, N>,
    /// Λf [(m/s)/N].
    #[serde(with = "serde_util::smatrix")]
    pub force: SMatrix<f64, N, N>,
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    let dynamic = DMatrix::from_column_slice(N, N, sym.as_slice());
    SymmetricEigen::new(dynamic).eigenvalues.min()
}

/// True when `m` is symmetric (to a relative `1e-12`) with strictly positive eigenvalues.
pub fn is_symmetric_positive_definite<const N: usize>(m: &SMatrix<f64, N, N>) -> bool {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    (m - m.transpose()).amax() <= 1e-12 * scale && min_symmetric_eigenvalue(m) > 0.0
}

impl<const N: usize> ImpedanceSpec<N> {
    pub fn new(damping: SMatrix<f64, N, N>, stiffness: SMatrix<f64, N, N>) -> Self {
        Self {
            inertia: None,
            damping,
            stiffness,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !is_symmetric_positive_definite(&self.damping) {
            return Err(Error::NotPositiveDefinite("damping matrix D_d"));
        }
        if !is_symmetric_positive_definite(&self.stiffness) {
            return Err(Error::NotPositiveDefinite("stiffness matrix K_d"));
        }
        if let Some(m) = &self.inertia {
            if min_symmetric_eigenvalue(m) < 0.0 {
                return Err(Error::NotPositiveDefinite("inertia matrix M_d"));
            }
        }
        Ok(())
    }
}

impl<const N: usize> ControlGains<N> {
    /// Recovers `(D_d, K_d)` from the gains.
    pub fn to_impedance(&self) -> Result<(SMatrix<f64, N, N>, SMatrix<f64, N, N>)> {
        let damping = self
            .force
            .try_inverse()
            .ok_or(Error::SingularMatrix("force gain Λf"))?;
        Ok((damping, damping * self.position))
    }
}

/// Derives `Λf = D_d⁻¹` and `Λχ = D_d⁻¹ K_d`, checking both are positive-definite.
pub fn gains_from_impedance<const N: usize>(spec: &ImpedanceSpec<N>) -> Result<ControlGains<N>> {
    let force = spec
        .damping
        .try_inverse()
        .filter(|m| m.iter().all(|x| x.is_finite()))
        .ok_or(Error::SingularMatrix("damping matrix D_d"))?;
    let position = force * spec.stiffness;
    if !(min_symmetric_eigenvalue(&force) > 0.0) {
        return Err(Error::NotPositiveDefinite("force gain Λf"));
    }
    if !(min_symmetric_eigenvalue(&position) > 0.0) {
        return Err(Error::NotPositiveDefinite("position gain Λχ"));
    }
    Ok(ControlGains { position, force })
}

/// Required velocity for the inner servo.
pub fn required_velocity<const N: usize>(
    desired_velocity: &SVector<f64, N>,
    desired_position: &SVector<f64, N>,
    position: &SVector<f64, N>,
    desired_force: &SVector<f64, N>,
    force: &SVector<f64, N>,
    gains: &ControlGains<N>,
) -> SVector<f64, N> {
    desired_velocity
        + gains.position * (desired_position - position)
        + gains.force * (desired_force - force)
}

/// `(F_d - F) + D_d (ẋ_d - ẋ) + K_d (x_d - x)`: zero when the target impedance holds.
pub fn target_impedance_residual<const N: usize>(
    desired_velocity: &SVector<f64, N>,
    velocity: &SVector<f64, N>,
    desired_position: &SVector<f64, N>,
    position: &SVector<f64, N>,
    desired_force: &SVector<f64, N>,
    force: &SVector<f64, N>,
    spec: &ImpedanceSpec<N>,
) -> SVector<f64, N> {
    (desired_force - force)
        + spec.damping * (desired_velocity - velocity)
        + spec.stiffness * (desired_position - position)
}

/// Straight-line quintic (minimum-jerk) reference from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTrajectory<const N: usize> {
    #[serde(with = "serde_util::svector")]
    pub start: SVector<f64, N>,
    #[serde(with = "serde_util::svector")]
    pub end: SVector<f64, N>,
    pub duration: f64,
}

/// Position, velocity and acceleration of a reference at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample<const N: usize> {
    pub position: SVector<f64, N>,
    pub velocity: SVector<f64, N>,
    pub acceleration: SVector<f64, N>,
}

impl<const N: usize> ReferenceTrajectory<N> {
    pub fn new(start: SVector<f64, N>, end: SVector<f64, N>, duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid(format!(
                "trajectory duration must be positive, got {duration}"
            )));
        }
        Ok(Self {
            start,
            end,
            duration,
        })
    }

    /// Reference of length `length` along the unit `direction`.
    pub fn along(
        start: SVector<f64, N>,
        direction: SVector<f64, N>,
        length: f64,
        duration: f64,
    ) -> Result<Self> {
        Self::new(start, start + direction * length, duration)
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    /// Unit direction of travel; zero for a degenerate reference.
    pub fn direction(&self) -> SVector<f64, N> {
        let d = self.end - self.start;
        let n = d.norm();
        if n > 0.0 {
            d / n
        } else {
            d
        }
    }

    /// Samples the reference, holding the end values outside `[0, T]`.
    pub fn sample(&self, t: f64) -> ReferenceSample<N> {
        let delta = self.end - self.start;
        if t <= 0.0 {
            return ReferenceSample {
                position: self.start,
                velocity: SVector::zeros(),
                acceleration: SVector::zeros(),
            };
        }
        if t >= self.duration {
            return ReferenceSample {
                position: self.end,
                velocity: SVector::zeros(),
                acceleration: SVector::zeros(),
            };
        }
        let big_t = self.duration;
        let s = t / big_t;
        let s2 = s * s;
        let s3 = s2 * s;
        let blend = s3 * (10.0 - 15.0 * s + 6.0 * s2);
        let blend_d = 30.0 * s2 * (1.0 - 2.0 * s + s2) / big_t;
        let blend_dd = 60.0 * s * (1.0 - 3.0 * s + 2.0 * s2) / (big_t * big_t);
        ReferenceSample {
            position: self.start + delta * blend,
            velocity: delta * blend_d,
            acceleration: delta * blend_dd,
        }
    }
}
