//! Planar two-link arm kinematics.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_util;

/// Geometry and servo parameters of the slave manipulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManipulatorModel {
    /// Link lengths [m], base link first.
    pub link_lengths: [f64; 2],
    /// Payload at the tip [kg]. Gravity on it is compensated by the servo.
    pub payload_mass: f64,
    /// Origin of the base frame in world coordinates [m].
    #[serde(with = "serde_util::vector2")]
    pub base: Vector2<f64>,
    /// Time constant of the velocity servo [s].
    pub servo_time_constant: f64,
    /// Velocity yielded per newton of reaction force [(m/s)/N].
    pub servo_admittance: f64,
}

impl Default for ManipulatorModel {
    fn default() -> Self {
        Self {
            link_lengths: [1.6, 1.6],
            payload_mass: 475.0,
            base: Vector2::zeros(),
            servo_time_constant: 0.05,
            servo_admittance: 1e-4,
        }
    }
}

/// Which of the two inverse kinematics solutions to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElbowBranch {
    /// Negative elbow angle.
    Down,
    /// Positive elbow angle.
    Up,
}

impl ElbowBranch {
    pub fn of(q: [f64; 2]) -> Self {
        if q[1] > 0.0 {
            ElbowBranch::Up
        } else {
            ElbowBranch::Down
        }
    }
}

impl ManipulatorModel {
    pub fn validate(&self) -> Result<()> {
        if !self.link_lengths.iter().all(|l| l.is_finite() && *l > 0.0) {
            return Err(Error::invalid("link lengths must be positive"));
        }
        if !(self.payload_mass >= 0.0) {
            return Err(Error::invalid("payload mass must be non-negative"));
        }
        if !(self.servo_time_constant > 0.0) {
            return Err(Error::invalid("servo time constant must be positive"));
        }
        if !(self.servo_admittance >= 0.0) {
            return Err(Error::invalid("servo admittance must be non-negative"));
        }
        Ok(())
    }

    /// Outer workspace radius.
    pub fn reach(&self) -> f64 {
        self.link_lengths[0] + self.link_lengths[1]
    }

    /// Inner workspace radius.
    pub fn inner_radius(&self) -> f64 {
        (self.link_lengths[0] - self.link_lengths[1]).abs()
    }

    pub fn forward_kinematics(&self, q: [f64; 2]) -> Vector2<f64> {
        let [l1, l2] = self.link_lengths;
        let q12 = q[0] + q[1];
        self.base
            + Vector2::new(
                l1 * q[0].cos() + l2 * q12.cos(),
                l1 * q[0].sin() + l2 * q12.sin(),
            )
    }

    pub fn inverse_kinematics(
        &self,
        target: Vector2<f64>,
        branch: ElbowBranch,
    ) -> Result<[f64; 2]> {
        let [l1, l2] = self.link_lengths;
        let d = target - self.base;
        let r = d.norm();
        let tol = 1e-12 * self.reach();
        if r > self.reach() + tol || r < self.inner_radius() - tol {
            return Err(Error::Unreachable {
                x: target.x,
                y: target.y,
                radius: r,
                inner: self.inner_radius(),
                outer: self.reach(),
            });
        }
        let c2 = ((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
        let q2 = match branch {
            ElbowBranch::Down => -c2.acos(),
            ElbowBranch::Up => c2.acos(),
        };
        let q1 = d.y.atan2(d.x) - (l2 * q2.sin()).atan2(l1 + l2 * q2.cos());
        Ok([q1, q2])
    }

    /// Tip velocity Jacobian at joint angles `q`.
    pub fn jacobian(&self, q: [f64; 2]) -> Matrix2<f64> {
        let [l1, l2] = self.link_lengths;
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        Matrix2::new(-l1 * s1 - l2 * s12, -l2 * s12, l1 * c1 + l2 * c12, l2 * c12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Vector2<f64>, b: Vector2<f64>, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn forward_kinematics_examples() {
        let m = ManipulatorModel::default();
        assert!(close(
            m.forward_kinematics([0.0, 0.0]),
            Vector2::new(3.2, 0.0),
            1e-12
        ));
        assert!(close(
            m.forward_kinematics([FRAC_PI_2, 0.0]),
            Vector2::new(0.0, 3.2),
            1e-12
        ));
        // first link straight up, second link pointing along +x
        assert!(close(
            m.forward_kinematics([FRAC_PI_2, -FRAC_PI_2]),
            Vector2::new(1.6, 1.6),
            1e-12
        ));
    }

    #[test]
    fn inverse_kinematics_examples() {
        let m = ManipulatorModel::default();
        let q = m
            .inverse_kinematics(Vector2::new(3.2, 0.0), ElbowBranch::Down)
            .unwrap();
        assert!(q[0].abs() < 1e-6 && q[1].abs() < 1e-6);

        let q = m
            .inverse_kinematics(Vector2::new(1.6, 1.6), ElbowBranch::Down)
            .unwrap();
        assert!((q[0] - FRAC_PI_2).abs() < 1e-12);
        assert!((q[1] + FRAC_PI_2).abs() < 1e-12);

        let err = m.inverse_kinematics(Vector2::new(4.0, 0.0), ElbowBranch::Down);
        assert!(matches!(err, Err(Error::Unreachable { .. })));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = ManipulatorModel::default();
        let q = [0.3, -1.1];
        let j = m.jacobian(q);
        let h = 1e-6;
        for col in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[col] += h;
            qm[col] -= h;
            let fd = (m.forward_kinematics(qp) - m.forward_kinematics(qm)) / (2.0 * h);
            assert!((fd - j.column(col)).norm() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_model() {
        let mut m = ManipulatorModel::default();
        m.link_lengths[1] = 0.0;
        assert!(m.validate().is_err());
        let m = ManipulatorModel {
            servo_time_constant: 0.0,
            ..Default::default()
        };
        assert!(m.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ik_round_trips(r in 0.05f64..3.19, phi in -3.1f64..3.1, up in any::<bool>()) {
                let m = ManipulatorModel::default();
                let target = Vector2::new(r * phi.cos(), r * phi.sin());
                let branch = if up { ElbowBranch::Up } else { ElbowBranch::Down };
                let q = m.inverse_kinematics(target, branch).unwrap();
                prop_assert!((m.forward_kinematics(q) - target).norm() < 1e-9);
            }

            #[test]
            fn tip_stays_within_reach(q1 in -6.3f64..6.3, q2 in -6.3f64..6.3) {
                let m = ManipulatorModel::default();
                let r = (m.forward_kinematics([q1, q2]) - m.base).norm();
                prop_assert!(r <= m.reach() + 1e-12);
            }
        }
    }
}
