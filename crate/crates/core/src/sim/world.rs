//! World state and the velocity-servo stepper.
//!
//! The inner joint-level control of the real machine is replaced by an ideal
//! servo: a first-order lag from the commanded (required) tip velocity to a
//! servo velocity, plus a small admittance that lets the tip yield to contact
//! reactions. Positions are integrated in Cartesian space and mapped back to
//! joint angles, so the tip always equals forward kinematics of the joints.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::environment::Environment;
use super::kinematics::{ElbowBranch, ManipulatorModel};
use crate::error::{Error, Result};
use crate::serde_util;

/// Distance kept from the inner and outer workspace boundaries [m].
pub const WORKSPACE_MARGIN: f64 = 0.01;

/// Largest integration substep [s].
const MAX_SUBSTEP: f64 = 1e-3;

/// Largest accepted step [s].
pub const MAX_STEP: f64 = 0.01;

/// Tool tip state in the base frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianState {
    #[serde(with = "serde_util::vector2")]
    pub position: Vector2<f64>,
    #[serde(with = "serde_util::vector2")]
    pub velocity: Vector2<f64>,
    /// True force of the tool on the environment [N].
    #[serde(with = "serde_util::vector2")]
    pub contact_force: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub joint_angles: [f64; 2],
    pub joint_velocities: [f64; 2],
    pub tip: CartesianState,
    /// Internal state of the velocity servo lag.
    #[serde(with = "serde_util::vector2")]
    pub servo_velocity: Vector2<f64>,
    pub time: f64,
    /// Set when the last step had to be projected to stay inside the workspace.
    pub workspace_limited: bool,
}

/// Owns the plant description; stepping is a pure function of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulator {
    pub model: ManipulatorModel,
    pub env: Environment,
}

impl Simulator {
    pub fn new(model: ManipulatorModel, env: Environment) -> Result<Self> {
        model.validate()?;
        env.validate()?;
        Ok(Self { model, env })
    }

    /// A motionless world with the tip at `position`.
    pub fn at_rest(&self, position: Vector2<f64>, branch: ElbowBranch) -> Result<WorldState> {
        let q = self.model.inverse_kinematics(position, branch)?;
        let p = self.model.forward_kinematics(q);
        Ok(WorldState {
            joint_angles: q,
            joint_velocities: [0.0; 2],
            tip: CartesianState {
                position: p,
                velocity: Vector2::zeros(),
                contact_force: self.env.contact_force(p, Vector2::zeros()),
            },
            servo_velocity: Vector2::zeros(),
            time: 0.0,
            workspace_limited: false,
        })
    }

    /// Advances `world` by `dt` while the servo tracks `command`.
    pub fn step(&self, world: &WorldState, command: Vector2<f64>, dt: f64) -> Result<WorldState> {
        if !(dt > 0.0 && dt <= MAX_STEP) {
            return Err(Error::invalid(format!(
                "step size {dt} outside (0, {MAX_STEP}]"
            )));
        }
        let substeps = (dt / MAX_SUBSTEP).ceil().max(1.0) as usize;
        let h = dt / substeps as f64;
        let decay = (-h / self.model.servo_time_constant).exp();

        let branch = ElbowBranch::of(world.joint_angles);
        let mut q = world.joint_angles;
        let mut p = world.tip.position;
        let mut servo = world.servo_velocity;
        let mut v = world.tip.velocity;
        let mut limited = false;

        for _ in 0..substeps {
            servo = command + (servo - command) * decay;
            v = self
                .env
                .realized_velocity(p, servo, self.model.servo_admittance);
            let (v_ok, hit) = self.keep_inside(p, v, h);
            v = v_ok;
            limited |= hit;
            if v != Vector2::zeros() {
                q = self
                    .model
                    .inverse_kinematics(self.clamp_radius(p + v * h), branch)?;
                p = self.model.forward_kinematics(q);
            }
        }

        let joint_velocities = match self.model.jacobian(q).try_inverse() {
            Some(inv) => {
                let qd = inv * v;
                [qd.x, qd.y]
            }
            None => [0.0; 2],
        };

        Ok(WorldState {
            joint_angles: q,
            joint_velocities,
            tip: CartesianState {
                position: p,
                velocity: v,
                contact_force: self.env.contact_force(p, v),
            },
            servo_velocity: servo,
            time: world.time + dt,
            workspace_limited: limited,
        })
    }

    /// Removes the radial velocity component that would carry the tip past a
    /// workspace boundary within `h`.
    fn keep_inside(&self, p: Vector2<f64>, v: Vector2<f64>, h: f64) -> (Vector2<f64>, bool) {
        let outer = self.model.reach() - WORKSPACE_MARGIN;
        let inner = self.model.inner_radius() + WORKSPACE_MARGIN;
        let rel = p - self.model.base;
        let next = (rel + v * h).norm();
        let r = rel.norm();
        if r == 0.0 {
            return (v, false);
        }
        let radial = rel / r;
        let vr = v.dot(&radial);
        if (next > outer && vr > 0.0) || (next < inner && vr < 0.0) {
            (v - radial * vr, true)
        } else {
            (v, false)
        }
    }

    fn clamp_radius(&self, p: Vector2<f64>) -> Vector2<f64> {
        let rel = p - self.model.base;
        let r = rel.norm();
        let outer = self.model.reach() - WORKSPACE_MARGIN;
        let inner = self.model.inner_radius() + WORKSPACE_MARGIN;
        if r > outer {
            self.model.base + rel * (outer / r)
        } else if r < inner && r > 0.0 {
            self.model.base + rel * (inner / r)
        } else {
            p
        }
    }
}
