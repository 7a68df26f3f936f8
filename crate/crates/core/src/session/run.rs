//! Headless demonstration and reproduction runs.

use std::fmt::Write as _;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::config::SessionConfig;
use super::scripts::MasterInput;
use crate::error::{Error, Result};
use crate::estimation::ForceEstimator;
use crate::impedance::{required_velocity, ReferenceTrajectory};
use crate::learning::{Demonstration, Dimension, LearnedController, Sample};
use crate::serde_util;
use crate::sim::world::WORKSPACE_MARGIN;
use crate::sim::{ElbowBranch, Environment, Simulator, WorldState};
use crate::teleop::{Coupling, CouplingInput};

/// One control tick, sampled before the plant is stepped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    #[serde(with = "serde_util::vector2")]
    pub master: Vector2<f64>,
    #[serde(with = "serde_util::vector2")]
    pub slave: Vector2<f64>,
    /// Reference position during reproduction.
    #[serde(with = "serde_util::vector2")]
    pub reference: Vector2<f64>,
    #[serde(with = "serde_util::vector2")]
    pub true_force: Vector2<f64>,
    /// Force estimate seen by the controller and the learner.
    #[serde(with = "serde_util::vector2")]
    pub force: Vector2<f64>,
    pub contact: bool,
    pub penetration: f64,
    /// Velocity command sent to the slave servo.
    #[serde(with = "serde_util::vector2")]
    pub command: Vector2<f64>,
}

/// Whitespace table for plotting position and force per axis over time.
pub fn trace_to_text(rows: &[TraceRow]) -> String {
    let mut out = String::from("# t x y x_ref y_ref fx fy fx_est fy_est contact\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {} {} {}",
            r.t,
            r.slave.x,
            r.slave.y,
            r.reference.x,
            r.reference.y,
            r.true_force.x,
            r.true_force.y,
            r.force.x,
            r.force.y,
            u8::from(r.contact)
        );
    }
    out
}

/// Teleoperated slave: simulator, coupling and force estimator advanced in
/// lockstep at the simulation rate. The master is a kinematic device whose
/// position is set from outside and held between updates.
#[derive(Debug, Clone)]
pub struct Teleoperation {
    pub config: SessionConfig,
    pub sim: Simulator,
    pub world: WorldState,
    coupling: Coupling,
    estimator: ForceEstimator,
    master: Vector2<f64>,
    previous_master: Vector2<f64>,
    previous_velocity: Vector2<f64>,
    tick: usize,
    pub workspace_limited: bool,
}

impl Teleoperation {
    pub fn new(config: SessionConfig, env: Environment) -> Result<Self> {
        config.validate()?;
        let sim = Simulator::new(config.manipulator, env)?;
        let world = sim.at_rest(config.slave_start(), ElbowBranch::Down)?;
        let master = config.slave_start() / config.coupling.position_scale;
        Ok(Self {
            coupling: Coupling::new(config.coupling)?,
            estimator: ForceEstimator::new(config.estimator)?,
            config,
            sim,
            world,
            master,
            previous_master: master,
            previous_velocity: Vector2::zeros(),
            tick: 0,
            workspace_limited: false,
        })
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 / self.config.sim_rate
    }

    pub fn master(&self) -> Vector2<f64> {
        self.master
    }

    pub fn set_master(&mut self, position: Vector2<f64>) {
        self.master = position;
    }

    pub fn step(&mut self) -> Result<TraceRow> {
        let dt = self.config.dt();
        let tip = self.world.tip;
        let acceleration = if self.tick == 0 {
            Vector2::zeros()
        } else {
            (tip.velocity - self.previous_velocity) / dt
        };
        let contact = self.sim.env.contact(tip.position, tip.velocity);
        let force = self
            .estimator
            .estimate(tip.contact_force, tip.velocity, acceleration);
        let input = CouplingInput {
            master_position: self.master,
            master_velocity: (self.master - self.previous_master) / dt,
            master_force: Vector2::zeros(),
            slave_position: tip.position,
            slave_velocity: tip.velocity,
            slave_force: force,
        };
        let (command, _) = self.coupling.update(&input, dt);
        let row = TraceRow {
            t: self.time(),
            master: self.master,
            slave: tip.position,
            reference: self.master * self.config.coupling.position_scale,
            true_force: tip.contact_force,
            force,
            contact: contact.in_contact(),
            penetration: contact.penetration,
            command,
        };
        self.world = self.sim.step(&self.world, command, dt)?;
        self.workspace_limited |= self.world.workspace_limited;
        self.previous_master = self.master;
        self.previous_velocity = tip.velocity;
        self.tick += 1;
        Ok(row)
    }
}

/// Output of a headless demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct DemonstrationRun {
    pub demonstration: Demonstration,
    pub trace: Vec<TraceRow>,
    pub steps: usize,
    pub workspace_limited: bool,
}

/// Number of ticks that covers a master stream: up to its last input, or one
/// second for an empty stream.
pub fn default_steps(inputs: &[MasterInput], rate: f64) -> usize {
    match inputs.last() {
        Some(m) => (m.t * rate).floor() as usize + 1,
        None => rate.round() as usize,
    }
}

/// Teleoperates the slave with a recorded master stream and records the
/// demonstration (time, tip position, estimated force) at every tick.
pub fn run_demonstration(
    config: &SessionConfig,
    env: &Environment,
    inputs: &[MasterInput],
    steps: Option<usize>,
    label: &str,
) -> Result<DemonstrationRun> {
    let mut teleop = Teleoperation::new(config.clone(), env.clone())?;
    let steps = steps.unwrap_or_else(|| default_steps(inputs, config.sim_rate));
    if steps < 2 {
        return Err(Error::invalid("a demonstration needs at least two ticks"));
    }
    let mut next = 0;
    let mut trace = Vec::with_capacity(steps);
    for _ in 0..steps {
        let t = teleop.time();
        while next < inputs.len() && inputs[next].t <= t {
            teleop.set_master(inputs[next].position);
            next += 1;
        }
        trace.push(teleop.step()?);
    }
    let demonstration = trace_to_demonstration(&trace, config.sim_rate, label)?;
    Ok(DemonstrationRun {
        demonstration,
        trace,
        steps,
        workspace_limited: teleop.workspace_limited,
    })
}

pub fn trace_to_demonstration(trace: &[TraceRow], rate: f64, label: &str) -> Result<Demonstration> {
    let samples = trace
        .iter()
        .map(|r| Sample {
            t: r.t,
            position: Vector3::new(r.slave.x, r.slave.y, 0.0),
            force: Vector3::new(r.force.x, r.force.y, 0.0),
        })
        .collect();
    Demonstration::new(Dimension::Planar, rate, label, samples)
}

/// Outcome of a reproduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproductionMetrics {
    /// Time of first contact [s].
    pub first_contact: Option<f64>,
    /// Share of ticks in contact from first contact to the end of the quintic.
    pub contact_retention: Option<f64>,
    /// Mean true force magnitude over in-contact ticks of that phase [N].
    pub mean_force: Option<f64>,
    pub max_force: f64,
    pub max_penetration: f64,
    /// Distance from the final tip position to the end of the reference [m].
    pub final_error: f64,
    #[serde(with = "serde_util::vector2")]
    pub start: Vector2<f64>,
    #[serde(with = "serde_util::vector2")]
    pub target: Vector2<f64>,
    /// δ actually used after workspace truncation [m].
    pub trajectory_length: f64,
    pub truncated: bool,
    pub workspace_limited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproductionRun {
    pub trace: Vec<TraceRow>,
    pub metrics: ReproductionMetrics,
}

/// Moves `p` out of any surface it penetrates, along that surface's normal.
fn rest_on_surface(env: &Environment, p: Vector2<f64>) -> Vector2<f64> {
    env.surfaces.iter().fold(p, |p, s| match s.penetration(p) {
        Some(d) => p + s.normal() * d,
        None => p,
    })
}

fn reachable(sim: &Simulator, p: Vector2<f64>) -> bool {
    let r = (p - sim.model.base).norm();
    r <= sim.model.reach() - WORKSPACE_MARGIN && r >= sim.model.inner_radius() + WORKSPACE_MARGIN
}

/// Executes the learned controller: a quintic from the start along the
/// desired direction, tracked through the required-velocity law with the
/// estimated force fed back and `F_d = 0`.
///
/// The start defaults to the controller's suggestion, else the configured
/// slave start, and is placed on (not inside) any surface it would penetrate.
pub fn run_reproduction(
    config: &SessionConfig,
    env: &Environment,
    controller: &LearnedController,
    start: Option<Vector2<f64>>,
) -> Result<ReproductionRun> {
    config.validate()?;
    controller.validate()?;
    let sim = Simulator::new(config.manipulator, env.clone())?;
    let start = start
        .or(controller.start.map(|s| Vector2::new(s[0], s[1])))
        .unwrap_or_else(|| config.slave_start());
    let start = rest_on_surface(env, start);
    if !reachable(&sim, start) {
        let r = (start - sim.model.base).norm();
        return Err(Error::Unreachable {
            x: start.x,
            y: start.y,
            radius: r,
            inner: sim.model.inner_radius() + WORKSPACE_MARGIN,
            outer: sim.model.reach() - WORKSPACE_MARGIN,
        });
    }

    let mut length = controller.trajectory_length;
    let dir = controller.direction;
    let truncated = !reachable(&sim, start + dir * length);
    if truncated {
        let (mut lo, mut hi) = (0.0, length);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if reachable(&sim, start + dir * mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        length = lo;
    }
    let duration = config.reproduction_duration;
    let trajectory = ReferenceTrajectory::along(start, dir, length, duration)?;

    let mut estimator = ForceEstimator::new(config.estimator)?;
    let mut world = sim.at_rest(start, ElbowBranch::Down)?;
    let dt = config.dt();
    let steps = ((duration + config.settle_time) * config.sim_rate).round() as usize;
    let zero = Vector2::zeros();
    let mut previous_velocity = zero;
    let mut workspace_limited = false;
    let mut trace = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = k as f64 / config.sim_rate;
        let reference = trajectory.sample(t);
        let tip = world.tip;
        let acceleration = if k == 0 {
            zero
        } else {
            (tip.velocity - previous_velocity) / dt
        };
        let force = estimator.estimate(tip.contact_force, tip.velocity, acceleration);
        let command = required_velocity(
            &reference.velocity,
            &reference.position,
            &tip.position,
            &zero,
            &force,
            &controller.gains,
        );
        let contact = env.contact(tip.position, tip.velocity);
        trace.push(TraceRow {
            t,
            master: zero,
            slave: tip.position,
            reference: reference.position,
            true_force: tip.contact_force,
            force,
            contact: contact.in_contact(),
            penetration: contact.penetration,
            command,
        });
        world = sim.step(&world, command, dt)?;
        workspace_limited |= world.workspace_limited;
        previous_velocity = tip.velocity;
    }

    let end_tick = (duration * config.sim_rate).round() as usize;
    let first = trace.iter().position(|r| r.contact);
    let (retention, mean_force) = match first {
        Some(f) if f < end_tick => {
            let phase = &trace[f..end_tick.min(trace.len())];
            let touching: Vec<&TraceRow> = phase.iter().filter(|r| r.contact).collect();
            let mean =
                touching.iter().map(|r| r.true_force.norm()).sum::<f64>() / touching.len() as f64;
            (Some(touching.len() as f64 / phase.len() as f64), Some(mean))
        }
        _ => (None, None),
    };
    let metrics = ReproductionMetrics {
        first_contact: first.map(|f| trace[f].t),
        contact_retention: retention,
        mean_force,
        max_force: trace
            .iter()
            .map(|r| r.true_force.norm())
            .fold(0.0, f64::max),
        max_penetration: trace.iter().map(|r| r.penetration).fold(0.0, f64::max),
        final_error: (world.tip.position - trajectory.end).norm(),
        start,
        target: trajectory.end,
        trajectory_length: length,
        truncated,
        workspace_limited,
    };
    Ok(ReproductionRun { trace, metrics })
}
