//! Force-reflected bilateral coupling between a master device and the slave.
//!
//! Both sides are velocity-controlled; the coupling only computes the
//! required velocities. With `κ_p` the position scaling and `κ_f` the force
//! scaling:
//!
//! ```text
//! v_sr = κ_p ṽ_m + Λ (κ_p p̃_m − p_s) − A (f̃_s + κ_f f̃_m)
//! v_mr = ṽ_s / κ_p + Λ (p̃_s / κ_p − p_m) − A / κ_p (f̃_s + κ_f f̃_m)
//! ```
//!
//! A tilde marks a first-order low-pass filtered signal.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impedance::is_symmetric_positive_definite;
use crate::serde_util;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingConfig {
    /// Λ, diagonal position feedback gain [1/s].
    #[serde(with = "serde_util::matrix2")]
    pub position_gain: Matrix2<f64>,
    /// A, force feedback gain [(m/s)/N].
    #[serde(with = "serde_util::matrix2")]
    pub force_gain: Matrix2<f64>,
    /// κ_p, slave motion per unit of master motion.
    pub position_scale: f64,
    /// κ_f, weight of the master-side force.
    pub force_scale: f64,
    /// Low-pass corner frequency [rad/s].
    pub filter_cutoff: f64,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            position_gain: Matrix2::identity() * 2.0,
            force_gain: Matrix2::identity() * 2e-4,
            position_scale: 10.0,
            force_scale: 0.0,
            filter_cutoff: 20.0,
        }
    }
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        let l = &self.position_gain;
        if l[(0, 1)] != 0.0 || l[(1, 0)] != 0.0 || !(l[(0, 0)] > 0.0 && l[(1, 1)] > 0.0) {
            return Err(Error::NotPositiveDefinite(
                "position gain Λ (must be positive diagonal)",
            ));
        }
        if !is_symmetric_positive_definite(&self.force_gain) {
            return Err(Error::NotPositiveDefinite("force gain A"));
        }
        if !(self.position_scale > 0.0 && self.position_scale.is_finite()) {
            return Err(Error::invalid("position scale κ_p must be positive"));
        }
        if !(self.force_scale >= 0.0 && self.force_scale.is_finite()) {
            return Err(Error::invalid("force scale κ_f must be non-negative"));
        }
        if !(self.filter_cutoff > 0.0 && self.filter_cutoff.is_finite()) {
            return Err(Error::invalid("filter cutoff must be positive"));
        }
        Ok(())
    }
}

/// First-order low-pass filter, discretized exactly for piecewise-constant input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowPass {
    pub cutoff: f64,
    #[serde(with = "serde_util::vector2")]
    pub state: Vector2<f64>,
}

impl LowPass {
    pub fn new(cutoff: f64, initial: Vector2<f64>) -> Self {
        Self {
            cutoff,
            state: initial,
        }
    }

    pub fn step(&mut self, x: Vector2<f64>, dt: f64) -> Vector2<f64> {
        let a = 1.0 - (-self.cutoff * dt).exp();
        self.state += (x - self.state) * a;
        self.state
    }
}

/// Raw and filtered quantities of both sides at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilteredSignals {
    pub master_velocity: Vector2<f64>,
    pub slave_velocity: Vector2<f64>,
    pub master_position: Vector2<f64>,
    pub slave_position: Vector2<f64>,
    pub master_force: Vector2<f64>,
    pub slave_force: Vector2<f64>,
    /// Unfiltered master position `p_m`.
    pub raw_master_position: Vector2<f64>,
    /// Unfiltered slave position `p_s`.
    pub raw_slave_position: Vector2<f64>,
}

/// Required slave velocity.
pub fn slave_required_velocity(sig: &FilteredSignals, cfg: &CouplingConfig) -> Vector2<f64> {
    let kp = cfg.position_scale;
    sig.master_velocity * kp
        + cfg.position_gain * (sig.master_position * kp - sig.raw_slave_position)
        - cfg.force_gain * (sig.slave_force + sig.master_force * cfg.force_scale)
}

/// Required master velocity.
pub fn master_required_velocity(sig: &FilteredSignals, cfg: &CouplingConfig) -> Vector2<f64> {
    let kp = cfg.position_scale;
    sig.slave_velocity / kp
        + cfg.position_gain * (sig.slave_position / kp - sig.raw_master_position)
        - cfg.force_gain * (sig.slave_force + sig.master_force * cfg.force_scale) / kp
}

/// Raw measurements fed to the coupling each control tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingInput {
    pub master_position: Vector2<f64>,
    pub master_velocity: Vector2<f64>,
    pub master_force: Vector2<f64>,
    pub slave_position: Vector2<f64>,
    pub slave_velocity: Vector2<f64>,
    pub slave_force: Vector2<f64>,
}

/// Filter memory of the six filtered channels plus the configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub config: CouplingConfig,
    filters: Option<[LowPass; 6]>,
}

impl Coupling {
    pub fn new(config: CouplingConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            filters: None,
        })
    }

    /// Filters `input` and returns the signals the control laws use. The
    /// filters start from the first sample they see.
    pub fn filter(&mut self, input: &CouplingInput, dt: f64) -> FilteredSignals {
        let raw = [
            input.master_velocity,
            input.slave_velocity,
            input.master_position,
            input.slave_position,
            input.master_force,
            input.slave_force,
        ];
        let cutoff = self.config.filter_cutoff;
        let out = match &mut self.filters {
            None => {
                self.filters = Some(raw.map(|x| LowPass::new(cutoff, x)));
                raw
            }
            Some(filters) => {
                let mut out = raw;
                for (f, x) in filters.iter_mut().zip(out.iter_mut()) {
                    *x = f.step(*x, dt);
                }
                out
            }
        };
        FilteredSignals {
            master_velocity: out[0],
            slave_velocity: out[1],
            master_position: out[2],
            slave_position: out[3],
            master_force: out[4],
            slave_force: out[5],
            raw_master_position: input.master_position,
            raw_slave_position: input.slave_position,
        }
    }

    /// Filters the inputs and evaluates both control laws: `(v_sr, v_mr)`.
    pub fn update(&mut self, input: &CouplingInput, dt: f64) -> (Vector2<f64>, Vector2<f64>) {
        let sig = self.filter(input, dt);
        (
            slave_required_velocity(&sig, &self.config),
            master_required_velocity(&sig, &self.config),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kp: f64, lambda: f64, a: f64) -> CouplingConfig {
        CouplingConfig {
            position_gain: Matrix2::identity() * lambda,
            force_gain: Matrix2::identity() * a,
            position_scale: kp,
            force_scale: 0.0,
            filter_cutoff: 20.0,
        }
    }

    #[test]
    fn constant_input_passes_unchanged() {
        let c = Vector2::new(0.3, -1.2);
        let mut f = LowPass::new(20.0, c);
        for _ in 0..1000 {
            assert_eq!(f.step(c, 0.002), c);
        }
    }

    #[test]
    fn step_response_reaches_63_percent_at_time_constant() {
        let w = 20.0;
        let dt = 1e-4;
        let mut f = LowPass::new(w, Vector2::zeros());
        let n = (1.0 / w / dt).round() as usize;
        let mut y = Vector2::zeros();
        for _ in 0..n {
            y = f.step(Vector2::new(1.0, 1.0), dt);
        }
        let expected = 1.0 - (-1.0f64).exp();
        assert!((y.x - expected).abs() < 0.02 * expected);
    }

    #[test]
    fn zero_input_decays_monotonically() {
        let mut f = LowPass::new(5.0, Vector2::new(2.0, -3.0));
        let mut prev = f.state.norm();
        for _ in 0..200 {
            let y = f.step(Vector2::zeros(), 0.01).norm();
            assert!(y < prev);
            prev = y;
        }
    }

    #[test]
    fn zero_signals_give_zero_commands() {
        let sig = FilteredSignals::default();
        let c = CouplingConfig::default();
        assert_eq!(slave_required_velocity(&sig, &c), Vector2::zeros());
        assert_eq!(master_required_velocity(&sig, &c), Vector2::zeros());
    }

    #[test]
    fn slave_law_examples() {
        let sig = FilteredSignals {
            master_position: Vector2::new(1.0, 0.0),
            ..Default::default()
        };
        assert_eq!(
            slave_required_velocity(&sig, &cfg(2.0, 1.0, 0.0)),
            Vector2::new(2.0, 0.0)
        );

        let sig = FilteredSignals {
            slave_force: Vector2::new(0.0, 100.0),
            ..Default::default()
        };
        assert_eq!(
            slave_required_velocity(&sig, &cfg(1.0, 0.0, 1.0)),
            Vector2::new(0.0, -100.0)
        );
    }

    #[test]
    fn master_law_example() {
        let sig = FilteredSignals {
            slave_position: Vector2::new(2.0, 0.0),
            ..Default::default()
        };
        assert_eq!(
            master_required_velocity(&sig, &cfg(2.0, 1.0, 0.0)),
            Vector2::new(1.0, 0.0)
        );
    }

    #[test]
    fn force_reflection_is_scaled_on_the_master() {
        let c = cfg(10.0, 2.0, 2e-4);
        let sig = FilteredSignals {
            slave_force: Vector2::new(120.0, -2000.0),
            ..Default::default()
        };
        let vs = slave_required_velocity(&sig, &c);
        let vm = master_required_velocity(&sig, &c);
        assert!((vm * c.position_scale - vs).norm() < 1e-15);
        // both retreat from the force the slave exerts
        assert!(vs.dot(&sig.slave_force) < 0.0);
    }

    #[test]
    fn master_force_term_uses_force_scale() {
        let mut c = cfg(1.0, 1.0, 1e-3);
        c.force_scale = 0.5;
        let sig = FilteredSignals {
            master_force: Vector2::new(10.0, 0.0),
            ..Default::default()
        };
        assert!((slave_required_velocity(&sig, &c) - Vector2::new(-5e-3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(CouplingConfig::default().validate().is_ok());
        let mut c = CouplingConfig::default();
        c.position_gain[(0, 1)] = 0.1;
        assert!(c.validate().is_err());
        let c = CouplingConfig {
            force_gain: Matrix2::new(1.0, 0.0, 0.0, -1.0),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = CouplingConfig {
            position_scale: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = CouplingConfig {
            filter_cutoff: -1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn filters_start_from_first_sample() {
        let mut coupling = Coupling::new(cfg(10.0, 2.0, 2e-4)).unwrap();
        let input = CouplingInput {
            master_position: Vector2::new(0.1, -0.09),
            slave_position: Vector2::new(1.0, -0.9),
            ..Default::default()
        };
        let (vs, vm) = coupling.update(&input, 0.002);
        assert!(vs.norm() < 1e-12);
        assert!(vm.norm() < 1e-12);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = CouplingConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back: CouplingConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn filter_is_linear(
                xs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..60),
                ys in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 60),
                a in -3.0f64..3.0,
                b in -3.0f64..3.0,
            ) {
                let mut fx = LowPass::new(12.0, Vector2::zeros());
                let mut fy = LowPass::new(12.0, Vector2::zeros());
                let mut fz = LowPass::new(12.0, Vector2::zeros());
                for (x, y) in xs.iter().zip(ys.iter()) {
                    let x = Vector2::new(x.0, x.1);
                    let y = Vector2::new(y.0, y.1);
                    let lx = fx.step(x, 0.003);
                    let ly = fy.step(y, 0.003);
                    let lz = fz.step(x * a + y * b, 0.003);
                    let combined = lx * a + ly * b;
                    prop_assert!((lz - combined).norm() <= 1e-12 * (1.0 + combined.norm()));
                }
            }

            #[test]
            fn symmetric_state_scales_exactly(
                kp in 0.5f64..20.0,
                pm in (-0.3f64..0.3, -0.3f64..0.3),
                vm in (-0.5f64..0.5, -0.5f64..0.5),
            ) {
                let c = cfg(kp, 2.0, 2e-4);
                let pm = Vector2::new(pm.0, pm.1);
                let vm = Vector2::new(vm.0, vm.1);
                let sig = FilteredSignals {
                    master_velocity: vm,
                    slave_velocity: vm * kp,
                    master_position: pm,
                    slave_position: pm * kp,
                    raw_master_position: pm,
                    raw_slave_position: pm * kp,
                    ..Default::default()
                };
                let vs = slave_required_velocity(&sig, &c);
                let vmr = master_required_velocity(&sig, &c);
                prop_assert!((vs - vmr * kp).norm() <= 1e-12 * (1.0 + vs.norm()));
            }
        }
    }
}
