#![allow(dead_code)]

use compliant_lfd::estimation::EstimatorConfig;
use compliant_lfd::learning::{Demonstration, Dimension, Sample};
use compliant_lfd::session::scripts::{line_stream, MasterInput};
use compliant_lfd::session::{run_demonstration, DemonstrationRun, SessionConfig, SlideStroke};
use compliant_lfd::sim::Environment;
use nalgebra::{Vector2, Vector3};

pub fn ideal_config() -> SessionConfig {
    SessionConfig {
        estimator: EstimatorConfig::ideal(),
        ..Default::default()
    }
}

/// Default estimator: 50 N noise and 200 N per m/s velocity bias.
pub fn noisy_config() -> SessionConfig {
    SessionConfig::default()
}

pub fn slide_inputs(cfg: &SessionConfig) -> Vec<Vec<MasterInput>> {
    SlideStroke::variants()
        .iter()
        .map(|s| {
            s.stream(cfg.slave_start(), cfg.coupling.position_scale, cfg.sim_rate)
                .unwrap()
        })
        .collect()
}

pub fn record(
    cfg: &SessionConfig,
    env: &Environment,
    streams: &[Vec<MasterInput>],
) -> Vec<DemonstrationRun> {
    streams
        .iter()
        .enumerate()
        .map(|(i, s)| run_demonstration(cfg, env, s, None, &format!("demo {}", i + 1)).unwrap())
        .collect()
}

pub fn demonstrations(runs: &[DemonstrationRun]) -> Vec<Demonstration> {
    runs.iter().map(|r| r.demonstration.clone()).collect()
}

/// Four strokes along one free-space direction with different lengths and speeds.
pub fn free_space_inputs(cfg: &SessionConfig, direction: Vector2<f64>) -> Vec<Vec<MasterInput>> {
    [(0.8, 3.0), (0.75, 2.5), (0.85, 3.5), (0.7, 3.0)]
        .iter()
        .map(|&(len, dur)| {
            line_stream(
                cfg.slave_start(),
                direction,
                len,
                dur,
                cfg.coupling.position_scale,
                cfg.sim_rate,
            )
            .unwrap()
        })
        .collect()
}

/// Straight spatial strokes pressing toward `desired`, each deviating by
/// `spread` along one of `±e1`, `±e2`, with the force tilted the other way.
pub fn spatial_demos(
    desired: Vector3<f64>,
    e1: Vector3<f64>,
    e2: Vector3<f64>,
    spread: f64,
) -> Vec<Demonstration> {
    let d = desired.normalize();
    [e1, -e1, e2, -e2]
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let motion = (d + e * spread).normalize();
            let force = (d - e * spread).normalize() * 1000.0;
            let samples = (0..500)
                .map(|k| {
                    let t = k as f64 / 500.0;
                    Sample {
                        t,
                        position: Vector3::new(0.5, 0.2, 1.0) + motion * (0.2 * t),
                        force,
                    }
                })
                .collect();
            Demonstration::new(
                Dimension::Spatial,
                500.0,
                format!("spatial {}", i + 1),
                samples,
            )
            .unwrap()
        })
        .collect()
}

/// True when `v` lies on the shorter arc between `a` and `b`.
pub fn within_planar_sector(v: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>, tol: f64) -> bool {
    let angle = |p: Vector2<f64>, q: Vector2<f64>| p.perp(&q).atan2(p.dot(&q)).abs();
    angle(a, v) + angle(v, b) <= angle(a, b) + tol
}

/// BIC of a rank-`d` fit through the origin for every `d`, with the best
/// line found by sweeping its angle.
pub fn brute_force_bic(points: &[Vector2<f64>], dims: usize, sigma: f64) -> Vec<f64> {
    let n = points.len() as f64;
    let log_l = |sq: f64| {
        -0.5 * dims as f64 * n * (2.0 * std::f64::consts::PI * sigma * sigma).ln()
            - sq / (2.0 * sigma * sigma)
    };
    let bic = |d: usize, sq: f64| n.ln() * d as f64 - 2.0 * log_l(sq);
    let zero: f64 = points.iter().map(|p| p.norm_squared()).sum();
    let mut out = vec![bic(0, zero)];
    if dims == 1 {
        out.push(bic(1, 0.0));
        return out;
    }
    let line_residual = |th: f64| {
        let u = Vector2::new(th.cos(), th.sin());
        points
            .iter()
            .map(|p| (p - u * u.dot(p)).norm_squared())
            .sum::<f64>()
    };
    let steps = 20000;
    let mut best = (0.0, f64::INFINITY);
    for k in 0..steps {
        let th = std::f64::consts::PI * k as f64 / steps as f64;
        let r = line_residual(th);
        if r < best.1 {
            best = (th, r);
        }
    }
    // golden-section polish around the best grid angle
    let h = std::f64::consts::PI / steps as f64;
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if line_residual(a) < line_residual(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    out.push(bic(1, line_residual(0.5 * (lo + hi)).min(best.1)));
    out.push(bic(2, 0.0));
    out
}

pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Orthographic coordinates of unit `means` in a plane perpendicular to `desired`.
pub fn project(means: &[Vector3<f64>], desired: Vector3<f64>, dims: usize) -> Vec<Vector2<f64>> {
    let d = desired.normalize();
    let helper = if d.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = d.cross(&helper).normalize();
    let e2 = d.cross(&e1);
    means
        .iter()
        .map(|m| {
            if dims == 1 {
                Vector2::new(m.x * -d.y + m.y * d.x, 0.0)
            } else {
                Vector2::new(m.dot(&e1), m.dot(&e2))
            }
        })
        .collect()
}
