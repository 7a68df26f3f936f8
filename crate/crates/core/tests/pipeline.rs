mod common;

use common::*;
use compliant_lfd::learning::{learn, Demonstration, Dimension, LearnedController};
use compliant_lfd::session::scripts::{floor, master_stream_to_text, parse_master_stream, FLOOR_Y};
use compliant_lfd::session::{run_reproduction, trace_to_text, Replay, SessionLog};
use compliant_lfd::sim::Environment;
use nalgebra::{Rotation3, Vector2, Vector3};

#[test]
fn sliding_demonstrations_through_files_to_a_controller() {
    let cfg = noisy_config();
    let env = floor(2e6, 0.5);
    let runs = record(&cfg, &env, &slide_inputs(&cfg));
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let p = dir.path().join(format!("demo{i}.txt"));
            r.demonstration.write_file(&p).unwrap();
            p
        })
        .collect();
    let loaded: Vec<Demonstration> = paths
        .iter()
        .map(|p| Demonstration::from_file(p).unwrap())
        .collect();
    assert_eq!(loaded, demonstrations(&runs));

    let outcome = learn(&loaded, &cfg.learning, cfg.estimator.noise_std).unwrap();
    let controller = outcome
        .controller(&cfg.learning, cfg.trajectory_length)
        .unwrap();
    // into the floor and forward, compliant along the floor normal side
    assert!(controller.direction.x > 0.0 && controller.direction.y < 0.0);
    assert_eq!(controller.compliant_directions.len(), 1);
    assert!(
        controller.compliant_directions[0]
            .dot(&controller.direction)
            .abs()
            < 1e-12
    );
    let eig = controller.stiffness.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    assert!(
        (hi - cfg.learning.k_stiff).abs() < 1e-6 && (lo - 0.1 * cfg.learning.k_stiff).abs() < 1e-6
    );

    let file = dir.path().join("controller.toml");
    controller.write_file(&file).unwrap();
    let back = LearnedController::from_file(&file).unwrap();
    assert_eq!(back, controller);

    let run = run_reproduction(&cfg, &env, &back, None).unwrap();
    let m = run.metrics;
    assert!(m.contact_retention.unwrap() > 0.95);
    assert!(m.first_contact.unwrap() < 1.0);
    assert!(!m.truncated && !m.workspace_limited);
    // the slide follows the floor: tip stays within a few mm of the surface while in contact
    for r in run.trace.iter().filter(|r| r.contact) {
        assert!((r.slave.y - FLOOR_Y).abs() < 0.01, "{}", r.slave.y);
    }
    let table = trace_to_text(&run.trace);
    assert_eq!(table.lines().count(), run.trace.len() + 1);
}

#[test]
fn master_streams_survive_text_round_trip() {
    let cfg = ideal_config();
    let stream = slide_inputs(&cfg).remove(1);
    assert_eq!(
        parse_master_stream(&master_stream_to_text(&stream)).unwrap(),
        stream
    );
}

#[test]
fn live_and_replayed_logs_learn_identically() {
    let cfg = noisy_config();
    let env = floor(2e6, 0.5);
    let streams = slide_inputs(&cfg);
    let runs = record(&cfg, &env, &streams);
    let logs: Vec<SessionLog> = runs
        .iter()
        .zip(&streams)
        .map(|(r, s)| {
            SessionLog::from_json(
                &SessionLog::demonstration(&cfg, &env, s, r)
                    .to_json()
                    .unwrap(),
            )
            .unwrap()
        })
        .collect();
    let replayed: Vec<Demonstration> = logs
        .iter()
        .map(|l| match l.verify().unwrap() {
            Replay::Demonstration(r) => r.demonstration,
            other => panic!("{other:?}"),
        })
        .collect();
    let live = learn(
        &demonstrations(&runs),
        &cfg.learning,
        cfg.estimator.noise_std,
    )
    .unwrap();
    let again = learn(&replayed, &cfg.learning, cfg.estimator.noise_std).unwrap();
    assert_eq!(live, again);
    let a = live.controller(&cfg.learning, 1.0).unwrap();
    let b = again.controller(&cfg.learning, 1.0).unwrap();
    assert_eq!(a.to_toml().unwrap(), b.to_toml().unwrap());
}

#[test]
fn reproduction_logs_replay() {
    let cfg = ideal_config();
    let env = floor(2e6, 0.5);
    let outcome = learn(
        &demonstrations(&record(&cfg, &env, &slide_inputs(&cfg))),
        &cfg.learning,
        0.0,
    )
    .unwrap();
    let controller = outcome.controller(&cfg.learning, 1.0).unwrap();
    let start = Some(Vector2::new(1.1, -1.05));
    let run = run_reproduction(&cfg, &env, &controller, start).unwrap();
    let log = SessionLog::reproduction(&cfg, &env, &controller, start, &run);
    // a start below the floor is lifted onto it
    assert!((run.metrics.start.y - FLOOR_Y).abs() < 1e-12);
    match SessionLog::from_json(&log.to_json().unwrap())
        .unwrap()
        .verify()
        .unwrap()
    {
        Replay::Reproduction(r) => assert_eq!(r.metrics, run.metrics),
        other => panic!("{other:?}"),
    }
}

#[test]
fn free_space_strokes_need_no_compliance() {
    let cfg = noisy_config();
    let dir = Vector2::new(0.94, 0.34).normalize();
    let runs = record(&cfg, &Environment::default(), &free_space_inputs(&cfg, dir));
    let outcome = learn(
        &demonstrations(&runs),
        &cfg.learning,
        cfg.estimator.noise_std,
    )
    .unwrap();
    assert!(outcome.direction.demos.iter().all(|d| d.free_space));
    let learned = outcome.direction.direction.xy();
    assert!(learned.angle(&dir).to_degrees() < 2.0);
    assert_eq!(outcome.compliance.axes, 0);
    let controller = outcome.controller(&cfg.learning, 0.5).unwrap();
    let eig = controller.stiffness.symmetric_eigenvalues();
    assert!((eig.min() - cfg.learning.k_stiff).abs() < 1e-6);
}

#[test]
fn spatial_learning_is_rotation_invariant() {
    let cfg = noisy_config();
    let desired = Vector3::new(0.2, -0.3, -1.0).normalize();
    let e1 = desired.cross(&Vector3::x()).normalize();
    let e2 = desired.cross(&e1);
    let demos = spatial_demos(desired, e1, e2, 0.3);
    let base = learn(&demos, &cfg.learning, cfg.estimator.noise_std).unwrap();
    assert_eq!(base.compliance.dimension, Dimension::Spatial);
    assert_eq!(base.compliance.axes, 2);
    assert!(base.direction.direction.angle(&desired).to_degrees() < 1.0);
    let rot = Rotation3::from_euler_angles(0.3, -0.7, 1.1);
    let turned: Vec<Demonstration> = demos.iter().map(|d| d.rotated(&rot)).collect();
    let moved = learn(&turned, &cfg.learning, cfg.estimator.noise_std).unwrap();
    assert!((moved.direction.direction - rot * base.direction.direction).norm() < 1e-6);
    assert_eq!(moved.compliance.axes, 2);
    // spatial controllers are learned but not reproduced on the planar arm
    assert!(base.controller(&cfg.learning, 1.0).is_err());
}
