//! `lfd`: headless front end for recording, learning and reproducing
//! in-contact motions on the simulated manipulator.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use compliant_lfd::learning::{learn, Demonstration, LearnedController};
use compliant_lfd::session::scripts::{line_stream, master_stream_to_text, read_master_stream};
use compliant_lfd::session::service::{bind, serve};
use compliant_lfd::session::{
    run_demonstration, run_reproduction, trace_to_text, Replay, Session, SessionConfig, SessionLog,
    SlideStroke,
};
use compliant_lfd::sim::Environment;
use nalgebra::Vector2;

#[derive(Debug, Parser)]
#[command(
    name = "lfd",
    version,
    about = "Learn compliant in-contact motions from teleoperated demonstrations"
)]
struct Cli {
    /// Session configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Environment file; overrides the one named in the configuration.
    #[arg(long, global = true)]
    env: Option<PathBuf>,
    /// Seed of the force-estimate noise.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Simulation and control rate [Hz].
    #[arg(long, global = true)]
    rate: Option<f64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScriptKind {
    /// Press into the built-in floor and drag along it.
    Slide,
    /// Straight free-space stroke.
    Line,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Write a scripted master-input stream.
    Script {
        #[arg(value_enum)]
        kind: ScriptKind,
        /// Slide variant, 0 to 3.
        #[arg(long, default_value_t = 0)]
        variant: usize,
        /// Line direction [deg].
        #[arg(long, default_value_t = 20.0)]
        angle: f64,
        /// Line length [m].
        #[arg(long, default_value_t = 0.8)]
        length: f64,
        /// Line duration [s].
        #[arg(long, default_value_t = 3.0)]
        duration: f64,
        /// Output file name inside the output directory.
        #[arg(long)]
        name: Option<String>,
    },
    /// Teleoperate the slave with master-input streams and record demonstrations.
    Simulate {
        #[arg(required = true)]
        streams: Vec<PathBuf>,
        /// Ticks to simulate; defaults to the end of each stream.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Re-run session logs and check they reproduce exactly.
    DemoReplay {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
    /// Learn a controller from demonstration files or demonstration logs.
    Learn {
        #[arg(required = true)]
        demos: Vec<PathBuf>,
        /// Controller file name inside the output directory.
        #[arg(long, default_value = "controller.toml")]
        name: String,
    },
    /// Run a learned controller against the environment.
    Reproduce {
        #[arg(long)]
        controller: PathBuf,
        /// Start position `x,y` [m]; defaults to the controller's suggestion.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        start: Option<Vector2<f64>>,
        /// Base name of the log and plot-data files.
        #[arg(long, default_value = "reproduce")]
        name: String,
    },
    /// Serve the session to a UI over WebSocket.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8765")]
        addr: String,
    },
}

fn parse_point(s: &str) -> std::result::Result<Vector2<f64>, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [x, y] => Ok(Vector2::new(
            x.trim().parse().map_err(|_| format!("bad x in `{s}`"))?,
            y.trim().parse().map_err(|_| format!("bad y in `{s}`"))?,
        )),
        _ => Err(format!("expected `x,y`, got `{s}`")),
    }
}

fn load_config(cli: &Cli) -> Result<SessionConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            SessionConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?
        }
        None => SessionConfig::default(),
    };
    if let Some(env) = &cli.env {
        cfg.environment = Some(env.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.estimator.seed = seed;
    }
    if let Some(rate) = cli.rate {
        cfg.sim_rate = rate;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_environment(cfg: &SessionConfig) -> Result<Environment> {
    let what = match &cfg.environment {
        Some(p) => p.display().to_string(),
        None => "built-in floor".into(),
    };
    cfg.load_environment()
        .with_context(|| format!("loading environment {what}"))
}

fn output(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "demo".into())
}

/// `slide0` for `slide0.log.json`.
fn log_base(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = name.strip_suffix(".json").unwrap_or(&name);
    name.strip_suffix(".log").unwrap_or(name).to_string()
}

fn read_demonstration(path: &Path) -> Result<Demonstration> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let demo = if text.trim_start().starts_with('{') {
        SessionLog::from_json(&text).and_then(|log| log.recorded_demonstration())
    } else {
        Demonstration::parse(&text)
    };
    demo.with_context(|| format!("parsing {}", path.display()))
}

fn fmt_matrix(m: &nalgebra::Matrix2<f64>) -> String {
    // adding zero folds -0 into 0
    let e: Vec<String> = [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
        .iter()
        .map(|v| {
            let v = v + 0.0;
            if v != 0.0 && v.abs() < 1e-2 {
                format!("{v:.4e}")
            } else {
                format!("{v:.4}")
            }
        })
        .collect();
    format!("[{} {}; {} {}]", e[0], e[1], e[2], e[3])
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    match &cli.command {
        Cmd::Script {
            kind,
            variant,
            angle,
            length,
            duration,
            name,
        } => {
            let kp = cfg.coupling.position_scale;
            let (stream, default_name) = match kind {
                ScriptKind::Slide => {
                    let strokes = SlideStroke::variants();
                    let Some(stroke) = strokes.get(*variant) else {
                        bail!("slide variant must be 0 to {}", strokes.len() - 1);
                    };
                    (
                        stroke.stream(cfg.slave_start(), kp, cfg.sim_rate)?,
                        format!("slide{variant}.stream"),
                    )
                }
                ScriptKind::Line => {
                    let a = angle.to_radians();
                    let dir = Vector2::new(a.cos(), a.sin());
                    (
                        line_stream(cfg.slave_start(), dir, *length, *duration, kp, cfg.sim_rate)?,
                        "line.stream".into(),
                    )
                }
            };
            let path = output(&cli.out, name.as_deref().unwrap_or(&default_name))?;
            fs::write(&path, master_stream_to_text(&stream))?;
            println!("wrote {} ({} inputs)", path.display(), stream.len());
        }
        Cmd::Simulate { streams, steps } => {
            let env = load_environment(&cfg)?;
            for path in streams {
                let inputs = read_master_stream(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let name = stem(path);
                let run = run_demonstration(&cfg, &env, &inputs, *steps, &name)?;
                let demo_path = output(&cli.out, &format!("{name}.demo"))?;
                run.demonstration.write_file(&demo_path)?;
                let log_path = output(&cli.out, &format!("{name}.log.json"))?;
                SessionLog::demonstration(&cfg, &env, &inputs, &run).write_file(&log_path)?;
                let contact = run.trace.iter().filter(|r| r.contact).count();
                println!(
                    "{name}: {} samples, {} in contact{}; wrote {} and {}",
                    run.demonstration.len(),
                    contact,
                    if run.workspace_limited {
                        ", workspace limit reached"
                    } else {
                        ""
                    },
                    demo_path.display(),
                    log_path.display()
                );
            }
        }
        Cmd::DemoReplay { logs } => {
            for path in logs {
                let log = SessionLog::from_file(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let replay = log
                    .verify()
                    .with_context(|| format!("replaying {}", path.display()))?;
                match replay {
                    Replay::Demonstration(run) => {
                        let out = output(&cli.out, &format!("{}.replay.demo", log_base(path)))?;
                        run.demonstration.write_file(&out)?;
                        println!(
                            "{}: identical ({} samples); wrote {}",
                            path.display(),
                            run.demonstration.len(),
                            out.display()
                        );
                    }
                    Replay::Reproduction(run) => {
                        println!("{}: identical ({} ticks)", path.display(), run.trace.len());
                    }
                }
            }
        }
        Cmd::Learn { demos, name } => {
            let demos = demos
                .iter()
                .map(|p| read_demonstration(p))
                .collect::<Result<Vec<_>>>()?;
            let outcome = learn(&demos, &cfg.learning, cfg.estimator.noise_std)?;
            let d = outcome.direction.direction;
            let i = &outcome.direction.intersection;
            println!(
                "desired direction: [{:.4}, {:.4}] ({:.2} deg), inside {}/{} sectors",
                d.x,
                d.y,
                d.y.atan2(d.x).to_degrees(),
                i.coverage,
                i.total
            );
            let bic: Vec<String> = outcome
                .compliance
                .bic
                .iter()
                .map(|b| format!("{b:.3}"))
                .collect();
            println!(
                "BIC by compliant axes: [{}] -> D = {}",
                bic.join(", "),
                outcome.compliance.axes
            );
            let controller = outcome.controller(&cfg.learning, cfg.trajectory_length)?;
            println!("K_d = {}", fmt_matrix(&controller.stiffness));
            println!("D_d = {}", fmt_matrix(&controller.damping));
            println!("Lambda_chi = {}", fmt_matrix(&controller.gains.position));
            println!("Lambda_f = {}", fmt_matrix(&controller.gains.force));
            let path = output(&cli.out, name)?;
            controller.write_file(&path)?;
            println!("wrote {}", path.display());
        }
        Cmd::Reproduce {
            controller,
            start,
            name,
        } => {
            let ctrl = LearnedController::from_file(controller)
                .with_context(|| format!("reading controller {}", controller.display()))?;
            let env = load_environment(&cfg)?;
            let run = run_reproduction(&cfg, &env, &ctrl, *start)?;
            let m = &run.metrics;
            let log_path = output(&cli.out, &format!("{name}.log.json"))?;
            SessionLog::reproduction(&cfg, &env, &ctrl, *start, &run).write_file(&log_path)?;
            let plot_path = output(&cli.out, &format!("{name}.dat"))?;
            fs::write(&plot_path, trace_to_text(&run.trace))?;
            match (m.first_contact, m.contact_retention, m.mean_force) {
                (Some(t), Some(r), Some(f)) => println!(
                    "contact from {t:.3} s, retained {:.1}% of the motion, mean force {f:.1} N",
                    r * 100.0
                ),
                _ => println!("no contact"),
            }
            println!(
                "max force {:.1} N, max penetration {:.2} mm, final error {:.2} mm",
                m.max_force,
                m.max_penetration * 1e3,
                m.final_error * 1e3
            );
            if m.truncated {
                println!(
                    "trajectory truncated to {:.3} m at the workspace edge",
                    m.trajectory_length
                );
            }
            if m.workspace_limited {
                println!("workspace limit reached during the motion");
            }
            println!("wrote {} and {}", log_path.display(), plot_path.display());
        }
        Cmd::Serve { addr } => {
            let env = load_environment(&cfg)?;
            let mut session = Session::new(cfg, env)?;
            fs::create_dir_all(&cli.out)?;
            session.out_dir = Some(cli.out.clone());
            let listener = bind(addr.as_str())?;
            println!("serving on ws://{}", listener.local_addr()?);
            serve(listener, session)?;
        }
    }
    Ok(())
}
