//! Live session driven by UI messages, and its WebSocket endpoint.
//!
//! Every WebSocket text frame carries one JSON object with a `type` field.
//!
//! Client to server:
//!
//! * `{"type":"master","t":s,"x":m,"y":m}`: master position at client time
//!   `t`. Times must not decrease. The session advances physics up to `t`
//!   before applying the new position.
//! * `{"type":"cmd","cmd":"start_demo","label":"..."}`: reset the slave to its
//!   start pose and record from the next master message (its `t` becomes 0).
//! * `{"type":"cmd","cmd":"stop_demo"}`: end the recording.
//! * `{"type":"cmd","cmd":"learn"}`: learn a controller from all recordings.
//! * `{"type":"cmd","cmd":"reproduce","start":[x,y]}`: run the learned
//!   controller; `start` is optional.
//! * `{"type":"cmd","cmd":"set_config","config":"<toml>","environment":"<env text>"}`:
//!   replace the configuration and optionally the environment.
//!
//! Server to client:
//!
//! * `{"type":"state","t":s,"master":[x,y],"slave":[x,y],"force":[Fx,Fy],"contact":bool}`
//!   at 50 Hz of simulated time; positions in m, `force` is the estimated
//!   tool-on-environment force in N.
//! * `{"type":"result","kind":"demonstration"|"learned"|"reproduction"|"config",...}`
//! * `{"type":"error","message":"..."}`

use std::io::ErrorKind;
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::mpsc::{self, Receiver, Sender};
use std::thread;
use std::time::Duration;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use tungstenite::{Message, WebSocket};

use super::config::SessionConfig;
use super::log::SessionLog;
use super::run::{
    run_reproduction, trace_to_demonstration, DemonstrationRun, ReproductionMetrics, Teleoperation,
    TraceRow,
};
use super::scripts::MasterInput;
use crate::error::{Error, Result};
use crate::learning::{learn, Demonstration, LearnedController};
use crate::sim::Environment;

/// Rate of state frames [Hz].
pub const FRAME_RATE: f64 = 50.0;
/// Longest simulated stretch a single master message may trigger [s].
pub const MAX_CATCH_UP: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Master { t: f64, x: f64, y: f64 },
    Cmd(Command),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum Command {
    StartDemo {
        #[serde(default)]
        label: String,
    },
    StopDemo,
    Learn,
    Reproduce {
        #[serde(default)]
        start: Option<[f64; 2]>,
    },
    SetConfig {
        config: String,
        #[serde(default)]
        environment: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub t: f64,
    pub master: [f64; 2],
    pub slave: [f64; 2],
    pub force: [f64; 2],
    pub contact: bool,
}

impl From<&TraceRow> for StateFrame {
    fn from(r: &TraceRow) -> Self {
        Self {
            t: r.t,
            master: [r.master.x, r.master.y],
            slave: [r.slave.x, r.slave.y],
            force: [r.force.x, r.force.y],
            contact: r.contact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultPayload {
    Demonstration {
        index: usize,
        label: String,
        samples: usize,
        workspace_limited: bool,
    },
    Learned {
        controller: LearnedController,
        /// Demonstrations contributing directions.
        demos_used: usize,
        /// Sectors containing the chosen direction, out of `total`.
        coverage: usize,
        total: usize,
    },
    Reproduction {
        metrics: ReproductionMetrics,
    },
    Config {
        config: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State(StateFrame),
    Result(ResultPayload),
    Error { message: String },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self)
            .unwrap_or_else(|e| format!(r#"{{"type":"error","message":"{e}"}}"#))
    }
}

#[derive(Debug, Clone)]
struct Recording {
    label: String,
    inputs: Vec<MasterInput>,
    trace: Vec<TraceRow>,
}

/// Session state owned by a single loop; messages are applied in order.
#[derive(Debug)]
pub struct Session {
    config: SessionConfig,
    env: Environment,
    teleop: Teleoperation,
    /// Client time corresponding to teleoperation time 0.
    origin: Option<f64>,
    last_time: Option<f64>,
    recording: Option<Recording>,
    pub demonstrations: Vec<Demonstration>,
    pub controller: Option<LearnedController>,
    pub logs: Vec<SessionLog>,
    /// Directory receiving a file per log and the learned controller.
    pub out_dir: Option<PathBuf>,
    frame_every: usize,
    ticks: usize,
}

impl Session {
    pub fn new(config: SessionConfig, env: Environment) -> Result<Self> {
        let teleop = Teleoperation::new(config.clone(), env.clone())?;
        let frame_every = ((config.sim_rate / FRAME_RATE).round() as usize).max(1);
        Ok(Self {
            config,
            env,
            teleop,
            origin: None,
            last_time: None,
            recording: None,
            demonstrations: Vec::new(),
            controller: None,
            logs: Vec::new(),
            out_dir: None,
            frame_every,
            ticks: 0,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn is_recording(&self) -> bool {
        self.recording.is_some()
    }

    /// Parses and applies one text frame.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![error(format!("bad message: {e}"))],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        let mut out = Vec::new();
        let result = match msg {
            ClientMessage::Master { t, x, y } => self.master(t, Vector2::new(x, y), &mut out),
            ClientMessage::Cmd(cmd) => self.command(cmd, &mut out),
        };
        if let Err(e) = result {
            out.push(error(e.to_string()));
        }
        out
    }

    fn master(&mut self, t: f64, p: Vector2<f64>, out: &mut Vec<ServerMessage>) -> Result<()> {
        if !(t.is_finite() && p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::invalid("master message must be finite"));
        }
        if self.last_time.is_some_and(|last| t < last) {
            return Err(Error::invalid("master time went backwards"));
        }
        self.last_time = Some(t);
        let recording = self.recording.is_some();
        let origin = *self.origin.get_or_insert(t);
        let mut target = t - origin;
        if target - self.teleop.time() > MAX_CATCH_UP {
            if recording {
                return Err(Error::invalid(format!(
                    "master message {:.3} s ahead of the session",
                    target - self.teleop.time()
                )));
            }
            // idle teleoperation just re-anchors after a pause
            self.origin = Some(t - self.teleop.time());
            target = self.teleop.time();
        }
        while self.teleop.time() < target {
            let row = self.teleop.step()?;
            if self.ticks.is_multiple_of(self.frame_every) {
                out.push(ServerMessage::State(StateFrame::from(&row)));
            }
            self.ticks += 1;
            if let Some(rec) = &mut self.recording {
                rec.trace.push(row);
            }
        }
        self.teleop.set_master(p);
        if let Some(rec) = &mut self.recording {
            rec.inputs.push(MasterInput {
                t: target,
                position: p,
            });
        }
        Ok(())
    }

    fn command(&mut self, cmd: Command, out: &mut Vec<ServerMessage>) -> Result<()> {
        match cmd {
            Command::StartDemo { label } => {
                if self.recording.is_some() {
                    return Err(Error::invalid("already recording"));
                }
                self.teleop = Teleoperation::new(self.config.clone(), self.env.clone())?;
                self.origin = None;
                self.ticks = 0;
                self.recording = Some(Recording {
                    label,
                    inputs: Vec::new(),
                    trace: Vec::new(),
                });
            }
            Command::StopDemo => {
                let rec = self
                    .recording
                    .take()
                    .ok_or_else(|| Error::invalid("not recording"))?;
                let demonstration =
                    trace_to_demonstration(&rec.trace, self.config.sim_rate, &rec.label)?;
                let run = DemonstrationRun {
                    demonstration,
                    steps: rec.trace.len(),
                    trace: rec.trace,
                    workspace_limited: self.teleop.workspace_limited,
                };
                let log = SessionLog::demonstration(&self.config, &self.env, &rec.inputs, &run);
                self.demonstrations.push(run.demonstration);
                let index = self.demonstrations.len() - 1;
                self.store_log(log, &format!("demo-{:03}.json", index + 1))?;
                out.push(ServerMessage::Result(ResultPayload::Demonstration {
                    index,
                    label: rec.label,
                    samples: run.steps,
                    workspace_limited: run.workspace_limited,
                }));
            }
            Command::Learn => {
                if self.recording.is_some() {
                    return Err(Error::invalid("stop the recording before learning"));
                }
                if self.demonstrations.is_empty() {
                    return Err(Error::invalid("no demonstrations recorded"));
                }
                let params = &self.config.learning;
                let outcome = learn(
                    &self.demonstrations,
                    params,
                    self.config.estimator.noise_std,
                )?;
                let controller = outcome.controller(params, self.config.trajectory_length)?;
                if let Some(dir) = &self.out_dir {
                    controller.write_file(dir.join("controller.toml"))?;
                }
                self.controller = Some(controller.clone());
                out.push(ServerMessage::Result(ResultPayload::Learned {
                    controller,
                    demos_used: outcome.direction.demos.len(),
                    coverage: outcome.direction.intersection.coverage,
                    total: outcome.direction.intersection.total,
                }));
            }
            Command::Reproduce { start } => {
                if self.recording.is_some() {
                    return Err(Error::invalid("stop the recording before reproducing"));
                }
                let controller = self
                    .controller
                    .clone()
                    .ok_or_else(|| Error::invalid("nothing learned yet"))?;
                let start = start.map(|s| Vector2::new(s[0], s[1]));
                let run = run_reproduction(&self.config, &self.env, &controller, start)?;
                out.extend(
                    run.trace
                        .iter()
                        .step_by(self.frame_every)
                        .map(|r| ServerMessage::State(StateFrame::from(r))),
                );
                let log =
                    SessionLog::reproduction(&self.config, &self.env, &controller, start, &run);
                let n = self.logs.iter().filter(|l| l.controller.is_some()).count();
                self.store_log(log, &format!("reproduce-{:03}.json", n + 1))?;
                out.push(ServerMessage::Result(ResultPayload::Reproduction {
                    metrics: run.metrics,
                }));
            }
            Command::SetConfig {
                config,
                environment,
            } => {
                if self.recording.is_some() {
                    return Err(Error::invalid(
                        "cannot change the configuration while recording",
                    ));
                }
                let cfg = SessionConfig::from_toml(&config)?;
                let env = match environment {
                    Some(text) => Environment::parse(&text)?,
                    None if cfg.environment.is_some() => cfg.load_environment()?,
                    None => self.env.clone(),
                };
                let mut fresh = Session::new(cfg, env)?;
                fresh.demonstrations = std::mem::take(&mut self.demonstrations);
                fresh.logs = std::mem::take(&mut self.logs);
                fresh.out_dir = self.out_dir.take();
                *self = fresh;
                out.push(ServerMessage::Result(ResultPayload::Config {
                    config: self.config.to_toml()?,
                }));
            }
        }
        Ok(())
    }

    fn store_log(&mut self, log: SessionLog, name: &str) -> Result<()> {
        if let Some(dir) = &self.out_dir {
            log.write_file(dir.join(name))?;
        }
        self.logs.push(log);
        Ok(())
    }
}

fn error(message: String) -> ServerMessage {
    ServerMessage::Error { message }
}

enum Event {
    Connected(Sender<String>),
    Text(String),
}

/// Serves the session over WebSocket until the listener fails. Messages from
/// all clients share one ordered queue; every client receives every reply.
pub fn serve(listener: TcpListener, session: Session) -> Result<()> {
    let (events, queue) = mpsc::channel::<Event>();
    thread::spawn(move || session_loop(session, queue));
    for stream in listener.incoming() {
        let stream = stream?;
        let events = events.clone();
        thread::spawn(move || {
            let _ = client(stream, events);
        });
    }
    Ok(())
}

pub fn bind(addr: impl ToSocketAddrs) -> Result<TcpListener> {
    Ok(TcpListener::bind(addr)?)
}

fn session_loop(mut session: Session, queue: Receiver<Event>) {
    let mut subscribers: Vec<Sender<String>> = Vec::new();
    for event in queue {
        match event {
            Event::Connected(tx) => subscribers.push(tx),
            Event::Text(text) => {
                for msg in session.handle_text(&text) {
                    let json = msg.to_json();
                    subscribers.retain(|s| s.send(json.clone()).is_ok());
                }
            }
        }
    }
}

fn client(stream: TcpStream, events: Sender<Event>) -> Result<()> {
    let mut ws = tungstenite::accept(stream)
        .map_err(|e| Error::invalid(format!("handshake failed: {e}")))?;
    ws.get_mut()
        .set_read_timeout(Some(Duration::from_millis(5)))?;
    let (tx, outgoing) = mpsc::channel();
    events
        .send(Event::Connected(tx))
        .map_err(|_| Error::invalid("session loop stopped"))?;
    loop {
        while let Ok(text) = outgoing.try_recv() {
            send(&mut ws, text)?;
        }
        match ws.read() {
            Ok(Message::Text(text)) => {
                if events.send(Event::Text(text.to_string())).is_err() {
                    return Ok(());
                }
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => return Ok(()),
        }
    }
}

fn send(ws: &mut WebSocket<TcpStream>, text: String) -> Result<()> {
    ws.send(Message::text(text))
        .map_err(|e| Error::invalid(format!("send failed: {e}")))
}
