//! Demonstration recording, learning and reproduction sessions.

pub mod config;
pub mod log;
pub mod run;
pub mod scripts;
pub mod service;

pub use config::SessionConfig;
pub use log::{Replay, SessionLog, SessionMode};
pub use run::{
    run_demonstration, run_reproduction, trace_to_text, DemonstrationRun, ReproductionMetrics,
    ReproductionRun, Teleoperation, TraceRow,
};
pub use scripts::{default_environment, MasterInput, SlideStroke};
pub use service::{ClientMessage, Command, ResultPayload, ServerMessage, Session, StateFrame};
