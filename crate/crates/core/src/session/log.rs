//! Session logs: everything needed to re-run a session bit-for-bit.
//!
//! A log is a JSON document holding the configuration, the environment, the
//! master-input stream and the tick count, plus what the session produced
//! (the recorded demonstration or the reproduction metrics). Replaying a log
//! re-runs the session from its inputs and compares the products.

use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::config::SessionConfig;
use super::run::{
    run_demonstration, run_reproduction, DemonstrationRun, ReproductionMetrics, ReproductionRun,
};
use super::scripts::MasterInput;
use crate::error::{Error, Result};
use crate::learning::{Demonstration, LearnedController};
use crate::sim::Environment;

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    Demonstrate,
    Reproduce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionLog {
    pub version: u32,
    pub mode: SessionMode,
    /// Configuration with the environment path dropped; the environment
    /// itself is stored inline.
    pub config: SessionConfig,
    /// Environment in its text format.
    pub environment: String,
    /// `[t, x, y]` rows, time relative to the start of the demonstration.
    #[serde(default)]
    pub master_inputs: Vec<[f64; 3]>,
    #[serde(default)]
    pub steps: usize,
    /// Recorded demonstration in its text format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demonstration: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<LearnedController>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<ReproductionMetrics>,
    #[serde(default)]
    pub workspace_limited: bool,
}

fn portable(config: &SessionConfig) -> SessionConfig {
    SessionConfig {
        environment: None,
        ..config.clone()
    }
}

impl SessionLog {
    pub fn demonstration(
        config: &SessionConfig,
        env: &Environment,
        inputs: &[MasterInput],
        run: &DemonstrationRun,
    ) -> Self {
        Self {
            version: LOG_VERSION,
            mode: SessionMode::Demonstrate,
            config: portable(config),
            environment: env.to_text(),
            master_inputs: inputs
                .iter()
                .map(|m| [m.t, m.position.x, m.position.y])
                .collect(),
            steps: run.steps,
            demonstration: Some(run.demonstration.to_text()),
            controller: None,
            start: None,
            metrics: None,
            workspace_limited: run.workspace_limited,
        }
    }

    pub fn reproduction(
        config: &SessionConfig,
        env: &Environment,
        controller: &LearnedController,
        start: Option<Vector2<f64>>,
        run: &ReproductionRun,
    ) -> Self {
        Self {
            version: LOG_VERSION,
            mode: SessionMode::Reproduce,
            config: portable(config),
            environment: env.to_text(),
            master_inputs: Vec::new(),
            steps: run.trace.len(),
            demonstration: None,
            controller: Some(controller.clone()),
            start: start.map(|s| [s.x, s.y]),
            metrics: Some(run.metrics),
            workspace_limited: run.metrics.workspace_limited,
        }
    }

    pub fn master_inputs(&self) -> Vec<MasterInput> {
        self.master_inputs
            .iter()
            .map(|r| MasterInput::new(r[0], r[1], r[2]))
            .collect()
    }

    pub fn environment(&self) -> Result<Environment> {
        Environment::parse(&self.environment)
    }

    /// The demonstration as recorded by the live session.
    pub fn recorded_demonstration(&self) -> Result<Demonstration> {
        let text = self
            .demonstration
            .as_deref()
            .ok_or_else(|| Error::invalid("log holds no demonstration"))?;
        Demonstration::parse(text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let log: SessionLog = serde_json::from_str(text)?;
        if log.version != LOG_VERSION {
            return Err(Error::invalid(format!(
                "unsupported log version {}",
                log.version
            )));
        }
        log.config.validate()?;
        Ok(log)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Re-runs the session from the logged inputs.
    pub fn replay(&self) -> Result<Replay> {
        let env = self.environment()?;
        match self.mode {
            SessionMode::Demonstrate => {
                let label = match &self.demonstration {
                    Some(text) => Demonstration::parse(text)?.label,
                    None => String::new(),
                };
                let run = run_demonstration(
                    &self.config,
                    &env,
                    &self.master_inputs(),
                    Some(self.steps),
                    &label,
                )?;
                Ok(Replay::Demonstration(run))
            }
            SessionMode::Reproduce => {
                let controller = self
                    .controller
                    .as_ref()
                    .ok_or_else(|| Error::invalid("reproduction log holds no controller"))?;
                let start = self.start.map(|s| Vector2::new(s[0], s[1]));
                Ok(Replay::Reproduction(run_reproduction(
                    &self.config,
                    &env,
                    controller,
                    start,
                )?))
            }
        }
    }

    /// Replays and checks the products match the log exactly.
    pub fn verify(&self) -> Result<Replay> {
        let replay = self.replay()?;
        let same = match &replay {
            Replay::Demonstration(run) => {
                self.recorded_demonstration()? == run.demonstration
                    && self.workspace_limited == run.workspace_limited
            }
            Replay::Reproduction(run) => self.metrics.as_ref() == Some(&run.metrics),
        };
        if same {
            Ok(replay)
        } else {
            Err(Error::invalid("replay diverges from the logged session"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Replay {
    Demonstration(DemonstrationRun),
    Reproduction(ReproductionRun),
}
