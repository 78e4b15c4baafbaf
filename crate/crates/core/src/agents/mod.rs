//! Planner, parser/solver and orchestrator roles driving the PDE tools.
//!
//! A session plans once, then alternates parameter extraction and tool
//! invocation. Checkpoints validate the recent window of actions; flagged
//! windows get a correction directive from the orchestrator (inner loop),
//! and repeated identical failures or an exhausted correction budget
//! escalate to a revised plan (outer loop).

mod plan;
mod prompts;
mod result;
mod session;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use plan::{Plan, Query, Subtask, FINALIZE};
pub use result::{ActionRecord, RecordError, RecordStatus, SessionEvent, SessionResult, SessionStats, SessionStatus};
pub use session::{run_session, SessionOptions};

use crate::providers::ProviderError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Checkpoints every `checkpoint_every` steps plus triggers, both loops on.
    Progact,
    /// A checkpoint after every step.
    Stepwise,
    /// No validation and no recovery: the first failure ends the session.
    Static,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "progact" => Ok(Mode::Progact),
            "stepwise" => Ok(Mode::Stepwise),
            "static" => Ok(Mode::Static),
            other => Err(format!("unknown mode `{other}` (expected progact, stepwise or static)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProgActConfig {
    pub checkpoint_every: u32,
    pub critical_tools: Vec<String>,
    pub inner_retry_budget: u32,
    pub collapse_after: u32,
    pub outer_replan_budget: u32,
    pub mode: Mode,
    pub max_subtasks: usize,
}

impl Default for ProgActConfig {
    fn default() -> Self {
        ProgActConfig {
            checkpoint_every: 3,
            critical_tools: vec!["solve".into(), "assemble_problem".into()],
            inner_retry_budget: 2,
            collapse_after: 2,
            outer_replan_budget: 2,
            mode: Mode::Progact,
            max_subtasks: 20,
        }
    }
}

impl ProgActConfig {
    pub fn with_mode(mode: Mode) -> Self {
        ProgActConfig { mode, ..Default::default() }.effective()
    }

    /// Applies the mode's overrides: stepwise validates after every step.
    pub fn effective(mut self) -> Self {
        if self.mode == Mode::Stepwise {
            self.checkpoint_every = 1;
        }
        self
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.checkpoint_every == 0 {
            return Err(AgentError::Config("checkpoint_every must be at least 1".into()));
        }
        if self.collapse_after == 0 {
            return Err(AgentError::Config("collapse_after must be at least 1".into()));
        }
        if self.max_subtasks == 0 {
            return Err(AgentError::Config("max_subtasks must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("invalid plan: {0}")]
    Plan(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stepwise_forces_single_step_cadence() {
        assert_eq!(ProgActConfig::with_mode(Mode::Stepwise).checkpoint_every, 1);
        assert_eq!(ProgActConfig::with_mode(Mode::Progact).checkpoint_every, 3);
    }

    #[test]
    fn config_rejects_unknown_fields() {
        assert!(serde_json::from_str::<ProgActConfig>(r#"{"checkpoint_every": 2}"#).is_ok());
        assert!(serde_json::from_str::<ProgActConfig>(r#"{"cadence": 2}"#).is_err());
    }
}
