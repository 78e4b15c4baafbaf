//! Language-model backends for the planner, parser and orchestrator roles.
//!
//! Every backend answers with a structured JSON record or reports the
//! output as malformed; repairing malformed output is the caller's job.

#[cfg(feature = "http")]
mod http;
mod scripted;

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[cfg(feature = "http")]
pub use http::{HttpConfig, HttpProvider};
pub use scripted::{ScriptEntry, ScriptFixture, ScriptedProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Planner,
    Parser,
    Orchestrator,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Planner => "planner",
            Role::Parser => "parser",
            Role::Orchestrator => "orchestrator",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which record shape the caller expects back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaId {
    Plan,
    Params,
    Directive,
}

impl SchemaId {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemaId::Plan => "plan",
            SchemaId::Params => "params",
            SchemaId::Directive => "directive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Completion {
    Record(Value),
    Malformed { raw: String, reason: String },
}

impl Completion {
    /// Interprets model output text: it must be a single JSON object.
    pub fn from_text(text: &str) -> Completion {
        match serde_json::from_str::<Value>(text.trim()) {
            Ok(v @ Value::Object(_)) => Completion::Record(v),
            Ok(other) => Completion::Malformed {
                raw: text.to_string(),
                reason: format!("expected a JSON object, got {}", short_type(&other)),
            },
            Err(e) => Completion::Malformed { raw: text.to_string(), reason: format!("not JSON: {e}") },
        }
    }
}

fn short_type(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("script exhausted: no response for {role} step {step}")]
    ScriptExhausted { role: Role, step: u32 },
    #[error("invalid script {source_name}: {message}")]
    Script { source_name: String, message: String },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication failed (HTTP {status})")]
    Auth { status: u16 },
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("provider configuration: {0}")]
    Config(String),
}

pub trait ChatProvider: Send + Sync {
    fn name(&self) -> &str;

    fn model(&self) -> &str;

    /// `step` counts earlier calls for the same role within one session.
    fn complete(&self, role: Role, prompt: &PromptBundle, schema: SchemaId, step: u32) -> Result<Completion, ProviderError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_text_must_be_an_object() {
        assert_eq!(Completion::from_text(" {\"a\": 1}\n"), Completion::Record(serde_json::json!({"a": 1})));
        assert!(matches!(Completion::from_text("not json"), Completion::Malformed { .. }));
        assert!(matches!(Completion::from_text("[1]"), Completion::Malformed { .. }));
    }
}
