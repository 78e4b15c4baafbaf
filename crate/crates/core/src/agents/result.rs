use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::{Plan, ProgActConfig, Query};
use crate::pdetoolkit::{Artifact, Diagnostic, Handle, ParamSet, ResourcePool, Solution};
use crate::toolgraph::{GraphAction, NodeId, ToolGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Ok,
    Failed,
    Invalidated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordError {
    /// `schema`, `dangling_handle`, `numeric`, `tool`, `malformed`, ...
    pub kind: String,
    pub message: String,
}

/// One executed (or attempted) subtask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionRecord {
    pub seq: u32,
    pub subtask: u32,
    pub tool: String,
    pub plan_revision: u32,
    /// Null when no valid parameters could be extracted.
    pub params: Option<ParamSet>,
    pub status: RecordStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub handle: Option<Handle>,
    pub summary: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<RecordError>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
    /// Validation requested by the parser together with its parameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assist: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    /// Why the record exists: `plan`, `retry`, `reparse`, `redo` or `replay`.
    pub origin: String,
}

impl ActionRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RecordStatus::Ok
    }
}

impl GraphAction for ActionRecord {
    fn seq(&self) -> u32 {
        self.seq
    }

    fn tool(&self) -> &str {
        &self.tool
    }

    fn consumed_handles(&self) -> Vec<String> {
        self.params.as_ref().map(|p| p.all_handles().iter().map(Handle::to_string).collect()).unwrap_or_default()
    }

    fn produced_handle(&self) -> Option<String> {
        self.handle.map(|h| h.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Plan {
        revision: u32,
        subtasks: Vec<u32>,
    },
    /// One review round; rounds after the first re-check a recovery.
    Checkpoint {
        index: u32,
        round: u32,
        trigger: String,
        window: Vec<u32>,
        flags: Vec<String>,
        outcome: String,
    },
    Directive {
        checkpoint: u32,
        directive: Value,
        accepted: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
    Recovery {
        checkpoint: u32,
        evicted: Vec<Handle>,
        invalidated: Vec<u32>,
        reexecuted: Vec<u32>,
    },
    Escalation {
        reason: String,
    },
    Replan {
        revision: u32,
        carried: Vec<u32>,
    },
    Failure {
        message: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SessionStats {
    /// Checkpoints reached.
    pub validation_events: u32,
    /// Extra review rounds after recoveries.
    pub rechecks: u32,
    pub corrections: u32,
    pub replans: u32,
    /// Provider calls per role.
    pub provider_calls: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Solved,
    Failed,
}

#[derive(Debug, Clone)]
pub struct SessionResult {
    pub query: Query,
    pub status: SessionStatus,
    pub failure: Option<String>,
    pub answer: String,
    pub plan: Option<Plan>,
    pub records: Vec<ActionRecord>,
    /// Graph memory: every successful action, including invalidated ones.
    pub memory: ToolGraph,
    /// Execution graph: the valid part of the memory, finalized.
    pub graph: ToolGraph,
    pub pool: ResourcePool,
    pub events: Vec<SessionEvent>,
    pub stats: SessionStats,
    pub config: ProgActConfig,
    pub provider: String,
    pub model: String,
}

impl SessionResult {
    pub fn solved(&self) -> bool {
        self.status == SessionStatus::Solved
    }

    pub fn valid_records(&self) -> impl Iterator<Item = &ActionRecord> {
        self.records.iter().filter(|r| r.is_ok())
    }

    /// The solution produced by the last valid `solve` action.
    pub fn final_solution(&self) -> Option<&Solution> {
        let h = self.valid_records().filter(|r| r.tool == "solve").filter_map(|r| r.handle).last()?;
        match &**self.pool.get(&h).ok()? {
            Artifact::Solution(s) => Some(s),
            _ => None,
        }
    }

    /// Writes `actions.jsonl`, `graph.json`, `memory.json`, `pool.json`,
    /// `answer.md`, `config.json` and `events.jsonl` into `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("actions.jsonl"), jsonl(&self.records))?;
        std::fs::write(dir.join("events.jsonl"), jsonl(&self.events))?;
        std::fs::write(dir.join("graph.json"), self.graph.to_json())?;
        std::fs::write(dir.join("memory.json"), self.memory.to_json())?;
        let pool = json!({"session": self.pool.session_id(), "entries": self.pool.snapshot()});
        std::fs::write(dir.join("pool.json"), pretty(&pool))?;
        std::fs::write(dir.join("answer.md"), &self.answer)?;
        let config = json!({
            "progact": self.config,
            "provider": self.provider,
            "model": self.model,
            "status": self.status,
            "failure": self.failure,
            "stats": self.stats,
        });
        std::fs::write(dir.join("config.json"), pretty(&config))?;
        Ok(())
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|v| serde_json::to_string(v).expect("serializable") + "\n").collect()
}

/// Deterministic final answer built from the query and the valid outcomes.
pub(super) fn compose_answer(query: &Query, records: &[ActionRecord], status: SessionStatus, failure: Option<&str>) -> String {
    let mut out = String::from("# Answer\n\n");
    let _ = writeln!(out, "**Problem.** {}\n", query.text.trim());
    let valid: Vec<&ActionRecord> = records.iter().filter(|r| r.is_ok()).collect();
    if !valid.is_empty() {
        out.push_str("**Steps.**\n\n");
        for (i, r) in valid.iter().enumerate() {
            let _ = writeln!(out, "{}. `{}`: {}", i + 1, r.tool, r.summary);
        }
        out.push('\n');
    }
    match status {
        SessionStatus::Solved => {
            let last = valid.iter().rev().find(|r| matches!(r.tool.as_str(), "compute_error" | "evaluate_solution" | "solve"));
            if let Some(r) = last {
                let _ = writeln!(out, "**Result.** {}", r.summary);
            }
        }
        SessionStatus::Failed => {
            let _ = writeln!(out, "**Unsolved.** {}", failure.unwrap_or("the session failed"));
        }
    }
    out
}
