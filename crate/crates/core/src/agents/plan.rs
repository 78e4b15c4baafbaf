use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::AgentError;
use crate::pdetoolkit::ToolRegistry;

/// Pseudo-tool marking answer composition; it invokes nothing.
pub const FINALIZE: &str = "finalize";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Query {
    pub text: String,
    /// Named expressions or constants supplied with the problem.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attachments: BTreeMap<String, String>,
}

impl Query {
    pub fn new(text: impl Into<String>) -> Result<Self, AgentError> {
        let q = Query { text: text.into(), attachments: BTreeMap::new() };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.text.trim().is_empty() {
            return Err(AgentError::InvalidQuery("query text is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subtask {
    pub id: u32,
    pub tool: String,
    #[serde(default)]
    pub goal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub subtasks: Vec<Subtask>,
    pub revision: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanRecord {
    subtasks: Vec<Subtask>,
}

impl Plan {
    /// Parses and checks a planner record. All problems are reported, so
    /// they can be echoed back to the planner in one go.
    pub fn from_record(record: &Value, revision: u32, registry: &ToolRegistry, max_subtasks: usize) -> Result<Plan, Vec<String>> {
        let parsed: PlanRecord = serde_json::from_value(record.clone()).map_err(|e| vec![format!("plan record: {e}")])?;
        let mut errors = Vec::new();
        if parsed.subtasks.is_empty() {
            errors.push("plan has no subtasks".to_string());
        }
        if parsed.subtasks.len() > max_subtasks {
            errors.push(format!("plan has {} subtasks; at most {max_subtasks} are allowed", parsed.subtasks.len()));
        }
        let mut last = 0;
        for (i, s) in parsed.subtasks.iter().enumerate() {
            if s.id <= last {
                errors.push(format!("subtasks[{i}]: id {} is not greater than the previous id {last}", s.id));
            }
            last = last.max(s.id);
            if s.tool != FINALIZE && registry.spec(&s.tool).is_none() {
                errors.push(format!("subtasks[{i}]: unknown tool `{}`", s.tool));
            }
        }
        if errors.is_empty() {
            Ok(Plan { subtasks: parsed.subtasks, revision })
        } else {
            Err(errors)
        }
    }

    pub fn subtask(&self, id: u32) -> Option<&Subtask> {
        self.subtasks.iter().find(|s| s.id == id)
    }

    pub fn position(&self, id: u32) -> Option<usize> {
        self.subtasks.iter().position(|s| s.id == id)
    }
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    fn check(v: Value) -> Result<Plan, Vec<String>> {
        Plan::from_record(&v, 0, &ToolRegistry::standard(), 20)
    }

    #[test]
    fn empty_query_is_invalid() {
        assert!(Query::new("  ").is_err());
        assert!(Query::new("Solve u_t = u_xx").is_ok());
    }

    #[test]
    fn valid_plan() {
        let p = check(json!({"subtasks": [
            {"id": 1, "tool": "define_geometry", "goal": "unit interval"},
            {"id": 2, "tool": "finalize"}
        ]}))
        .unwrap();
        assert_eq!(p.subtasks.len(), 2);
        assert_eq!(p.position(2), Some(1));
    }

    #[test]
    fn reports_every_problem() {
        let errs = check(json!({"subtasks": [
            {"id": 2, "tool": "define_mesh", "goal": ""},
            {"id": 2, "tool": "solve", "goal": ""}
        ]}))
        .unwrap_err();
        assert_eq!(errs.len(), 2, "{errs:?}");
        assert!(errs[0].contains("define_mesh"));
        assert!(errs[1].contains("not greater"));
        assert!(check(json!({"steps": []})).is_err());
        assert!(check(json!({"subtasks": []})).is_err());
    }

    #[test]
    fn size_limit() {
        let subtasks: Vec<Value> = (1..=21).map(|i| json!({"id": i, "tool": "solve"})).collect();
        assert!(check(json!({ "subtasks": subtasks })).unwrap_err()[0].contains("at most 20"));
    }
}
