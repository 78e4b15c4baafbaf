use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ChatProvider, Completion, PromptBundle, ProviderError, Role, SchemaId};

/// One canned answer. `raw` holds literal model text (possibly malformed);
/// otherwise `response` is returned as a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub role: Role,
    pub step: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptFixture {
    #[serde(default)]
    pub name: String,
    pub entries: Vec<ScriptEntry>,
    #[serde(skip)]
    pub source: Option<PathBuf>,
}

impl ScriptFixture {
    pub fn from_json(text: &str, source_name: &str) -> Result<Self, ProviderError> {
        let fixture: ScriptFixture = serde_json::from_str(text)
            .map_err(|e| ProviderError::Script { source_name: source_name.to_string(), message: e.to_string() })?;
        fixture.check(source_name)?;
        Ok(fixture)
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Script { source_name: name.clone(), message: e.to_string() })?;
        let mut fixture = Self::from_json(&text, &name)?;
        fixture.source = Some(path.to_path_buf());
        Ok(fixture)
    }

    fn check(&self, source_name: &str) -> Result<(), ProviderError> {
        let fail = |message: String| ProviderError::Script { source_name: source_name.to_string(), message };
        let mut seen = std::collections::BTreeSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if !seen.insert((e.role, e.step)) {
                return Err(fail(format!("entries[{i}]: duplicate key ({}, {})", e.role, e.step)));
            }
            if e.response.is_some() == e.raw.is_some() {
                return Err(fail(format!("entries[{i}]: exactly one of response and raw is required")));
            }
        }
        Ok(())
    }
}

/// Replays a fixture keyed by `(role, step)`.
#[derive(Debug, Clone)]
pub struct ScriptedProvider {
    name: String,
    responses: BTreeMap<(Role, u32), Completion>,
}

impl ScriptedProvider {
    pub fn new(fixture: &ScriptFixture) -> Self {
        let responses = fixture
            .entries
            .iter()
            .map(|e| {
                let c = match (&e.response, &e.raw) {
                    (Some(v), _) => Completion::Record(v.clone()),
                    (None, Some(raw)) => Completion::from_text(raw),
                    (None, None) => unreachable!("checked on load"),
                };
                ((e.role, e.step), c)
            })
            .collect();
        let name = if fixture.name.is_empty() { "scripted".to_string() } else { format!("scripted:{}", fixture.name) };
        ScriptedProvider { name, responses }
    }
}

impl ChatProvider for ScriptedProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn model(&self) -> &str {
        "script"
    }

    fn complete(&self, role: Role, _prompt: &PromptBundle, _schema: SchemaId, step: u32) -> Result<Completion, ProviderError> {
        self.responses.get(&(role, step)).cloned().ok_or(ProviderError::ScriptExhausted { role, step })
    }
}
