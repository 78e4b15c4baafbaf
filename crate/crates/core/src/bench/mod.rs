//! Benchmark cases, the case runner and report aggregation.

mod report;
mod run;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::exprlang::SourceExpr;
use crate::toolgraph::ToolGraph;

pub use report::{render_comparison, render_markdown, BenchReport, CategoryRow, CorpusInfo, MetricSummary, Totals};
pub use run::{run_bench, BenchOptions, BenchRun, CaseResult, InvocationScore, ProviderFactory, ScriptedFactory, SharedProvider};

/// Label written into every report: the bundled packs are authored here.
pub const CORPUS_LABEL: &str = "authored corpus (not the original benchmark data)";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("case {case}: schema violation at {path}: {message}")]
    Schema { case: String, path: String, message: String },
    #[error("duplicate case id {0}")]
    Duplicate(String),
    #[error("pack manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

/// PDE families used to group results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BenchCategory {
    Heat,
    Diffusion,
    #[serde(rename = "Diffusion-Reaction")]
    DiffusionReaction,
    Wave,
    #[serde(rename = "Klein-Gordon")]
    KleinGordon,
    Advection,
    Burgers,
    Laplace,
    Poisson,
    #[serde(rename = "Allen-Cahn")]
    AllenCahn,
    Other,
}

impl BenchCategory {
    pub const ALL: [BenchCategory; 11] = [
        Self::Heat,
        Self::Diffusion,
        Self::DiffusionReaction,
        Self::Wave,
        Self::KleinGordon,
        Self::Advection,
        Self::Burgers,
        Self::Laplace,
        Self::Poisson,
        Self::AllenCahn,
        Self::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Heat => "Heat",
            Self::Diffusion => "Diffusion",
            Self::DiffusionReaction => "Diffusion-Reaction",
            Self::Wave => "Wave",
            Self::KleinGordon => "Klein-Gordon",
            Self::Advection => "Advection",
            Self::Burgers => "Burgers",
            Self::Laplace => "Laplace",
            Self::Poisson => "Poisson",
            Self::AllenCahn => "Allen-Cahn",
            Self::Other => "Other",
        }
    }
}

impl fmt::Display for BenchCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown category `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L2,
    Linf,
}

impl Norm {
    pub fn as_str(self) -> &'static str {
        match self {
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericCheck {
    pub reference: SourceExpr,
    pub norm: Norm,
    pub threshold: f64,
}

/// Reference texts for one expected tool call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedInvocation {
    pub tool: String,
    pub params: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCase {
    pub id: String,
    pub category: BenchCategory,
    pub nl_description: String,
    pub pattern_graph: ToolGraph,
    pub expected_invocations: Vec<ExpectedInvocation>,
    pub numeric_check: Option<NumericCheck>,
    /// Provider script, resolved against the case file's directory.
    pub script: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    id: String,
    category: BenchCategory,
    nl_description: String,
    pattern_graph: Value,
    #[serde(default)]
    expected_invocations: Vec<ExpectedInvocation>,
    #[serde(default)]
    numeric_check: Option<NumericCheck>,
    #[serde(default)]
    script: Option<PathBuf>,
}

impl BenchCase {
    /// Parses and validates one case record. `base` resolves the script path.
    pub fn from_json(text: &str, base: &Path, fallback_id: &str) -> Result<BenchCase, BenchError> {
        let raw: Value = serde_json::from_str(text).map_err(|e| BenchError::Schema {
            case: fallback_id.to_string(),
            path: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let case_id = raw.get("id").and_then(Value::as_str).unwrap_or(fallback_id).to_string();
        let schema = |path: String, message: String| BenchError::Schema { case: case_id.clone(), path, message };
        let file: CaseFile = serde_path_to_error::deserialize(&raw).map_err(|e| {
            let path = e.path().to_string();
            schema(if path == "." { "(root)".into() } else { path }, e.into_inner().to_string())
        })?;
        if file.id.trim().is_empty() {
            return Err(schema("id".into(), "must not be empty".into()));
        }
        let mut pattern_graph = ToolGraph::from_json(&file.pattern_graph.to_string())
            .map_err(|e| schema("pattern_graph".into(), e.to_string()))?;
        pattern_graph.finalize().map_err(|e| schema("pattern_graph".into(), e.to_string()))?;
        if pattern_graph.is_empty() {
            return Err(schema("pattern_graph.nodes".into(), "must not be empty".into()));
        }
        if let Some(check) = &file.numeric_check {
            if !(check.threshold > 0.0) {
                return Err(schema("numeric_check.threshold".into(), "must be > 0".into()));
            }
        }
        Ok(BenchCase {
            id: file.id,
            category: file.category,
            nl_description: file.nl_description,
            pattern_graph,
            expected_invocations: file.expected_invocations,
            numeric_check: file.numeric_check,
            script: file.script.map(|p| base.join(p)),
        })
    }

    pub fn load(path: &Path) -> Result<BenchCase, BenchError> {
        let text = read(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("?");
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")), stem)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    name: String,
    #[serde(default)]
    description: String,
    cases: Vec<PathBuf>,
}

/// A directory holding `pack.json` and one JSON file per case.
#[derive(Debug, Clone)]
pub struct Pack {
    pub name: String,
    pub description: String,
    pub dir: PathBuf,
    pub cases: Vec<BenchCase>,
}

impl Pack {
    pub fn load(dir: &Path) -> Result<Pack, BenchError> {
        let manifest_path = dir.join("pack.json");
        let manifest: Manifest = serde_json::from_str(&read(&manifest_path)?)
            .map_err(|e| BenchError::Manifest { path: manifest_path.clone(), message: e.to_string() })?;
        let mut cases = Vec::with_capacity(manifest.cases.len());
        let mut seen = BTreeSet::new();
        for file in &manifest.cases {
            let case = BenchCase::load(&dir.join(file))?;
            if !seen.insert(case.id.clone()) {
                return Err(BenchError::Duplicate(case.id));
            }
            cases.push(case);
        }
        Ok(Pack { name: manifest.name, description: manifest.description, dir: dir.to_path_buf(), cases })
    }

    pub fn info(&self) -> CorpusInfo {
        CorpusInfo { name: self.name.clone(), description: self.description.clone(), label: CORPUS_LABEL.to_string() }
    }
}

/// Loads the cases of the pack in `dir`.
pub fn load_cases(dir: &Path) -> Result<Vec<BenchCase>, BenchError> {
    Pack::load(dir).map(|p| p.cases)
}

fn read(path: &Path) -> Result<String, BenchError> {
    std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn record() -> Value {
        json!({
            "id": "c1",
            "category": "Heat",
            "nl_description": "Solve it.",
            "pattern_graph": {
                "nodes": [
                    {"id": "p1", "role": "define_geometry", "kind": "tool", "seq": 1},
                    {"id": "p2", "role": "define_pde", "kind": "tool", "seq": 2}
                ],
                "edges": [{"src": "p1", "dst": "p2", "dep_kind": "data"}]
            },
            "numeric_check": {"reference": "sin(pi*x)", "norm": "l2", "threshold": 0.001}
        })
    }

    #[test]
    fn parses_a_case() {
        let c = BenchCase::from_json(&record().to_string(), Path::new("/p"), "x").unwrap();
        assert_eq!(c.id, "c1");
        assert_eq!(c.pattern_graph.len(), 2);
        assert_eq!(c.numeric_check.unwrap().norm, Norm::L2);
    }

    #[test]
    fn missing_pattern_graph_is_a_schema_error() {
        let mut v = record();
        v.as_object_mut().unwrap().remove("pattern_graph");
        let err = BenchCase::from_json(&v.to_string(), Path::new("."), "x").unwrap_err();
        assert!(matches!(&err, BenchError::Schema { case, .. } if case == "c1"), "{err}");
        assert!(err.to_string().contains("pattern_graph"), "{err}");
    }

    #[test]
    fn schema_errors_carry_field_paths() {
        let mut v = record();
        v["numeric_check"]["norm"] = json!("l3");
        let err = BenchCase::from_json(&v.to_string(), Path::new("."), "x").unwrap_err().to_string();
        assert!(err.contains("numeric_check.norm"), "{err}");
        v["numeric_check"]["norm"] = json!("l2");
        v["numeric_check"]["threshold"] = json!(0);
        let err = BenchCase::from_json(&v.to_string(), Path::new("."), "x").unwrap_err().to_string();
        assert!(err.contains("threshold"), "{err}");
    }

    #[test]
    fn cyclic_pattern_graph_is_rejected() {
        let mut v = record();
        v["pattern_graph"]["edges"] = json!([
            {"src": "p1", "dst": "p2", "dep_kind": "data"},
            {"src": "p2", "dst": "p1", "dep_kind": "data"}
        ]);
        assert!(BenchCase::from_json(&v.to_string(), Path::new("."), "x").is_err());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.json"), record().to_string()).unwrap();
        std::fs::write(dir.path().join("b.json"), record().to_string()).unwrap();
        std::fs::write(dir.path().join("pack.json"), json!({"name": "t", "cases": ["a.json", "b.json"]}).to_string()).unwrap();
        assert!(matches!(Pack::load(dir.path()), Err(BenchError::Duplicate(id)) if id == "c1"));
    }

    #[test]
    fn bundled_pack_spans_categories() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../packs/standard");
        let cases = load_cases(&dir).unwrap();
        assert_eq!(cases.len(), 12);
        let cats: BTreeSet<_> = cases.iter().map(|c| c.category).collect();
        assert!(cats.len() >= 6, "{cats:?}");
    }

    #[test]
    fn category_names_round_trip() {
        for c in BenchCategory::ALL {
            assert_eq!(c.as_str().parse::<BenchCategory>().unwrap(), c);
            assert_eq!(serde_json::to_value(c).unwrap(), json!(c.as_str()));
        }
    }
}
