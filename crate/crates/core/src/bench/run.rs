use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use super::report::BenchReport;
use super::{BenchCase, BenchCategory, CorpusInfo};
use crate::agents::{run_session, ProgActConfig, Query, SessionOptions, SessionResult};
use crate::graphmetrics::{self, LogicalScores, MetricConfig};
use crate::pdetoolkit::{solution_error, ToolRegistry};
use crate::providers::{ChatProvider, ProviderError, ScriptFixture, ScriptedProvider};
use crate::textmetrics::{local_scores, EmbeddingProvider, HashedNgramEmbedder, LocalScores};

/// Supplies the provider a case runs against.
pub trait ProviderFactory: Sync {
    fn provider(&self, case: &BenchCase) -> Result<Arc<dyn ChatProvider>, ProviderError>;
}

/// Replays each case's own script.
pub struct ScriptedFactory;

impl ProviderFactory for ScriptedFactory {
    fn provider(&self, case: &BenchCase) -> Result<Arc<dyn ChatProvider>, ProviderError> {
        let path = case
            .script
            .as_ref()
            .ok_or_else(|| ProviderError::Config(format!("case {} has no provider script", case.id)))?;
        Ok(Arc::new(ScriptedProvider::new(&ScriptFixture::load(path)?)))
    }
}

/// One provider (e.g. a live endpoint) shared by every case.
pub struct SharedProvider(pub Arc<dyn ChatProvider>);

impl ProviderFactory for SharedProvider {
    fn provider(&self, _case: &BenchCase) -> Result<Arc<dyn ChatProvider>, ProviderError> {
        Ok(self.0.clone())
    }
}

pub struct BenchOptions {
    pub progact: ProgActConfig,
    pub metrics: MetricConfig,
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub jobs: usize,
    /// Where session directories go; a temporary directory when unset.
    pub sessions_dir: Option<PathBuf>,
    pub corpus: CorpusInfo,
}

impl BenchOptions {
    pub fn new(corpus: CorpusInfo) -> Self {
        BenchOptions {
            progact: ProgActConfig::default(),
            metrics: MetricConfig::default(),
            embedder: Arc::new(HashedNgramEmbedder::default()),
            jobs: 1,
            sessions_dir: None,
            corpus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvocationScore {
    pub tool: String,
    /// Seq of the matched action, if the tool ran often enough.
    pub matched: Option<u32>,
    pub scores: LocalScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub category: BenchCategory,
    pub pass: bool,
    pub solved: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub logical: Option<LogicalScores>,
    pub local: Vec<InvocationScore>,
    pub numeric_error: Option<f64>,
    pub threshold: Option<f64>,
    pub validation_events: u32,
    pub rechecks: u32,
    pub corrections: u32,
    pub replans: u32,
    /// Session directory relative to the sessions root.
    pub session: Option<String>,
}

pub struct BenchRun {
    pub report: BenchReport,
    pub results: Vec<CaseResult>,
}

pub fn run_bench(cases: &[BenchCase], registry: &ToolRegistry, factory: &dyn ProviderFactory, opts: &BenchOptions) -> BenchRun {
    let scratch = match &opts.sessions_dir {
        Some(_) => None,
        None => tempfile::tempdir().map_err(|e| warn!(error = %e, "no scratch directory")).ok(),
    };
    let root: PathBuf = opts
        .sessions_dir
        .clone()
        .or_else(|| scratch.as_ref().map(|d| d.path().to_path_buf()))
        .unwrap_or_else(std::env::temp_dir);
    let jobs = opts.jobs.max(1).min(cases.len().max(1));
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<CaseResult>> = vec![None; cases.len()];
    let finished: Vec<(usize, CaseResult)> = std::thread::scope(|s| {
        let workers: Vec<_> = (0..jobs)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        let Some(case) = cases.get(i) else { break };
                        done.push((i, run_case(case, registry, factory, opts, &root)));
                    }
                    done
                })
            })
            .collect();
        workers.into_iter().flat_map(|w| w.join().expect("bench worker")).collect()
    });
    for (i, r) in finished {
        slots[i] = Some(r);
    }
    let mut results: Vec<CaseResult> = slots.into_iter().map(|r| r.expect("every case ran")).collect();
    results.sort_by(|a, b| a.id.cmp(&b.id));
    let report = BenchReport::aggregate(&results, opts);
    BenchRun { report, results }
}

fn failed(case: &BenchCase, message: String) -> CaseResult {
    CaseResult {
        id: case.id.clone(),
        category: case.category,
        pass: false,
        solved: false,
        failure: Some(message),
        logical: None,
        local: Vec::new(),
        numeric_error: None,
        threshold: case.numeric_check.as_ref().map(|c| c.threshold),
        validation_events: 0,
        rechecks: 0,
        corrections: 0,
        replans: 0,
        session: None,
    }
}

fn run_case(case: &BenchCase, registry: &ToolRegistry, factory: &dyn ProviderFactory, opts: &BenchOptions, root: &Path) -> CaseResult {
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| try_case(case, registry, factory, opts, root)));
    let result = match outcome {
        Ok(Ok(r)) => r,
        Ok(Err(message)) => failed(case, message),
        Err(_) => failed(case, "internal error while running the case".into()),
    };
    info!(case = %case.id, pass = result.pass, "case finished");
    result
}

fn try_case(case: &BenchCase, registry: &ToolRegistry, factory: &dyn ProviderFactory, opts: &BenchOptions, root: &Path) -> Result<CaseResult, String> {
    let provider = factory.provider(case).map_err(|e| e.to_string())?;
    let dir = root.join(&case.id);
    let session_opts = SessionOptions { session_id: case.id.clone(), workdir: dir.join("work") };
    std::fs::create_dir_all(&session_opts.workdir).map_err(|e| format!("{}: {e}", session_opts.workdir.display()))?;
    let query = Query::new(case.nl_description.clone()).map_err(|e| e.to_string())?;
    let session = run_session(&query, registry, provider.as_ref(), &opts.progact, &session_opts).map_err(|e| e.to_string())?;
    session.write_to(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let mut result = score(case, &session, opts);
    result.session = opts.sessions_dir.as_ref().map(|_| case.id.clone());
    Ok(result)
}

fn score(case: &BenchCase, session: &SessionResult, opts: &BenchOptions) -> CaseResult {
    let logical = graphmetrics::evaluate(&session.graph, &case.pattern_graph, &opts.metrics)
        .map_err(|e| warn!(case = %case.id, error = %e, "logical scoring failed"))
        .ok();
    let numeric_error = case.numeric_check.as_ref().and_then(|check| {
        let solution = session.final_solution()?;
        solution_error(solution, &check.reference, check.norm.as_str()).ok()
    });
    let numeric_ok = match &case.numeric_check {
        None => true,
        Some(check) => numeric_error.is_some_and(|e| e <= check.threshold),
    };
    let solved = session.solved();
    let failure = match (&session.failure, solved, numeric_ok) {
        (Some(f), _, _) => Some(f.clone()),
        (None, true, false) => Some(match numeric_error {
            Some(e) => format!("numeric error {e:.3e} above threshold"),
            None => "no solution to check".to_string(),
        }),
        _ => None,
    };
    CaseResult {
        id: case.id.clone(),
        category: case.category,
        pass: solved && numeric_ok,
        solved,
        failure,
        logical,
        local: local(case, session, opts.embedder.as_ref()),
        numeric_error,
        threshold: case.numeric_check.as_ref().map(|c| c.threshold),
        validation_events: session.stats.validation_events,
        rechecks: session.stats.rechecks,
        corrections: session.stats.corrections,
        replans: session.stats.replans,
        session: None,
    }
}

/// Pairs the k-th expected call of a tool with the k-th valid action of the
/// same tool and scores their `params output` texts.
fn local(case: &BenchCase, session: &SessionResult, embedder: &dyn EmbeddingProvider) -> Vec<InvocationScore> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let zero = LocalScores { sts: 0.0, bert_p: 0.0, bert_r: 0.0, bert_f1: 0.0 };
    case.expected_invocations
        .iter()
        .map(|exp| {
            let k = seen.entry(exp.tool.as_str()).or_insert(0);
            let action = session.valid_records().filter(|r| r.tool == exp.tool).nth(*k);
            *k += 1;
            let Some(action) = action else {
                return InvocationScore { tool: exp.tool.clone(), matched: None, scores: zero };
            };
            let params = action.params.as_ref().map(|p| p.to_json().to_string()).unwrap_or_default();
            let candidate = format!("{params} {}", action.summary);
            let reference = format!("{} {}", exp.params, exp.output);
            let scores = local_scores(&candidate, &reference, embedder).unwrap_or(zero);
            InvocationScore { tool: exp.tool.clone(), matched: Some(action.seq), scores }
        })
        .collect()
}
