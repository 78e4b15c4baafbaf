use std::path::{Path, PathBuf};
use std::sync::Arc;

use pdeflow_core::agents::{run_session, Query, SessionOptions};
use pdeflow_core::bench::{render_comparison, render_markdown, run_bench, BenchCase, BenchOptions, BenchReport, Pack, ProviderFactory, ScriptedFactory, SharedProvider};
use pdeflow_core::graphmetrics;
use pdeflow_core::pdetoolkit::ToolRegistry;
use pdeflow_core::providers::{ChatProvider, HttpProvider, ScriptFixture, ScriptedProvider};
use pdeflow_core::toolgraph::ToolGraph;
use serde_json::json;
use tracing::info;

use crate::config::{CliConfig, ProviderKind};
use crate::{BenchArgs, CliError, Common, RunArgs};

/// Packs shipped with the repository; `PDEFLOW_PACKS` overrides.
const BUNDLED_PACKS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../packs");

struct Settings {
    cfg: CliConfig,
    out: PathBuf,
    json: bool,
}

fn settings(common: &Common) -> Result<Settings, CliError> {
    let mut cfg = match &common.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    if let Some(seed) = cfg.seed {
        cfg.metrics.n2v.seed = seed;
    }
    cfg.trace |= common.trace;
    cfg.metrics.validate().map_err(|e| CliError::Usage(format!("metrics config: {e}")))?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("pdeflow-out"));
    if cfg.trace {
        cfg.http.trace_dir = Some(out.join("trace"));
    }
    Ok(Settings { cfg, out, json: common.json })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Failed(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

fn http_provider(cfg: &CliConfig) -> Result<HttpProvider, CliError> {
    let mut http = cfg.http.clone();
    http.apply_env(|k| std::env::var(k).ok());
    HttpProvider::new(http).map_err(|e| CliError::Usage(e.to_string()))
}

fn pack_roots(explicit: Option<&Path>) -> Vec<PathBuf> {
    if let Some(p) = explicit {
        return vec![p.to_path_buf()];
    }
    let root = std::env::var_os("PDEFLOW_PACKS").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(BUNDLED_PACKS));
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&root)
        .map(|it| it.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.join("pack.json").is_file()).collect())
        .unwrap_or_default();
    dirs.sort();
    dirs
}

fn find_case(id: &str, pack: Option<&Path>) -> Result<BenchCase, CliError> {
    for dir in pack_roots(pack) {
        let pack = Pack::load(&dir).map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(case) = pack.cases.into_iter().find(|c| c.id == id) {
            return Ok(case);
        }
    }
    Err(CliError::Usage(format!("no case `{id}` in the searched packs")))
}

pub fn run(common: &Common, args: RunArgs) -> Result<(), CliError> {
    let s = settings(common)?;
    let (id, text, case_script) = match (&args.case, &args.query, &args.query_file) {
        (Some(id), _, _) => {
            let case = find_case(id, args.pack.as_deref())?;
            (case.id, case.nl_description, case.script)
        }
        (None, Some(q), _) => ("session".to_string(), q.clone(), None),
        (None, None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            ("session".to_string(), text, None)
        }
        (None, None, None) => return Err(CliError::Usage("no query given: pass --case, --query or --query-file".into())),
    };
    let query = Query::new(text).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut progact = s.cfg.progact.clone();
    if let Some(mode) = args.mode {
        progact.mode = mode;
    }
    let dir = s.out.join(&id);
    let mut http_cfg = s.cfg.clone();
    if http_cfg.trace {
        http_cfg.http.trace_dir = Some(dir.join("trace"));
    }
    let provider: Box<dyn ChatProvider> = match args.provider.unwrap_or(s.cfg.provider) {
        ProviderKind::Scripted => {
            let path = args
                .script
                .or(case_script)
                .or(s.cfg.script.clone())
                .ok_or_else(|| CliError::Usage("the scripted provider needs --script or --case".into()))?;
            Box::new(ScriptedProvider::new(&ScriptFixture::load(&path).map_err(|e| CliError::Usage(e.to_string()))?))
        }
        ProviderKind::Http => Box::new(http_provider(&http_cfg)?),
    };
    let opts = SessionOptions { session_id: id.clone(), workdir: dir.join("work") };
    std::fs::create_dir_all(&opts.workdir).map_err(|e| CliError::Failed(format!("{}: {e}", opts.workdir.display())))?;
    let result = run_session(&query, &ToolRegistry::standard(), provider.as_ref(), &progact, &opts)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    result.write_to(&dir).map_err(|e| CliError::Failed(format!("{}: {e}", dir.display())))?;
    info!(dir = %dir.display(), "session written");
    if s.json {
        let summary = json!({
            "session": dir,
            "status": result.status,
            "failure": result.failure,
            "stats": result.stats,
        });
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    }
    match &result.failure {
        None => {
            eprintln!("solved; session written to {}", dir.display());
            Ok(())
        }
        Some(f) => Err(CliError::Failed(format!("session failed: {f} (trace in {})", dir.display()))),
    }
}

fn load_graph(path: &Path) -> Result<ToolGraph, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut g = ToolGraph::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    g.finalize().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(g)
}

pub fn eval(common: &Common, exec: &Path, pattern: &Path) -> Result<(), CliError> {
    let s = settings(common)?;
    let (e, p) = (load_graph(exec)?, load_graph(pattern)?);
    let scores = graphmetrics::evaluate(&e, &p, &s.cfg.metrics).map_err(|e| CliError::Usage(e.to_string()))?;
    if s.json {
        let mut record = serde_json::to_value(&scores).expect("scores serialize");
        record["config"] = serde_json::to_value(&s.cfg.metrics).expect("config serializes");
        println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
    } else {
        for (name, v) in scores.components() {
            eprintln!("{name:>14}  {v:.6}");
        }
        eprintln!("{:>14}  {}{}", "ged", scores.ged, if scores.ged_approximate { " (upper bound)" } else { "" });
        eprintln!("{:>14}  {:.6}", "nged", scores.nged);
    }
    Ok(())
}

pub fn bench(common: &Common, args: BenchArgs) -> Result<(), CliError> {
    let s = settings(common)?;
    if !args.pack.is_dir() {
        return Err(CliError::Usage(format!("pack directory {} does not exist", args.pack.display())));
    }
    let pack = Pack::load(&args.pack).map_err(|e| CliError::Usage(e.to_string()))?;
    let factory: Box<dyn ProviderFactory> = match args.provider.unwrap_or(s.cfg.provider) {
        ProviderKind::Scripted => Box::new(ScriptedFactory),
        ProviderKind::Http => Box::new(SharedProvider(Arc::new(http_provider(&s.cfg)?))),
    };
    let mut opts = BenchOptions::new(pack.info());
    opts.progact = s.cfg.progact.clone();
    if let Some(mode) = args.mode {
        opts.progact.mode = mode;
    }
    opts.metrics = s.cfg.metrics.clone();
    opts.jobs = args.jobs.max(1);
    opts.sessions_dir = Some(s.out.join("sessions"));
    let run = run_bench(&pack.cases, &ToolRegistry::standard(), factory.as_ref(), &opts);
    let report = &run.report;
    write(&s.out.join("report.json"), &report.to_json())?;
    write(&s.out.join("report.md"), &render_markdown(report))?;
    if s.json {
        print!("{}", report.to_json());
    }
    let t = &report.totals;
    eprintln!("{}/{} cases passed; report written to {}", t.passed, t.cases, s.out.join("report.md").display());
    if t.passed == t.cases {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} case(s) failed", t.cases - t.passed)))
    }
}

pub fn report(common: &Common, dirs: &[PathBuf]) -> Result<(), CliError> {
    let s = settings(common)?;
    let mut reports = Vec::new();
    for dir in dirs {
        let path = dir.join("report.json");
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let report: BenchReport = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let label = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| dir.display().to_string());
        reports.push((label, report));
    }
    if s.json {
        let totals: Vec<_> = reports.iter().map(|(l, r)| json!({"run": l, "totals": r.totals, "categories": r.categories})).collect();
        println!("{}", serde_json::to_string_pretty(&totals).expect("totals serialize"));
        return Ok(());
    }
    let text = match reports.as_slice() {
        [(_, single)] => render_markdown(single),
        many => render_comparison(many),
    };
    print!("{text}");
    Ok(())
}

pub fn tools(common: &Common) -> Result<(), CliError> {
    let s = settings(common)?;
    let registry = ToolRegistry::standard();
    if s.json {
        println!("{}", serde_json::to_string_pretty(&registry.schema_document()).expect("schema serializes"));
    } else {
        for spec in registry.specs() {
            eprintln!("{:<26} {}", spec.name, spec.description);
        }
    }
    Ok(())
}
