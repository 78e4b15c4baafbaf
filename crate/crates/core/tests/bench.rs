use std::path::{Path, PathBuf};

use pdeflow_core::agents::{Mode, ProgActConfig};
use pdeflow_core::bench::{load_cases, run_bench, BenchOptions, BenchRun, Pack, ScriptedFactory, CORPUS_LABEL};
use pdeflow_core::pdetoolkit::ToolRegistry;

fn pack_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../packs").join(name)
}

fn bench(dir: &Path, mode: Mode, jobs: usize) -> BenchRun {
    let pack = Pack::load(dir).unwrap();
    let mut opts = BenchOptions::new(pack.info());
    opts.progact = ProgActConfig::with_mode(mode);
    opts.jobs = jobs;
    run_bench(&pack.cases, &ToolRegistry::standard(), &ScriptedFactory, &opts)
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

#[test]
fn standard_pack_passes() {
    let run = bench(&pack_dir("standard"), Mode::Progact, 1);
    let failing: Vec<_> = run.results.iter().filter(|r| !r.pass).map(|r| (&r.id, &r.failure)).collect();
    assert!(failing.is_empty(), "{failing:?}");
    assert_eq!(run.report.totals.cases, 12);
    assert_eq!(run.report.categories.iter().map(|c| c.total).sum::<u32>(), 12);
    assert_eq!(run.report.corpus.label, CORPUS_LABEL);
    for r in &run.results {
        let l = r.logical.as_ref().unwrap();
        for (name, v) in l.components() {
            assert!((0.0..=1.0).contains(&v), "{} {name} = {v}", r.id);
        }
        assert!(r.local.iter().all(|i| i.matched.is_some()), "{}", r.id);
    }
}

#[test]
fn one_injected_fault_only_hurts_static_mode() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&pack_dir("standard"), dir.path());
    std::fs::copy(pack_dir("faults").join("scripts/fault_heat_cfl.json"), dir.path().join("scripts/heat_01.json")).unwrap();
    assert_eq!(bench(dir.path(), Mode::Progact, 2).report.totals.passed, 12);
    let fixed = bench(dir.path(), Mode::Static, 2);
    assert_eq!(fixed.report.totals.passed, 11);
    assert!(!fixed.results.iter().find(|r| r.id == "heat_01").unwrap().pass);
}

#[test]
fn fault_pack_by_mode() {
    let progact = bench(&pack_dir("faults"), Mode::Progact, 1);
    let stepwise = bench(&pack_dir("faults"), Mode::Stepwise, 1);
    let fixed = bench(&pack_dir("faults"), Mode::Static, 1);
    assert_eq!(progact.report.totals.passed, 5);
    assert_eq!(stepwise.report.totals.passed, 5);
    assert!(fixed.report.totals.passed <= progact.report.totals.passed);
    assert!(fixed.report.totals.passed <= 2);
    assert!(stepwise.report.totals.validation_events >= 2 * progact.report.totals.validation_events);
}

#[test]
fn reports_are_reproducible() {
    let a = bench(&pack_dir("faults"), Mode::Progact, 1).report.to_json();
    let b = bench(&pack_dir("faults"), Mode::Progact, 3).report.to_json();
    assert_eq!(a, b);
}

#[test]
fn empty_case_list_gives_an_empty_report() {
    let run = run_bench(&[], &ToolRegistry::standard(), &ScriptedFactory, &BenchOptions::new(Pack::load(&pack_dir("faults")).unwrap().info()));
    assert_eq!(run.report.totals.cases, 0);
    assert_eq!(run.report.totals.passed, 0);
    assert!(run.report.categories.is_empty());
}

#[test]
fn missing_script_fails_only_that_case() {
    let mut cases = load_cases(&pack_dir("standard")).unwrap();
    cases[0].script = Some(PathBuf::from("/nonexistent/script.json"));
    let opts = BenchOptions::new(Pack::load(&pack_dir("standard")).unwrap().info());
    let run = run_bench(&cases[..3], &ToolRegistry::standard(), &ScriptedFactory, &opts);
    assert_eq!(run.report.totals.passed, 2);
    assert!(run.results.iter().any(|r| r.failure.as_deref().is_some_and(|f| f.contains("nonexistent"))));
}
