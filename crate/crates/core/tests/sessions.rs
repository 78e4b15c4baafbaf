use std::path::{Path, PathBuf};

use pdeflow_core::agents::{run_session, Mode, ProgActConfig, Query, RecordStatus, SessionEvent, SessionOptions, SessionResult};
use pdeflow_core::pdetoolkit::{solution_error, ToolRegistry};
use pdeflow_core::providers::{ScriptFixture, ScriptedProvider};
use serde_json::Value;

fn pack_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../packs").join(name)
}

struct Case {
    text: String,
    script: ScriptFixture,
    check: Value,
}

fn case(pack: &str, id: &str) -> Case {
    let dir = pack_dir(pack);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{id}.json"))).unwrap()).unwrap();
    Case {
        text: v["nl_description"].as_str().unwrap().to_string(),
        script: ScriptFixture::load(&dir.join(v["script"].as_str().unwrap())).unwrap(),
        check: v["numeric_check"].clone(),
    }
}

fn run(c: &Case, cfg: &ProgActConfig) -> SessionResult {
    let work = tempfile::tempdir().unwrap();
    let provider = ScriptedProvider::new(&c.script);
    let opts = SessionOptions { session_id: "test".into(), workdir: work.path().to_path_buf() };
    run_session(&Query::new(&c.text).unwrap(), &ToolRegistry::standard(), &provider, cfg, &opts).unwrap()
}

fn mode(m: Mode) -> ProgActConfig {
    ProgActConfig::with_mode(m)
}

fn numeric_ok(r: &SessionResult, check: &Value) -> bool {
    let Some(s) = r.final_solution() else { return false };
    let reference = pdeflow_core::exprlang::SourceExpr::parse(check["reference"].as_str().unwrap()).unwrap();
    let err = solution_error(s, &reference, check["norm"].as_str().unwrap()).unwrap();
    err <= check["threshold"].as_f64().unwrap()
}

fn checkpoints(r: &SessionResult) -> usize {
    r.events.iter().filter(|e| matches!(e, SessionEvent::Checkpoint { .. })).count()
}

const STANDARD: [&str; 12] = [
    "heat_01", "heat_02", "heat_03", "diffusion_01", "diffreact_01", "wave_01", "wave_02", "advection_01", "laplace_01",
    "laplace_02", "poisson_01", "poisson_02",
];

const FAULTS: [&str; 5] = ["fault_heat_cfl", "fault_poisson_params", "fault_advection_inflow", "fault_diffreact_ic", "fault_wave_cfl"];

#[test]
fn fault_free_cases_need_no_orchestrator() {
    for id in STANDARD {
        let c = case("standard", id);
        let r = run(&c, &ProgActConfig::default());
        assert!(r.solved(), "{id}: {:?}", r.failure);
        assert!(numeric_ok(&r, &c.check), "{id}");
        assert_eq!(r.stats.provider_calls.get("orchestrator"), None, "{id}");
        assert_eq!(r.stats.corrections, 0);
        assert!(r.records.iter().all(|x| x.status == RecordStatus::Ok), "{id}");
        assert_eq!(r.graph.len(), r.records.len());
    }
}

#[test]
fn heat_session_checkpoints() {
    let c = case("standard", "heat_01");
    let progact = run(&c, &ProgActConfig::default());
    let stepwise = run(&c, &mode(Mode::Stepwise));
    let fixed = run(&c, &mode(Mode::Static));
    assert_eq!(checkpoints(&progact), 4);
    assert_eq!(checkpoints(&stepwise), 9);
    assert_eq!(checkpoints(&fixed), 0);
    assert!(fixed.solved());
}

#[test]
fn faults_recover_under_progact_and_stepwise() {
    let (mut progact_events, mut stepwise_events) = (0, 0);
    for id in FAULTS {
        let c = case("faults", id);
        let p = run(&c, &ProgActConfig::default());
        assert!(p.solved() && numeric_ok(&p, &c.check), "{id} progact: {:?}", p.failure);
        let s = run(&c, &mode(Mode::Stepwise));
        assert!(s.solved() && numeric_ok(&s, &c.check), "{id} stepwise: {:?}", s.failure);
        let f = run(&c, &mode(Mode::Static));
        assert!(!(f.solved() && numeric_ok(&f, &c.check)), "{id} static should not pass");
        progact_events += p.stats.validation_events;
        stepwise_events += s.stats.validation_events;
    }
    assert!(stepwise_events >= 2 * progact_events, "{stepwise_events} vs {progact_events}");
}

#[test]
fn collapse_leads_to_replan_with_carry_over() {
    let r = run(&case("faults", "fault_wave_cfl"), &ProgActConfig::default());
    assert_eq!(r.stats.replans, 1);
    let carried = r.events.iter().find_map(|e| match e {
        SessionEvent::Replan { carried, .. } => Some(carried.clone()),
        _ => None,
    });
    assert_eq!(carried, Some(vec![1, 2, 3, 4, 5, 6]));
    let r = run(&case("faults", "fault_diffreact_ic"), &ProgActConfig::default());
    assert_eq!(r.stats.replans, 1);
}

#[test]
fn evicted_artifacts_never_outlive_their_producers() {
    for id in FAULTS {
        let r = run(&case("faults", id), &ProgActConfig::default());
        for entry in r.pool.snapshot().iter().filter(|e| e.live) {
            let rec = r.records.iter().find(|x| x.node.as_ref().map(|n| n.as_str()) == Some(entry.producer.as_str()));
            assert_eq!(rec.map(|x| x.status), Some(RecordStatus::Ok), "{id}: {}", entry.handle);
        }
        let seqs: Vec<u32> = r.records.iter().map(|x| x.seq).collect();
        assert!(seqs.windows(2).all(|w| w[0] + 1 == w[1]), "{id}: log is append-only with dense seqs");
        for n in r.graph.nodes() {
            let rec = r.records.iter().find(|x| x.node.as_ref() == Some(&n.id)).unwrap();
            assert!(rec.is_ok());
        }
    }
}

#[test]
fn advection_redo_replaces_the_boundary_condition() {
    let r = run(&case("faults", "fault_advection_inflow"), &ProgActConfig::default());
    let invalidated: Vec<_> = r.records.iter().filter(|x| x.status == RecordStatus::Invalidated).map(|x| x.seq).collect();
    assert_eq!(invalidated, vec![4]);
    assert!(r.events.iter().any(|e| matches!(e, SessionEvent::Recovery { evicted, .. } if evicted.iter().map(|h| h.to_string()).eq(["bc:1".to_string()]))));
}

#[test]
fn zero_budgets_fail_with_a_trace() {
    let c = case("faults", "fault_heat_cfl");
    let cfg = ProgActConfig { inner_retry_budget: 0, outer_replan_budget: 0, ..Default::default() };
    let r = run(&c, &cfg);
    assert!(!r.solved());
    assert!(r.failure.as_deref().unwrap().contains("no replan budget"), "{:?}", r.failure);
    assert!(r.events.iter().any(|e| matches!(e, SessionEvent::Escalation { .. })));
    assert!(matches!(r.events.last(), Some(SessionEvent::Failure { .. })));
    assert!(r.answer.contains("Unsolved"));
}

#[test]
fn static_mode_stops_at_the_first_failure() {
    let r = run(&case("faults", "fault_heat_cfl"), &mode(Mode::Static));
    assert!(!r.solved());
    assert_eq!(r.records.last().unwrap().tool, "solve");
    assert!(r.failure.unwrap().contains("stability"));
}

#[test]
fn sessions_are_deterministic() {
    let c = case("faults", "fault_advection_inflow");
    let (a, b) = (run(&c, &ProgActConfig::default()), run(&c, &ProgActConfig::default()));
    assert_eq!(a.graph.to_json(), b.graph.to_json());
    assert_eq!(a.answer, b.answer);
    assert_eq!(a.records, b.records);
    assert_eq!(a.events, b.events);
}

#[test]
fn exhausted_script_fails_the_session() {
    let mut c = case("standard", "heat_01");
    c.script.entries.retain(|e| !(e.step > 3 && e.role.to_string() == "parser"));
    let r = run(&c, &ProgActConfig::default());
    assert!(!r.solved());
    assert!(r.failure.unwrap().contains("script exhausted"));
}

#[test]
fn empty_query_is_rejected() {
    assert!(Query::new("  ").is_err());
}
