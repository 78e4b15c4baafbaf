use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/graphs")
}

fn pdeflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdeflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("PDEFLOW_PACKS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn bundled_case_solves() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdeflow(&["run", "--case", "heat_01", "--json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["status"], "solved");
    for f in ["graph.json", "answer.md", "actions.jsonl", "pool.json", "config.json"] {
        assert!(dir.path().join("heat_01").join(f).is_file(), "{f} missing");
    }
}

#[test]
fn missing_query_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&pdeflow(&["run"], dir.path())), 2);
    assert_eq!(code(&pdeflow(&["run", "--case", "no_such_case"], dir.path())), 2);
    assert_eq!(code(&pdeflow(&["run", "--query", "solve something"], dir.path())), 2);
}

#[test]
fn static_mode_fails_a_fault_case() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdeflow(&["run", "--case", "fault_heat_cfl", "--mode", "static"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("stability"));
    let o = pdeflow(&["run", "--case", "fault_heat_cfl"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn identical_graphs_score_one() {
    let dir = tempfile::tempdir().unwrap();
    let g = fixtures().join("chain_pattern.json");
    let g = g.to_str().unwrap();
    let o = pdeflow(&["eval", g, g, "--json"], dir.path());
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    for k in ["r_v", "r_e", "js_sim", "nged_sim", "embed_sim"] {
        assert!((v[k].as_f64().unwrap() - 1.0).abs() < 1e-9, "{k} = {}", v[k]);
    }
    assert_eq!(v["ged"], 0);
    assert_eq!(v["config"]["alpha"], 2.0);
}

#[test]
fn golden_pair_matches_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    let golden: Value = serde_json::from_str(&std::fs::read_to_string(fixtures().join("golden.json")).unwrap()).unwrap();
    let e = fixtures().join(golden["exec"].as_str().unwrap());
    let p = fixtures().join(golden["pattern"].as_str().unwrap());
    let o = pdeflow(&["eval", e.to_str().unwrap(), p.to_str().unwrap(), "--json"], dir.path());
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    for k in ["r_v", "r_e", "nged"] {
        assert!((v[k].as_f64().unwrap() - golden[k].as_f64().unwrap()).abs() < 1e-12, "{k}");
    }
    assert_eq!(v["ged"], golden["ged"]);
    // one node and one edge deleted over 8 elements, alpha 2
    let want = 1.0 - (1.0 - (-0.5f64).exp()) / (1.0 - (-2.0f64).exp());
    assert!((v["nged_sim"].as_f64().unwrap() - want).abs() < 1e-12);
}

#[test]
fn malformed_graph_reports_its_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = fixtures().join("malformed.json");
    let good = fixtures().join("chain_pattern.json");
    let o = pdeflow(&["eval", bad.to_str().unwrap(), good.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn bench_writes_reports_and_compares() {
    let dir = tempfile::tempdir().unwrap();
    let std_out = dir.path().join("standard");
    let o = pdeflow(&["bench", repo().join("packs/standard").to_str().unwrap(), "--jobs", "4"], &std_out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let md = std::fs::read_to_string(std_out.join("report.md")).unwrap();
    assert!(md.contains("| **All** | 12 | 12 | 100.0% |"), "{md}");
    assert!(std_out.join("sessions/heat_01/graph.json").is_file());

    let static_out = dir.path().join("static");
    let o = pdeflow(&["bench", repo().join("packs/faults").to_str().unwrap(), "--mode", "static"], &static_out);
    assert_eq!(code(&o), 1);

    let o = Command::new(env!("CARGO_BIN_EXE_pdeflow"))
        .args(["report", std_out.to_str().unwrap(), static_out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("| Category | standard | static |"), "{table}");
    assert!(table.contains("0/5"), "{table}");
}

#[test]
fn missing_pack_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdeflow(&["bench", dir.path().join("nope").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = pdeflow(&["run", "--case", "heat_02", "--seed", "11"], out);
        assert_eq!(code(&o), 0);
    }
    for f in ["graph.json", "answer.md", "actions.jsonl"] {
        let x = std::fs::read(a.join("heat_02").join(f)).unwrap();
        let y = std::fs::read(b.join("heat_02").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn tools_lists_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdeflow(&["tools", "--json"], dir.path());
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!(v.to_string().contains("configure_solver"));
}
