//! Browser bindings. Every export takes plain numbers or JSON text and
//! returns JSON text, so the page needs no generated types.

use pdeflow_core::exprlang::{Bindings, SourceExpr};
use pdeflow_core::graphmetrics::{evaluate, nged_score, MetricConfig};
use pdeflow_core::pdetoolkit::kernels::solve;
use pdeflow_core::pdetoolkit::{
    BoundaryCondition, BoundaryType, Domain, InitialCondition, Location, PdeCategory, PdeSpec, Problem, Scheme, SolverConfig,
    TimeDomain,
};
use pdeflow_core::toolgraph::ToolGraph;
use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

fn expr(src: &str) -> Result<SourceExpr, String> {
    SourceExpr::parse(src).map_err(|e| format!("`{src}`: {e}"))
}

/// Heat equation on [0, 1] with zero Dirichlet ends. When `exact` is
/// non-empty it is evaluated at the final time and the discrete L2 error
/// is returned alongside the grid values.
#[wasm_bindgen]
pub fn solve_heat(alpha: f64, t1: f64, nx: usize, nt: usize, ic: &str, exact: &str) -> Result<String, String> {
    let problem = Problem {
        pde: PdeSpec {
            category: PdeCategory::Heat,
            domain: Domain::Interval { xmin: 0.0, xmax: 1.0 },
            alpha: Some(alpha),
            c: None,
            a: None,
            reaction: None,
            source: None,
        },
        time: Some(TimeDomain { t0: 0.0, t1 }),
        bcs: vec![BoundaryCondition { btype: BoundaryType::Dirichlet, location: Location::All, value: expr("0")? }],
        ic: Some(InitialCondition { value: expr(ic)?, velocity: None }),
    };
    let cfg = SolverConfig { nx, ny: None, nt: Some(nt), scheme: Scheme::Implicit };
    let s = solve(&problem, &cfg).map_err(|e| e.to_string())?;
    let error = if exact.trim().is_empty() {
        None
    } else {
        let f = expr(exact)?;
        let dx = s.x[1] - s.x[0];
        let mut sum = 0.0;
        for (&x, &u) in s.x.iter().zip(&s.u) {
            let v = f.eval(&Bindings::xt(x, t1)).map_err(|e| e.to_string())?;
            sum += (u - v).powi(2) * dx;
        }
        Some(sum.sqrt())
    };
    Ok(json!({"x": s.x, "u": s.u, "steps": s.meta.steps, "l2_error": error}).to_string())
}

/// Scores an execution graph against a pattern graph, both in the
/// `graph.json` format, with the default metric settings.
#[wasm_bindgen]
pub fn compare_graphs(exec: &str, pattern: &str) -> Result<String, String> {
    let load = |name: &str, text: &str| -> Result<ToolGraph, String> {
        let mut g = ToolGraph::from_json(text).map_err(|e| format!("{name}: {e}"))?;
        g.finalize().map_err(|e| format!("{name}: {e}"))?;
        Ok(g)
    };
    let (e, p) = (load("execution graph", exec)?, load("pattern graph", pattern)?);
    let scores = evaluate(&e, &p, &MetricConfig::default()).map_err(|e| e.to_string())?;
    serde_json::to_string(&scores).map_err(|e| e.to_string())
}

/// `points` samples of the similarity curve over normalized distances in [0, 1].
#[wasm_bindgen]
pub fn nged_curve(alpha: f64, points: usize) -> Result<String, String> {
    if !(alpha > 0.0) || points < 2 {
        return Err("alpha must be positive and points at least 2".into());
    }
    let curve: Vec<[f64; 2]> = (0..points)
        .map(|i| {
            let d = i as f64 / (points - 1) as f64;
            [d, nged_score(d, alpha)]
        })
        .collect();
    Ok(json!(curve).to_string())
}
