//! Graph-based scores comparing an execution graph with a pattern graph.
//!
//! Every score lives in `[0, 1]` with 1 meaning "identical". Graphs are
//! compared through their [`LabeledGraph`] view: tool nodes only, ordered
//! by `seq`, identified by role label. A tool used more than once gets
//! occurrence-suffixed labels (`solve`, `solve#2`, ...).

mod ged;
mod labeled;
mod node2vec;
mod pagerank;
mod structural;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::toolgraph::{GraphError, ToolGraph};

pub use ged::{ged_labeled, GedResult};
pub use labeled::LabeledGraph;
pub use node2vec::{embed_nodes, Node2VecConfig};
pub use pagerank::{js_divergence, pagerank_labeled};
pub use structural::{lcs_len, StructuralScores};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("graph embedding has zero norm")]
    DegenerateEmbedding,
    #[error("invalid metric configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// Steepness of the exponential NGED mapping.
    pub alpha: f64,
    /// Slope of the sigmoid applied to the raw embedding cosine.
    pub slope_k: f64,
    pub damping: f64,
    pub pr_tol: f64,
    pub n2v: Node2VecConfig,
    /// Largest node count (per graph) for which GED is solved exactly.
    pub ged_exact_limit: usize,
    pub ged_beam_width: usize,
    pub log_base: f64,
    /// Count `order` edges alongside `data` edges.
    pub include_order_edges: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            alpha: 2.0,
            slope_k: 1.0,
            damping: 0.85,
            pr_tol: 1e-12,
            n2v: Node2VecConfig::default(),
            ged_exact_limit: 10,
            ged_beam_width: 64,
            log_base: 2.0,
            include_order_edges: false,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        let bad = |m: &str| Err(MetricError::InvalidConfig(m.to_string()));
        if !(self.alpha > 0.0) {
            return bad("alpha must be > 0");
        }
        if !(self.slope_k > 0.0) {
            return bad("slope_k must be > 0");
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return bad("damping must lie in (0, 1)");
        }
        if !(self.pr_tol > 0.0) {
            return bad("pr_tol must be > 0");
        }
        if self.n2v.dims < 2 {
            return bad("n2v.dims must be >= 2");
        }
        if !(self.n2v.p > 0.0 && self.n2v.q > 0.0) {
            return bad("n2v.p and n2v.q must be > 0");
        }
        if self.log_base != 2.0 {
            return bad("log_base must be 2");
        }
        if self.ged_beam_width == 0 {
            return bad("ged_beam_width must be >= 1");
        }
        Ok(())
    }

    fn view(&self, g: &ToolGraph) -> LabeledGraph {
        LabeledGraph::from_graph(g, self.include_order_edges)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalScores {
    pub r_v: f64,
    pub r_e: f64,
    pub js_sim: f64,
    pub nged_sim: f64,
    pub embed_sim: f64,
    pub structural: StructuralScores,
    pub ged: u32,
    pub ged_approximate: bool,
    pub nged: f64,
}

impl LogicalScores {
    /// Scores in a fixed order, for bounds checks and aggregation.
    pub fn components(&self) -> [(&'static str, f64); 9] {
        [
            ("r_v", self.r_v),
            ("r_e", self.r_e),
            ("js_sim", self.js_sim),
            ("nged_sim", self.nged_sim),
            ("embed_sim", self.embed_sim),
            ("connectivity", self.structural.connectivity),
            ("role_nodes", self.structural.role_nodes),
            ("critical_path", self.structural.critical_path),
            ("exec_order", self.structural.exec_order),
        ]
    }
}

/// Fraction of pattern nodes and pattern edges that the execution graph
/// reproduces, compared on labels.
pub fn node_edge_match(exec: &ToolGraph, pattern: &ToolGraph, cfg: &MetricConfig) -> Result<(f64, f64), MetricError> {
    let (e, p) = (cfg.view(exec), cfg.view(pattern));
    if p.is_empty() {
        return Err(MetricError::InvalidPattern("pattern graph has no tool nodes".into()));
    }
    Ok(labeled::node_edge_ratios(&e, &p))
}

/// PageRank of the tool nodes, keyed by label, in `seq` order.
pub fn pagerank(graph: &ToolGraph, cfg: &MetricConfig) -> Result<Vec<(String, f64)>, MetricError> {
    let view = cfg.view(graph);
    if view.is_empty() {
        return Err(MetricError::InvalidInput("pagerank of an empty graph".into()));
    }
    let ranks = pagerank_labeled(&view, cfg.damping, cfg.pr_tol);
    Ok(view.labels().iter().cloned().zip(ranks).collect())
}

/// `1 - sqrt(JS)` between the PageRank distributions of the two graphs,
/// aligned over the union of their labels.
pub fn js_similarity(pattern: &ToolGraph, exec: &ToolGraph, cfg: &MetricConfig) -> Result<f64, MetricError> {
    let p = pagerank(pattern, cfg)?;
    let q = pagerank(exec, cfg)?;
    Ok(pagerank::js_similarity_aligned(&p, &q))
}

pub fn ged(exec: &ToolGraph, pattern: &ToolGraph, cfg: &MetricConfig) -> GedResult {
    ged_labeled(&cfg.view(exec), &cfg.view(pattern), cfg.ged_exact_limit, cfg.ged_beam_width)
}

/// Maps a normalized edit distance in `[0, 1]` to a similarity.
pub fn nged_score(nged: f64, alpha: f64) -> f64 {
    let s = 1.0 - (1.0 - (-alpha * nged).exp()) / (1.0 - (-alpha).exp());
    s.clamp(0.0, 1.0)
}

/// Returns `(similarity, nged, ged)`. Two empty graphs count as identical.
pub fn nged_similarity(exec: &ToolGraph, pattern: &ToolGraph, cfg: &MetricConfig) -> (f64, f64, GedResult) {
    let (e, p) = (cfg.view(exec), cfg.view(pattern));
    let base = e.len() + e.edge_count() + p.len() + p.edge_count();
    let result = ged_labeled(&e, &p, cfg.ged_exact_limit, cfg.ged_beam_width);
    if base == 0 {
        return (1.0, 0.0, result);
    }
    let nged = (f64::from(result.cost) / base as f64).min(1.0);
    (nged_score(nged, cfg.alpha), nged, result)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Rescaled logistic so that `-1 -> 0`, `0 -> 0.5`, `1 -> 1`.
pub fn sigmoid_score(sim_raw: f64, k: f64) -> f64 {
    let s = (sigmoid(k * sim_raw) - sigmoid(-k)) / (sigmoid(k) - sigmoid(-k));
    s.clamp(0.0, 1.0)
}

/// PageRank-weighted mean of the Node2Vec vectors of the tool nodes.
pub fn graph_embedding(graph: &ToolGraph, cfg: &MetricConfig) -> Result<Vec<f64>, MetricError> {
    let view = cfg.view(graph);
    if view.is_empty() {
        return Err(MetricError::InvalidInput("embedding of an empty graph".into()));
    }
    let vectors = embed_nodes(&view, &cfg.n2v);
    let weights = pagerank_labeled(&view, cfg.damping, cfg.pr_tol);
    let mut g = vec![0.0; cfg.n2v.dims];
    for (w, v) in weights.iter().zip(&vectors) {
        for (acc, x) in g.iter_mut().zip(v) {
            *acc += w * x;
        }
    }
    Ok(g)
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    if a == b {
        return Some(1.0);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Returns `(score, sim_raw)`.
pub fn embedding_similarity(exec: &ToolGraph, pattern: &ToolGraph, cfg: &MetricConfig) -> Result<(f64, f64), MetricError> {
    let ge = graph_embedding(exec, cfg)?;
    let gp = graph_embedding(pattern, cfg)?;
    let raw = cosine(&ge, &gp).ok_or(MetricError::DegenerateEmbedding)?;
    Ok((sigmoid_score(raw, cfg.slope_k), raw))
}

pub fn structural_similarity(exec: &ToolGraph, pattern: &ToolGraph, cfg: &MetricConfig) -> Result<StructuralScores, MetricError> {
    let (e, p) = (cfg.view(exec), cfg.view(pattern));
    if e.is_empty() || p.is_empty() {
        return Err(MetricError::InvalidInput("structural similarity needs non-empty graphs".into()));
    }
    structural::structural_scores(&e, &p)
}

/// All logical-tier scores of `exec` against `pattern`.
pub fn evaluate(exec: &ToolGraph, pattern: &ToolGraph, cfg: &MetricConfig) -> Result<LogicalScores, MetricError> {
    cfg.validate()?;
    if cfg.view(pattern).is_empty() {
        return Err(MetricError::InvalidPattern("pattern graph has no tool nodes".into()));
    }
    if cfg.view(exec).is_empty() {
        return Err(MetricError::InvalidInput("execution graph has no tool nodes".into()));
    }
    let (r_v, r_e) = node_edge_match(exec, pattern, cfg)?;
    let js_sim = js_similarity(pattern, exec, cfg)?;
    let (nged_sim, nged, ged) = nged_similarity(exec, pattern, cfg);
    let (embed_sim, _) = embedding_similarity(exec, pattern, cfg)?;
    let structural = structural_similarity(exec, pattern, cfg)?;
    Ok(LogicalScores {
        r_v,
        r_e,
        js_sim,
        nged_sim,
        embed_sim,
        structural,
        ged: ged.cost,
        ged_approximate: ged.approximate,
        nged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolgraph::{DepKind, NodeId, NodeKind};

    pub(crate) fn graph(nodes: &[&str], edges: &[(usize, usize)]) -> ToolGraph {
        let mut g = ToolGraph::new();
        for (i, role) in nodes.iter().enumerate() {
            g.add_node(NodeId::new(format!("v{i}")), *role, NodeKind::Tool, i as u32).unwrap();
        }
        for &(s, d) in edges {
            g.add_edge(&NodeId::new(format!("v{s}")), &NodeId::new(format!("v{d}")), DepKind::Data)
                .unwrap();
        }
        g
    }

    #[test]
    fn node_edge_match_examples() {
        let cfg = MetricConfig::default();
        let p = graph(&["A", "B", "C"], &[(0, 1), (1, 2)]);
        assert_eq!(node_edge_match(&p, &p, &cfg).unwrap(), (1.0, 1.0));
        let e = graph(&["A", "B"], &[(0, 1)]);
        assert_eq!(node_edge_match(&e, &p, &cfg).unwrap(), (2.0 / 3.0, 0.5));
        let d = graph(&["X", "Y"], &[(0, 1)]);
        assert_eq!(node_edge_match(&d, &p, &cfg).unwrap(), (0.0, 0.0));
        assert!(matches!(
            node_edge_match(&p, &ToolGraph::new(), &cfg),
            Err(MetricError::InvalidPattern(_))
        ));
    }

    #[test]
    fn edgeless_pattern_has_full_edge_ratio() {
        let cfg = MetricConfig::default();
        let p = graph(&["A"], &[]);
        let e = graph(&["A", "B"], &[(0, 1)]);
        assert_eq!(node_edge_match(&e, &p, &cfg).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn order_edges_are_ignored_by_default() {
        let mut p = graph(&["A", "B"], &[]);
        p.add_edge(&NodeId::new("v0"), &NodeId::new("v1"), DepKind::Order).unwrap();
        let e = graph(&["A", "B"], &[]);
        let cfg = MetricConfig::default();
        assert_eq!(node_edge_match(&e, &p, &cfg).unwrap(), (1.0, 1.0));
        let with_order = MetricConfig { include_order_edges: true, ..cfg };
        assert_eq!(node_edge_match(&e, &p, &with_order).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn nged_endpoints_and_midpoint() {
        assert_eq!(nged_score(0.0, 2.0), 1.0);
        assert!(nged_score(1.0, 2.0).abs() < 1e-15);
        // 1 - (1 - e^-1) / (1 - e^-2) = 0.2689414213699951 (= 1 / (1 + e))
        assert!((nged_score(0.5, 2.0) - 0.268_941_421_369_995_1).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_score_anchors() {
        assert_eq!(sigmoid_score(0.0, 1.0), 0.5);
        assert_eq!(sigmoid_score(1.0, 1.0), 1.0);
        assert_eq!(sigmoid_score(-1.0, 1.0), 0.0);
    }

    #[test]
    fn nged_of_two_empty_graphs_is_identity() {
        let cfg = MetricConfig::default();
        let (s, n, g) = nged_similarity(&ToolGraph::new(), &ToolGraph::new(), &cfg);
        assert_eq!((s, n, g.cost), (1.0, 0.0, 0));
    }

    #[test]
    fn ged_against_empty_graph_is_its_size() {
        let cfg = MetricConfig::default();
        let p = graph(&["A"], &[]);
        assert_eq!(ged(&ToolGraph::new(), &p, &cfg).cost, 1);
        let q = graph(&["A", "B", "C"], &[(0, 1), (1, 2)]);
        assert_eq!(ged(&q, &ToolGraph::new(), &cfg).cost, 5);
    }

    #[test]
    fn self_comparison_is_perfect() {
        let cfg = MetricConfig::default();
        let g = graph(&["A", "B", "C", "B"], &[(0, 1), (1, 2), (0, 3)]);
        let s = evaluate(&g, &g, &cfg).unwrap();
        for (name, v) in s.components() {
            assert!((v - 1.0).abs() < 1e-9, "{name} = {v}");
        }
        assert_eq!(s.nged_sim, 1.0);
        assert_eq!(s.embed_sim, 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(MetricConfig::default().validate().is_ok());
        assert!(MetricConfig { alpha: 0.0, ..Default::default() }.validate().is_err());
        assert!(MetricConfig { damping: 1.0, ..Default::default() }.validate().is_err());
        let mut c = MetricConfig::default();
        c.n2v.dims = 1;
        assert!(c.validate().is_err());
    }
}
