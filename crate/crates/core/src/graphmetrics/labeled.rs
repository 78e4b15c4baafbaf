use std::collections::{BTreeMap, BTreeSet};

use crate::toolgraph::{DepKind, NodeKind, ToolGraph};

/// Tool nodes of a [`ToolGraph`] in `seq` order, with dense indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    roles: Vec<String>,
    labels: Vec<String>,
    seqs: Vec<u32>,
    edges: BTreeSet<(usize, usize)>,
}

impl LabeledGraph {
    pub fn from_graph(graph: &ToolGraph, include_order_edges: bool) -> Self {
        let mut tools: Vec<_> = graph.nodes().iter().filter(|n| n.kind == NodeKind::Tool).collect();
        tools.sort_by_key(|n| n.seq);
        let index: BTreeMap<_, _> = tools.iter().enumerate().map(|(i, n)| (&n.id, i)).collect();
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        let labels = tools
            .iter()
            .map(|n| {
                let count = seen.entry(n.role.as_str()).or_insert(0);
                *count += 1;
                if *count == 1 {
                    n.role.clone()
                } else {
                    format!("{}#{}", n.role, count)
                }
            })
            .collect();
        let edges = graph
            .edges()
            .iter()
            .filter(|e| include_order_edges || e.dep_kind == DepKind::Data)
            .filter_map(|e| Some((*index.get(&e.src)?, *index.get(&e.dst)?)))
            .collect();
        LabeledGraph {
            roles: tools.iter().map(|n| n.role.clone()).collect(),
            labels,
            seqs: tools.iter().map(|n| n.seq).collect(),
            edges,
        }
    }

    /// Builds a view directly; `edges` index into `roles`. Used by tests
    /// and the demo.
    pub fn from_parts(roles: &[&str], edges: &[(usize, usize)]) -> Self {
        let mut g = ToolGraph::new();
        for (i, r) in roles.iter().enumerate() {
            g.add_node(crate::toolgraph::NodeId::new(format!("v{i}")), *r, NodeKind::Tool, i as u32)
                .expect("distinct ids");
        }
        for &(s, d) in edges {
            g.add_edge(
                &crate::toolgraph::NodeId::new(format!("v{s}")),
                &crate::toolgraph::NodeId::new(format!("v{d}")),
                DepKind::Data,
            )
            .expect("valid edge");
        }
        Self::from_graph(&g, false)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Occurrence-disambiguated labels.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Raw tool names.
    pub fn roles(&self) -> &[String] {
        &self.roles
    }

    pub fn seqs(&self) -> &[u32] {
        &self.seqs
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, s: usize, d: usize) -> bool {
        self.edges.contains(&(s, d))
    }

    pub fn out_neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for &(s, d) in &self.edges {
            out[s].push(d);
        }
        out
    }

    pub fn label_edges(&self) -> BTreeSet<(&str, &str)> {
        self.edges
            .iter()
            .map(|&(s, d)| (self.labels[s].as_str(), self.labels[d].as_str()))
            .collect()
    }

    pub fn label_set(&self) -> BTreeSet<&str> {
        self.labels.iter().map(String::as_str).collect()
    }
}

pub(super) fn node_edge_ratios(exec: &LabeledGraph, pattern: &LabeledGraph) -> (f64, f64) {
    let (ve, vp) = (exec.label_set(), pattern.label_set());
    let r_v = ve.intersection(&vp).count() as f64 / vp.len() as f64;
    let (ee, ep) = (exec.label_edges(), pattern.label_edges());
    let r_e = if ep.is_empty() {
        1.0
    } else {
        ee.intersection(&ep).count() as f64 / ep.len() as f64
    };
    (r_v, r_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolgraph::NodeId;

    #[test]
    fn repeated_roles_get_occurrence_labels() {
        let g = LabeledGraph::from_parts(&["bc", "pde", "bc", "bc"], &[(0, 1)]);
        assert_eq!(g.labels(), &["bc", "pde", "bc#2", "bc#3"]);
        assert_eq!(g.roles(), &["bc", "pde", "bc", "bc"]);
    }

    #[test]
    fn subtask_nodes_are_excluded() {
        let mut g = ToolGraph::new();
        g.add_node(NodeId::new("s"), "plan", NodeKind::Subtask, 0).unwrap();
        g.add_node(NodeId::new("a"), "solve", NodeKind::Tool, 1).unwrap();
        g.add_edge(&NodeId::new("s"), &NodeId::new("a"), DepKind::Data).unwrap();
        let v = LabeledGraph::from_graph(&g, false);
        assert_eq!(v.labels(), &["solve"]);
        assert_eq!(v.edge_count(), 0);
    }

    #[test]
    fn nodes_ordered_by_seq() {
        let mut g = ToolGraph::new();
        g.add_node(NodeId::new("b"), "second", NodeKind::Tool, 7).unwrap();
        g.add_node(NodeId::new("a"), "first", NodeKind::Tool, 2).unwrap();
        let v = LabeledGraph::from_graph(&g, false);
        assert_eq!(v.labels(), &["first", "second"]);
        assert_eq!(v.seqs(), &[2, 7]);
    }
}
