//! Directed tool/subtask graphs.
//!
//! One type serves three purposes: the live graph memory built while a
//! session executes, the finalized execution graph of a session, and the
//! reference (pattern) graph a benchmark case is scored against.
//!
//! Nodes carry a role label (the tool name), a kind tag and a unique
//! execution index `seq`. Edges are either `data` edges, derived from
//! resource handles flowing from a producer to a consumer, or `order` edges
//! recording plain sequencing.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    /// Canonical id for the node created by the action with index `seq`.
    pub fn for_seq(seq: u32) -> Self {
        NodeId(format!("n{seq}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Tool,
    Subtask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepKind {
    Data,
    Order,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: NodeId,
    pub role: String,
    pub kind: NodeKind,
    pub seq: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub dep_kind: DepKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate seq {seq} (already used by node {existing})")]
    DuplicateSeq { seq: u32, existing: NodeId },
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("handle {0} was not produced by any node in the graph")]
    UnknownHandle(String),
    #[error("graph contains a cycle through edge {src} -> {dst}")]
    Cycle { src: NodeId, dst: NodeId },
    #[error("graph is finalized and can no longer be modified")]
    Finalized,
    #[error("malformed graph at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid graph record at {path}: {message}")]
    Invalid { path: String, message: String },
}

/// What the graph needs to know about an executed action to insert it.
pub trait GraphAction {
    fn seq(&self) -> u32;
    fn tool(&self) -> &str;
    /// Handles the action read from the resource pool.
    fn consumed_handles(&self) -> Vec<String>;
    /// Handle of the artifact the action produced, if any.
    fn produced_handle(&self) -> Option<String>;
}

#[derive(Debug, Clone, Default)]
pub struct ToolGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    producers: BTreeMap<String, NodeId>,
    finalized: bool,
}

impl PartialEq for ToolGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl ToolGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.node(id).is_some()
    }

    /// Node that produced `handle`, when the action was inserted through
    /// [`ToolGraph::add_action_node`].
    pub fn producer_of(&self, handle: &str) -> Option<&NodeId> {
        self.producers.get(handle)
    }

    pub fn add_node(
        &mut self,
        id: NodeId,
        role: impl Into<String>,
        kind: NodeKind,
        seq: u32,
    ) -> Result<NodeId, GraphError> {
        if self.finalized {
            return Err(GraphError::Finalized);
        }
        if let Some(existing) = self.nodes.iter().find(|n| n.seq == seq) {
            return Err(GraphError::DuplicateSeq {
                seq,
                existing: existing.id.clone(),
            });
        }
        if self.contains(&id) {
            return Err(GraphError::DuplicateId(id));
        }
        self.nodes.push(Node {
            id: id.clone(),
            role: role.into(),
            kind,
            seq,
        });
        Ok(id)
    }

    /// Inserts an edge. A repeated `(src, dst)` pair is kept once; a data
    /// edge upgrades an existing order edge.
    pub fn add_edge(&mut self, src: &NodeId, dst: &NodeId, dep_kind: DepKind) -> Result<(), GraphError> {
        if self.finalized {
            return Err(GraphError::Finalized);
        }
        for id in [src, dst] {
            if !self.contains(id) {
                return Err(GraphError::UnknownNode(id.clone()));
            }
        }
        if src == dst {
            return Err(GraphError::SelfLoop(src.clone()));
        }
        if let Some(existing) = self.edges.iter_mut().find(|e| &e.src == src && &e.dst == dst) {
            if dep_kind == DepKind::Data {
                existing.dep_kind = DepKind::Data;
            }
            return Ok(());
        }
        self.edges.push(Edge {
            src: src.clone(),
            dst: dst.clone(),
            dep_kind,
        });
        Ok(())
    }

    /// Inserts the tool node for an executed action and derives one data edge
    /// from the producer of every handle the action consumed.
    pub fn add_action_node<A: GraphAction + ?Sized>(&mut self, action: &A) -> Result<NodeId, GraphError> {
        if self.finalized {
            return Err(GraphError::Finalized);
        }
        let mut sources = BTreeSet::new();
        for handle in action.consumed_handles() {
            let producer = self
                .producers
                .get(&handle)
                .ok_or_else(|| GraphError::UnknownHandle(handle.clone()))?;
            sources.insert(producer.clone());
        }
        let id = self.add_node(NodeId::for_seq(action.seq()), action.tool(), NodeKind::Tool, action.seq())?;
        for src in &sources {
            self.add_edge(src, &id, DepKind::Data)?;
        }
        if let Some(handle) = action.produced_handle() {
            self.producers.insert(handle, id.clone());
        }
        Ok(id)
    }

    fn successors(&self) -> BTreeMap<&NodeId, Vec<&NodeId>> {
        let mut out: BTreeMap<&NodeId, Vec<&NodeId>> = self.nodes.iter().map(|n| (&n.id, Vec::new())).collect();
        for e in &self.edges {
            out.entry(&e.src).or_default().push(&e.dst);
        }
        out
    }

    /// All nodes reachable from `node` along directed edges, excluding `node`.
    pub fn descendants(&self, node: &NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
        if !self.contains(node) {
            return Err(GraphError::UnknownNode(node.clone()));
        }
        let succ = self.successors();
        let mut seen = BTreeSet::new();
        let mut stack = vec![node];
        while let Some(cur) = stack.pop() {
            for &next in succ.get(cur).map(Vec::as_slice).unwrap_or_default() {
                if next != node && seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
        Ok(seen)
    }

    /// Kahn's algorithm with ties broken by ascending `seq`.
    pub fn topological_order(&self) -> Result<Vec<NodeId>, GraphError> {
        let index: BTreeMap<&NodeId, usize> = self.nodes.iter().enumerate().map(|(i, n)| (&n.id, i)).collect();
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut succ = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            let (s, d) = (index[&e.src], index[&e.dst]);
            succ[s].push(d);
            indegree[d] += 1;
        }
        let mut ready: BinaryHeap<Reverse<(u32, usize)>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| Reverse((self.nodes[i].seq, i)))
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(Reverse((_, i))) = ready.pop() {
            order.push(self.nodes[i].id.clone());
            for &j in &succ[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(Reverse((self.nodes[j].seq, j)));
                }
            }
        }
        if order.len() == self.nodes.len() {
            return Ok(order);
        }
        let (src, dst) = self.find_cycle_edge(&indegree, &succ);
        Err(GraphError::Cycle {
            src: self.nodes[src].id.clone(),
            dst: self.nodes[dst].id.clone(),
        })
    }

    // Among the nodes Kahn could not release, walk forward until a node
    // repeats; the closing step is an edge on a cycle.
    fn find_cycle_edge(&self, indegree: &[usize], succ: &[Vec<usize>]) -> (usize, usize) {
        let stuck = |i: usize| indegree[i] > 0;
        let start = (0..indegree.len()).find(|&i| stuck(i)).expect("cycle implies a stuck node");
        let mut visited_at = vec![usize::MAX; indegree.len()];
        let mut path = vec![start];
        visited_at[start] = 0;
        loop {
            let cur = *path.last().unwrap();
            // every stuck node has a stuck predecessor; walk predecessors instead
            let pred = (0..succ.len())
                .find(|&p| stuck(p) && succ[p].contains(&cur))
                .expect("stuck node has a stuck predecessor");
            if visited_at[pred] != usize::MAX {
                return (pred, cur);
            }
            visited_at[pred] = path.len();
            path.push(pred);
        }
    }

    /// Checks acyclicity and freezes the graph.
    pub fn finalize(&mut self) -> Result<(), GraphError> {
        self.topological_order()?;
        self.finalized = true;
        Ok(())
    }

    /// Induced subgraph on `keep`, preserving node and edge order.
    pub fn subgraph(&self, keep: &BTreeSet<NodeId>) -> ToolGraph {
        ToolGraph {
            nodes: self.nodes.iter().filter(|n| keep.contains(&n.id)).cloned().collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| keep.contains(&e.src) && keep.contains(&e.dst))
                .cloned()
                .collect(),
            producers: self
                .producers
                .iter()
                .filter(|(_, id)| keep.contains(id))
                .map(|(h, id)| (h.clone(), id.clone()))
                .collect(),
            finalized: false,
        }
    }

    pub fn to_json(&self) -> String {
        let record = GraphRecord {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        };
        let mut text = serde_json::to_string_pretty(&record).expect("graph serializes");
        text.push('\n');
        text
    }

    /// Parses the JSON graph format and checks referential integrity,
    /// id/seq uniqueness and the absence of self-loops. Acyclicity is only
    /// enforced by [`ToolGraph::finalize`].
    pub fn from_json(text: &str) -> Result<ToolGraph, GraphError> {
        let record: GraphRecord = serde_json::from_str(text).map_err(|e| GraphError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let mut graph = ToolGraph::new();
        for (i, n) in record.nodes.into_iter().enumerate() {
            graph.add_node(n.id, n.role, n.kind, n.seq).map_err(|e| GraphError::Invalid {
                path: format!("nodes[{i}]"),
                message: e.to_string(),
            })?;
        }
        for (i, e) in record.edges.into_iter().enumerate() {
            for (field, id) in [("src", &e.src), ("dst", &e.dst)] {
                if !graph.contains(id) {
                    return Err(GraphError::Invalid {
                        path: format!("edges[{i}].{field}"),
                        message: format!("unknown node {id}"),
                    });
                }
            }
            graph.add_edge(&e.src, &e.dst, e.dep_kind).map_err(|err| GraphError::Invalid {
                path: format!("edges[{i}]"),
                message: err.to_string(),
            })?;
        }
        Ok(graph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Act {
        seq: u32,
        tool: &'static str,
        reads: Vec<&'static str>,
        writes: Option<&'static str>,
    }

    impl GraphAction for Act {
        fn seq(&self) -> u32 {
            self.seq
        }
        fn tool(&self) -> &str {
            self.tool
        }
        fn consumed_handles(&self) -> Vec<String> {
            self.reads.iter().map(|s| s.to_string()).collect()
        }
        fn produced_handle(&self) -> Option<String> {
            self.writes.map(str::to_string)
        }
    }

    fn id(s: &str) -> NodeId {
        NodeId::new(s)
    }

    fn graph(nodes: &[&str], edges: &[(&str, &str)]) -> ToolGraph {
        let mut g = ToolGraph::new();
        for (i, n) in nodes.iter().enumerate() {
            g.add_node(id(n), *n, NodeKind::Tool, i as u32).unwrap();
        }
        for (s, d) in edges {
            g.add_edge(&id(s), &id(d), DepKind::Data).unwrap();
        }
        g
    }

    #[test]
    fn first_action_has_no_edges() {
        let mut g = ToolGraph::new();
        g.add_action_node(&Act { seq: 0, tool: "define_geometry", reads: vec![], writes: Some("domain:1") })
            .unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn handle_reference_derives_data_edge() {
        let mut g = ToolGraph::new();
        let a = g
            .add_action_node(&Act { seq: 0, tool: "define_geometry", reads: vec![], writes: Some("domain:1") })
            .unwrap();
        let b = g
            .add_action_node(&Act {
                seq: 1,
                tool: "define_pde",
                reads: vec!["domain:1", "domain:1"],
                writes: Some("pde:1"),
            })
            .unwrap();
        assert_eq!(g.edges(), &[Edge { src: a, dst: b, dep_kind: DepKind::Data }]);
        assert_eq!(g.producer_of("pde:1"), Some(&NodeId::for_seq(1)));
    }

    #[test]
    fn duplicate_seq_is_rejected() {
        let mut g = ToolGraph::new();
        g.add_action_node(&Act { seq: 0, tool: "a", reads: vec![], writes: None }).unwrap();
        g.add_action_node(&Act { seq: 1, tool: "b", reads: vec![], writes: None }).unwrap();
        let err = g.add_action_node(&Act { seq: 1, tool: "c", reads: vec![], writes: None }).unwrap_err();
        assert!(matches!(err, GraphError::DuplicateSeq { seq: 1, .. }));
    }

    #[test]
    fn unknown_handle_is_rejected() {
        let mut g = ToolGraph::new();
        let err = g.add_action_node(&Act { seq: 0, tool: "a", reads: vec!["pde:3"], writes: None }).unwrap_err();
        assert_eq!(err, GraphError::UnknownHandle("pde:3".into()));
        assert!(g.is_empty());
    }

    #[test]
    fn descendants_of_chain_and_diamond() {
        let chain = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        assert_eq!(chain.descendants(&id("A")).unwrap(), [id("B"), id("C")].into());
        assert!(chain.descendants(&id("C")).unwrap().is_empty());
        let diamond = graph(&["A", "B", "C", "D"], &[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")]);
        assert_eq!(diamond.descendants(&id("A")).unwrap(), [id("B"), id("C"), id("D")].into());
        assert_eq!(chain.descendants(&id("Z")), Err(GraphError::UnknownNode(id("Z"))));
    }

    #[test]
    fn topological_order_cases() {
        let chain = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        assert_eq!(chain.topological_order().unwrap(), vec![id("A"), id("B"), id("C")]);
        let free = graph(&["A", "B"], &[]);
        assert_eq!(free.topological_order().unwrap(), vec![id("A"), id("B")]);
        let cyc = graph(&["A", "B"], &[("A", "B"), ("B", "A")]);
        match cyc.topological_order() {
            Err(GraphError::Cycle { src, dst }) => {
                assert!(cyc.edges().iter().any(|e| e.src == src && e.dst == dst));
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn seq_breaks_ties_not_insertion_order() {
        let mut g = ToolGraph::new();
        g.add_node(id("late"), "x", NodeKind::Tool, 5).unwrap();
        g.add_node(id("early"), "y", NodeKind::Tool, 1).unwrap();
        assert_eq!(g.topological_order().unwrap(), vec![id("early"), id("late")]);
    }

    #[test]
    fn self_loop_rejected() {
        let mut g = graph(&["A"], &[]);
        assert_eq!(g.add_edge(&id("A"), &id("A"), DepKind::Data), Err(GraphError::SelfLoop(id("A"))));
    }

    #[test]
    fn finalize_freezes_and_checks_cycles() {
        let mut g = graph(&["A", "B"], &[("A", "B")]);
        g.finalize().unwrap();
        assert_eq!(g.add_node(id("C"), "C", NodeKind::Tool, 9), Err(GraphError::Finalized));
        let mut cyc = graph(&["A", "B"], &[("A", "B"), ("B", "A")]);
        assert!(matches!(cyc.finalize(), Err(GraphError::Cycle { .. })));
    }

    #[test]
    fn empty_graph_round_trips() {
        let g = ToolGraph::new();
        let text = g.to_json();
        assert_eq!(text, "{\n  \"nodes\": [],\n  \"edges\": []\n}\n");
        assert_eq!(ToolGraph::from_json(&text).unwrap(), g);
    }

    #[test]
    fn chain_round_trips_bit_exactly() {
        let g = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let text = g.to_json();
        let back = ToolGraph::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn edge_to_unknown_node_is_a_parse_error() {
        let text = r#"{"nodes":[{"id":"a","role":"r","kind":"tool","seq":0}],
                       "edges":[{"src":"a","dst":"b","dep_kind":"data"}]}"#;
        match ToolGraph::from_json(text) {
            Err(GraphError::Invalid { path, .. }) => assert_eq!(path, "edges[0].dst"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = ToolGraph::from_json("{\"nodes\": [\n  {\"id\": }").unwrap_err();
        match err {
            GraphError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
