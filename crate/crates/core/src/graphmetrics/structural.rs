use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{LabeledGraph, MetricError};
use crate::toolgraph::{GraphError, NodeId};

/// Structural sub-scores, each in `[0, 1]` and reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralScores {
    /// `1 - |density_e - density_p|`.
    pub connectivity: f64,
    /// Multiset Jaccard of tool names.
    pub role_nodes: f64,
    /// LCS of the labels along each graph's longest path, over the longer path.
    pub critical_path: f64,
    /// LCS of the seq-ordered shared labels, over the number of shared labels.
    pub exec_order: f64,
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let keep = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { row[j + 1].max(row[j]) };
            diag = keep;
        }
    }
    row[b.len()]
}

fn density(g: &LabeledGraph) -> f64 {
    let n = g.len();
    g.edge_count() as f64 / (n * n.saturating_sub(1)).max(1) as f64
}

fn role_jaccard(a: &LabeledGraph, b: &LabeledGraph) -> f64 {
    fn count(g: &LabeledGraph) -> BTreeMap<&str, usize> {
        let mut m: BTreeMap<&str, usize> = BTreeMap::new();
        for r in g.roles() {
            *m.entry(r.as_str()).or_default() += 1;
        }
        m
    }
    let (ca, cb) = (count(a), count(b));
    let keys: BTreeSet<&str> = ca.keys().chain(cb.keys()).copied().collect();
    let (mut inter, mut union) = (0, 0);
    for k in keys {
        let (x, y) = (ca.get(k).copied().unwrap_or(0), cb.get(k).copied().unwrap_or(0));
        inter += x.min(y);
        union += x.max(y);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Node indices along the longest directed path. Among equally long paths
/// the lexicographically smallest index sequence wins.
fn longest_path(g: &LabeledGraph) -> Result<Vec<usize>, MetricError> {
    let n = g.len();
    let out = g.out_neighbors();
    let mut indegree = vec![0usize; n];
    for &(_, d) in g.edges() {
        indegree[d] += 1;
    }
    // nodes are already in seq order, so a min-index queue is the seq tie-break
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut topo = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        topo.push(i);
        for &j in &out[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.insert(j);
            }
        }
    }
    if topo.len() != n {
        let (s, d) = *g
            .edges()
            .iter()
            .find(|&&(s, d)| indegree[s] > 0 && indegree[d] > 0)
            .expect("cycle edge among stuck nodes");
        return Err(MetricError::Graph(GraphError::Cycle {
            src: NodeId::new(&g.labels()[s]),
            dst: NodeId::new(&g.labels()[d]),
        }));
    }
    let mut best: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for &v in &topo {
        for &w in &out[v] {
            let mut candidate = best[v].clone();
            candidate.push(w);
            let cur = &best[w];
            if candidate.len() > cur.len() || (candidate.len() == cur.len() && candidate < *cur) {
                best[w] = candidate;
            }
        }
    }
    Ok(best
        .into_iter()
        .reduce(|a, b| if b.len() > a.len() || (b.len() == a.len() && b < a) { b } else { a })
        .unwrap_or_default())
}

pub(super) fn structural_scores(e: &LabeledGraph, p: &LabeledGraph) -> Result<StructuralScores, MetricError> {
    let connectivity = (1.0 - (density(e) - density(p)).abs()).clamp(0.0, 1.0);
    let role_nodes = role_jaccard(e, p);

    let path_labels = |g: &LabeledGraph| -> Result<Vec<String>, MetricError> {
        Ok(longest_path(g)?.into_iter().map(|i| g.labels()[i].clone()).collect())
    };
    let (pe, pp) = (path_labels(e)?, path_labels(p)?);
    let critical_path = lcs_len(&pe, &pp) as f64 / pe.len().max(pp.len()).max(1) as f64;

    let shared: BTreeSet<&str> = e.label_set().intersection(&p.label_set()).copied().collect();
    let exec_order = if shared.is_empty() {
        0.0
    } else {
        let restrict = |g: &LabeledGraph| -> Vec<String> {
            g.labels().iter().filter(|l| shared.contains(l.as_str())).cloned().collect()
        };
        lcs_len(&restrict(e), &restrict(p)) as f64 / shared.len() as f64
    };

    Ok(StructuralScores { connectivity, role_nodes, critical_path, exec_order })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(roles: &[&str], edges: &[(usize, usize)]) -> LabeledGraph {
        LabeledGraph::from_parts(roles, edges)
    }

    // Independent LCS by exhaustive subsequence enumeration.
    fn lcs_brute(a: &[char], b: &[char]) -> usize {
        let mut best = 0;
        for mask in 0u32..(1 << a.len()) {
            let sub: Vec<char> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| a[i]).collect();
            let mut it = b.iter();
            if sub.iter().all(|c| it.any(|d| d == c)) {
                best = best.max(sub.len());
            }
        }
        best
    }

    #[test]
    fn lcs_matches_brute_force() {
        let cases = ["ABCBDAB", "BDCABA", "XYZ", "", "AAAA", "ABAB"];
        for a in cases {
            for b in cases {
                let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
                assert_eq!(lcs_len(&a, &b), lcs_brute(&a, &b));
            }
        }
    }

    #[test]
    fn identical_graphs_score_one() {
        let a = g(&["A", "B", "C", "B"], &[(0, 1), (1, 2), (0, 3)]);
        let s = structural_scores(&a, &a).unwrap();
        assert_eq!(s, StructuralScores { connectivity: 1.0, role_nodes: 1.0, critical_path: 1.0, exec_order: 1.0 });
    }

    #[test]
    fn edgeless_copy_of_a_chain() {
        let pattern = g(&["A", "B", "C"], &[(0, 1), (1, 2)]);
        let exec = g(&["A", "B", "C"], &[]);
        let s = structural_scores(&exec, &pattern).unwrap();
        assert_eq!(s.role_nodes, 1.0);
        // paths [A] vs [A, B, C]: LCS 1 over 3
        assert!((s.critical_path - 1.0 / 3.0).abs() < 1e-15);
        // density 2/6 vs 0
        assert!((s.connectivity - (1.0 - 2.0 / 6.0)).abs() < 1e-15);
        assert_eq!(s.exec_order, 1.0);
    }

    #[test]
    fn disjoint_labels() {
        let s = structural_scores(&g(&["A", "B"], &[(0, 1)]), &g(&["X", "Y"], &[(0, 1)])).unwrap();
        assert_eq!(s.role_nodes, 0.0);
        assert_eq!(s.exec_order, 0.0);
        assert_eq!(s.critical_path, 0.0);
    }

    #[test]
    fn swapped_order_lowers_exec_order() {
        let s = structural_scores(&g(&["A", "C", "B"], &[]), &g(&["A", "B", "C"], &[])).unwrap();
        assert!((s.exec_order - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn longest_path_tie_break_is_deterministic() {
        let d = g(&["A", "B", "C", "D"], &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert_eq!(longest_path(&d).unwrap(), vec![0, 1, 3]);
    }
}
