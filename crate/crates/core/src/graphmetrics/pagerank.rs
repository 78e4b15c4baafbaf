use std::collections::BTreeMap;

use super::LabeledGraph;

const MAX_ITERATIONS: usize = 100_000;

/// Power iteration with uniform teleport; dangling nodes spread their rank
/// uniformly. Stops once the L1 change falls below `tol`. The result is
/// renormalized to unit L1 norm.
pub fn pagerank_labeled(graph: &LabeledGraph, damping: f64, tol: f64) -> Vec<f64> {
    let n = graph.len();
    if n == 0 {
        return Vec::new();
    }
    let out = graph.out_neighbors();
    let uniform = 1.0 / n as f64;
    let mut rank = vec![uniform; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_ITERATIONS {
        let dangling: f64 = (0..n).filter(|&i| out[i].is_empty()).map(|i| rank[i]).sum();
        let base = (1.0 - damping) * uniform + damping * dangling * uniform;
        next.iter_mut().for_each(|v| *v = base);
        for (i, succ) in out.iter().enumerate() {
            if succ.is_empty() {
                continue;
            }
            let share = damping * rank[i] / succ.len() as f64;
            for &j in succ {
                next[j] += share;
            }
        }
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < tol {
            break;
        }
    }
    let total: f64 = rank.iter().sum();
    rank.iter_mut().for_each(|v| *v /= total);
    rank
}

fn kl_base2(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &mi)| pi * (pi / mi).log2())
        .sum()
}

/// Jensen-Shannon divergence in bits, so the result lies in `[0, 1]`.
/// Inputs are L1-normalized first; `0 * log 0` counts as 0.
pub fn js_divergence(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must share a support");
    let norm = |v: &[f64]| {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let (p, q) = (norm(p), norm(q));
    let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
    (0.5 * (kl_base2(&p, &m) + kl_base2(&q, &m))).clamp(0.0, 1.0)
}

pub(super) fn js_similarity_aligned(p: &[(String, f64)], q: &[(String, f64)]) -> f64 {
    let mut support: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for (label, v) in p {
        support.entry(label).or_default().0 = *v;
    }
    for (label, v) in q {
        support.entry(label).or_default().1 = *v;
    }
    let (pv, qv): (Vec<f64>, Vec<f64>) = support.values().copied().unzip();
    1.0 - js_divergence(&pv, &qv).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_gets_all_mass() {
        let g = LabeledGraph::from_parts(&["A"], &[]);
        assert_eq!(pagerank_labeled(&g, 0.85, 1e-12), vec![1.0]);
    }

    #[test]
    fn two_cycle_is_uniform() {
        let g = LabeledGraph::from_parts(&["A", "B"], &[(0, 1), (1, 0)]);
        let r = pagerank_labeled(&g, 0.85, 1e-12);
        assert!((r[0] - 0.5).abs() < 1e-12 && (r[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn js_of_identical_and_disjoint() {
        assert_eq!(js_divergence(&[0.2, 0.8], &[0.2, 0.8]), 0.0);
        assert!((js_divergence(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn js_is_symmetric_and_normalizes() {
        let p = [1.0, 2.0, 3.0];
        let q = [3.0, 1.0, 0.0];
        assert!((js_divergence(&p, &q) - js_divergence(&q, &p)).abs() < 1e-15);
        assert!((js_divergence(&p, &q) - js_divergence(&[0.5, 1.0, 1.5], &q)).abs() < 1e-15);
    }

    #[test]
    fn aligned_similarity_of_disjoint_labels_is_zero() {
        let p = vec![("A".to_string(), 1.0)];
        let q = vec![("B".to_string(), 1.0)];
        assert!(js_similarity_aligned(&p, &q).abs() < 1e-9);
    }
}
