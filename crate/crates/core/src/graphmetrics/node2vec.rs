//! Node2Vec: second-order biased random walks on the undirected view of a
//! graph, followed by skip-gram training with negative sampling.
//!
//! Everything runs on one thread with a seeded ChaCha stream, so the same
//! graph, config and seed always produce bit-identical vectors. Input
//! vectors are initialized from a stream keyed by `(seed, label)`, which
//! puts same-labeled nodes of different graphs at the same starting point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledGraph;
use crate::util::fnv1a;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Node2VecConfig {
    pub dims: usize,
    pub walk_len: usize,
    pub walks_per_node: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub window: usize,
    pub epochs: usize,
    pub neg_samples: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Node2VecConfig {
    fn default() -> Self {
        Node2VecConfig {
            dims: 32,
            walk_len: 10,
            walks_per_node: 20,
            p: 1.0,
            q: 1.0,
            window: 4,
            epochs: 5,
            neg_samples: 5,
            learning_rate: 0.025,
            seed: 42,
        }
    }
}

fn undirected_neighbors(graph: &LabeledGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); graph.len()];
    for &(s, d) in graph.edges() {
        adj[s].push(d);
        adj[d].push(s);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

pub(crate) fn random_walks(adj: &[Vec<usize>], cfg: &Node2VecConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut walks = Vec::with_capacity(adj.len() * cfg.walks_per_node);
    let mut weights = Vec::new();
    for _ in 0..cfg.walks_per_node {
        for start in 0..adj.len() {
            let mut walk = vec![start];
            while walk.len() < cfg.walk_len.max(1) {
                let cur = *walk.last().unwrap();
                let nbrs = &adj[cur];
                if nbrs.is_empty() {
                    break;
                }
                let next = if walk.len() == 1 {
                    nbrs[rng.random_range(0..nbrs.len())]
                } else {
                    let prev = walk[walk.len() - 2];
                    weights.clear();
                    weights.extend(nbrs.iter().map(|&x| {
                        if x == prev {
                            1.0 / cfg.p
                        } else if adj[prev].binary_search(&x).is_ok() {
                            1.0
                        } else {
                            1.0 / cfg.q
                        }
                    }));
                    let total: f64 = weights.iter().sum();
                    let mut pick = rng.random::<f64>() * total;
                    let mut chosen = nbrs[nbrs.len() - 1];
                    for (&x, &w) in nbrs.iter().zip(&weights) {
                        if pick < w {
                            chosen = x;
                            break;
                        }
                        pick -= w;
                    }
                    chosen
                };
                walk.push(next);
            }
            walks.push(walk);
        }
    }
    walks
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One vector of length `cfg.dims` per node of `graph`, in node order.
pub fn embed_nodes(graph: &LabeledGraph, cfg: &Node2VecConfig) -> Vec<Vec<f64>> {
    let n = graph.len();
    let dims = cfg.dims;
    let mut input: Vec<Vec<f64>> = graph
        .labels()
        .iter()
        .map(|label| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed ^ fnv1a(label.as_bytes()));
            (0..dims).map(|_| (r.random::<f64>() - 0.5) / dims as f64).collect()
        })
        .collect();
    let mut output = vec![vec![0.0; dims]; n];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let adj = undirected_neighbors(graph);
    let walks = random_walks(&adj, cfg, &mut rng);

    // unigram^0.75 table for negative sampling
    let mut freq = vec![0.0f64; n];
    for w in &walks {
        for &v in w {
            freq[v] += 1.0;
        }
    }
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for f in &freq {
        acc += f.powf(0.75);
        cumulative.push(acc);
    }

    let pairs_per_epoch: usize = walks
        .iter()
        .map(|w| (0..w.len()).map(|i| i.min(cfg.window) + (w.len() - 1 - i).min(cfg.window)).sum::<usize>())
        .sum();
    let total = (pairs_per_epoch * cfg.epochs).max(1) as f64;
    let mut done = 0usize;
    let mut grad = vec![0.0; dims];

    for _ in 0..cfg.epochs {
        for walk in &walks {
            for (i, &center) in walk.iter().enumerate() {
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(walk.len() - 1);
                for (j, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let lr = (cfg.learning_rate * (1.0 - done as f64 / total)).max(cfg.learning_rate * 1e-4);
                    done += 1;
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for s in 0..=cfg.neg_samples {
                        let (target, label) = if s == 0 {
                            (context, 1.0)
                        } else {
                            let pick = rng.random::<f64>() * acc;
                            let t = cumulative.partition_point(|&c| c <= pick).min(n - 1);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let dot: f64 = input[center].iter().zip(&output[target]).map(|(a, b)| a * b).sum();
                        let g = (label - sigmoid(dot)) * lr;
                        for d in 0..dims {
                            grad[d] += g * output[target][d];
                            output[target][d] += g * input[center][d];
                        }
                    }
                    for (w, g) in input[center].iter_mut().zip(&grad) {
                        *w += g;
                    }
                }
            }
        }
    }
    input
}
