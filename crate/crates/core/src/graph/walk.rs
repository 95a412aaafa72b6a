//! Second-order biased random walks.
//!
//! From edge `t -> v`, the next node `x` among `v`'s neighbors is chosen with
//! unnormalized probability `w(v, x) / p` when `x == t`, `w(v, x)` when `x`
//! is also adjacent to `t`, and `w(v, x) / q` otherwise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mention::MentionGraph;
use crate::embed::alias::AliasTable;
use crate::embed::{mix_seed, ExecutionMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            p: 1.0,
            q: 1.0,
            walk_length: 80,
            walks_per_node: 10,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.p > 0.0
            && self.q > 0.0
            && self.p.is_finite()
            && self.q.is_finite()
            && self.walk_length > 0
            && self.walks_per_node > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "walk parameters must be positive: {self:?}"
            )))
        }
    }
}

/// Precomputed alias tables for first- and second-order transitions.
pub struct WalkSampler<'g> {
    graph: &'g MentionGraph,
    p: f64,
    q: f64,
    first_order: Vec<Option<AliasTable>>,
    /// `edge_tables[t][k]` samples the successor after traversing
    /// `t -> neighbors(t)[k]`.
    edge_tables: Vec<Vec<AliasTable>>,
}

/// Unnormalized second-order weights over `cur`'s neighbors, arriving from
/// `prev`.
fn biased_weights(g: &MentionGraph, prev: usize, cur: usize, p: f64, q: f64) -> Vec<f64> {
    g.neighbors(cur)
        .iter()
        .map(|&(x, w)| {
            let x = x as usize;
            let w = w as f64;
            if x == prev {
                w / p
            } else if g.weight(prev, x).is_some() {
                w
            } else {
                w / q
            }
        })
        .collect()
}

fn first_order_weights(g: &MentionGraph, cur: usize) -> Vec<f64> {
    g.neighbors(cur).iter().map(|&(_, w)| w as f64).collect()
}

fn normalize(g: &MentionGraph, cur: usize, weights: Vec<f64>) -> Vec<(usize, f64)> {
    let total: f64 = weights.iter().sum();
    g.neighbors(cur)
        .iter()
        .zip(weights)
        .map(|(&(x, _), w)| (x as usize, w / total))
        .collect()
}

/// Exact transition distribution out of `cur`; `prev` is `None` for the
/// first step of a walk.
pub fn transition_probabilities(
    g: &MentionGraph,
    prev: Option<usize>,
    cur: usize,
    p: f64,
    q: f64,
) -> Vec<(usize, f64)> {
    if g.is_isolated(cur) {
        return Vec::new();
    }
    let w = match prev {
        None => first_order_weights(g, cur),
        Some(t) => biased_weights(g, t, cur, p, q),
    };
    normalize(g, cur, w)
}

impl<'g> WalkSampler<'g> {
    pub fn new(graph: &'g MentionGraph, cfg: &WalkConfig) -> Result<Self> {
        cfg.validate()?;
        let n = graph.n_nodes();
        let first_order = (0..n)
            .map(|v| AliasTable::new(&first_order_weights(graph, v)))
            .collect();
        let edge_tables = (0..n)
            .map(|t| {
                graph
                    .neighbors(t)
                    .iter()
                    .map(|&(v, _)| {
                        AliasTable::new(&biased_weights(graph, t, v as usize, cfg.p, cfg.q))
                            .expect("a neighbor always has at least one neighbor")
                    })
                    .collect()
            })
            .collect();
        Ok(WalkSampler {
            graph,
            p: cfg.p,
            q: cfg.q,
            first_order,
            edge_tables,
        })
    }

    pub fn graph(&self) -> &MentionGraph {
        self.graph
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Samples one successor. `from` is `(prev, index of cur in prev's
    /// adjacency)` for second-order steps. Returns the next node and its
    /// index in `cur`'s adjacency.
    pub fn step<R: rand::Rng>(
        &self,
        cur: usize,
        from: Option<(usize, usize)>,
        rng: &mut R,
    ) -> Option<(usize, usize)> {
        let k = match from {
            None => self.first_order[cur].as_ref()?.sample(rng),
            Some((prev, k_in_prev)) => self.edge_tables[prev][k_in_prev].sample(rng),
        };
        Some((self.graph.neighbors(cur)[k].0 as usize, k))
    }

    pub fn walk<R: rand::Rng>(&self, start: usize, length: usize, rng: &mut R) -> Vec<u32> {
        let mut walk = Vec::with_capacity(length);
        walk.push(start as u32);
        let mut from: Option<(usize, usize)> = None;
        let mut cur = start;
        while walk.len() < length {
            let Some((next, k)) = self.step(cur, from, rng) else {
                break;
            };
            from = Some((cur, k));
            cur = next;
            walk.push(cur as u32);
        }
        walk
    }
}

/// `walks_per_node` walks from every non-isolated node, rounds outermost.
/// Walk `i` draws from its own stream derived from `seed` and `i`, so the
/// output is identical in both execution modes.
pub fn simulate_walks(
    graph: &MentionGraph,
    cfg: &WalkConfig,
    seed: u64,
    mode: ExecutionMode,
) -> Result<Vec<Vec<u32>>> {
    let sampler = WalkSampler::new(graph, cfg)?;
    let starts: Vec<usize> = (0..graph.n_nodes()).filter(|&v| !graph.is_isolated(v)).collect();
    let jobs: Vec<(usize, usize)> = (0..cfg.walks_per_node)
        .flat_map(|r| starts.iter().map(move |&v| (r, v)))
        .collect();
    let run = |(id, &(_, start)): (usize, &(usize, usize))| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, id as u64));
        sampler.walk(start, cfg.walk_length, &mut rng)
    };
    Ok(match mode {
        ExecutionMode::Deterministic => jobs.iter().enumerate().map(run).collect(),
        ExecutionMode::Parallel => jobs.par_iter().enumerate().map(run).collect(),
    })
}
