//! Skip-gram with negative sampling over random-walk node sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mention::MentionGraph;
use super::walk::{simulate_walks, WalkConfig};
use crate::embed::sgns::{draw_negatives, negative_sampling_step, unigram_noise, LinearDecay, OutputLayer};
use crate::embed::{mix_seed, ExecutionMode, Hogwild};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureView};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 300,
            window: 10,
            negatives: 5,
            epochs: 5,
            lr_start: 0.025,
            lr_end: 0.0001,
        }
    }
}

/// Node vectors aligned with the graph's node order.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEmbedding<T> {
    pub user_ids: Vec<String>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> NodeEmbedding<T> {
    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn vector(&self, i: usize) -> &[T] {
        self.vectors.row(i)
    }

    pub fn into_view(self) -> FeatureView<T> {
        FeatureView {
            name: "node2vec".into(),
            matrix: FeatureMatrix::Dense(self.vectors),
        }
    }
}

struct Trainer<'a> {
    cfg: &'a SkipGramConfig,
    noise: &'a crate::embed::alias::AliasTable,
    schedule: LinearDecay,
}

impl Trainer<'_> {
    /// One pass over a walk; `inputs` and `out` are the flat node and
    /// context layers.
    fn walk<T: Scalar, R: Rng>(
        &self,
        walk: &[u32],
        base: usize,
        inputs: &mut [T],
        out: &mut [T],
        rng: &mut R,
        negs: &mut Vec<usize>,
        scratch: &mut Vec<T>,
    ) {
        let dim = self.cfg.dim;
        for (i, &center) in walk.iter().enumerate() {
            let lr = T::lit(self.schedule.at(base + i));
            let reduce = rng.gen_range(0..self.cfg.window);
            let span = self.cfg.window - reduce;
            let lo = i.saturating_sub(span);
            let hi = (i + span).min(walk.len() - 1);
            for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                if j == i {
                    continue;
                }
                draw_negatives(self.noise, ctx as usize, self.cfg.negatives, rng, negs);
                let c = center as usize;
                let input = &mut inputs[c * dim..(c + 1) * dim];
                negative_sampling_step(input, OutputLayer::Trainable(out), ctx as usize, negs, lr, scratch);
            }
        }
    }
}

/// Trains input vectors for `n_nodes` nodes from `walks`. Nodes that never
/// appear in a walk keep a zero vector.
pub fn train_node_embeddings<T: Scalar>(
    walks: &[Vec<u32>],
    n_nodes: usize,
    cfg: &SkipGramConfig,
    seed: u64,
    mode: ExecutionMode,
) -> Result<Matrix<T>> {
    if cfg.dim == 0 {
        return Err(Error::InvalidConfig("node embedding dimension must be positive".into()));
    }
    if cfg.window == 0 {
        return Err(Error::InvalidConfig("skip-gram window must be positive".into()));
    }
    if walks.iter().all(Vec::is_empty) {
        return Err(Error::InvalidConfig("no random walks to train node embeddings on".into()));
    }
    let mut counts = vec![0u64; n_nodes];
    for &v in walks.iter().flatten() {
        let slot = counts.get_mut(v as usize).ok_or_else(|| Error::DimensionMismatch {
            context: "walk node index".into(),
            expected: n_nodes,
            found: v as usize + 1,
        })?;
        *slot += 1;
    }
    let noise = unigram_noise(&counts).ok_or(Error::EmptyCorpus)?;

    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors = Matrix::<T>::uniform(n_nodes, dim, T::lit(0.5 / dim as f64), &mut rng);
    for (v, &c) in counts.iter().enumerate() {
        if c == 0 {
            vectors.row_mut(v).fill(T::zero());
        }
    }
    let mut context = Matrix::<T>::zeros(n_nodes, dim);

    let per_epoch: usize = walks.iter().map(Vec::len).sum();
    let mut offsets = Vec::with_capacity(walks.len());
    let mut acc = 0;
    for w in walks {
        offsets.push(acc);
        acc += w.len();
    }
    let trainer = Trainer {
        cfg,
        noise: &noise,
        schedule: LinearDecay {
            start: cfg.lr_start,
            end: cfg.lr_end,
            total: per_epoch * cfg.epochs,
        },
    };

    match mode {
        ExecutionMode::Deterministic => {
            let (mut negs, mut scratch) = (Vec::new(), Vec::new());
            for epoch in 0..cfg.epochs {
                for (w, walk) in walks.iter().enumerate() {
                    trainer.walk(
                        walk,
                        epoch * per_epoch + offsets[w],
                        vectors.as_mut_slice(),
                        context.as_mut_slice(),
                        &mut rng,
                        &mut negs,
                        &mut scratch,
                    );
                }
            }
        }
        ExecutionMode::Parallel => {
            let input = Hogwild::new(vectors.as_mut_slice());
            let output = Hogwild::new(context.as_mut_slice());
            for epoch in 0..cfg.epochs {
                walks.par_iter().enumerate().for_each(|(w, walk)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, (epoch * walks.len() + w) as u64));
                    let (mut negs, mut scratch) = (Vec::new(), Vec::new());
                    // SAFETY: Hogwild updates; see `Hogwild::slice`.
                    let (inp, out) = unsafe { (input.slice(), output.slice()) };
                    trainer.walk(
                        walk,
                        epoch * per_epoch + offsets[w],
                        inp,
                        out,
                        &mut rng,
                        &mut negs,
                        &mut scratch,
                    );
                });
            }
        }
    }
    Ok(vectors)
}

/// Walks the graph and trains node vectors. A graph without edges yields
/// all-zero vectors.
pub fn embed_graph<T: Scalar>(
    graph: &MentionGraph,
    walk_cfg: &WalkConfig,
    sg_cfg: &SkipGramConfig,
    seed: u64,
    mode: ExecutionMode,
) -> Result<NodeEmbedding<T>> {
    if sg_cfg.dim == 0 {
        return Err(Error::InvalidConfig("node embedding dimension must be positive".into()));
    }
    let walks = simulate_walks(graph, walk_cfg, mix_seed(seed, 0), mode)?;
    let isolated = graph.isolated_nodes().len();
    if isolated > 0 {
        log::info!("{isolated} of {} users are isolated in the mention graph", graph.n_nodes());
    }
    let vectors = if walks.is_empty() {
        log::warn!("mention graph has no edges; node vectors are all zero");
        Matrix::zeros(graph.n_nodes(), sg_cfg.dim)
    } else {
        train_node_embeddings(&walks, graph.n_nodes(), sg_cfg, mix_seed(seed, 1), mode)?
    };
    Ok(NodeEmbedding {
        user_ids: graph.nodes().to_vec(),
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(epochs: usize) -> SkipGramConfig {
        SkipGramConfig {
            dim: 8,
            window: 3,
            epochs,
            ..SkipGramConfig::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let walks = vec![vec![0, 1, 0], vec![1, 0, 1]];
        let m: Matrix<f64> = train_node_embeddings(&walks, 3, &cfg(0), 4, ExecutionMode::Deterministic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut init = Matrix::<f64>::uniform(3, 8, 0.5 / 8.0, &mut rng);
        init.row_mut(2).fill(0.0);
        assert_eq!(m, init);
    }

    #[test]
    fn deterministic_mode_is_reproducible() {
        let walks = vec![vec![0, 1, 2, 1, 0], vec![2, 1, 0, 1, 2]];
        let a: Matrix<f32> = train_node_embeddings(&walks, 3, &cfg(3), 8, ExecutionMode::Deterministic).unwrap();
        let b: Matrix<f32> = train_node_embeddings(&walks, 3, &cfg(3), 8, ExecutionMode::Deterministic).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_inputs_are_fatal() {
        let walks = vec![vec![0, 1]];
        let bad = SkipGramConfig { dim: 0, ..cfg(1) };
        assert!(train_node_embeddings::<f64>(&walks, 2, &bad, 0, ExecutionMode::Deterministic).is_err());
        assert!(train_node_embeddings::<f64>(&[], 2, &cfg(1), 0, ExecutionMode::Deterministic).is_err());
        assert!(train_node_embeddings::<f64>(&[vec![5]], 2, &cfg(1), 0, ExecutionMode::Deterministic).is_err());
    }

    #[test]
    fn edgeless_graph_embeds_to_zero() {
        let g = MentionGraph::from_edges(vec!["a".into(), "b".into()], &[]);
        let e: NodeEmbedding<f64> = embed_graph(&g, &WalkConfig::default(), &cfg(1), 0, ExecutionMode::Deterministic).unwrap();
        assert!(e.vectors.as_slice().iter().all(|&v| v == 0.0));
    }
}
