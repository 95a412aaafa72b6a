//! Paragraph vectors, distributed bag-of-words variant.
//!
//! Each document owns a vector that is trained to predict words sampled from
//! the document through a logistic output layer with negative sampling.
//! Unseen documents get a fresh vector optimized against the frozen output
//! layer.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tfidf::Vocabulary;
use crate::embed::alias::AliasTable;
use crate::embed::sgns::{draw_negatives, negative_sampling_step, unigram_noise, LinearDecay, OutputLayer};
use crate::embed::{mix_seed, ExecutionMode, Hogwild};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvdbowConfig {
    pub dim: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    /// Minimum document frequency for the paragraph-vector word list.
    pub min_df: usize,
    /// Inference passes over an unseen document.
    pub infer_epochs: usize,
}

impl Default for PvdbowConfig {
    fn default() -> Self {
        PvdbowConfig {
            dim: 300,
            epochs: 20,
            negatives: 5,
            lr_start: 0.025,
            lr_end: 0.0001,
            min_df: 1,
            infer_epochs: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PvdbowModel<T> {
    vocab: Vocabulary,
    doc_vectors: Matrix<T>,
    word_output: Matrix<T>,
    noise: AliasTable,
    config: PvdbowConfig,
}

fn init_bound<T: Scalar>(dim: usize) -> T {
    T::lit(0.5 / dim as f64)
}

fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> Vec<usize> {
    tokens.iter().filter_map(|t| vocab.get(t.as_ref())).collect()
}

struct Sampler<'a> {
    noise: &'a AliasTable,
    negatives: usize,
}

impl Sampler<'_> {
    /// Runs `updates` (word, negatives) steps for one paragraph vector.
    /// With `output == None` the `frozen` word layer is read but never written.
    fn run<T: Scalar, R: Rng>(
        &self,
        doc: &[usize],
        vector: &mut [T],
        mut output: Option<&mut [T]>,
        frozen: &[T],
        updates: usize,
        lr: impl Fn(usize) -> f64,
        rng: &mut R,
    ) {
        let mut negs = Vec::with_capacity(self.negatives);
        let mut scratch = Vec::with_capacity(vector.len());
        for s in 0..updates {
            let word = doc[rng.gen_range(0..doc.len())];
            draw_negatives(self.noise, word, self.negatives, rng, &mut negs);
            let layer = match output.as_deref_mut() {
                Some(o) => OutputLayer::Trainable(o),
                None => OutputLayer::Frozen(frozen),
            };
            negative_sampling_step(vector, layer, word, &negs, T::lit(lr(s)), &mut scratch);
        }
    }
}

/// Trains paragraph vectors for `docs`. In deterministic mode the result is
/// bitwise reproducible for a given seed.
pub fn train_pvdbow<T: Scalar, D: AsRef<[S]> + Sync, S: AsRef<str> + Sync>(
    docs: &[D],
    cfg: &PvdbowConfig,
    seed: u64,
    mode: ExecutionMode,
) -> Result<PvdbowModel<T>> {
    if cfg.dim == 0 {
        return Err(Error::InvalidConfig("paragraph vector dimension must be positive".into()));
    }
    let vocab = Vocabulary::fit(docs, cfg.min_df)?;
    if vocab.is_empty() {
        return Err(Error::InvalidConfig("paragraph-vector vocabulary is empty".into()));
    }
    let encoded: Vec<Vec<usize>> = docs.iter().map(|d| encode(d.as_ref(), &vocab)).collect();
    let mut counts = vec![0u64; vocab.len()];
    for &w in encoded.iter().flatten() {
        counts[w] += 1;
    }
    let noise = unigram_noise(&counts).ok_or(Error::EmptyCorpus)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc_vectors = Matrix::uniform(docs.len(), cfg.dim, init_bound::<T>(cfg.dim), &mut rng);
    let mut word_output = Matrix::zeros(vocab.len(), cfg.dim);

    let per_epoch: usize = encoded.iter().map(Vec::len).sum();
    let schedule = LinearDecay {
        start: cfg.lr_start,
        end: cfg.lr_end,
        total: per_epoch * cfg.epochs,
    };
    let sampler = Sampler {
        noise: &noise,
        negatives: cfg.negatives,
    };

    match mode {
        ExecutionMode::Deterministic => {
            let mut done = 0usize;
            for _ in 0..cfg.epochs {
                for (d, doc) in encoded.iter().enumerate() {
                    if doc.is_empty() {
                        continue;
                    }
                    let base = done;
                    sampler.run(
                        doc,
                        doc_vectors.row_mut(d),
                        Some(word_output.as_mut_slice()),
                        &[],
                        doc.len(),
                        |s| schedule.at(base + s),
                        &mut rng,
                    );
                    done += doc.len();
                }
            }
        }
        ExecutionMode::Parallel => {
            let progress = AtomicUsize::new(0);
            let dim = cfg.dim;
            let output = Hogwild::new(word_output.as_mut_slice());
            for epoch in 0..cfg.epochs {
                doc_vectors
                    .as_mut_slice()
                    .par_chunks_mut(dim)
                    .zip(encoded.par_iter())
                    .enumerate()
                    .filter(|(_, (_, doc))| !doc.is_empty())
                    .for_each(|(d, (vector, doc))| {
                        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, (epoch * encoded.len() + d) as u64));
                        let base = progress.fetch_add(doc.len(), Ordering::Relaxed);
                        // SAFETY: Hogwild updates; see `Hogwild::slice`.
                        let out = unsafe { output.slice() };
                        sampler.run(doc, vector, Some(out), &[], doc.len(), |s| schedule.at(base + s), &mut rng);
                    });
            }
        }
    }

    Ok(PvdbowModel {
        vocab,
        doc_vectors,
        word_output,
        noise,
        config: cfg.clone(),
    })
}

impl<T: Scalar> PvdbowModel<T> {
    pub fn config(&self) -> &PvdbowConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn doc_vectors(&self) -> &Matrix<T> {
        &self.doc_vectors
    }

    /// Trained vector of training document `i`.
    pub fn doc_vector(&self, i: usize) -> &[T] {
        self.doc_vectors.row(i)
    }

    pub fn word_output(&self) -> &Matrix<T> {
        &self.word_output
    }

    /// Fits a new paragraph vector with `steps` updates against the frozen
    /// output layer. A document without known words yields the zero vector.
    pub fn infer<S: AsRef<str>>(&self, tokens: &[S], steps: usize, seed: u64) -> Vec<T> {
        let doc = encode(tokens, &self.vocab);
        if doc.is_empty() {
            log::warn!("paragraph inference on a document without known words; using the zero vector");
            return vec![T::zero(); self.dim()];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = init_bound::<T>(self.dim()).to_f64_lossy();
        let mut vector: Vec<T> = (0..self.dim()).map(|_| T::lit(rng.gen_range(-bound..bound))).collect();
        let schedule = LinearDecay {
            start: self.config.lr_start,
            end: self.config.lr_end,
            total: steps,
        };
        Sampler {
            noise: &self.noise,
            negatives: self.config.negatives,
        }
        .run(&doc, &mut vector, None, self.word_output.as_slice(), steps, |s| schedule.at(s), &mut rng);
        vector
    }

    /// Inference with the configured number of passes over the document.
    pub fn infer_default<S: AsRef<str>>(&self, tokens: &[S], seed: u64) -> Vec<T> {
        let known = tokens.iter().filter(|t| self.vocab.get(t.as_ref()).is_some()).count();
        self.infer(tokens, known * self.config.infer_epochs, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<Vec<String>> {
        vec![
            "alpha beta gamma delta alpha beta".split(' ').map(String::from).collect(),
            "omega sigma kappa omega sigma kappa".split(' ').map(String::from).collect(),
        ]
    }

    fn small_cfg(epochs: usize) -> PvdbowConfig {
        PvdbowConfig {
            dim: 16,
            epochs,
            negatives: 3,
            ..PvdbowConfig::default()
        }
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let m: PvdbowModel<f64> = train_pvdbow(&corpus(), &small_cfg(0), 5, ExecutionMode::Deterministic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let init = Matrix::<f64>::uniform(2, 16, 0.5 / 16.0, &mut rng);
        assert_eq!(m.doc_vectors(), &init);
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let a: PvdbowModel<f64> = train_pvdbow(&corpus(), &small_cfg(5), 9, ExecutionMode::Deterministic).unwrap();
        let b: PvdbowModel<f64> = train_pvdbow(&corpus(), &small_cfg(5), 9, ExecutionMode::Deterministic).unwrap();
        assert_eq!(a.doc_vectors(), b.doc_vectors());
        assert_eq!(a.word_output(), b.word_output());
    }

    #[test]
    fn zero_dimension_is_fatal() {
        let cfg = PvdbowConfig { dim: 0, ..small_cfg(1) };
        assert!(train_pvdbow::<f64, _, _>(&corpus(), &cfg, 0, ExecutionMode::Deterministic).is_err());
    }

    #[test]
    fn inference_with_zero_steps_returns_initialization() {
        let m: PvdbowModel<f64> = train_pvdbow(&corpus(), &small_cfg(3), 1, ExecutionMode::Deterministic).unwrap();
        let v = m.infer(&corpus()[0], 0, 77);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let b = 0.5 / 16.0;
        let expected: Vec<f64> = (0..16).map(|_| rng.gen_range(-b..b)).collect();
        assert_eq!(v, expected);
        assert_eq!(m.infer(&corpus()[0], 50, 3), m.infer(&corpus()[0], 50, 3));
    }

    #[test]
    fn unknown_document_infers_zero() {
        let m: PvdbowModel<f32> = train_pvdbow(&corpus(), &small_cfg(1), 1, ExecutionMode::Deterministic).unwrap();
        assert_eq!(m.infer(&["nothing", "known"], 10, 0), vec![0.0f32; 16]);
    }

    #[test]
    fn parallel_mode_produces_finite_vectors() {
        let m: PvdbowModel<f32> = train_pvdbow(&corpus(), &small_cfg(10), 1, ExecutionMode::Parallel).unwrap();
        assert!(m.doc_vectors().as_slice().iter().all(|v| v.is_finite()));
    }
}
