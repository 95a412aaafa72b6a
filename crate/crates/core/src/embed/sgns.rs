//! Logistic loss with negative sampling, shared by the paragraph-vector and
//! node-embedding trainers.
//!
//! For an input vector `v`, a positive output row `u_o` and negative rows
//! `u_k` the loss is
//!
//! ```text
//! L = -ln σ(u_o · v) - Σ_k ln σ(-u_k · v)
//! ```

use rand::Rng;

use super::alias::AliasTable;
use crate::matrix::Matrix;
use crate::scalar::{axpy, dot, sigmoid, Scalar};

/// Exponent applied to unigram counts for the noise distribution.
pub const NOISE_POWER: f64 = 0.75;

pub fn negative_sampling_loss<T: Scalar>(
    input: &[T],
    output: &Matrix<T>,
    target: usize,
    negatives: &[usize],
) -> T {
    let pos = -sigmoid(dot(output.row(target), input)).ln();
    negatives.iter().fold(pos, |acc, &k| {
        acc - sigmoid(-dot(output.row(k), input)).ln()
    })
}

/// Analytic gradient of [`negative_sampling_loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSamplingGradient<T> {
    pub input: Vec<T>,
    /// Full-size gradient for the output matrix (rows not involved are zero).
    pub output: Matrix<T>,
}

pub fn negative_sampling_gradient<T: Scalar>(
    input: &[T],
    output: &Matrix<T>,
    target: usize,
    negatives: &[usize],
) -> NegativeSamplingGradient<T> {
    let mut g_in = vec![T::zero(); input.len()];
    let mut g_out = Matrix::zeros(output.rows(), output.cols());
    let labelled = std::iter::once((target, T::one())).chain(negatives.iter().map(|&k| (k, T::zero())));
    for (row, label) in labelled {
        let coef = sigmoid(dot(output.row(row), input)) - label;
        axpy(coef, output.row(row), &mut g_in);
        axpy(coef, input, g_out.row_mut(row));
    }
    NegativeSamplingGradient {
        input: g_in,
        output: g_out,
    }
}

/// Output layer handed to [`negative_sampling_step`]: flat row-major rows of
/// `input.len()` values each.
pub enum OutputLayer<'a, T> {
    Trainable(&'a mut [T]),
    Frozen(&'a [T]),
}

/// One in-place SGD step on the loss. The input update is accumulated from
/// the pre-update output rows and applied at the end; output rows move only
/// when the layer is trainable. Returns the loss before the step.
pub fn negative_sampling_step<T: Scalar>(
    input: &mut [T],
    mut output: OutputLayer<'_, T>,
    target: usize,
    negatives: &[usize],
    lr: T,
    scratch: &mut Vec<T>,
) -> T {
    let dim = input.len();
    scratch.clear();
    scratch.resize(dim, T::zero());
    let mut loss = T::zero();
    let labelled = std::iter::once((target, true)).chain(negatives.iter().map(|&k| (k, false)));
    for (row, positive) in labelled {
        let span = row * dim..(row + 1) * dim;
        let score = match &output {
            OutputLayer::Trainable(o) => dot(&o[span.clone()], input),
            OutputLayer::Frozen(o) => dot(&o[span.clone()], input),
        };
        let (g, l) = if positive {
            (T::one() - sigmoid(score), -sigmoid(score).ln())
        } else {
            (-sigmoid(score), -sigmoid(-score).ln())
        };
        loss += l;
        let g = g * lr;
        match &mut output {
            OutputLayer::Trainable(o) => {
                let out_row = &mut o[span];
                axpy(g, out_row, scratch);
                axpy(g, input, out_row);
            }
            OutputLayer::Frozen(o) => axpy(g, &o[span], scratch),
        }
    }
    axpy(T::one(), scratch, input);
    loss
}

/// Draws up to `k` negatives from `noise`, skipping draws equal to `target`.
pub fn draw_negatives<R: Rng + ?Sized>(
    noise: &AliasTable,
    target: usize,
    k: usize,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    for _ in 0..k {
        let n = noise.sample(rng);
        if n != target {
            out.push(n);
        }
    }
}

/// Noise distribution proportional to `count^0.75`.
pub fn unigram_noise(counts: &[u64]) -> Option<AliasTable> {
    let w: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(NOISE_POWER)).collect();
    AliasTable::new(&w)
}

/// Learning rate decaying linearly from `start` to `end` over `total` steps.
#[derive(Debug, Clone, Copy)]
pub struct LinearDecay {
    pub start: f64,
    pub end: f64,
    pub total: usize,
}

impl LinearDecay {
    pub fn at(&self, step: usize) -> f64 {
        if self.total == 0 {
            return self.start;
        }
        let progress = (step as f64 / self.total as f64).min(1.0);
        self.start - (self.start - self.end) * progress
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(seed: u64, dim: usize, rows: usize) -> (Vec<f64>, Matrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (input, Matrix::uniform(rows, dim, 1.0, &mut rng))
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs() + b.abs()).max(1e-6)
    }

    proptest! {
        #[test]
        fn gradient_matches_central_differences(seed in any::<u64>(), dim in 1usize..8, k in 0usize..5) {
            let rows = 3 + k;
            let (input, output) = instance(seed, dim, rows);
            let negatives: Vec<usize> = (1..=k).collect();
            let grad = negative_sampling_gradient(&input, &output, 0, &negatives);
            let h = 1e-5;
            for i in 0..dim {
                let (mut lo, mut hi) = (input.clone(), input.clone());
                lo[i] -= h;
                hi[i] += h;
                let fd = (negative_sampling_loss(&hi, &output, 0, &negatives)
                    - negative_sampling_loss(&lo, &output, 0, &negatives)) / (2.0 * h);
                prop_assert!(rel_err(fd, grad.input[i]) <= 1e-4, "input[{}]: fd {} vs {}", i, fd, grad.input[i]);
            }
            for r in 0..rows {
                for c in 0..dim {
                    let (mut lo, mut hi) = (output.clone(), output.clone());
                    lo.row_mut(r)[c] -= h;
                    hi.row_mut(r)[c] += h;
                    let fd = (negative_sampling_loss(&input, &hi, 0, &negatives)
                        - negative_sampling_loss(&input, &lo, 0, &negatives)) / (2.0 * h);
                    prop_assert!(rel_err(fd, grad.output.get(r, c)) <= 1e-4);
                }
            }
        }

        #[test]
        fn step_is_a_gradient_descent_step(seed in any::<u64>(), dim in 1usize..8) {
            let (input, output) = instance(seed, dim, 4);
            let negatives = [1, 2, 3];
            let lr = 0.05;
            let grad = negative_sampling_gradient(&input, &output, 0, &negatives);
            let (mut v, mut w) = (input.clone(), output.clone());
            let loss = negative_sampling_step(&mut v, OutputLayer::Trainable(w.as_mut_slice()), 0, &negatives, lr, &mut Vec::new());
            prop_assert!((loss - negative_sampling_loss(&input, &output, 0, &negatives)).abs() < 1e-12);
            for i in 0..dim {
                prop_assert!((v[i] - (input[i] - lr * grad.input[i])).abs() < 1e-12);
            }
            for (got, (orig, g)) in w.as_slice().iter().zip(output.as_slice().iter().zip(grad.output.as_slice())) {
                prop_assert!((got - (orig - lr * g)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frozen_output_is_untouched() {
        let (input, output) = instance(1, 4, 3);
        let (mut v, w) = (input.clone(), output.clone());
        negative_sampling_step(&mut v, OutputLayer::Frozen(w.as_slice()), 0, &[1, 2], 0.1, &mut Vec::new());
        assert_eq!(w, output);
        assert_ne!(v, input);
    }

    #[test]
    fn linear_decay_endpoints() {
        let s = LinearDecay { start: 0.025, end: 0.0001, total: 100 };
        assert_eq!(s.at(0), 0.025);
        assert!((s.at(100) - 0.0001).abs() < 1e-15);
        assert!((s.at(500) - 0.0001).abs() < 1e-15);
        assert!((s.at(50) - 0.01255).abs() < 1e-12);
    }

    #[test]
    fn negatives_never_include_target() {
        let noise = unigram_noise(&[5, 1, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut out = Vec::new();
        for _ in 0..1000 {
            draw_negatives(&noise, 0, 5, &mut rng, &mut out);
            assert!(out.iter().all(|&n| n != 0));
        }
    }
}
