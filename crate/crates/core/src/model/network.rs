//! Multi-branch network: one ReLU layer per view, concatenation, softmax.
//!
//! All parameters live in one flat vector. For each branch `v` the weights
//! `W_v` (`input_dim × hidden`, row-major) are followed by the bias `b_v`;
//! the output weights `W_o` (`Σ hidden × m`) and bias `b_o` come last.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, RowRef};
use crate::matrix::Matrix;
use crate::scalar::{axpy, dot, Scalar};

/// Floor applied inside the logarithm of the cross-entropy.
pub const LOG_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub name: String,
    pub input_dim: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Branch {
    w: usize,
    b: usize,
    /// Start of this branch's units in the concatenated hidden vector.
    h: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    specs: Vec<BranchSpec>,
    branches: Vec<Branch>,
    hidden_total: usize,
    m: usize,
    wo: usize,
    bo: usize,
    len: usize,
}

impl Layout {
    pub fn new(specs: Vec<BranchSpec>, m: usize) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidConfig("the network needs at least one view".into()));
        }
        if m == 0 {
            return Err(Error::InvalidConfig("the network needs at least one class".into()));
        }
        if let Some(s) = specs.iter().find(|s| s.hidden == 0 || s.input_dim == 0) {
            return Err(Error::InvalidConfig(format!(
                "view {} has input dimension {} and {} hidden units; both must be positive",
                s.name, s.input_dim, s.hidden
            )));
        }
        let mut offset = 0;
        let mut h = 0;
        let mut branches = Vec::with_capacity(specs.len());
        for s in &specs {
            let w = offset;
            let b = w + s.input_dim * s.hidden;
            offset = b + s.hidden;
            branches.push(Branch { w, b, h });
            h += s.hidden;
        }
        let wo = offset;
        let bo = wo + h * m;
        Ok(Layout {
            specs,
            branches,
            hidden_total: h,
            m,
            wo,
            bo,
            len: bo + m,
        })
    }

    pub fn specs(&self) -> &[BranchSpec] {
        &self.specs
    }

    pub fn n_views(&self) -> usize {
        self.specs.len()
    }

    pub fn n_classes(&self) -> usize {
        self.m
    }

    pub fn hidden_total(&self) -> usize {
        self.hidden_total
    }

    pub fn n_params(&self) -> usize {
        self.len
    }

    pub fn branch_weights(&self, v: usize) -> std::ops::Range<usize> {
        self.branches[v].w..self.branches[v].b
    }

    pub fn branch_bias(&self, v: usize) -> std::ops::Range<usize> {
        self.branches[v].b..self.branches[v].b + self.specs[v].hidden
    }

    pub fn output_weights(&self) -> std::ops::Range<usize> {
        self.wo..self.bo
    }

    pub fn output_bias(&self) -> std::ops::Range<usize> {
        self.bo..self.len
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations<T> {
    /// Concatenated post-ReLU branch outputs.
    pub hidden: Vec<T>,
    pub logits: Vec<T>,
    pub probabilities: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MenetModel<T> {
    layout: Layout,
    params: Vec<T>,
    /// Number of completed training epochs.
    pub epoch: usize,
}

/// Softmax with max-shift; non-finite logits propagate as NaN.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `-ln p[label]`, with the probability floored at [`LOG_EPS`].
pub fn cross_entropy<T: Scalar>(probabilities: &[T], label: usize) -> T {
    -probabilities[label].max(T::lit(LOG_EPS)).ln()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl<T: Scalar> MenetModel<T> {
    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))` per layer, biases
    /// zero.
    pub fn new(specs: Vec<BranchSpec>, m: usize, seed: u64) -> Result<Self> {
        let layout = Layout::new(specs, m)?;
        let mut params = vec![T::zero(); layout.len];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng| {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[range] {
                *p = T::lit(rng.gen_range(-bound..bound));
            }
        };
        for v in 0..layout.n_views() {
            let s = &layout.specs[v];
            fill(layout.branch_weights(v), s.input_dim, s.hidden, &mut rng);
        }
        fill(layout.output_weights(), layout.hidden_total, m, &mut rng);
        Ok(MenetModel { layout, params, epoch: 0 })
    }

    pub fn from_params(specs: Vec<BranchSpec>, m: usize, params: Vec<T>) -> Result<Self> {
        let layout = Layout::new(specs, m)?;
        if params.len() != layout.len {
            return Err(Error::DimensionMismatch {
                context: "network parameters".into(),
                expected: layout.len,
                found: params.len(),
            });
        }
        Ok(MenetModel { layout, params, epoch: 0 })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn n_classes(&self) -> usize {
        self.layout.m
    }

    /// Checks that `views` line up with the branches and share a row count.
    pub fn check_views(&self, views: &[&FeatureMatrix<T>]) -> Result<usize> {
        if views.len() != self.layout.n_views() {
            return Err(Error::DimensionMismatch {
                context: "number of views".into(),
                expected: self.layout.n_views(),
                found: views.len(),
            });
        }
        for (s, v) in self.layout.specs.iter().zip(views) {
            if v.n_cols() != s.input_dim {
                return Err(Error::DimensionMismatch {
                    context: format!("columns of view {}", s.name),
                    expected: s.input_dim,
                    found: v.n_cols(),
                });
            }
        }
        let rows = views[0].n_rows();
        for (s, v) in self.layout.specs.iter().zip(views) {
            if v.n_rows() != rows {
                return Err(Error::DimensionMismatch {
                    context: format!("rows of view {}", s.name),
                    expected: rows,
                    found: v.n_rows(),
                });
            }
        }
        Ok(rows)
    }

    fn check_inputs(&self, inputs: &[RowRef<'_, T>]) -> Result<()> {
        if inputs.len() != self.layout.n_views() {
            return Err(Error::DimensionMismatch {
                context: "number of views".into(),
                expected: self.layout.n_views(),
                found: inputs.len(),
            });
        }
        for (s, x) in self.layout.specs.iter().zip(inputs) {
            let bad = match x {
                RowRef::Dense(d) => (d.len() != s.input_dim).then_some(d.len()),
                RowRef::Sparse(sp) => sp
                    .indices
                    .iter()
                    .find(|&&i| i as usize >= s.input_dim)
                    .map(|&i| i as usize + 1),
            };
            if let Some(found) = bad {
                return Err(Error::DimensionMismatch {
                    context: format!("input of view {}", s.name),
                    expected: s.input_dim,
                    found,
                });
            }
        }
        Ok(())
    }

    fn forward_unchecked(&self, inputs: &[RowRef<'_, T>]) -> Activations<T> {
        let l = &self.layout;
        let mut hidden = vec![T::zero(); l.hidden_total];
        for (v, x) in inputs.iter().enumerate() {
            let s = &l.specs[v];
            let w = &self.params[l.branch_weights(v)];
            let h = &mut hidden[l.branches[v].h..l.branches[v].h + s.hidden];
            h.copy_from_slice(&self.params[l.branch_bias(v)]);
            let mut add_row = |k: usize, xk: T| {
                if xk != T::zero() {
                    axpy(xk, &w[k * s.hidden..(k + 1) * s.hidden], h);
                }
            };
            match x {
                RowRef::Dense(d) => d.iter().enumerate().for_each(|(k, &xk)| add_row(k, xk)),
                RowRef::Sparse(sp) => sp.iter().for_each(|(k, xk)| add_row(k, xk)),
            }
            for a in h.iter_mut() {
                *a = a.max(T::zero());
            }
        }
        let mut logits = self.params[l.output_bias()].to_vec();
        let wo = &self.params[l.output_weights()];
        for (j, &hj) in hidden.iter().enumerate() {
            if hj != T::zero() {
                axpy(hj, &wo[j * l.m..(j + 1) * l.m], &mut logits);
            }
        }
        let probabilities = softmax(&logits);
        Activations {
            hidden,
            logits,
            probabilities,
        }
    }

    /// Forward pass for one user; `inputs` holds one row per view.
    pub fn forward(&self, inputs: &[RowRef<'_, T>]) -> Result<Activations<T>> {
        self.check_inputs(inputs)?;
        Ok(self.forward_unchecked(inputs))
    }

    /// Class probabilities for every row, one row per user.
    pub fn predict_proba(&self, views: &[&FeatureMatrix<T>]) -> Result<Matrix<T>> {
        let n = self.check_views(views)?;
        let mut out = Matrix::zeros(n, self.layout.m);
        let mut inputs = Vec::with_capacity(views.len());
        for i in 0..n {
            inputs.clear();
            inputs.extend(views.iter().map(|v| v.row(i)));
            out.row_mut(i).copy_from_slice(&self.forward_unchecked(&inputs).probabilities);
        }
        Ok(out)
    }

    pub fn predict(&self, views: &[&FeatureMatrix<T>]) -> Result<Vec<usize>> {
        let p = self.predict_proba(views)?;
        Ok(p.iter_rows().map(argmax).collect())
    }

    /// `(λ/2)·‖W_o‖²`.
    pub fn decay_penalty(&self, weight_decay: f64) -> T {
        let wo = &self.params[self.layout.output_weights()];
        T::lit(weight_decay / 2.0) * dot(wo, wo)
    }

    /// Summed cross-entropy over the selected rows.
    pub fn data_loss(&self, views: &[&FeatureMatrix<T>], rows: &[usize], labels: &[usize]) -> Result<T> {
        self.check_views(views)?;
        let mut inputs = Vec::with_capacity(views.len());
        let mut total = T::zero();
        for (&i, &y) in rows.iter().zip(labels) {
            inputs.clear();
            inputs.extend(views.iter().map(|v| v.row(i)));
            total += cross_entropy(&self.forward_unchecked(&inputs).probabilities, y);
        }
        Ok(total)
    }

    /// Training objective on a batch: mean cross-entropy plus the decay term.
    pub fn objective(
        &self,
        views: &[&FeatureMatrix<T>],
        rows: &[usize],
        labels: &[usize],
        weight_decay: f64,
    ) -> Result<T> {
        let n = T::lit(rows.len() as f64);
        Ok(self.data_loss(views, rows, labels)? / n + self.decay_penalty(weight_decay))
    }

    /// Writes the gradient of [`MenetModel::objective`] into `grad` and
    /// returns the batch's summed cross-entropy.
    pub fn gradient(
        &self,
        views: &[&FeatureMatrix<T>],
        rows: &[usize],
        labels: &[usize],
        weight_decay: f64,
        grad: &mut [T],
    ) -> Result<T> {
        self.check_views(views)?;
        if grad.len() != self.layout.len {
            return Err(Error::DimensionMismatch {
                context: "gradient buffer".into(),
                expected: self.layout.len,
                found: grad.len(),
            });
        }
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "batch labels".into(),
                expected: rows.len(),
                found: labels.len(),
            });
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= self.layout.m) {
            return Err(Error::UnknownClassId {
                id: y,
                classes: self.layout.m,
            });
        }
        grad.fill(T::zero());
        if rows.is_empty() {
            return Ok(T::zero());
        }
        let l = &self.layout;
        let m = l.m;
        let scale = T::one() / T::lit(rows.len() as f64);
        let wo = &self.params[l.output_weights()];
        let mut dlogits = vec![T::zero(); m];
        let mut dhidden = vec![T::zero(); l.hidden_total];
        let mut inputs = Vec::with_capacity(views.len());
        let mut total = T::zero();

        for (&i, &y) in rows.iter().zip(labels) {
            inputs.clear();
            inputs.extend(views.iter().map(|v| v.row(i)));
            let act = self.forward_unchecked(&inputs);
            total += cross_entropy(&act.probabilities, y);

            for (d, &p) in dlogits.iter_mut().zip(&act.probabilities) {
                *d = p * scale;
            }
            dlogits[y] -= scale;

            {
                let g_wo = &mut grad[l.output_weights()];
                for (j, &hj) in act.hidden.iter().enumerate() {
                    if hj != T::zero() {
                        axpy(hj, &dlogits, &mut g_wo[j * m..(j + 1) * m]);
                    }
                }
            }
            axpy(T::one(), &dlogits, &mut grad[l.output_bias()]);

            for (j, dh) in dhidden.iter_mut().enumerate() {
                *dh = if act.hidden[j] > T::zero() {
                    dot(&wo[j * m..(j + 1) * m], &dlogits)
                } else {
                    T::zero()
                };
            }

            for (v, x) in inputs.iter().enumerate() {
                let s = &l.specs[v];
                let da = &dhidden[l.branches[v].h..l.branches[v].h + s.hidden];
                if da.iter().all(|&d| d == T::zero()) {
                    continue;
                }
                axpy(T::one(), da, &mut grad[l.branch_bias(v)]);
                let g_w = &mut grad[l.branch_weights(v)];
                let mut add_row = |k: usize, xk: T| {
                    if xk != T::zero() {
                        axpy(xk, da, &mut g_w[k * s.hidden..(k + 1) * s.hidden]);
                    }
                };
                match x {
                    RowRef::Dense(d) => d.iter().enumerate().for_each(|(k, &xk)| add_row(k, xk)),
                    RowRef::Sparse(sp) => sp.iter().for_each(|(k, xk)| add_row(k, xk)),
                }
            }
        }

        if weight_decay != 0.0 {
            let lambda = T::lit(weight_decay);
            let range = l.output_weights();
            let (g, p) = (&mut grad[range.clone()], &self.params[range]);
            axpy(lambda, p, g);
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str, d: usize, h: usize) -> BranchSpec {
        BranchSpec {
            name: name.into(),
            input_dim: d,
            hidden: h,
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let mut m = MenetModel::<f64>::new(vec![spec("a", 3, 2), spec("b", 2, 2)], 4, 0).unwrap();
        m.params_mut().fill(0.0);
        let a = m.forward(&[RowRef::Dense(&[0.0; 3]), RowRef::Dense(&[0.0; 2])]).unwrap();
        assert!(a.probabilities.iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn binary_softmax_is_logistic() {
        for t in [-3.0, 0.0, 0.7, 12.0] {
            let p = softmax(&[t, 0.0f64]);
            assert!((p[0] - 1.0 / (1.0 + (-t).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let p = softmax(&[1e4f64, -1e4, 0.0, 1e4]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0 && x.is_finite()));
    }

    #[test]
    fn cross_entropy_values() {
        assert!((cross_entropy(&[0.7f64, 0.2, 0.1], 0) - 0.356_674_943_938_732_4).abs() < 1e-12);
        assert_eq!(cross_entropy(&[1.0f64, 0.0], 0), 0.0);
        assert!((cross_entropy(&[1.0f64, 0.0], 1) - 27.631_021_115_928_547).abs() < 1e-9);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(&[0.5f64, 0.5]), 0);
        assert_eq!(argmax(&[0.1f64, 0.3, 0.3, 0.2]), 1);
        assert_eq!(argmax(&[0.0f64, 0.0, 1.0]), 2);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = MenetModel::<f64>::new(vec![spec("a", 3, 2)], 2, 0).unwrap();
        assert!(matches!(
            m.forward(&[RowRef::Dense(&[0.0; 4])]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn layout_offsets() {
        let l = Layout::new(vec![spec("a", 3, 2), spec("b", 5, 4)], 3).unwrap();
        assert_eq!(l.branch_weights(0), 0..6);
        assert_eq!(l.branch_bias(0), 6..8);
        assert_eq!(l.branch_weights(1), 8..28);
        assert_eq!(l.branch_bias(1), 28..32);
        assert_eq!(l.output_weights(), 32..50);
        assert_eq!(l.output_bias(), 50..53);
    }
}
