use super::config::OptimizerKind;
use crate::scalar::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// First-order update rule with its per-parameter state.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer<T> {
    Sgd,
    Adam { m: Vec<T>, v: Vec<T>, t: u64 },
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, n_params: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => Optimizer::Adam {
                m: vec![T::zero(); n_params],
                v: vec![T::zero(); n_params],
                t: 0,
            },
        }
    }

    pub fn step(&mut self, params: &mut [T], grad: &[T], lr: f64) {
        match self {
            Optimizer::Sgd => {
                let lr = T::lit(lr);
                for (p, &g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            Optimizer::Adam { m, v, t } => {
                *t += 1;
                let (b1, b2) = (T::lit(ADAM_BETA1), T::lit(ADAM_BETA2));
                let c1 = T::one() - b1.powi(*t as i32);
                let c2 = T::one() - b2.powi(*t as i32);
                let (lr, eps) = (T::lit(lr), T::lit(ADAM_EPSILON));
                for i in 0..params.len() {
                    let g = grad[i];
                    m[i] = b1 * m[i] + (T::one() - b1) * g;
                    v[i] = b2 * v[i] + (T::one() - b2) * g * g;
                    let m_hat = m[i] / c1;
                    let v_hat = v[i] / c2;
                    params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
}
