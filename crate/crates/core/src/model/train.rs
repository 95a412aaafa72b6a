//! Mini-batch training with annealing and early stopping.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::MenetConfig;
use super::network::MenetModel;
use super::optimizer::Optimizer;
use crate::embed::mix_seed;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::scalar::Scalar;

/// Views and labels of one split; view order matches the model's branches.
#[derive(Debug, Clone, Copy)]
pub struct Dataset<'a, T> {
    pub views: &'a [&'a FeatureMatrix<T>],
    pub labels: &'a [usize],
}

impl<T: Scalar> Dataset<'_, T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Cross-entropy summed over the epoch's training samples, each taken
    /// before the update of its batch.
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were restored.
    pub best_epoch: usize,
    pub best_score: f64,
    pub stopped_early: bool,
}

impl History {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "epoch,train_loss,val_accuracy,lr")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{}", r.epoch, r.train_loss, r.val_accuracy, r.lr)?;
        }
        Ok(())
    }
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Trains with validation accuracy as the early-stopping score.
pub fn train<T: Scalar>(
    model: &mut MenetModel<T>,
    train_set: &Dataset<'_, T>,
    val_set: &Dataset<'_, T>,
    cfg: &MenetConfig,
) -> Result<History> {
    if val_set.is_empty() {
        return Err(Error::InvalidConfig("the validation set is empty".into()));
    }
    let n_val = model.check_views(val_set.views)?;
    if n_val != val_set.len() {
        return Err(Error::DimensionMismatch {
            context: "validation labels".into(),
            expected: n_val,
            found: val_set.len(),
        });
    }
    train_with_score(model, train_set, cfg, |m, _| {
        Ok(accuracy(&m.predict(val_set.views)?, val_set.labels))
    })
}

/// Trains with an arbitrary per-epoch score (higher is better).
///
/// After epoch `e` the score `score(model, e)` is compared with the best so
/// far; a strict improvement snapshots the parameters. Training stops once
/// `patience` consecutive epochs bring no improvement or `max_epochs` is
/// reached, and the best snapshot is restored.
pub fn train_with_score<T: Scalar, F>(
    model: &mut MenetModel<T>,
    train_set: &Dataset<'_, T>,
    cfg: &MenetConfig,
    mut score: F,
) -> Result<History>
where
    F: FnMut(&MenetModel<T>, usize) -> Result<f64>,
{
    cfg.validate()?;
    let n = model.check_views(train_set.views)?;
    if n != train_set.len() {
        return Err(Error::DimensionMismatch {
            context: "training labels".into(),
            expected: n,
            found: train_set.len(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x74_7261_696e));
    let mut optimizer = Optimizer::new(cfg.optimizer, model.layout().n_params());
    let mut grad = vec![T::zero(); model.layout().n_params()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = History {
        best_score: f64::NEG_INFINITY,
        ..History::default()
    };
    let mut best_params = model.params().to_vec();
    let mut wait = 0;
    let start_epoch = model.epoch;

    for e in 1..=cfg.max_epochs {
        let lr = cfg.learning_rate_at(e);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let labels: Vec<usize> = batch.iter().map(|&i| train_set.labels[i]).collect();
            let loss = model.gradient(train_set.views, batch, &labels, cfg.weight_decay, &mut grad)?;
            let loss = loss.to_f64_lossy();
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NumericalAbort {
                    epoch: e,
                    detail: format!("non-finite loss or gradient (batch loss {loss})"),
                });
            }
            epoch_loss += loss;
            optimizer.step(model.params_mut(), &grad, lr);
        }
        if model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::NumericalAbort {
                epoch: e,
                detail: "parameters became non-finite".into(),
            });
        }
        model.epoch = start_epoch + e;

        let s = score(model, e)?;
        history.records.push(EpochRecord {
            epoch: e,
            train_loss: epoch_loss,
            val_accuracy: s,
            lr,
        });
        log::debug!("epoch {e}: train loss {epoch_loss:.6}, validation {s:.4}, lr {lr:e}");
        if s > history.best_score {
            history.best_score = s;
            history.best_epoch = e;
            best_params.copy_from_slice(model.params());
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience {
                history.stopped_early = true;
                break;
            }
        }
    }

    if history.best_epoch > 0 {
        model.params_mut().copy_from_slice(&best_params);
        model.epoch = start_epoch + history.best_epoch;
    }
    Ok(history)
}
