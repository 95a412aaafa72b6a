use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden units of each view's branch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HiddenSizes {
    pub tfidf: usize,
    pub node2vec: usize,
    pub doc2vec: usize,
    pub timestamp: usize,
}

impl Default for HiddenSizes {
    fn default() -> Self {
        HiddenSizes {
            tfidf: 150,
            node2vec: 150,
            doc2vec: 30,
            timestamp: 30,
        }
    }
}

impl HiddenSizes {
    pub fn get(&self, view: &str) -> Option<usize> {
        match view {
            "tfidf" => Some(self.tfidf),
            "node2vec" => Some(self.node2vec),
            "doc2vec" => Some(self.doc2vec),
            "timestamp" => Some(self.timestamp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MenetConfig {
    pub hidden: HiddenSizes,
    pub learning_rate: f64,
    /// L2 penalty on the output-layer weights.
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    /// The learning rate is multiplied by `anneal_factor` every
    /// `anneal_every` epochs.
    pub anneal_factor: f64,
    pub anneal_every: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for MenetConfig {
    fn default() -> Self {
        MenetConfig {
            hidden: HiddenSizes::default(),
            learning_rate: 1e-4,
            weight_decay: 0.1,
            batch_size: 64,
            max_epochs: 200,
            patience: 20,
            anneal_factor: 0.9,
            anneal_every: 10,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }
}

impl MenetConfig {
    pub fn validate(&self) -> Result<()> {
        let h = &self.hidden;
        let problem = if [h.tfidf, h.node2vec, h.doc2vec, h.timestamp].contains(&0) {
            Some("hidden sizes must be positive")
        } else if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            Some("learning_rate must be positive")
        } else if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            Some("weight_decay must be non-negative")
        } else if self.patience == 0 {
            Some("patience must be at least 1")
        } else if self.batch_size == 0 {
            Some("batch_size must be positive")
        } else if self.anneal_every == 0 || !(self.anneal_factor > 0.0 && self.anneal_factor <= 1.0) {
            Some("anneal_factor must lie in (0, 1] and anneal_every must be positive")
        } else {
            None
        };
        match problem {
            Some(p) => Err(Error::InvalidConfig(p.into())),
            None => Ok(()),
        }
    }

    /// Learning rate for 1-based `epoch`.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let steps = (epoch.saturating_sub(1) / self.anneal_every) as i32;
        self.learning_rate * self.anneal_factor.powi(steps)
    }
}
