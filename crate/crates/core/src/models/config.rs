use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, LossKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Softmax,
    Sigmoid,
}

impl OutputActivation {
    pub fn activation(self) -> Activation {
        match self {
            OutputActivation::Softmax => Activation::Softmax,
            OutputActivation::Sigmoid => Activation::Sigmoid,
        }
    }

    pub fn loss_kind(self) -> LossKind {
        match self {
            OutputActivation::Softmax => LossKind::Ce,
            OutputActivation::Sigmoid => LossKind::Bce,
        }
    }
}

/// Bag-of-words feed-forward network: `dict_size -> hidden1 -> hidden2 -> n_labels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdnnConfig {
    pub dict_size: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub n_labels: usize,
    pub output_activation: OutputActivation,
}

impl Default for FdnnConfig {
    fn default() -> Self {
        Self {
            dict_size: 20_000,
            hidden1: 1024,
            hidden2: 512,
            n_labels: 37,
            output_activation: OutputActivation::Softmax,
        }
    }
}

impl FdnnConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dict_size", self.dict_size),
            ("hidden1", self.hidden1),
            ("hidden2", self.hidden2),
            ("n_labels", self.n_labels),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("fdnn {name} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.dict_size * self.hidden1
            + self.hidden1
            + self.hidden1 * self.hidden2
            + self.hidden2
            + self.hidden2 * self.n_labels
            + self.n_labels
    }
}

/// Word-index convolutional network.
///
/// `vocab_size` counts dictionary words only; the embedding table adds the
/// out-of-vocabulary and padding rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub vocab_size: usize,
    pub seq_len: usize,
    pub emb_dim: usize,
    pub n_kernels: usize,
    pub kernel_width: usize,
    pub n_labels: usize,
    pub output_activation: OutputActivation,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            vocab_size: 20_000,
            seq_len: 400,
            emb_dim: 200,
            n_kernels: 40,
            kernel_width: 16,
            n_labels: 37,
            output_activation: OutputActivation::Sigmoid,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("seq_len", self.seq_len),
            ("emb_dim", self.emb_dim),
            ("n_kernels", self.n_kernels),
            ("kernel_width", self.kernel_width),
            ("n_labels", self.n_labels),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("cnn {name} must be at least 1")));
            }
        }
        if self.kernel_width > self.seq_len {
            return Err(Error::Config(format!(
                "kernel width {} exceeds sequence length {}",
                self.kernel_width, self.seq_len
            )));
        }
        Ok(())
    }

    pub fn flatten_width(&self) -> usize {
        self.n_kernels * self.emb_dim
    }

    pub fn embedding_rows(&self) -> usize {
        self.vocab_size + 2
    }
}

/// Mini-batch Adam with early stopping on validation micro-F1.
///
/// `patience = 0` disables early stopping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Resolution of the per-epoch threshold sweep on validation data.
    pub grid_step: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 32,
            max_epochs: 20,
            patience: 3,
            seed: 0,
            grid_step: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("Adam eps must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if !(self.grid_step > 0.0 && self.grid_step < 1.0) {
            return Err(Error::Config("grid step must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}
