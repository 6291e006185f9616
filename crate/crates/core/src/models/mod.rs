//! The two network architectures, thresholding of their scores, and training.

mod cnn;
mod config;
mod fdnn;
mod threshold;
mod train;

pub use cnn::{build_cnn, Cnn};
pub use config::{CnnConfig, FdnnConfig, OutputActivation, TrainConfig};
pub use fdnn::{build_fdnn, Fdnn};
pub use threshold::{
    decide_labels, sweep_threshold, threshold_grid, SweepRow, ThresholdPolicy, ThresholdSweep,
};
pub use train::{train, EpochRecord, Example, TrainHistory};

use crate::error::Result;
use crate::nn::{loss, LossKind, Parameters};

/// A trainable network mapping one input to a score per label.
pub trait Network: Parameters + Clone + Send + Sync {
    type Input: Sync;

    fn n_labels(&self) -> usize;

    fn output_activation(&self) -> OutputActivation;

    /// A same-shaped copy with every parameter zero, used as a gradient buffer.
    fn zeros_like(&self) -> Self;

    fn predict_scores(&self, input: &Self::Input) -> Result<Vec<f64>>;

    /// Loss on one example; parameter gradients are added into `grad`.
    fn accumulate_gradients(
        &self,
        input: &Self::Input,
        target: &[f64],
        grad: &mut Self,
    ) -> Result<f64>;
}

/// Loss value and gradient for an output layer, pairing sigmoid with binary
/// cross-entropy and softmax with cross-entropy against the normalized target.
pub(crate) fn output_loss(
    act: OutputActivation,
    scores: &[f64],
    target: &[f64],
) -> Result<(f64, Vec<f64>)> {
    match act {
        OutputActivation::Sigmoid => loss(LossKind::Bce, scores, target),
        OutputActivation::Softmax => {
            let total: f64 = target.iter().sum();
            if total > 0.0 {
                let dist: Vec<f64> = target.iter().map(|t| t / total).collect();
                loss(LossKind::Ce, scores, &dist)
            } else {
                loss(LossKind::Ce, scores, target)
            }
        }
    }
}
