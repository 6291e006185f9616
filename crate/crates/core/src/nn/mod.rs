//! A small dense-tensor network engine: the layers the two architectures need,
//! their exact backward passes, losses, Adam, and a finite-difference checker.
//!
//! All values are `f64`. Layers follow the same pattern: `forward` returns the
//! output together with a cache, and `backward_into` accumulates parameter
//! gradients into a same-shaped layer used as a gradient buffer.

mod activation;
mod adam;
mod conv;
mod dense;
mod embedding;
mod gradcheck;
mod loss;
mod matrix;

pub use activation::{relu, sigmoid, softmax, Activation};
pub use adam::{adam_step, Adam, AdamConfig, AdamState};
pub use conv::{ConvCache, ConvGradients, ConvMaxPoolLayer};
pub use dense::{DenseCache, DenseGradients, DenseLayer, LayerInput};
pub use embedding::EmbeddingLayer;
pub use gradcheck::{gradient_check, relative_error, GRADCHECK_FLOOR};
pub use loss::{loss, LossKind, PROB_CLAMP};
pub use matrix::Matrix;

/// Anything that owns trainable parameters as a fixed sequence of flat slices.
pub trait Parameters {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    fn flat_params(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    /// Panics if `flat` does not hold exactly `param_count()` values.
    fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut offset = 0;
        for s in self.param_slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
    }

    fn zero_params(&mut self) {
        for s in self.param_slices_mut() {
            s.fill(0.0);
        }
    }

    fn all_finite(&self) -> bool {
        self.param_slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}
