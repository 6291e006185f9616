use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{output_loss, CnnConfig, Network, OutputActivation};
use crate::error::{Error, Result};
use crate::nn::{ConvMaxPoolLayer, DenseLayer, EmbeddingLayer, Matrix, Parameters};

/// Embedding, per-channel 1-D convolution with max-pooling over time, and a
/// dense output layer over the flattened `n_kernels x emb_dim` pooled features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cnn {
    pub config: CnnConfig,
    pub embedding: EmbeddingLayer,
    pub conv: ConvMaxPoolLayer,
    pub output: DenseLayer,
}

pub fn build_cnn(config: &CnnConfig, seed: u64) -> Result<Cnn> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Cnn {
        embedding: EmbeddingLayer::init(config.embedding_rows(), config.emb_dim, &mut rng),
        conv: ConvMaxPoolLayer::init(config.n_kernels, config.kernel_width, &mut rng),
        output: DenseLayer::init(
            config.flatten_width(),
            config.n_labels,
            config.output_activation.activation(),
            &mut rng,
        ),
        config: config.clone(),
    })
}

impl Cnn {
    fn check_len(&self, input: &[usize]) -> Result<()> {
        if input.len() != self.config.seq_len {
            return Err(Error::Shape(format!(
                "cnn expects sequences of {} indexes, got {}",
                self.config.seq_len,
                input.len()
            )));
        }
        Ok(())
    }
}

impl Parameters for Cnn {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut v = self.embedding.param_slices();
        v.extend(self.conv.param_slices());
        v.extend(self.output.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.embedding.param_slices_mut();
        v.extend(self.conv.param_slices_mut());
        v.extend(self.output.param_slices_mut());
        v
    }
}

impl Network for Cnn {
    type Input = Vec<usize>;

    fn n_labels(&self) -> usize {
        self.config.n_labels
    }

    fn output_activation(&self) -> OutputActivation {
        self.config.output_activation
    }

    fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            embedding: self.embedding.zeros_like(),
            conv: self.conv.zeros_like(),
            output: self.output.zeros_like(),
        }
    }

    fn predict_scores(&self, input: &Vec<usize>) -> Result<Vec<f64>> {
        self.check_len(input)?;
        let x = self.embedding.forward(input)?;
        let (pooled, _) = self.conv.forward(&x)?;
        Ok(self.output.forward(&pooled)?.0)
    }

    fn accumulate_gradients(
        &self,
        input: &Vec<usize>,
        target: &[f64],
        grad: &mut Self,
    ) -> Result<f64> {
        self.check_len(input)?;
        let x = self.embedding.forward(input)?;
        let (pooled, conv_cache) = self.conv.forward(&x)?;
        let (y, out_cache) = self.output.forward(&pooled)?;
        let (value, dy) = output_loss(self.config.output_activation, &y, target)?;
        let dpooled = self
            .output
            .backward_into(&out_cache, &dy, &mut grad.output, true)?
            .expect("dx");
        let dx: Matrix = self
            .conv
            .backward_into(&conv_cache, &dpooled, &mut grad.conv)?;
        self.embedding
            .backward_into(input, &dx, &mut grad.embedding)?;
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_flatten_width() {
        let cfg = CnnConfig::default();
        assert_eq!(cfg.flatten_width(), 8000);
        assert_eq!(
            (cfg.seq_len, cfg.emb_dim, cfg.n_kernels, cfg.kernel_width),
            (400, 200, 40, 16)
        );
    }

    #[test]
    fn degenerate_single_position() {
        let cfg = CnnConfig {
            vocab_size: 3,
            seq_len: 1,
            emb_dim: 2,
            n_kernels: 2,
            kernel_width: 1,
            n_labels: 2,
            ..CnnConfig::default()
        };
        let model = build_cnn(&cfg, 0).unwrap();
        let s = model.predict_scores(&vec![4]).unwrap();
        assert!(s.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn kernel_wider_than_sequence() {
        let cfg = CnnConfig {
            seq_len: 40,
            kernel_width: 41,
            ..CnnConfig::default()
        };
        assert!(matches!(build_cnn(&cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn wrong_length_and_index() {
        let cfg = CnnConfig {
            vocab_size: 3,
            seq_len: 4,
            emb_dim: 2,
            n_kernels: 1,
            kernel_width: 2,
            n_labels: 2,
            ..CnnConfig::default()
        };
        let model = build_cnn(&cfg, 0).unwrap();
        assert!(matches!(
            model.predict_scores(&vec![0, 1]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            model.predict_scores(&vec![0, 1, 2, 5]),
            Err(Error::Index(_))
        ));
    }
}
