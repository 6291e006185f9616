use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{output_loss, FdnnConfig, Network, OutputActivation};
use crate::error::Result;
use crate::nn::{Activation, DenseLayer, Parameters};
use crate::text::BowVector;

/// Two ReLU hidden layers over a binary bag-of-words input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fdnn {
    pub config: FdnnConfig,
    pub hidden1: DenseLayer,
    pub hidden2: DenseLayer,
    pub output: DenseLayer,
}

pub fn build_fdnn(config: &FdnnConfig, seed: u64) -> Result<Fdnn> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Fdnn {
        hidden1: DenseLayer::init(config.dict_size, config.hidden1, Activation::Relu, &mut rng),
        hidden2: DenseLayer::init(config.hidden1, config.hidden2, Activation::Relu, &mut rng),
        output: DenseLayer::init(
            config.hidden2,
            config.n_labels,
            config.output_activation.activation(),
            &mut rng,
        ),
        config: config.clone(),
    })
}

impl Parameters for Fdnn {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut v = self.hidden1.param_slices();
        v.extend(self.hidden2.param_slices());
        v.extend(self.output.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.hidden1.param_slices_mut();
        v.extend(self.hidden2.param_slices_mut());
        v.extend(self.output.param_slices_mut());
        v
    }
}

impl Network for Fdnn {
    type Input = BowVector;

    fn n_labels(&self) -> usize {
        self.config.n_labels
    }

    fn output_activation(&self) -> OutputActivation {
        self.config.output_activation
    }

    fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            hidden1: self.hidden1.zeros_like(),
            hidden2: self.hidden2.zeros_like(),
            output: self.output.zeros_like(),
        }
    }

    fn predict_scores(&self, input: &BowVector) -> Result<Vec<f64>> {
        let (h1, _) = self.hidden1.forward_sparse(&input.active)?;
        let (h2, _) = self.hidden2.forward(&h1)?;
        Ok(self.output.forward(&h2)?.0)
    }

    fn accumulate_gradients(
        &self,
        input: &BowVector,
        target: &[f64],
        grad: &mut Self,
    ) -> Result<f64> {
        let (h1, c1) = self.hidden1.forward_sparse(&input.active)?;
        let (h2, c2) = self.hidden2.forward(&h1)?;
        let (y, c3) = self.output.forward(&h2)?;
        let (value, dy) = output_loss(self.config.output_activation, &y, target)?;
        let d2 = self
            .output
            .backward_into(&c3, &dy, &mut grad.output, true)?
            .expect("dx");
        let d1 = self
            .hidden2
            .backward_into(&c2, &d2, &mut grad.hidden2, true)?
            .expect("dx");
        self.hidden1
            .backward_into(&c1, &d1, &mut grad.hidden1, false)?;
        Ok(value)
    }
}
