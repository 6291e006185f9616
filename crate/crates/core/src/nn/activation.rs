use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    Softmax,
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

#[inline]
fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| sigmoid_scalar(v)).collect()
}

/// Max-subtracted softmax.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl Activation {
    pub fn apply(self, pre: &[f64]) -> Vec<f64> {
        match self {
            Activation::Identity => pre.to_vec(),
            Activation::Relu => relu(pre),
            Activation::Sigmoid => sigmoid(pre),
            Activation::Softmax => softmax(pre),
        }
    }

    /// Gradient with respect to the pre-activation, given the forward output and `dy`.
    pub fn backward(self, pre: &[f64], out: &[f64], dy: &[f64]) -> Vec<f64> {
        match self {
            Activation::Identity => dy.to_vec(),
            Activation::Relu => pre
                .iter()
                .zip(dy)
                .map(|(&z, &g)| if z > 0.0 { g } else { 0.0 })
                .collect(),
            Activation::Sigmoid => out
                .iter()
                .zip(dy)
                .map(|(&s, &g)| g * s * (1.0 - s))
                .collect(),
            Activation::Softmax => {
                let dot: f64 = out.iter().zip(dy).map(|(s, g)| s * g).sum();
                out.iter().zip(dy).map(|(&s, &g)| s * (g - dot)).collect()
            }
        }
    }
}
