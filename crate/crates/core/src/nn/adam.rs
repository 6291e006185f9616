use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

/// One bias-corrected Adam update, elementwise.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    hyper: &AdamConfig,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(shape_err!(
            "{} parameters but {} gradients",
            params.len(),
            grads.len()
        ));
    }
    if state.m.is_empty() && state.v.is_empty() {
        state.m = vec![0.0; params.len()];
        state.v = vec![0.0; params.len()];
    }
    if state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(shape_err!(
            "optimizer state does not match parameter length"
        ));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - hyper.beta1.powi(t);
    let c2 = 1.0 - hyper.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
    }
    Ok(())
}

/// Adam over a fixed list of parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    pub hyper: AdamConfig,
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new(hyper: AdamConfig) -> Self {
        Self {
            hyper,
            states: Vec::new(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) -> Result<()> {
        if params.len() != grads.len() {
            return Err(shape_err!(
                "{} tensors but {} gradients",
                params.len(),
                grads.len()
            ));
        }
        if self.states.is_empty() {
            self.states = vec![AdamState::default(); params.len()];
        } else if self.states.len() != params.len() {
            return Err(shape_err!(
                "optimizer was built for {} tensors",
                self.states.len()
            ));
        }
        for ((p, g), s) in params.into_iter().zip(grads).zip(&mut self.states) {
            adam_step(p, g, s, &self.hyper)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let hyper = AdamConfig::default();
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState {
            m: vec![0.5, 0.5],
            v: vec![0.25, 0.25],
            t: 3,
        };
        let before = p.clone();
        // moments decay, and with non-zero m the parameters do move
        adam_step(&mut p, &[0.0, 0.0], &mut s, &hyper).unwrap();
        assert!((s.m[0] - 0.45).abs() < 1e-15);
        assert!((s.v[0] - 0.25 * 0.999).abs() < 1e-15);
        assert_ne!(p, before);

        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::default();
        adam_step(&mut p, &[0.0, 0.0], &mut s, &hyper).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.m, vec![0.0, 0.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![0.0];
        let mut s = AdamState::default();
        adam_step(&mut p, &[1.0], &mut s, &AdamConfig::default()).unwrap();
        assert!((p[0] + 0.001).abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut opt = Adam::new(AdamConfig::default());
            let mut a = vec![0.3, -0.1, 2.0];
            let mut b = vec![1.0f64];
            for k in 0..50 {
                let ga: Vec<f64> = a.iter().map(|x| 2.0 * x + k as f64 * 0.01).collect();
                let gb = vec![b[0].sin()];
                opt.step(vec![&mut a, &mut b], vec![&ga, &gb]).unwrap();
            }
            (a, b)
        };
        let (a1, b1) = run();
        let (a2, b2) = run();
        assert_eq!(
            a1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            a2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(b1[0].to_bits(), b2[0].to_bits());
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::default();
        assert!(adam_step(&mut [0.0, 1.0], &[1.0], &mut s, &AdamConfig::default()).is_err());
    }
}
