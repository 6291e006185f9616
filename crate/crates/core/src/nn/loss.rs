use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};

/// Probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Per-label binary cross-entropy, for sigmoid outputs.
    Bce,
    /// Categorical cross-entropy against a target distribution, for softmax outputs.
    Ce,
}

/// Loss value and its gradient with respect to `scores`.
///
/// The gradient is that of the clamped expression, so it vanishes where a
/// score lies outside the clamp interval.
pub fn loss(kind: LossKind, scores: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if scores.len() != target.len() {
        return Err(shape_err!(
            "{} scores against {} targets",
            scores.len(),
            target.len()
        ));
    }
    let lo = PROB_CLAMP;
    let hi = 1.0 - PROB_CLAMP;
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(scores.len());
    for (&s, &t) in scores.iter().zip(target) {
        let inside = s > lo && s < hi;
        let c = s.clamp(lo, hi);
        match kind {
            LossKind::Bce => {
                value -= t * c.ln() + (1.0 - t) * (1.0 - c).ln();
                grad.push(if inside {
                    -t / c + (1.0 - t) / (1.0 - c)
                } else {
                    0.0
                });
            }
            LossKind::Ce => {
                value -= t * c.ln();
                grad.push(if inside { -t / c } else { 0.0 });
            }
        }
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradient_check;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn examples() {
        let (v, _) = loss(LossKind::Bce, &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(v.abs() < 1e-11);
        let (v, _) = loss(LossKind::Ce, &[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert!(loss(LossKind::Ce, &[0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for kind in [LossKind::Bce, LossKind::Ce] {
            for _ in 0..10 {
                let s: Vec<f64> = (0..6).map(|_| rng.random_range(0.05..0.95)).collect();
                let t: Vec<f64> = (0..6)
                    .map(|_| f64::from(rng.random_range(0..2u8)))
                    .collect();
                let (_, g) = loss(kind, &s, &t).unwrap();
                let err = gradient_check(|p| loss(kind, p, &t).unwrap().0, &s, &g, 1e-5);
                assert!(err < 1e-6, "{kind:?}: {err}");
            }
        }
    }
}
