use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sweep_threshold, Network, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::LabelSet;
use crate::nn::Adam;

/// One training or validation example: encoded input and multi-hot target.
#[derive(Debug, Clone)]
pub struct Example<I> {
    pub input: I,
    pub target: Vec<f64>,
}

impl<I> Example<I> {
    pub fn gold(&self) -> LabelSet {
        self.target
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-example training loss.
    pub loss: f64,
    pub val_f1: f64,
    pub val_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept; `None` when no epoch ran.
    pub best_epoch: Option<usize>,
    pub best_tau: Option<f64>,
    pub best_f1: Option<f64>,
}

/// Scores for many inputs; parallel over inputs, results in input order.
pub fn predict_all<N: Network>(model: &N, inputs: &[&N::Input]) -> Result<Vec<Vec<f64>>> {
    inputs.par_iter().map(|x| model.predict_scores(x)).collect()
}

/// Mini-batch Adam. After every epoch the threshold is swept on `valid`
/// (or on `train` when `valid` is empty) and the parameters of the epoch with
/// the best micro-F1 are restored at the end.
pub fn train<N: Network>(
    mut model: N,
    train: &[Example<N::Input>],
    valid: &[Example<N::Input>],
    cfg: &TrainConfig,
) -> Result<(N, TrainHistory)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Validation("empty training set".into()));
    }
    for ex in train.iter().chain(valid) {
        if ex.target.len() != model.n_labels() {
            return Err(Error::Shape(format!(
                "target of {} labels for a {}-label model",
                ex.target.len(),
                model.n_labels()
            )));
        }
    }
    let monitor = if valid.is_empty() { train } else { valid };
    let monitor_inputs: Vec<&N::Input> = monitor.iter().map(|e| &e.input).collect();
    let monitor_gold: Vec<LabelSet> = monitor.iter().map(Example::gold).collect();

    let mut history = TrainHistory::default();
    let mut best: Option<N> = None;
    let mut best_f1 = f64::NEG_INFINITY;
    let mut since_best = 0usize;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut optimizer = Adam::new(cfg.adam());
    let mut grad = model.zeros_like();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            grad.zero_params();
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss +=
                    model.accumulate_gradients(&train[i].input, &train[i].target, &mut grad)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss at epoch {epoch}, batch {b}"
                )));
            }
            epoch_loss += batch_loss;
            let scale = 1.0 / batch.len() as f64;
            for s in grad.param_slices_mut() {
                s.iter_mut().for_each(|g| *g *= scale);
            }
            optimizer.step(model.param_slices_mut(), grad.param_slices())?;
            if !model.all_finite() {
                return Err(Error::Training(format!(
                    "non-finite parameters after epoch {epoch}, batch {b}"
                )));
            }
        }

        let scores = predict_all(&model, &monitor_inputs)?;
        let sweep = sweep_threshold(&scores, &monitor_gold, cfg.grid_step)?;
        history.epochs.push(EpochRecord {
            epoch,
            loss: epoch_loss / train.len() as f64,
            val_f1: sweep.best_f1,
            val_tau: sweep.best_tau,
        });
        if sweep.best_f1 > best_f1 {
            best_f1 = sweep.best_f1;
            best = Some(model.clone());
            history.best_epoch = Some(epoch);
            history.best_tau = Some(sweep.best_tau);
            history.best_f1 = Some(sweep.best_f1);
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.patience > 0 && since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok((best.unwrap_or(model), history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_cnn, build_fdnn, CnnConfig, FdnnConfig, OutputActivation};
    use crate::text::BowVector;

    /// Label 0 iff word 0 present, label 1 iff word 1 present; other words are noise.
    fn separable(n: usize) -> Vec<Example<BowVector>> {
        (0..n)
            .map(|i| {
                let l0 = i % 2 == 0;
                let l1 = i % 3 == 0 || !l0;
                let mut active = vec![2 + i % 4];
                if l0 {
                    active.push(0);
                }
                if l1 {
                    active.push(1);
                }
                active.sort_unstable();
                Example {
                    input: BowVector { width: 6, active },
                    target: vec![f64::from(l0 as u8), f64::from(l1 as u8)],
                }
            })
            .collect()
    }

    fn small_fdnn(act: OutputActivation) -> crate::models::Fdnn {
        build_fdnn(
            &FdnnConfig {
                dict_size: 6,
                hidden1: 8,
                hidden2: 6,
                n_labels: 2,
                output_activation: act,
            },
            3,
        )
        .unwrap()
    }

    #[test]
    fn separable_toy_problem_is_learned() {
        let data = separable(24);
        let cfg = TrainConfig {
            lr: 0.01,
            batch_size: 4,
            max_epochs: 60,
            patience: 0,
            ..TrainConfig::default()
        };
        let (model, history) =
            train(small_fdnn(OutputActivation::Sigmoid), &data, &[], &cfg).unwrap();
        let losses: Vec<f64> = history.epochs.iter().map(|e| e.loss).collect();
        for w in losses[..5].windows(2) {
            assert!(w[1] < w[0], "loss did not decrease: {losses:?}");
        }
        assert_eq!(history.best_f1, Some(1.0));
        let inputs: Vec<&BowVector> = data.iter().map(|e| &e.input).collect();
        let scores = predict_all(&model, &inputs).unwrap();
        let gold: Vec<LabelSet> = data.iter().map(Example::gold).collect();
        let sweep = sweep_threshold(&scores, &gold, 0.01).unwrap();
        assert_eq!(sweep.best_f1, 1.0);
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let model = small_fdnn(OutputActivation::Softmax);
        let cfg = TrainConfig {
            max_epochs: 0,
            patience: 0,
            ..TrainConfig::default()
        };
        let (trained, history) = train(model.clone(), &separable(8), &[], &cfg).unwrap();
        assert_eq!(trained, model);
        assert!(history.epochs.is_empty());
        assert_eq!(history.best_epoch, None);
    }

    #[test]
    fn identical_seeds_identical_history() {
        let data = separable(20);
        let cfg = TrainConfig {
            max_epochs: 4,
            batch_size: 3,
            ..TrainConfig::default()
        };
        let (m1, h1) = train(
            small_fdnn(OutputActivation::Softmax),
            &data,
            &data[..6],
            &cfg,
        )
        .unwrap();
        let (m2, h2) = train(
            small_fdnn(OutputActivation::Softmax),
            &data,
            &data[..6],
            &cfg,
        )
        .unwrap();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn cnn_trains_on_signature_word() {
        // label 0 iff index 1 occurs anywhere in the sequence
        let data: Vec<Example<Vec<usize>>> = (0..30)
            .map(|i| {
                let mut seq = vec![2 + i % 3, 3, 4 - i % 2, 5, 6];
                let positive = i % 2 == 0;
                if positive {
                    seq[i % 5] = 1;
                }
                Example {
                    input: seq,
                    target: vec![f64::from(positive as u8), 1.0 - f64::from(positive as u8)],
                }
            })
            .collect();
        let model = build_cnn(
            &CnnConfig {
                vocab_size: 6,
                seq_len: 5,
                emb_dim: 3,
                n_kernels: 2,
                kernel_width: 2,
                n_labels: 2,
                output_activation: OutputActivation::Sigmoid,
            },
            1,
        )
        .unwrap();
        let cfg = TrainConfig {
            lr: 0.02,
            batch_size: 5,
            max_epochs: 80,
            patience: 0,
            ..TrainConfig::default()
        };
        let (_, history) = train(model, &data, &[], &cfg).unwrap();
        assert_eq!(history.best_f1, Some(1.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = TrainConfig::default();
        assert!(train(small_fdnn(OutputActivation::Sigmoid), &[], &[], &cfg).is_err());
        let bad = vec![Example {
            input: BowVector {
                width: 6,
                active: vec![0],
            },
            target: vec![1.0],
        }];
        assert!(matches!(
            train(small_fdnn(OutputActivation::Sigmoid), &bad, &[], &cfg),
            Err(Error::Shape(_))
        ));
    }
}
