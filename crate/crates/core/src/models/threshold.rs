use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::{check_scored, counts_at};
use crate::eval::LabelSet;

/// Scores strictly greater than `tau` become predicted labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    tau: f64,
}

impl ThresholdPolicy {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Config(format!("threshold {tau} outside [0, 1]")));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

pub fn decide_labels(scores: &[f64], policy: ThresholdPolicy) -> LabelSet {
    scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > policy.tau)
        .map(|(i, _)| i)
        .collect()
}

/// `0, step, 2 step, ..., 1`. The last point is exactly 1.
pub fn threshold_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::Validation(format!(
            "grid step {step} outside (0, 1)"
        )));
    }
    let n = (1.0 / step).round();
    if ((n * step) - 1.0).abs() < 1e-9 {
        let n = n as usize;
        return Ok((0..=n).map(|i| i as f64 / n as f64).collect());
    }
    let mut grid: Vec<f64> = (0..)
        .map(|i| i as f64 * step)
        .take_while(|&t| t < 1.0)
        .collect();
    grid.push(1.0);
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub best_tau: f64,
    pub best_f1: f64,
    pub table: Vec<SweepRow>,
}

/// Micro-F1 at every grid threshold; the best is the first maximum (smallest tau).
pub fn sweep_threshold(
    scores: &[Vec<f64>],
    gold: &[LabelSet],
    grid_step: f64,
) -> Result<ThresholdSweep> {
    check_scored(scores, gold)?;
    let table: Vec<SweepRow> = threshold_grid(grid_step)?
        .into_iter()
        .map(|tau| {
            let c = counts_at(scores, gold, tau);
            SweepRow {
                tau,
                precision: c.precision(),
                recall: c.recall(),
                f1: c.f1(),
            }
        })
        .collect();
    let best = table.iter().fold(
        table[0],
        |best, row| if row.f1 > best.f1 { *row } else { best },
    );
    Ok(ThresholdSweep {
        best_tau: best.tau,
        best_f1: best.f1,
        table,
    })
}
