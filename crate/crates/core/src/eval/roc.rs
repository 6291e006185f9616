use serde::{Deserialize, Serialize};

use super::metrics::{check_scored, counts_at, LabelSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub tau: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Micro ROC: one point per threshold, pooling every (document, label) decision.
pub fn roc_curve(scores: &[Vec<f64>], gold: &[LabelSet], grid: &[f64]) -> Result<Vec<RocPoint>> {
    check_scored(scores, gold)?;
    if grid.is_empty() {
        return Err(Error::Validation("empty threshold grid".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Validation(
            "threshold grid must be sorted ascending".into(),
        ));
    }
    Ok(grid
        .iter()
        .map(|&tau| {
            let c = counts_at(scores, gold, tau);
            RocPoint {
                tau,
                tpr: c.tpr(),
                fpr: c.fpr(),
            }
        })
        .collect())
}

/// Trapezoidal area under the curve, integrating over fpr.
pub fn roc_auc(points: &[RocPoint]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}
