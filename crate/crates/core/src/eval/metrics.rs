use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Predicted or gold label positions for one document.
pub type LabelSet = BTreeSet<usize>;

/// Decision counts pooled over every (document, label) pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `2PR / (P + R)`, evaluated as `2tp / (2tp + fp + fn)` so that equal
    /// ratios from different counts give bit-identical values.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn tpr(&self) -> f64 {
        self.recall()
    }

    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }
}

/// `num / den`, with 0/0 defined as 0.
pub fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
}

impl From<ConfusionCounts> for MicroPrf {
    fn from(counts: ConfusionCounts) -> Self {
        Self {
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            counts,
        }
    }
}

fn check_labels(set: &LabelSet, n_labels: usize, what: &str, doc: usize) -> Result<()> {
    match set.iter().next_back() {
        Some(&max) if max >= n_labels => Err(Error::Validation(format!(
            "{what} label {max} of document {doc} outside {n_labels} labels"
        ))),
        _ => Ok(()),
    }
}

/// Micro-averaged precision, recall and F1. Every ratio with a zero denominator is 0.
pub fn micro_prf(pred: &[LabelSet], gold: &[LabelSet], n_labels: usize) -> Result<MicroPrf> {
    if pred.len() != gold.len() {
        return Err(Error::Validation(format!(
            "{} predictions for {} gold label sets",
            pred.len(),
            gold.len()
        )));
    }
    let mut counts = ConfusionCounts::default();
    for (d, (p, g)) in pred.iter().zip(gold).enumerate() {
        check_labels(p, n_labels, "predicted", d)?;
        check_labels(g, n_labels, "gold", d)?;
        let tp = p.intersection(g).count() as u64;
        let fp = p.len() as u64 - tp;
        let fn_ = g.len() as u64 - tp;
        counts.tp += tp;
        counts.fp += fp;
        counts.fn_ += fn_;
        counts.tn += n_labels as u64 - tp - fp - fn_;
    }
    Ok(counts.into())
}

/// Counts when every score strictly above `tau` is a positive decision.
pub(crate) fn counts_at(scores: &[Vec<f64>], gold: &[LabelSet], tau: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for (s, g) in scores.iter().zip(gold) {
        for (i, &v) in s.iter().enumerate() {
            match (v > tau, g.contains(&i)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    c
}

pub(crate) fn check_scored(scores: &[Vec<f64>], gold: &[LabelSet]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::Validation("no scored documents".into()));
    }
    if scores.len() != gold.len() {
        return Err(Error::Validation(format!(
            "{} score vectors for {} gold label sets",
            scores.len(),
            gold.len()
        )));
    }
    let width = scores[0].len();
    for (d, (s, g)) in scores.iter().zip(gold).enumerate() {
        if s.len() != width {
            return Err(Error::Validation(format!(
                "score vector {d} has {} entries, expected {width}",
                s.len()
            )));
        }
        check_labels(g, width, "gold", d)?;
    }
    Ok(())
}
