//! Micro-averaged metrics, ROC curves, and cross-validation.

pub mod metrics;
mod roc;

pub use metrics::{micro_prf, ConfusionCounts, LabelSet, MicroPrf};
pub use roc::{roc_auc, roc_curve, RocPoint};
mod cv;

pub use cv::{cross_validate, CvOutcome, CvReport, FoldOutcome, FoldResult, MeanStd};
