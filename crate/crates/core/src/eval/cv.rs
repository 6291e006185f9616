use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{micro_prf, LabelSet};
use crate::corpus::{build_label_vocabulary, holdout_split, Document, FoldPlan};
use crate::error::{Error, Result};
use crate::experiment::{
    fit_classifier, prepare, Architecture, Classifier, DictionaryScope, ExperimentSpec,
    PreparedDoc, ThresholdSelection,
};
use crate::models::{decide_labels, sweep_threshold, ThresholdPolicy, TrainHistory};
use crate::text::{build_dictionary, Dictionary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (divides by `k - 1`).
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub name: String,
    pub architecture: Architecture,
    pub spec_hash: String,
    pub seed: u64,
    pub k: usize,
    /// Always "micro": counts pooled over (document, label) pairs.
    pub averaging: String,
    pub n_labels: usize,
    pub n_documents: usize,
    pub n_excluded: usize,
    pub folds: Vec<FoldResult>,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub tau: MeanStd,
}

/// Everything produced for one fold.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub result: FoldResult,
    pub classifier: Option<Classifier>,
    pub history: Option<TrainHistory>,
    pub test_scores: Vec<Vec<f64>>,
    pub test_gold: Vec<LabelSet>,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: CvReport,
    pub folds: Vec<FoldOutcome>,
}

impl CvOutcome {
    /// Test scores and gold sets of all folds, concatenated in fold order.
    pub fn pooled_test(&self) -> (Vec<Vec<f64>>, Vec<LabelSet>) {
        let scores = self
            .folds
            .iter()
            .flat_map(|f| f.test_scores.iter().cloned())
            .collect();
        let gold = self
            .folds
            .iter()
            .flat_map(|f| f.test_gold.iter().cloned())
            .collect();
        (scores, gold)
    }
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_add(1000 * (fold as u64 + 1))
}

/// Run every fold of `plan`: the dictionary and model are fitted on the
/// training portion, the threshold is tuned per `spec.threshold_selection`,
/// and metrics are measured on the fold's test documents. Folds run in
/// parallel and are reported in fold order.
pub fn cross_validate(
    spec: &ExperimentSpec,
    corpus: &[Document],
    plan: &FoldPlan,
    fixed_dictionary: Option<&Dictionary>,
    keep_models: bool,
) -> Result<CvOutcome> {
    spec.validate()?;
    let labels = build_label_vocabulary(corpus, spec.top_n)?;
    let docs = labels.restrict(corpus);
    let n_excluded = corpus.len() - docs.len();
    let prepared = prepare(&docs, &labels);
    let full_dictionary = match (fixed_dictionary, spec.dictionary_scope) {
        (Some(_), _) => None,
        (None, DictionaryScope::Full) => Some(build_dictionary(
            prepared.iter().map(|d| &d.tokens),
            spec.dict_size,
        )?),
        (None, DictionaryScope::Train) => None,
    };

    let folds = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            run_fold(
                spec,
                &labels,
                &docs,
                &prepared,
                plan,
                fold,
                fixed_dictionary.or(full_dictionary.as_ref()),
                keep_models,
            )
            .map_err(|e| match e {
                Error::Training(msg) => Error::Training(format!("fold {fold}: {msg}")),
                Error::Validation(msg) => Error::Validation(format!("fold {fold}: {msg}")),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let results: Vec<FoldResult> = folds.iter().map(|f| f.result).collect();
    let stat =
        |get: fn(&FoldResult) -> f64| MeanStd::of(&results.iter().map(get).collect::<Vec<_>>());
    let report = CvReport {
        name: spec.name.clone(),
        architecture: spec.architecture,
        spec_hash: spec.hash(),
        seed: spec.seed,
        k: plan.k,
        averaging: "micro".into(),
        n_labels: labels.len(),
        n_documents: docs.len(),
        n_excluded,
        precision: stat(|r| r.precision),
        recall: stat(|r| r.recall),
        f1: stat(|r| r.f1),
        tau: stat(|r| r.tau),
        folds: results,
    };
    Ok(CvOutcome { report, folds })
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    spec: &ExperimentSpec,
    labels: &crate::corpus::LabelVocabulary,
    docs: &[Document],
    prepared: &[PreparedDoc],
    plan: &FoldPlan,
    fold: usize,
    dictionary: Option<&Dictionary>,
    keep_models: bool,
) -> Result<FoldOutcome> {
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        match plan.fold_of(&d.id) {
            Some(f) if f == fold => test_idx.push(i),
            Some(_) => train_idx.push(i),
            None => {
                return Err(Error::Validation(format!(
                    "document {:?} is not covered by the fold plan",
                    d.id
                )))
            }
        }
    }
    if test_idx.is_empty() || train_idx.is_empty() {
        return Err(Error::Validation("empty train or test portion".into()));
    }
    let seed = fold_seed(spec.seed, fold);
    let (fit_idx, valid_idx) = holdout_split(&train_idx, spec.valid_fraction, seed.wrapping_add(2));
    let fit: Vec<&PreparedDoc> = fit_idx.iter().map(|&i| &prepared[i]).collect();
    let valid: Vec<&PreparedDoc> = valid_idx.iter().map(|&i| &prepared[i]).collect();
    let test: Vec<&PreparedDoc> = test_idx.iter().map(|&i| &prepared[i]).collect();

    let built;
    let dictionary = match dictionary {
        Some(d) => d,
        None => {
            built = build_dictionary(
                train_idx.iter().map(|&i| &prepared[i].tokens),
                spec.dict_size,
            )?;
            &built
        }
    };

    let fitted = fit_classifier(spec, labels, dictionary, &fit, &valid, seed)?;
    let mut classifier = fitted.classifier;
    let test_scores = classifier.scores_batch(test.par_iter().map(|d| &d.tokens))?;
    let test_gold: Vec<LabelSet> = test.iter().map(|d| d.gold()).collect();
    if spec.tau.is_none()
        && spec.threshold_selection == ThresholdSelection::Test
        && classifier.architecture() != Architecture::MeBaseline
    {
        classifier.tau = sweep_threshold(&test_scores, &test_gold, spec.train.grid_step)?.best_tau;
    }
    let policy = ThresholdPolicy::new(classifier.tau)?;
    let pred: Vec<LabelSet> = test_scores
        .iter()
        .map(|s| decide_labels(s, policy))
        .collect();
    let m = micro_prf(&pred, &test_gold, labels.len())?;
    Ok(FoldOutcome {
        result: FoldResult {
            fold,
            n_train: fit.len(),
            n_valid: valid.len(),
            n_test: test.len(),
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            tau: classifier.tau,
        },
        classifier: keep_models.then_some(classifier),
        history: fitted.history,
        test_scores,
        test_gold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std() {
        let s = MeanStd::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanStd::of(&[0.7]).std, 0.0);
    }
}
