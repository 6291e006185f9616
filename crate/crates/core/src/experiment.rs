//! Declarative experiment specs, the trained-classifier wrapper shared by all
//! three architectures, and its checkpoint format.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baseline::{
    fit_tfidf, train_binary_relevance, BinaryRelevanceModel, LogisticConfig, TfidfVectorizer,
};
use crate::corpus::{labels_to_multihot, Document, LabelVocabulary};
use crate::error::{Error, Result};
use crate::eval::LabelSet;
use crate::models::{
    build_cnn, build_fdnn, decide_labels, sweep_threshold, train, Cnn, CnnConfig, Example, Fdnn,
    FdnnConfig, Network, OutputActivation, ThresholdPolicy, TrainConfig, TrainHistory,
};
use crate::text::{bow_indices, tokenize, vectorize_sequence, Dictionary, TokenSequence};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Fdnn,
    Cnn,
    MeBaseline,
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Architecture::Fdnn => "fdnn",
            Architecture::Cnn => "cnn",
            Architecture::MeBaseline => "me_baseline",
        })
    }
}

/// Which documents the dictionary is counted over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryScope {
    /// Training portion of each split only.
    Train,
    /// The whole corpus, for comparisons against published numbers.
    Full,
}

/// Where the acceptance threshold is tuned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSelection {
    /// Held-out slice of the training portion.
    Validation,
    /// The evaluated test fold itself; reproduces threshold tables but leaks.
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdnnSpec {
    pub hidden1: usize,
    pub hidden2: usize,
    pub output_activation: OutputActivation,
}

impl Default for FdnnSpec {
    fn default() -> Self {
        let d = FdnnConfig::default();
        Self {
            hidden1: d.hidden1,
            hidden2: d.hidden2,
            output_activation: d.output_activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnSpec {
    pub seq_len: usize,
    pub emb_dim: usize,
    pub n_kernels: usize,
    pub kernel_width: usize,
    pub output_activation: OutputActivation,
}

impl Default for CnnSpec {
    fn default() -> Self {
        let d = CnnConfig::default();
        Self {
            seq_len: d.seq_len,
            emb_dim: d.emb_dim,
            n_kernels: d.n_kernels,
            kernel_width: d.kernel_width,
            output_activation: d.output_activation,
        }
    }
}

/// Value lists for a grid sweep; every combination of the non-empty lists is run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub dict_size: Vec<usize>,
    pub n_kernels: Vec<usize>,
    pub kernel_width: Vec<usize>,
    pub seq_len: Vec<usize>,
    pub emb_dim: Vec<usize>,
    pub output_activation: Vec<OutputActivation>,
}

impl SweepSpec {
    pub fn is_empty(&self) -> bool {
        self.dict_size.is_empty()
            && self.n_kernels.is_empty()
            && self.kernel_width.is_empty()
            && self.seq_len.is_empty()
            && self.emb_dim.is_empty()
            && self.output_activation.is_empty()
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub name: String,
    pub corpus: PathBuf,
    pub architecture: Architecture,
    /// Dictionary capacity N.
    pub dict_size: usize,
    pub top_n: usize,
    pub k_folds: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Fixed dictionary file; when absent the dictionary is built per split.
    pub dictionary: Option<PathBuf>,
    pub dictionary_scope: DictionaryScope,
    pub threshold_selection: ThresholdSelection,
    /// Share of each training portion held out for threshold selection and early stopping.
    pub valid_fraction: f64,
    /// Fixed acceptance threshold; when set, no threshold is tuned.
    pub tau: Option<f64>,
    pub fdnn: FdnnSpec,
    pub cnn: CnnSpec,
    /// `train.seed` is replaced by a value derived from `seed`.
    pub train: TrainConfig,
    pub baseline: LogisticConfig,
    pub sweep: SweepSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            corpus: PathBuf::new(),
            architecture: Architecture::Fdnn,
            dict_size: 20_000,
            top_n: 37,
            k_folds: 5,
            seed: 0,
            output_dir: None,
            dictionary: None,
            dictionary_scope: DictionaryScope::Train,
            threshold_selection: ThresholdSelection::Validation,
            valid_fraction: 0.1,
            tau: None,
            fdnn: FdnnSpec::default(),
            cnn: CnnSpec::default(),
            train: TrainConfig::default(),
            baseline: LogisticConfig::default(),
            sweep: SweepSpec::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: Self = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Numeric bounds only; paths are checked when used.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("experiment name must not be empty".into()));
        }
        if self.dict_size == 0 || self.top_n == 0 {
            return Err(Error::Config(
                "dict_size and top_n must be at least 1".into(),
            ));
        }
        if self.k_folds < 2 {
            return Err(Error::Config(format!(
                "k_folds must be at least 2, got {}",
                self.k_folds
            )));
        }
        if !(0.0..1.0).contains(&self.valid_fraction) {
            return Err(Error::Config("valid_fraction must lie in [0, 1)".into()));
        }
        if let Some(t) = self.tau {
            ThresholdPolicy::new(t)
                .map_err(|_| Error::Config(format!("tau must lie in [0, 1], got {t}")))?;
        }
        self.train.validate()?;
        self.baseline.validate()?;
        match self.architecture {
            Architecture::Fdnn => self.fdnn_config(self.dict_size, self.top_n).validate(),
            Architecture::Cnn => self.cnn_config(self.dict_size, self.top_n).validate(),
            Architecture::MeBaseline => Ok(()),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn fdnn_config(&self, dict_size: usize, n_labels: usize) -> FdnnConfig {
        FdnnConfig {
            dict_size,
            hidden1: self.fdnn.hidden1,
            hidden2: self.fdnn.hidden2,
            n_labels,
            output_activation: self.fdnn.output_activation,
        }
    }

    pub fn cnn_config(&self, vocab_size: usize, n_labels: usize) -> CnnConfig {
        CnnConfig {
            vocab_size,
            seq_len: self.cnn.seq_len,
            emb_dim: self.cnn.emb_dim,
            n_kernels: self.cnn.n_kernels,
            kernel_width: self.cnn.kernel_width,
            n_labels,
            output_activation: self.cnn.output_activation,
        }
    }

    /// One spec per combination of the sweep lists, each tagged with a
    /// `key=value` description. A spec without sweep lists yields itself.
    pub fn expand_sweep(&self) -> Vec<(String, ExperimentSpec)> {
        let mut out = vec![(String::new(), self.clone())];
        macro_rules! axis {
            ($field:ident, $apply:expr) => {
                if !self.sweep.$field.is_empty() {
                    let mut next = Vec::new();
                    for (tag, spec) in &out {
                        for value in &self.sweep.$field {
                            let mut s: ExperimentSpec = spec.clone();
                            $apply(&mut s, value.clone());
                            let part = format!(
                                "{}={}",
                                stringify!($field),
                                serde_json::to_string(value).unwrap().trim_matches('"')
                            );
                            let tag = if tag.is_empty() {
                                part
                            } else {
                                format!("{tag};{part}")
                            };
                            next.push((tag, s));
                        }
                    }
                    out = next;
                }
            };
        }
        axis!(dict_size, |s: &mut ExperimentSpec, v| s.dict_size = v);
        axis!(n_kernels, |s: &mut ExperimentSpec, v| s.cnn.n_kernels = v);
        axis!(kernel_width, |s: &mut ExperimentSpec, v| s
            .cnn
            .kernel_width =
            v);
        axis!(seq_len, |s: &mut ExperimentSpec, v| s.cnn.seq_len = v);
        axis!(emb_dim, |s: &mut ExperimentSpec, v| s.cnn.emb_dim = v);
        axis!(
            output_activation,
            |s: &mut ExperimentSpec, v: OutputActivation| match s.architecture {
                Architecture::Cnn => s.cnn.output_activation = v,
                _ => s.fdnn.output_activation = v,
            }
        );
        for (_, s) in &mut out {
            s.sweep = SweepSpec::default();
        }
        out
    }
}

/// A tokenized document with its multi-hot target.
#[derive(Debug, Clone)]
pub struct PreparedDoc {
    pub id: String,
    pub tokens: TokenSequence,
    pub target: Vec<f64>,
}

impl PreparedDoc {
    pub fn gold(&self) -> LabelSet {
        self.target
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn prepare(docs: &[Document], labels: &LabelVocabulary) -> Vec<PreparedDoc> {
    docs.par_iter()
        .map(|d| PreparedDoc {
            id: d.id.clone(),
            tokens: tokenize(&d.text),
            target: labels_to_multihot(d, labels),
        })
        .collect()
}

/// Trained parameters of one of the three architectures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelState {
    Fdnn(Fdnn),
    Cnn(Cnn),
    MeBaseline {
        tfidf: TfidfVectorizer,
        model: BinaryRelevanceModel,
    },
}

impl ModelState {
    pub fn architecture(&self) -> Architecture {
        match self {
            ModelState::Fdnn(_) => Architecture::Fdnn,
            ModelState::Cnn(_) => Architecture::Cnn,
            ModelState::MeBaseline { .. } => Architecture::MeBaseline,
        }
    }
}

/// A trained model bundled with the dictionary, label space, and threshold it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub labels: LabelVocabulary,
    pub dictionary: Dictionary,
    pub tau: f64,
    pub state: ModelState,
}

impl Classifier {
    pub fn architecture(&self) -> Architecture {
        self.state.architecture()
    }

    pub fn scores(&self, tokens: &TokenSequence) -> Result<Vec<f64>> {
        match &self.state {
            ModelState::Fdnn(m) => m.predict_scores(&bow_indices(tokens, &self.dictionary)),
            ModelState::Cnn(m) => m.predict_scores(&vectorize_sequence(
                tokens,
                &self.dictionary,
                m.config.seq_len,
            )?),
            ModelState::MeBaseline { tfidf, model } => {
                model.probabilities(&tfidf.transform(tokens, &self.dictionary)?)
            }
        }
    }

    pub fn scores_batch<'a>(
        &self,
        docs: impl IntoParallelIterator<Item = &'a TokenSequence>,
    ) -> Result<Vec<Vec<f64>>> {
        docs.into_par_iter().map(|t| self.scores(t)).collect()
    }

    pub fn predict(&self, tokens: &TokenSequence) -> Result<LabelSet> {
        let scores = self.scores(tokens)?;
        Ok(decide_labels(&scores, ThresholdPolicy::new(self.tau)?))
    }

    pub fn predict_text(&self, text: &str) -> Result<Vec<String>> {
        Ok(self
            .predict(&tokenize(text))?
            .into_iter()
            .filter_map(|i| self.labels.label(i).map(str::to_string))
            .collect())
    }

    pub fn to_checkpoint(&self, name: &str, spec_hash: &str, seed: u64) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            name: name.to_string(),
            architecture: self.architecture(),
            spec_hash: spec_hash.to_string(),
            seed,
            dictionary_hash: self.dictionary.content_hash(),
            labels: self.labels.labels().to_vec(),
            tau: self.tau,
            model: self.state.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint, dictionary: Dictionary) -> Result<Self> {
        ckpt.verify_dictionary(&dictionary)?;
        let labels = LabelVocabulary::from_labels(ckpt.labels)?;
        let n = match &ckpt.model {
            ModelState::Fdnn(m) => m.n_labels(),
            ModelState::Cnn(m) => m.n_labels(),
            ModelState::MeBaseline { model, .. } => model.n_labels(),
        };
        if n != labels.len() {
            return Err(Error::Integrity(format!(
                "model predicts {n} labels but checkpoint lists {}",
                labels.len()
            )));
        }
        Ok(Self {
            labels,
            dictionary,
            tau: ckpt.tau,
            state: ckpt.model,
        })
    }
}

/// On-disk form of a [`Classifier`]. The dictionary is referenced by hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub name: String,
    pub architecture: Architecture,
    pub spec_hash: String,
    pub seed: u64,
    pub dictionary_hash: String,
    pub labels: Vec<String>,
    pub tau: f64,
    pub model: ModelState,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(self)?)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let ckpt: Self = serde_json::from_slice(bytes)?;
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(Error::Integrity(format!(
                "unsupported checkpoint version {}",
                ckpt.format_version
            )));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn verify_dictionary(&self, dictionary: &Dictionary) -> Result<()> {
        let actual = dictionary.content_hash();
        if actual != self.dictionary_hash {
            return Err(Error::Integrity(format!(
                "dictionary hash {actual} does not match checkpoint {}",
                self.dictionary_hash
            )));
        }
        Ok(())
    }
}

/// Outcome of fitting one classifier.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub classifier: Classifier,
    pub history: Option<TrainHistory>,
}

/// Train the spec's architecture on `fit`, tuning the threshold on `valid`
/// (or on `fit` when `valid` is empty). `seed` drives initialization and shuffling.
pub fn fit_classifier(
    spec: &ExperimentSpec,
    labels: &LabelVocabulary,
    dictionary: &Dictionary,
    fit: &[&PreparedDoc],
    valid: &[&PreparedDoc],
    seed: u64,
) -> Result<Fitted> {
    if fit.is_empty() {
        return Err(Error::Validation("no training documents".into()));
    }
    let n_labels = labels.len();
    let tcfg = TrainConfig {
        seed: seed.wrapping_add(1),
        ..spec.train.clone()
    };
    let monitor = if valid.is_empty() { fit } else { valid };
    let (state, history) = match spec.architecture {
        Architecture::Fdnn => {
            let encode = |d: &&PreparedDoc| Example {
                input: bow_indices(&d.tokens, dictionary),
                target: d.target.clone(),
            };
            let cfg = spec.fdnn_config(dictionary.word_count(), n_labels);
            let (model, history) = train(
                build_fdnn(&cfg, seed)?,
                &fit.iter().map(encode).collect::<Vec<_>>(),
                &valid.iter().map(encode).collect::<Vec<_>>(),
                &tcfg,
            )?;
            (ModelState::Fdnn(model), Some(history))
        }
        Architecture::Cnn => {
            let cfg = spec.cnn_config(dictionary.word_count(), n_labels);
            cfg.validate()?;
            let encode = |d: &&PreparedDoc| -> Result<Example<Vec<usize>>> {
                Ok(Example {
                    input: vectorize_sequence(&d.tokens, dictionary, cfg.seq_len)?,
                    target: d.target.clone(),
                })
            };
            let train_set = fit.iter().map(encode).collect::<Result<Vec<_>>>()?;
            let valid_set = valid.iter().map(encode).collect::<Result<Vec<_>>>()?;
            let (model, history) = train(build_cnn(&cfg, seed)?, &train_set, &valid_set, &tcfg)?;
            (ModelState::Cnn(model), Some(history))
        }
        Architecture::MeBaseline => {
            let tfidf = fit_tfidf(fit.iter().map(|d| &d.tokens), dictionary)?;
            let features = fit
                .iter()
                .map(|d| tfidf.transform(&d.tokens, dictionary))
                .collect::<Result<Vec<_>>>()?;
            let targets: Vec<Vec<f64>> = fit.iter().map(|d| d.target.clone()).collect();
            let model = train_binary_relevance(&features, &targets, &spec.baseline)?;
            (ModelState::MeBaseline { tfidf, model }, None)
        }
    };
    let mut classifier = Classifier {
        labels: labels.clone(),
        dictionary: dictionary.clone(),
        tau: 0.5,
        state,
    };
    if let Some(t) = spec.tau {
        classifier.tau = t;
    } else if classifier.architecture() != Architecture::MeBaseline {
        let scores = classifier.scores_batch(monitor.par_iter().map(|d| &d.tokens))?;
        let gold: Vec<LabelSet> = monitor.iter().map(|d| d.gold()).collect();
        classifier.tau = sweep_threshold(&scores, &gold, spec.train.grid_step)?.best_tau;
    }
    Ok(Fitted {
        classifier,
        history,
    })
}
