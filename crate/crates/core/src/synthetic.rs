//! Seeded synthetic corpora with planted label signals, for end-to-end checks.
//!
//! Each label owns a handful of signature words; a document mentions a few
//! signature words of each of its labels, buried in uniformly drawn noise words.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_docs: usize,
    /// Total distinct words, signature words included.
    pub vocab_size: usize,
    pub n_labels: usize,
    pub signature_words: usize,
    pub min_labels: usize,
    pub max_labels: usize,
    /// Signature-word occurrences drawn per assigned label (inclusive range).
    pub signature_hits: (usize, usize),
    /// Noise words per document (inclusive range).
    pub noise_words: (usize, usize),
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_docs: 2000,
            vocab_size: 1000,
            n_labels: 10,
            signature_words: 5,
            min_labels: 1,
            max_labels: 3,
            signature_hits: (2, 3),
            noise_words: (20, 40),
            seed: 2016,
        }
    }
}

pub fn word(i: usize) -> String {
    format!("w{i:04}")
}

pub fn label(i: usize) -> String {
    format!("topic{i:02}")
}

pub fn generate(cfg: &SyntheticConfig) -> Result<Vec<Document>> {
    let signature_total = cfg.n_labels * cfg.signature_words;
    if cfg.n_labels == 0 || cfg.signature_words == 0 {
        return Err(Error::Config(
            "need at least one label and signature word".into(),
        ));
    }
    if signature_total >= cfg.vocab_size {
        return Err(Error::Config(format!(
            "{signature_total} signature words leave no noise words in a vocabulary of {}",
            cfg.vocab_size
        )));
    }
    if cfg.min_labels == 0 || cfg.min_labels > cfg.max_labels || cfg.max_labels > cfg.n_labels {
        return Err(Error::Config(
            "label count range must satisfy 1 <= min <= max <= n_labels".into(),
        ));
    }
    if cfg.signature_hits.0 > cfg.signature_hits.1 || cfg.noise_words.0 > cfg.noise_words.1 {
        return Err(Error::Config("inverted range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let label_ids: Vec<usize> = (0..cfg.n_labels).collect();
    let noise: Vec<usize> = (signature_total..cfg.vocab_size).collect();
    let mut docs = Vec::with_capacity(cfg.n_docs);
    for d in 0..cfg.n_docs {
        let k = rng.random_range(cfg.min_labels..=cfg.max_labels);
        let mut chosen: Vec<usize> = label_ids.choose_multiple(&mut rng, k).copied().collect();
        chosen.sort_unstable();
        let mut words: Vec<usize> = Vec::new();
        for &l in &chosen {
            let hits = rng.random_range(cfg.signature_hits.0..=cfg.signature_hits.1);
            for _ in 0..hits {
                words.push(l * cfg.signature_words + rng.random_range(0..cfg.signature_words));
            }
        }
        let n_noise = rng.random_range(cfg.noise_words.0..=cfg.noise_words.1);
        for _ in 0..n_noise {
            words.push(*noise.choose(&mut rng).expect("non-empty noise vocabulary"));
        }
        words.shuffle(&mut rng);
        let text = words.iter().map(|&w| word(w)).collect::<Vec<_>>().join(" ");
        docs.push(Document {
            id: format!("syn{d:05}"),
            text,
            labels: chosen.into_iter().map(label).collect(),
        });
    }
    Ok(docs)
}
