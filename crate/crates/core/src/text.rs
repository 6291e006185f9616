//! Tokenization, the word dictionary, and the two input encodings
//! (binary bag-of-words and fixed-length index sequences).

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Replaces every numeric token.
pub const NUMBER_TOKEN: &str = "<num>";

/// Normalized tokens of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self {
            tokens: iter.into_iter().map(Into::into).collect(),
        }
    }
}

/// Digit runs joined by single `.` or `,` separators, e.g. `2016`, `3,5`, `1.000.000`.
fn is_number(token: &str) -> bool {
    !token.is_empty()
        && token
            .split(['.', ','])
            .all(|part| !part.is_empty() && part.bytes().all(|b| b.is_ascii_digit()))
}

/// Split on whitespace, trim non-alphanumeric characters from both ends,
/// lowercase, and collapse numbers into [`NUMBER_TOKEN`].
pub fn tokenize(text: &str) -> TokenSequence {
    text.split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                None
            } else if is_number(trimmed) {
                Some(NUMBER_TOKEN.to_string())
            } else {
                Some(trimmed.to_lowercase())
            }
        })
        .collect()
}

/// Frequency-ranked word list with reserved out-of-vocabulary and padding indexes.
///
/// Words occupy indexes `0..word_count()`, followed by `oov_index()` and `pad_index()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    ranked_words: Vec<String>,
    word_to_index: HashMap<String, usize>,
}

impl Dictionary {
    pub fn from_ranked_words(ranked_words: Vec<String>) -> Result<Self> {
        let mut word_to_index = HashMap::with_capacity(ranked_words.len());
        for (i, w) in ranked_words.iter().enumerate() {
            if w.is_empty() || w.contains(char::is_whitespace) {
                return Err(Error::Validation(format!(
                    "dictionary entry {i} is not a single token: {w:?}"
                )));
            }
            if word_to_index.insert(w.clone(), i).is_some() {
                return Err(Error::Validation(format!("dictionary repeats word {w:?}")));
            }
        }
        Ok(Self {
            ranked_words,
            word_to_index,
        })
    }

    pub fn word_count(&self) -> usize {
        self.ranked_words.len()
    }

    pub fn oov_index(&self) -> usize {
        self.ranked_words.len()
    }

    pub fn pad_index(&self) -> usize {
        self.ranked_words.len() + 1
    }

    /// Rows an embedding table needs to cover every legal index.
    pub fn index_space(&self) -> usize {
        self.ranked_words.len() + 2
    }

    pub fn ranked_words(&self) -> &[String] {
        &self.ranked_words
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.word_to_index.get(word).copied()
    }

    /// The on-disk form: one word per line, line number = index.
    pub fn to_file_contents(&self) -> String {
        let mut s = String::new();
        for w in &self.ranked_words {
            s.push_str(w);
            s.push('\n');
        }
        s
    }

    pub fn from_file_contents(contents: &str) -> Result<Self> {
        Self::from_ranked_words(contents.lines().map(str::to_string).collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_file_contents()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file_contents(&contents)
    }

    /// SHA-256 of the file form, hex encoded. Checkpoints reference dictionaries by this.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_file_contents().as_bytes()))
    }

    /// Fraction of token occurrences covered by the dictionary.
    pub fn coverage<'a>(&self, docs: impl IntoIterator<Item = &'a TokenSequence>) -> f64 {
        let (mut hit, mut total) = (0usize, 0usize);
        for seq in docs {
            for t in seq.iter() {
                total += 1;
                if self.word_to_index.contains_key(t) {
                    hit += 1;
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    }
}

/// Keep the `capacity` most frequent tokens by total occurrence count; ties go to the token seen first.
pub fn build_dictionary<'a>(
    corpus_tokens: impl IntoIterator<Item = &'a TokenSequence>,
    capacity: usize,
) -> Result<Dictionary> {
    if capacity == 0 {
        return Err(Error::Config(
            "dictionary capacity must be at least 1".into(),
        ));
    }
    // token -> (count, first occurrence)
    let mut stats: HashMap<&str, (usize, usize)> = HashMap::new();
    for seq in corpus_tokens {
        for t in seq.iter() {
            let next = stats.len();
            stats.entry(t).or_insert((0, next)).0 += 1;
        }
    }
    let mut ranked: Vec<(&str, usize, usize)> =
        stats.into_iter().map(|(t, (c, f))| (t, c, f)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    ranked.truncate(capacity);
    Dictionary::from_ranked_words(ranked.into_iter().map(|(t, _, _)| t.to_string()).collect())
}

/// Set of dictionary words present in a document: the sparse form of the binary BoW vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowVector {
    pub width: usize,
    /// Sorted, distinct indexes of the positions set to 1.
    pub active: Vec<usize>,
}

impl BowVector {
    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.width];
        for &i in &self.active {
            v[i] = 1.0;
        }
        v
    }
}

pub fn bow_indices(tokens: &TokenSequence, dict: &Dictionary) -> BowVector {
    let mut active: Vec<usize> = tokens.iter().filter_map(|t| dict.index_of(t)).collect();
    active.sort_unstable();
    active.dedup();
    BowVector {
        width: dict.word_count(),
        active,
    }
}

/// Binary presence vector over the dictionary words; out-of-vocabulary tokens are dropped.
pub fn vectorize_bow(tokens: &TokenSequence, dict: &Dictionary) -> Vec<u8> {
    let mut v = vec![0u8; dict.word_count()];
    for i in bow_indices(tokens, dict).active {
        v[i] = 1;
    }
    v
}

/// Map the first `len` tokens to indexes, then pad at the end to exactly `len`.
pub fn vectorize_sequence(
    tokens: &TokenSequence,
    dict: &Dictionary,
    len: usize,
) -> Result<Vec<usize>> {
    if len == 0 {
        return Err(Error::Config("sequence length must be at least 1".into()));
    }
    let mut out: Vec<usize> = tokens
        .iter()
        .take(len)
        .map(|t| dict.index_of(t).unwrap_or_else(|| dict.oov_index()))
        .collect();
    out.resize(len, dict.pad_index());
    Ok(out)
}
