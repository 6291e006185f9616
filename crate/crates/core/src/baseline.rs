//! Binary-relevance baseline: one L2-regularized logistic regression
//! (maximum-entropy) classifier per label over TF-IDF features. A document
//! receives the union of the labels whose classifier fires.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::LabelSet;
use crate::text::{Dictionary, TokenSequence};

/// Sparse real vector: sorted `(index, value)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub width: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVectorizer {
    /// `ln((1 + D) / (1 + df)) + 1` per dictionary word.
    pub idf: Vec<f64>,
    pub dictionary_hash: String,
}

/// Document frequencies are counted on `train_tokens` only.
pub fn fit_tfidf<'a>(
    train_tokens: impl IntoIterator<Item = &'a TokenSequence>,
    dict: &Dictionary,
) -> Result<TfidfVectorizer> {
    let mut df = vec![0usize; dict.word_count()];
    let mut docs = 0usize;
    let mut seen = vec![usize::MAX; dict.word_count()];
    for (d, seq) in train_tokens.into_iter().enumerate() {
        docs += 1;
        for t in seq.iter() {
            if let Some(i) = dict.index_of(t) {
                if seen[i] != d {
                    seen[i] = d;
                    df[i] += 1;
                }
            }
        }
    }
    if docs == 0 {
        return Err(Error::Validation(
            "TF-IDF needs at least one training document".into(),
        ));
    }
    let n = docs as f64;
    Ok(TfidfVectorizer {
        idf: df
            .into_iter()
            .map(|f| ((1.0 + n) / (1.0 + f as f64)).ln() + 1.0)
            .collect(),
        dictionary_hash: dict.content_hash(),
    })
}

impl TfidfVectorizer {
    pub fn width(&self) -> usize {
        self.idf.len()
    }

    /// Raw term counts times idf, scaled to unit L2 norm. Empty documents map to zero.
    pub fn transform(&self, tokens: &TokenSequence, dict: &Dictionary) -> Result<SparseVector> {
        if dict.word_count() != self.idf.len() {
            return Err(Error::Shape(format!(
                "vectorizer covers {} words, dictionary has {}",
                self.idf.len(),
                dict.word_count()
            )));
        }
        let mut idx: Vec<usize> = tokens.iter().filter_map(|t| dict.index_of(t)).collect();
        idx.sort_unstable();
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for i in idx {
            match entries.last_mut() {
                Some((j, c)) if *j == i => *c += 1.0,
                _ => entries.push((i, 1.0)),
            }
        }
        for (i, v) in &mut entries {
            *v *= self.idf[*i];
        }
        let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut entries {
                *v /= norm;
            }
        }
        Ok(SparseVector {
            width: self.idf.len(),
            entries,
        })
    }
}

/// Full-batch gradient descent settings for each per-label classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the gradient's Euclidean norm falls below this.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_iter: 3000,
            tol: 1e-5,
        }
    }
}

impl LogisticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!(
                "l2 must be non-negative, got {}",
                self.l2
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl BinaryClassifier {
    pub fn probability(&self, x: &SparseVector) -> f64 {
        sigmoid(x.dot(&self.weights) + self.bias)
    }

    pub fn decide(&self, x: &SparseVector) -> bool {
        self.probability(x) > 0.5
    }
}

/// Mean logistic loss plus `l2 / 2 * |w|^2` (bias unregularized).
pub fn regularized_loss(
    clf: &BinaryClassifier,
    features: &[SparseVector],
    targets: &[f64],
    l2: f64,
) -> f64 {
    let data: f64 = features
        .iter()
        .zip(targets)
        .map(|(x, &y)| {
            let z = x.dot(&clf.weights) + clf.bias;
            softplus(z) - y * z
        })
        .sum::<f64>()
        / features.len() as f64;
    data + 0.5 * l2 * clf.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Fit one classifier by gradient descent with step `1 / L`, where `L` bounds
/// the gradient's Lipschitz constant; the objective therefore never increases.
/// Returns the classifier and the loss after every iteration (starting at zero weights).
pub fn train_logistic(
    features: &[SparseVector],
    targets: &[f64],
    cfg: &LogisticConfig,
) -> Result<(BinaryClassifier, Vec<f64>)> {
    cfg.validate()?;
    if features.is_empty() || features.len() != targets.len() {
        return Err(Error::Validation(format!(
            "{} feature vectors for {} targets",
            features.len(),
            targets.len()
        )));
    }
    let width = features[0].width;
    if features.iter().any(|x| x.width != width) {
        return Err(Error::Shape("feature vectors differ in width".into()));
    }
    let n = features.len() as f64;
    let max_sq = features
        .iter()
        .map(|x| x.squared_norm() + 1.0)
        .fold(0.0, f64::max);
    let step = 1.0 / (0.25 * max_sq + cfg.l2);

    let mut clf = BinaryClassifier {
        weights: vec![0.0; width],
        bias: 0.0,
    };
    let mut trace = Vec::new();
    let mut gw = vec![0.0; width];
    for iter in 0..=cfg.max_iter {
        // loss and gradient at the current iterate, in one pass
        gw.iter_mut()
            .zip(&clf.weights)
            .for_each(|(g, w)| *g = cfg.l2 * w);
        let mut gb = 0.0;
        let mut data_loss = 0.0;
        for (x, &y) in features.iter().zip(targets) {
            let z = x.dot(&clf.weights) + clf.bias;
            data_loss += softplus(z) - y * z;
            let r = (sigmoid(z) - y) / n;
            gb += r;
            for &(i, v) in &x.entries {
                gw[i] += r * v;
            }
        }
        let value = data_loss / n + 0.5 * cfg.l2 * clf.weights.iter().map(|w| w * w).sum::<f64>();
        if !value.is_finite() {
            return Err(Error::Training("non-finite logistic loss".into()));
        }
        trace.push(value);
        let norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if norm < cfg.tol || iter == cfg.max_iter {
            break;
        }
        clf.weights
            .iter_mut()
            .zip(&gw)
            .for_each(|(w, g)| *w -= step * g);
        clf.bias -= step * gb;
    }
    Ok((clf, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryRelevanceModel {
    pub classifiers: Vec<BinaryClassifier>,
    pub l2: f64,
}

/// Train label `i`'s classifier on column `i` of the multi-hot targets; labels in parallel.
pub fn train_binary_relevance(
    features: &[SparseVector],
    targets: &[Vec<f64>],
    cfg: &LogisticConfig,
) -> Result<BinaryRelevanceModel> {
    let n_labels = targets.first().map_or(0, Vec::len);
    if n_labels == 0 {
        return Err(Error::Validation(
            "need at least one label and one document".into(),
        ));
    }
    if targets.iter().any(|t| t.len() != n_labels) {
        return Err(Error::Shape("target vectors differ in length".into()));
    }
    let classifiers = (0..n_labels)
        .into_par_iter()
        .map(|label| {
            let column: Vec<f64> = targets.iter().map(|t| t[label]).collect();
            train_logistic(features, &column, cfg)
                .map(|(clf, _)| clf)
                .map_err(|e| match e {
                    Error::Training(msg) => Error::Training(format!("label {label}: {msg}")),
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BinaryRelevanceModel {
        classifiers,
        l2: cfg.l2,
    })
}

impl BinaryRelevanceModel {
    pub fn n_labels(&self) -> usize {
        self.classifiers.len()
    }

    fn check(&self, x: &SparseVector) -> Result<()> {
        let width = self.classifiers.first().map_or(0, |c| c.weights.len());
        if x.width != width {
            return Err(Error::Shape(format!(
                "feature width {} does not match classifier width {width}",
                x.width
            )));
        }
        Ok(())
    }

    pub fn probabilities(&self, x: &SparseVector) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(self.classifiers.iter().map(|c| c.probability(x)).collect())
    }

    /// Union of the labels whose classifier puts probability above 0.5.
    pub fn classify(&self, x: &SparseVector) -> Result<LabelSet> {
        self.check(x)?;
        Ok(self
            .classifiers
            .iter()
            .enumerate()
            .filter(|(_, c)| c.decide(x))
            .map(|(i, _)| i)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(words: &[&str]) -> TokenSequence {
        words.iter().copied().collect()
    }

    fn dict(words: &[&str]) -> Dictionary {
        Dictionary::from_ranked_words(words.iter().map(|w| w.to_string()).collect()).unwrap()
    }

    fn sv(entries: &[(usize, f64)], width: usize) -> SparseVector {
        SparseVector {
            width,
            entries: entries.to_vec(),
        }
    }

    #[test]
    fn idf_values() {
        let d = dict(&["all", "one", "none"]);
        let docs = [seq(&["all", "one"]), seq(&["all"]), seq(&["all", "all"])];
        let v = fit_tfidf(&docs, &d).unwrap();
        assert!((v.idf[0] - 1.0).abs() < 1e-15);
        assert!((v.idf[1] - ((4.0f64 / 2.0).ln() + 1.0)).abs() < 1e-15);
        assert!((v.idf[2] - ((4.0f64).ln() + 1.0)).abs() < 1e-15);
        assert!(v.idf.iter().all(|&x| x >= 0.0));
        assert!(fit_tfidf(&[] as &[TokenSequence], &d).is_err());
    }

    #[test]
    fn transform_is_unit_norm() {
        let d = dict(&["a", "b", "c"]);
        let docs = [seq(&["a", "b"]), seq(&["a"])];
        let v = fit_tfidf(&docs, &d).unwrap();
        let x = v.transform(&seq(&["a", "a", "b", "zzz"]), &d).unwrap();
        assert!((x.squared_norm() - 1.0).abs() < 1e-12);
        assert_eq!(x.entries.len(), 2);
        let ratio = x.entries[0].1 / x.entries[1].1;
        assert!((ratio - 2.0 * v.idf[0] / v.idf[1]).abs() < 1e-12);
        assert!(v.transform(&seq(&["zzz"]), &d).unwrap().entries.is_empty());
    }

    #[test]
    fn classify_threshold_and_union() {
        let z = |p: f64| (p / (1.0 - p)).ln();
        let model = BinaryRelevanceModel {
            classifiers: [0.6, 0.4, 0.7]
                .iter()
                .map(|&p| BinaryClassifier {
                    weights: vec![0.0],
                    bias: z(p),
                })
                .collect(),
            l2: 0.0,
        };
        let x = sv(&[], 1);
        assert_eq!(model.classify(&x).unwrap(), [0, 2].into_iter().collect());
        let quiet = BinaryRelevanceModel {
            classifiers: vec![
                BinaryClassifier {
                    weights: vec![0.0],
                    bias: z(0.4)
                };
                3
            ],
            l2: 0.0,
        };
        assert!(quiet.classify(&x).unwrap().is_empty());
        assert!(model.classify(&sv(&[], 2)).is_err());
    }

    fn toy() -> (Vec<SparseVector>, Vec<Vec<f64>>) {
        // feature 0 marks label 0, feature 1 marks label 1; label 2 never occurs
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..20 {
            let a = i % 2 == 0;
            let b = i % 3 == 0;
            let mut e = vec![(2 + i % 3, 1.0)];
            if a {
                e.push((0, 1.0));
            }
            if b {
                e.push((1, 1.0));
            }
            e.sort_by_key(|p| p.0);
            let norm = (e.len() as f64).sqrt();
            e.iter_mut().for_each(|p| p.1 /= norm);
            xs.push(sv(&e, 5));
            ys.push(vec![f64::from(a as u8), f64::from(b as u8), 0.0]);
        }
        (xs, ys)
    }

    #[test]
    fn separable_labels_reach_full_accuracy() {
        let (xs, ys) = toy();
        let model = train_binary_relevance(&xs, &ys, &LogisticConfig::default()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let pred = model.classify(x).unwrap();
            for label in 0..3 {
                assert_eq!(pred.contains(&label), y[label] == 1.0);
            }
            assert!(model.probabilities(x).unwrap()[2] < 0.5);
        }
    }

    #[test]
    fn identical_columns_give_identical_classifiers() {
        let (xs, ys) = toy();
        let dup: Vec<Vec<f64>> = ys.iter().map(|y| vec![y[0], y[0]]).collect();
        let model = train_binary_relevance(&xs, &dup, &LogisticConfig::default()).unwrap();
        assert_eq!(model.classifiers[0], model.classifiers[1]);
    }

    #[test]
    fn loss_never_increases() {
        let (xs, ys) = toy();
        for label in 0..3 {
            let col: Vec<f64> = ys.iter().map(|y| y[label]).collect();
            let (_, trace) = train_logistic(&xs, &col, &LogisticConfig::default()).unwrap();
            assert!(trace.len() > 2);
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn permuting_labels_permutes_classifiers() {
        let (xs, ys) = toy();
        let cfg = LogisticConfig::default();
        let a = train_binary_relevance(&xs, &ys, &cfg).unwrap();
        let swapped: Vec<Vec<f64>> = ys.iter().map(|y| vec![y[2], y[0], y[1]]).collect();
        let b = train_binary_relevance(&xs, &swapped, &cfg).unwrap();
        assert_eq!(a.classifiers[0], b.classifiers[1]);
        assert_eq!(a.classifiers[1], b.classifiers[2]);
        assert_eq!(a.classifiers[2], b.classifiers[0]);
    }
}
