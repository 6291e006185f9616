//! Labeled document collections: loading, the label space, and fold plans.
//!
//! The corpus format is line-delimited JSON, one document per line:
//!
//! ```text
//! {"id": "d1", "text": "Praha hostí summit", "labels": ["pol", "zah"]}
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A raw document with its gold label set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    /// Distinct labels in the order they were listed.
    pub labels: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, labels: &[&str]) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            labels: labels.iter().map(|l| l.to_string()).collect(),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty document id".into());
        }
        let mut seen = HashSet::new();
        for label in &self.labels {
            if !seen.insert(label.as_str()) {
                return Err(format!(
                    "document {:?} lists label {:?} more than once",
                    self.id, label
                ));
            }
        }
        Ok(())
    }
}

/// Parse a corpus from any buffered reader. Line numbers in errors are 1-based.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut ids: HashSet<String> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        doc.validate().map_err(|message| Error::Parse {
            line: lineno,
            message,
        })?;
        if !ids.insert(doc.id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate document id {:?} at line {lineno}",
                doc.id
            )));
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Load a line-delimited JSON corpus, preserving file order.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file))
}

pub fn write_corpus(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// The ordered set of labels the classifiers predict over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct LabelVocabulary {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for LabelVocabulary {
    fn from(labels: Vec<String>) -> Self {
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Self { labels, index }
    }
}

impl From<LabelVocabulary> for Vec<String> {
    fn from(v: LabelVocabulary) -> Self {
        v.labels
    }
}

impl LabelVocabulary {
    pub fn from_labels(labels: Vec<String>) -> Result<Self> {
        let vocab = Self::from(labels);
        if vocab.index.len() != vocab.labels.len() {
            return Err(Error::Validation("label vocabulary has duplicates".into()));
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.get(i).map(String::as_str)
    }

    /// Sorted positions of the document's in-vocabulary labels.
    pub fn label_indices(&self, doc: &Document) -> Vec<usize> {
        let mut idx: Vec<usize> = doc.labels.iter().filter_map(|l| self.index_of(l)).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// A document with no in-vocabulary label is left out of training and evaluation.
    pub fn retains(&self, doc: &Document) -> bool {
        doc.labels.iter().any(|l| self.index.contains_key(l))
    }

    /// Ids of documents that lose every label under this vocabulary.
    pub fn excluded_ids<'a>(&self, docs: &'a [Document]) -> Vec<&'a str> {
        docs.iter()
            .filter(|d| !self.retains(d))
            .map(|d| d.id.as_str())
            .collect()
    }

    pub fn restrict(&self, docs: &[Document]) -> Vec<Document> {
        docs.iter().filter(|d| self.retains(d)).cloned().collect()
    }
}

/// Keep the `top_n` labels by document frequency. Ties go to the label seen first.
pub fn build_label_vocabulary(docs: &[Document], top_n: usize) -> Result<LabelVocabulary> {
    if top_n == 0 {
        return Err(Error::Config("top_n must be at least 1".into()));
    }
    // label -> (document frequency, first occurrence rank)
    let mut stats: HashMap<&str, (usize, usize)> = HashMap::new();
    for doc in docs {
        for label in &doc.labels {
            let next = stats.len();
            stats.entry(label.as_str()).or_insert((0, next)).0 += 1;
        }
    }
    if stats.len() < top_n {
        return Err(Error::Config(format!(
            "requested {top_n} labels but the corpus has only {} distinct labels",
            stats.len()
        )));
    }
    let mut ranked: Vec<(&str, usize, usize)> = stats
        .into_iter()
        .map(|(l, (df, first))| (l, df, first))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    let labels: Vec<String> = ranked
        .into_iter()
        .take(top_n)
        .map(|(l, _, _)| l.to_string())
        .collect();
    Ok(LabelVocabulary::from(labels))
}

/// Position `i` is 1 iff vocabulary label `i` is among the document's labels.
pub fn labels_to_multihot(doc: &Document, vocab: &LabelVocabulary) -> Vec<f64> {
    let mut out = vec![0.0; vocab.len()];
    for i in vocab.label_indices(doc) {
        out[i] = 1.0;
    }
    out
}

/// Assignment of every document id to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// Split `docs` into (train, test) for the given fold, each in corpus order.
    pub fn split<'a>(
        &self,
        docs: &'a [Document],
        fold: usize,
    ) -> Result<(Vec<&'a Document>, Vec<&'a Document>)> {
        if fold >= self.k {
            return Err(Error::Index(format!(
                "fold {fold} out of range for k={}",
                self.k
            )));
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for doc in docs {
            match self.fold_of(&doc.id) {
                Some(f) if f == fold => test.push(doc),
                Some(_) => train.push(doc),
                None => {
                    return Err(Error::Validation(format!(
                        "document {:?} is not covered by the fold plan",
                        doc.id
                    )))
                }
            }
        }
        Ok((train, test))
    }
}

/// Seeded shuffle followed by round-robin assignment. The first `len % k` folds get one extra.
pub fn make_folds(docs: &[Document], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    if docs.len() < k {
        return Err(Error::Config(format!(
            "cannot split {} documents into {k} folds",
            docs.len()
        )));
    }
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let assignment = order
        .into_iter()
        .enumerate()
        .map(|(pos, i)| (docs[i].id.clone(), pos % k))
        .collect();
    Ok(FoldPlan {
        k,
        seed,
        assignment,
    })
}

/// Seeded split of `items` into (kept, held_out) with `fraction` of them held out.
///
/// At least one item is held out whenever `fraction > 0` and there are two or more items.
pub fn holdout_split<T: Clone>(items: &[T], fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut n_held = (items.len() as f64 * fraction).round() as usize;
    if fraction > 0.0 && n_held == 0 && items.len() >= 2 {
        n_held = 1;
    }
    n_held = n_held.min(items.len().saturating_sub(1));
    let mut held: Vec<usize> = order[..n_held].to_vec();
    held.sort_unstable();
    let held_set: HashSet<usize> = held.iter().copied().collect();
    let kept = (0..items.len())
        .filter(|i| !held_set.contains(i))
        .map(|i| items[i].clone())
        .collect();
    let held = held.into_iter().map(|i| items[i].clone()).collect();
    (kept, held)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, labels: &[&str]) -> Document {
        Document::new(id, "text", labels)
    }

    fn corpus(n: usize) -> Vec<Document> {
        (0..n).map(|i| doc(&format!("d{i}"), &["a"])).collect()
    }

    #[test]
    fn reads_records_in_order() {
        let input = r#"{"id":"d1","text":"Praha","labels":["a"]}
{"id":"d2","text":"Brno","labels":["b","c"]}
"#;
        let docs = read_corpus(input.as_bytes()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].id, "d1");
        assert_eq!(docs[1].labels, vec!["b", "c"]);
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let input = r#"{"id":"d1","text":"x","labels":["a"]}
{"id":"d1","text":"y","labels":["a"]}"#;
        let err = read_corpus(input.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("\"d1\""));
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        assert!(read_corpus("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn malformed_record_names_line() {
        let input = "{\"id\":\"d1\",\"text\":\"x\",\"labels\":[]}\n{\"id\": 3}\n";
        match read_corpus(input.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let missing = "{\"id\":\"d1\",\"text\":\"x\"}\n";
        assert!(matches!(
            read_corpus(missing.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_id_and_repeated_label_are_parse_errors() {
        let input = "{\"id\":\"\",\"text\":\"x\",\"labels\":[]}";
        assert!(matches!(
            read_corpus(input.as_bytes()),
            Err(Error::Parse { .. })
        ));
        let input = "{\"id\":\"a\",\"text\":\"x\",\"labels\":[\"l\",\"l\"]}";
        assert!(matches!(
            read_corpus(input.as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn label_vocabulary_by_frequency() {
        let mut docs = Vec::new();
        for i in 0..5 {
            let mut labels = vec!["a"];
            if i < 3 {
                labels.push("b");
            }
            if i < 1 {
                labels.push("c");
            }
            docs.push(doc(&format!("d{i}"), &labels));
        }
        let vocab = build_label_vocabulary(&docs, 2).unwrap();
        assert_eq!(vocab.labels(), &["a", "b"]);
    }

    #[test]
    fn label_ties_break_by_first_occurrence() {
        let docs = vec![doc("1", &["b"]), doc("2", &["a"]), doc("3", &["a", "b"])];
        let vocab = build_label_vocabulary(&docs, 2).unwrap();
        assert_eq!(vocab.labels(), &["b", "a"]);
        let docs = vec![doc("1", &["a"]), doc("2", &["b"]), doc("3", &["a", "b"])];
        assert_eq!(
            build_label_vocabulary(&docs, 2).unwrap().labels(),
            &["a", "b"]
        );
    }

    #[test]
    fn sixty_labels_cut_to_thirty_seven() {
        let docs: Vec<Document> = (0..60)
            .map(|i| {
                let labels: Vec<String> = (0..=i).map(|j| format!("cat{j}")).collect();
                let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                doc(&format!("d{i}"), &refs)
            })
            .collect();
        let vocab = build_label_vocabulary(&docs, 37).unwrap();
        assert_eq!(vocab.len(), 37);
        assert_eq!(vocab.label(0), Some("cat0"));
        assert_eq!(vocab.label(36), Some("cat36"));
    }

    #[test]
    fn too_few_labels_is_config_error() {
        let docs = vec![doc("1", &["a"])];
        assert!(matches!(
            build_label_vocabulary(&docs, 2),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_label_vocabulary(&docs, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn excluded_documents_are_flagged() {
        let docs = vec![doc("1", &["a"]), doc("2", &["a"]), doc("3", &["z"])];
        let vocab = build_label_vocabulary(&docs, 1).unwrap();
        assert_eq!(vocab.excluded_ids(&docs), vec!["3"]);
        assert_eq!(vocab.restrict(&docs).len(), 2);
    }

    #[test]
    fn multihot_examples() {
        let vocab = LabelVocabulary::from_labels(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(
            labels_to_multihot(&doc("1", &["a"]), &vocab),
            vec![1.0, 0.0, 0.0]
        );
        let ab = LabelVocabulary::from_labels(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(labels_to_multihot(&doc("1", &[]), &ab), vec![0.0, 0.0]);
        assert_eq!(
            labels_to_multihot(&doc("1", &["a", "z"]), &ab),
            vec![1.0, 0.0]
        );
    }

    #[test]
    fn fold_sizes_exact_and_remainder() {
        assert_eq!(
            make_folds(&corpus(10), 5, 1).unwrap().fold_sizes(),
            vec![2; 5]
        );
        assert_eq!(
            make_folds(&corpus(11), 5, 1).unwrap().fold_sizes(),
            vec![3, 2, 2, 2, 2]
        );
    }

    #[test]
    fn folds_are_deterministic() {
        let docs = corpus(37);
        assert_eq!(
            make_folds(&docs, 5, 9).unwrap(),
            make_folds(&docs, 5, 9).unwrap()
        );
        assert_ne!(
            make_folds(&docs, 5, 9).unwrap(),
            make_folds(&docs, 5, 10).unwrap()
        );
    }

    #[test]
    fn fold_argument_errors() {
        assert!(matches!(
            make_folds(&corpus(10), 1, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            make_folds(&corpus(3), 5, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn fold_plan_json_round_trip() {
        let plan = make_folds(&corpus(12), 3, 4).unwrap();
        let json = serde_json::to_string(&plan).unwrap();
        assert_eq!(serde_json::from_str::<FoldPlan>(&json).unwrap(), plan);
    }

    #[test]
    fn holdout_split_sizes() {
        let items: Vec<usize> = (0..20).collect();
        let (kept, held) = holdout_split(&items, 0.1, 3);
        assert_eq!(held.len(), 2);
        assert_eq!(kept.len(), 18);
        let (kept, held) = holdout_split(&items[..3], 0.1, 3);
        assert_eq!((kept.len(), held.len()), (2, 1));
        let (kept, held) = holdout_split(&items[..1], 0.5, 3);
        assert_eq!((kept.len(), held.len()), (1, 0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn folds_partition_the_corpus(n in 2usize..80, k in 2usize..8, seed in any::<u64>()) {
                prop_assume!(n >= k);
                let docs = corpus(n);
                let plan = make_folds(&docs, k, seed).unwrap();
                prop_assert_eq!(plan.assignment.len(), n);
                let sizes = plan.fold_sizes();
                let min = *sizes.iter().min().unwrap();
                let max = *sizes.iter().max().unwrap();
                prop_assert!(max - min <= 1);
                let mut seen = HashSet::new();
                for f in 0..k {
                    let (train, test) = plan.split(&docs, f).unwrap();
                    prop_assert_eq!(train.len() + test.len(), n);
                    for d in test {
                        prop_assert!(seen.insert(d.id.clone()));
                    }
                }
                prop_assert_eq!(seen.len(), n);
            }

            #[test]
            fn vocabulary_is_frequency_ordered(
                raw in proptest::collection::vec(proptest::collection::btree_set(0u8..12, 0..5), 1..40)
            ) {
                let docs: Vec<Document> = raw.iter().enumerate().map(|(i, ls)| {
                    let labels: Vec<String> = ls.iter().map(|l| format!("l{l}")).collect();
                    Document { id: format!("d{i}"), text: String::new(), labels }
                }).collect();
                let distinct: HashSet<&String> = docs.iter().flat_map(|d| &d.labels).collect();
                prop_assume!(!distinct.is_empty());
                let vocab = build_label_vocabulary(&docs, distinct.len()).unwrap();
                let df = |l: &str| docs.iter().filter(|d| d.labels.iter().any(|x| x == l)).count();
                for pair in vocab.labels().windows(2) {
                    prop_assert!(df(&pair[0]) >= df(&pair[1]));
                }
                for (i, l) in vocab.labels().iter().enumerate() {
                    prop_assert_eq!(vocab.index_of(l), Some(i));
                }
            }

            #[test]
            fn multihot_decodes_to_intersection(
                labels in proptest::collection::btree_set(0u8..10, 0..6),
                vocab_size in 1usize..8,
            ) {
                let names: Vec<String> = labels.iter().map(|l| format!("l{l}")).collect();
                let d = Document { id: "x".into(), text: String::new(), labels: names.clone() };
                let vocab = LabelVocabulary::from_labels((0..vocab_size).map(|i| format!("l{i}")).collect()).unwrap();
                let hot = labels_to_multihot(&d, &vocab);
                let decoded: HashSet<String> = hot.iter().enumerate()
                    .filter(|(_, &v)| v == 1.0)
                    .map(|(i, _)| vocab.label(i).unwrap().to_string())
                    .collect();
                let expected: HashSet<String> = names.into_iter().filter(|n| vocab.index_of(n).is_some()).collect();
                prop_assert_eq!(decoded, expected);
            }
        }
    }
}
