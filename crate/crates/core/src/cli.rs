//! Command-line driver. Every command reads one JSON experiment spec (or a
//! checkpoint), writes its artifacts into a run directory, and finishes by
//! writing `manifest.json` with the spec hash, seed, and a SHA-256 of every
//! artifact. CSV files carry `spec_hash` and `seed` as trailing columns.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::corpus::{
    build_label_vocabulary, holdout_split, load_corpus, make_folds, write_corpus, Document,
};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, micro_prf, roc_auc, roc_curve, CvReport, LabelSet, MicroPrf};
use crate::experiment::{
    fit_classifier, prepare, Checkpoint, Classifier, ExperimentSpec, PreparedDoc,
};
use crate::models::{decide_labels, sweep_threshold, threshold_grid, ThresholdPolicy};
use crate::synthetic::{generate, SyntheticConfig};
use crate::text::{build_dictionary, tokenize, Dictionary, TokenSequence};

/// Default output root when neither `--out` nor the spec names one.
pub const OUTPUT_ROOT_ENV: &str = "DOCCLASS_OUTPUT_ROOT";
const DEFAULT_OUTPUT_ROOT: &str = "runs";

#[derive(Debug, Parser)]
#[command(
    name = "docclass",
    version,
    about = "Multi-label document classification experiments"
)]
pub struct Cli {
    /// Worker threads for fold- and label-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a rank-ordered dictionary of the N most frequent tokens.
    BuildDict {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on a train/validation split of the spec's corpus.
    Train(RunArgs),
    /// Score a corpus with a checkpoint: metrics, ROC, and threshold tables.
    Eval(EvalArgs),
    /// k-fold cross-validation; a spec with sweep lists runs the whole grid.
    Cv(CvArgs),
    /// Grid sweep over the spec's sweep lists, one cross-validation per point.
    Sweep(RunArgs),
    /// Write a seeded synthetic corpus with planted label signals.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        docs: usize,
        #[arg(long, default_value_t = 2016)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Experiment spec (JSON). Relative paths inside it resolve against its directory.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output root; the run directory is created inside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fixed run directory name instead of `<name>-<unix time>`.
    #[arg(long)]
    pub run_name: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixed acceptance threshold instead of a tuned one.
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Also write each fold's checkpoint and dictionary.
    #[arg(long)]
    pub save_checkpoints: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dictionary file the checkpoint was trained with.
    #[arg(long)]
    pub dictionary: PathBuf,
    /// Documents to evaluate (JSONL).
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub run_name: Option<String>,
}

/// Parse arguments, run, and map errors to exit codes.
pub fn run() -> ExitCode {
    match run_with(std::env::args_os()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Validation(_) => 2,
        Error::Integrity(_) => 3,
        Error::Io { .. } | Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => 4,
        Error::Training(_) => 5,
        Error::Shape(_) | Error::Index(_) => 1,
    }
}

/// Run a command line; returns the directory or file written.
pub fn run_with<I, T>(args: I) -> Result<PathBuf>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            print!("{e}");
            std::process::exit(0);
        }
        Error::Config(e.to_string())
    })?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| execute(cli.command))
}

fn execute(command: Command) -> Result<PathBuf> {
    match command {
        Command::BuildDict { corpus, size, out } => cmd_build_dict(&corpus, size, &out),
        Command::Train(args) => cmd_train(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Cv(args) => cmd_cv(&args.run, args.save_checkpoints),
        Command::Sweep(args) => cmd_cv(&args, false),
        Command::Synth { out, docs, seed } => {
            let docs = generate(&SyntheticConfig {
                n_docs: docs,
                seed,
                ..SyntheticConfig::default()
            })?;
            create_parent(&out)?;
            write_corpus(&out, &docs)?;
            println!("wrote {} documents to {}", docs.len(), out.display());
            Ok(out)
        }
    }
}

pub fn cmd_build_dict(corpus: &Path, size: usize, out: &Path) -> Result<PathBuf> {
    let docs = load_corpus(corpus)?;
    let tokens: Vec<TokenSequence> = docs.iter().map(|d| tokenize(&d.text)).collect();
    let dict = build_dictionary(&tokens, size)?;
    create_parent(out)?;
    dict.save(out)?;
    println!("vocabulary size: {}", dict.word_count());
    println!("coverage: {:.4}", dict.coverage(&tokens));
    println!("sha256: {}", dict.content_hash());
    if dict.word_count() < size {
        eprintln!(
            "warning: requested {size} words but the corpus has only {} distinct tokens",
            dict.word_count()
        );
    }
    Ok(out.to_path_buf())
}

/// A spec with its overrides applied, plus the directory relative paths resolve against.
struct LoadedSpec {
    spec: ExperimentSpec,
    base: PathBuf,
}

impl LoadedSpec {
    fn load(args: &RunArgs) -> Result<Self> {
        let mut spec = ExperimentSpec::load(&args.spec)?;
        if let Some(seed) = args.seed {
            spec.seed = seed;
        }
        if args.tau.is_some() {
            spec.tau = args.tau;
        }
        spec.validate()?;
        let base = args
            .spec
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Ok(Self { spec, base })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn corpus(&self) -> Result<Vec<Document>> {
        if self.spec.corpus.as_os_str().is_empty() {
            return Err(Error::Config("spec names no corpus".into()));
        }
        load_corpus(self.resolve(&self.spec.corpus))
    }

    fn fixed_dictionary(&self) -> Result<Option<Dictionary>> {
        self.spec
            .dictionary
            .as_ref()
            .map(|p| Dictionary::load(self.resolve(p)))
            .transpose()
    }

    fn run_dir(&self, args: &RunArgs) -> Result<RunDir> {
        let root = args
            .out
            .clone()
            .or_else(|| self.spec.output_dir.as_ref().map(|p| self.resolve(p)))
            .unwrap_or_else(default_root);
        RunDir::create(
            root,
            args.run_name.as_deref(),
            &self.spec.name,
            self.spec.hash(),
            self.spec.seed,
        )
    }
}

fn default_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// Output directory of one command, tracking what has been written.
struct RunDir {
    path: PathBuf,
    spec_hash: String,
    seed: u64,
    files: Vec<String>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    file: &'a str,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    spec_hash: &'a str,
    seed: u64,
    files: Vec<ManifestEntry<'a>>,
}

impl RunDir {
    fn create(
        root: PathBuf,
        run_name: Option<&str>,
        name: &str,
        spec_hash: String,
        seed: u64,
    ) -> Result<Self> {
        let dir = match run_name {
            Some(n) => n.to_string(),
            None => {
                let secs = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                format!("{name}-{secs}")
            }
        };
        if dir.is_empty() || dir.contains(['/', '\\']) {
            return Err(Error::Config(format!("invalid run name {dir:?}")));
        }
        let path = root.join(dir);
        fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            path,
            spec_hash,
            seed,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path.join(name);
        create_parent(&p)?;
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// CSV with a header row; `spec_hash` and `seed` are appended to every row.
    fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let seed = self.seed.to_string();
        w.write_record(header.iter().copied().chain(["spec_hash", "seed"]))?;
        for row in rows {
            w.write_record(
                row.iter()
                    .map(String::as_str)
                    .chain([self.spec_hash.as_str(), seed.as_str()]),
            )?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io {
            path: self.path.join(name),
            source: std::io::Error::other(e.to_string()),
        })?;
        self.write(name, &bytes)
    }

    fn finish(self, command: &str) -> Result<PathBuf> {
        let mut files = Vec::new();
        for f in &self.files {
            let p = self.path.join(f);
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            files.push(ManifestEntry {
                file: f,
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
        let manifest = Manifest {
            command,
            spec_hash: &self.spec_hash,
            seed: self.seed,
            files,
        };
        let p = self.path.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        Ok(self.path)
    }
}

fn create_parent(p: &Path) -> Result<()> {
    match p.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

#[derive(Serialize)]
struct SplitIds<'a> {
    fit: Vec<&'a str>,
    valid: Vec<&'a str>,
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    name: &'a str,
    architecture: String,
    spec_hash: &'a str,
    seed: u64,
    averaging: &'static str,
    n_fit: usize,
    n_valid: usize,
    n_excluded: usize,
    dictionary_size: usize,
    dictionary_hash: String,
    tau: f64,
    /// Metrics at `tau` on the validation slice (the fit set when there is none).
    validation: MicroPrf,
    best_epoch: Option<usize>,
}

pub fn cmd_train(args: &RunArgs) -> Result<PathBuf> {
    let loaded = LoadedSpec::load(args)?;
    let spec = &loaded.spec;
    let corpus = loaded.corpus()?;
    let fixed = loaded.fixed_dictionary()?;
    let labels = build_label_vocabulary(&corpus, spec.top_n)?;
    let docs = labels.restrict(&corpus);
    let prepared = prepare(&docs, &labels);
    let all: Vec<usize> = (0..prepared.len()).collect();
    let (fit_idx, valid_idx) = holdout_split(&all, spec.valid_fraction, spec.seed.wrapping_add(2));
    let fit: Vec<&PreparedDoc> = fit_idx.iter().map(|&i| &prepared[i]).collect();
    let valid: Vec<&PreparedDoc> = valid_idx.iter().map(|&i| &prepared[i]).collect();
    let dictionary = match fixed {
        Some(d) => d,
        None => build_dictionary(prepared.iter().map(|d| &d.tokens), spec.dict_size)?,
    };

    let fitted = fit_classifier(spec, &labels, &dictionary, &fit, &valid, spec.seed)?;
    let classifier = fitted.classifier;
    let monitor = if valid.is_empty() { &fit } else { &valid };
    let validation = evaluate(
        &classifier,
        monitor.iter().map(|d| (&d.tokens, d.gold())),
        classifier.tau,
    )?;

    let mut out = loaded.run_dir(args)?;
    let spec_hash = out.spec_hash.clone();
    out.write_json("spec.json", spec)?;
    out.write("dictionary.txt", dictionary.to_file_contents().as_bytes())?;
    out.write(
        "checkpoint.json",
        &classifier
            .to_checkpoint(&spec.name, &spec_hash, spec.seed)
            .to_json()?,
    )?;
    out.write_json(
        "split.json",
        &SplitIds {
            fit: fit.iter().map(|d| d.id.as_str()).collect(),
            valid: valid.iter().map(|d| d.id.as_str()).collect(),
        },
    )?;
    if let Some(h) = &fitted.history {
        let rows: Vec<Vec<String>> = h
            .epochs
            .iter()
            .map(|e| vec![e.epoch.to_string(), num(e.loss), num(e.val_f1)])
            .collect();
        out.write_csv("history.csv", &["epoch", "loss", "val_f1"], &rows)?;
    }
    out.write_json(
        "train.json",
        &TrainSummary {
            name: &spec.name,
            architecture: spec.architecture.to_string(),
            spec_hash: &spec_hash,
            seed: spec.seed,
            averaging: "micro",
            n_fit: fit.len(),
            n_valid: valid.len(),
            n_excluded: corpus.len() - docs.len(),
            dictionary_size: dictionary.word_count(),
            dictionary_hash: dictionary.content_hash(),
            tau: classifier.tau,
            validation,
            best_epoch: fitted.history.as_ref().and_then(|h| h.best_epoch),
        },
    )?;
    println!(
        "{}: tau {} validation F1 {:.4} (P {:.4}, R {:.4})",
        spec.name, classifier.tau, validation.f1, validation.precision, validation.recall
    );
    out.finish("train")
}

fn evaluate<'a>(
    classifier: &Classifier,
    docs: impl Iterator<Item = (&'a TokenSequence, LabelSet)>,
    tau: f64,
) -> Result<MicroPrf> {
    let policy = ThresholdPolicy::new(tau)?;
    let (tokens, gold): (Vec<&TokenSequence>, Vec<LabelSet>) = docs.unzip();
    let scores = classifier.scores_batch(tokens)?;
    let pred: Vec<LabelSet> = scores.iter().map(|s| decide_labels(s, policy)).collect();
    micro_prf(&pred, &gold, classifier.labels.len())
}

#[derive(Serialize)]
struct EvalSummary<'a> {
    checkpoint: &'a str,
    architecture: String,
    spec_hash: &'a str,
    seed: u64,
    dictionary_hash: &'a str,
    averaging: &'static str,
    n_documents: usize,
    n_excluded: usize,
    tau: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    counts: crate::eval::ConfusionCounts,
    roc_auc: f64,
    best_tau: f64,
    best_f1: f64,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<PathBuf> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let dictionary = Dictionary::load(&args.dictionary)?;
    let (name, spec_hash, seed) = (ckpt.name.clone(), ckpt.spec_hash.clone(), ckpt.seed);
    let classifier = Classifier::from_checkpoint(ckpt, dictionary)?;
    let tau = args.tau.unwrap_or(classifier.tau);
    ThresholdPolicy::new(tau)
        .map_err(|_| Error::Config(format!("tau must lie in [0, 1], got {tau}")))?;

    let corpus = load_corpus(&args.corpus)?;
    let docs = classifier.labels.restrict(&corpus);
    if docs.is_empty() {
        return Err(Error::Validation(
            "no document carries a label known to the checkpoint".into(),
        ));
    }
    let prepared = prepare(&docs, &classifier.labels);
    let gold: Vec<LabelSet> = prepared.iter().map(|d| d.gold()).collect();
    let scores = classifier.scores_batch(prepared.par_iter().map(|d| &d.tokens))?;
    let pred: Vec<LabelSet> = scores
        .iter()
        .map(|s| decide_labels(s, ThresholdPolicy::new(tau).expect("checked")))
        .collect();
    let m = micro_prf(&pred, &gold, classifier.labels.len())?;
    let grid = threshold_grid(args.grid_step)?;
    let roc = roc_curve(&scores, &gold, &grid)?;
    let sweep = sweep_threshold(&scores, &gold, args.grid_step)?;

    let mut out = RunDir::create(
        args.out.clone().unwrap_or_else(default_root),
        args.run_name.as_deref(),
        &format!("{name}-eval"),
        spec_hash.clone(),
        seed,
    )?;
    out.write_json(
        "metrics.json",
        &EvalSummary {
            checkpoint: &name,
            architecture: classifier.architecture().to_string(),
            spec_hash: &spec_hash,
            seed,
            dictionary_hash: &classifier.dictionary.content_hash(),
            averaging: "micro",
            n_documents: docs.len(),
            n_excluded: corpus.len() - docs.len(),
            tau,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            counts: m.counts,
            roc_auc: roc_auc(&roc),
            best_tau: sweep.best_tau,
            best_f1: sweep.best_f1,
        },
    )?;
    write_roc(&mut out, &roc)?;
    write_thresholds(&mut out, &sweep.table)?;
    println!(
        "{name}: tau {tau} P {:.4} R {:.4} F1 {:.4}",
        m.precision, m.recall, m.f1
    );
    out.finish("eval")
}

fn write_roc(out: &mut RunDir, roc: &[crate::eval::RocPoint]) -> Result<()> {
    let rows: Vec<Vec<String>> = roc
        .iter()
        .map(|p| vec![num(p.tau), num(p.tpr), num(p.fpr)])
        .collect();
    out.write_csv("roc.csv", &["tau", "tpr", "fpr"], &rows)
}

fn write_thresholds(out: &mut RunDir, table: &[crate::models::SweepRow]) -> Result<()> {
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| vec![num(r.tau), num(r.precision), num(r.recall), num(r.f1)])
        .collect();
    out.write_csv(
        "thresholds.csv",
        &["tau", "precision", "recall", "f1"],
        &rows,
    )
}

fn fold_row(label: String, r: &crate::eval::FoldResult) -> Vec<String> {
    vec![
        label,
        r.n_train.to_string(),
        r.n_valid.to_string(),
        r.n_test.to_string(),
        num(r.precision),
        num(r.recall),
        num(r.f1),
        num(r.tau),
    ]
}

fn write_cv_csv(out: &mut RunDir, name: &str, report: &CvReport) -> Result<()> {
    let mut rows: Vec<Vec<String>> = report
        .folds
        .iter()
        .map(|r| fold_row(r.fold.to_string(), r))
        .collect();
    rows.push(vec![
        "mean".into(),
        String::new(),
        String::new(),
        String::new(),
        num(report.precision.mean),
        num(report.recall.mean),
        num(report.f1.mean),
        num(report.tau.mean),
    ]);
    out.write_csv(
        name,
        &[
            "fold",
            "n_train",
            "n_valid",
            "n_test",
            "precision",
            "recall",
            "f1",
            "tau",
        ],
        &rows,
    )
}

/// Cross-validation, or a grid of them when the spec has sweep lists.
pub fn cmd_cv(args: &RunArgs, save_checkpoints: bool) -> Result<PathBuf> {
    let loaded = LoadedSpec::load(args)?;
    let spec = &loaded.spec;
    let corpus = loaded.corpus()?;
    let fixed = loaded.fixed_dictionary()?;
    let plan = make_folds(&corpus, spec.k_folds, spec.seed)?;
    let grid = spec.expand_sweep();
    let is_sweep = !spec.sweep.is_empty();

    let mut out = loaded.run_dir(args)?;
    out.write_json("spec.json", spec)?;
    let mut reports = Vec::new();
    let mut sweep_rows = Vec::new();
    for (tag, point) in &grid {
        let outcome = cross_validate(point, &corpus, &plan, fixed.as_ref(), save_checkpoints)?;
        let report = outcome.report.clone();
        let prefix = if is_sweep {
            format!("{}/", sanitize(tag))
        } else {
            String::new()
        };
        if is_sweep {
            write_cv_csv(&mut out, &format!("{prefix}cv.csv"), &report)?;
        } else {
            out.write_json("cv.json", &report)?;
            write_cv_csv(&mut out, "cv.csv", &report)?;
            let (scores, gold) = outcome.pooled_test();
            let step = point.train.grid_step;
            write_roc(
                &mut out,
                &roc_curve(&scores, &gold, &threshold_grid(step)?)?,
            )?;
            write_thresholds(&mut out, &sweep_threshold(&scores, &gold, step)?.table)?;
        }
        if save_checkpoints {
            for fold in &outcome.folds {
                if let Some(c) = &fold.classifier {
                    let dir = format!("{prefix}fold{}", fold.result.fold);
                    out.write(
                        &format!("{dir}/dictionary.txt"),
                        c.dictionary.to_file_contents().as_bytes(),
                    )?;
                    out.write(
                        &format!("{dir}/checkpoint.json"),
                        &c.to_checkpoint(&point.name, &report.spec_hash, point.seed)
                            .to_json()?,
                    )?;
                }
            }
        }
        let label = if tag.is_empty() {
            spec.name.clone()
        } else {
            format!("{} {tag}", spec.name)
        };
        println!(
            "{label}: F1 {:.4} ± {:.4} (P {:.4}, R {:.4}, tau {:.3})",
            report.f1.mean,
            report.f1.std,
            report.precision.mean,
            report.recall.mean,
            report.tau.mean
        );
        sweep_rows.push(sweep_row(tag, point, &report));
        reports.push(report);
    }
    if is_sweep {
        out.write_json("sweep.json", &reports)?;
        out.write_csv(
            "sweep.csv",
            &[
                "config",
                "dict_size",
                "n_kernels",
                "kernel_width",
                "seq_len",
                "emb_dim",
                "output_activation",
                "precision",
                "recall",
                "f1",
                "f1_std",
                "tau",
                "config_hash",
            ],
            &sweep_rows,
        )?;
        out.finish("sweep")
    } else {
        out.finish("cv")
    }
}

fn sweep_row(tag: &str, s: &ExperimentSpec, r: &CvReport) -> Vec<String> {
    let activation = match s.architecture {
        crate::experiment::Architecture::Cnn => s.cnn.output_activation,
        _ => s.fdnn.output_activation,
    };
    vec![
        tag.to_string(),
        s.dict_size.to_string(),
        s.cnn.n_kernels.to_string(),
        s.cnn.kernel_width.to_string(),
        s.cnn.seq_len.to_string(),
        s.cnn.emb_dim.to_string(),
        serde_json::to_string(&activation)
            .unwrap_or_default()
            .trim_matches('"')
            .to_string(),
        num(r.precision.mean),
        num(r.recall.mean),
        num(r.f1.mean),
        num(r.f1.std),
        num(r.tau.mean),
        r.spec_hash.clone(),
    ]
}

fn sanitize(tag: &str) -> String {
    tag.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '=' || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_subcommands() {
        for args in [
            vec![
                "docclass",
                "build-dict",
                "--corpus",
                "c.jsonl",
                "--size",
                "10",
                "--out",
                "d.txt",
            ],
            vec![
                "docclass", "train", "--spec", "s.json", "--seed", "3", "--tau", "0.2",
            ],
            vec![
                "docclass",
                "--jobs",
                "2",
                "cv",
                "--spec",
                "s.json",
                "--save-checkpoints",
            ],
            vec!["docclass", "sweep", "--spec", "s.json", "--run-name", "r"],
            vec![
                "docclass",
                "eval",
                "--checkpoint",
                "c",
                "--dictionary",
                "d",
                "--corpus",
                "x",
            ],
            vec!["docclass", "synth", "--out", "x.jsonl"],
        ] {
            Cli::try_parse_from(args).unwrap();
        }
    }

    #[test]
    fn bad_run_name_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(RunDir::create(dir.path().into(), Some("a/b"), "x", String::new(), 0).is_err());
    }

    #[test]
    fn csv_rows_carry_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = RunDir::create(dir.path().into(), Some("r"), "x", "abc".into(), 9).unwrap();
        out.write_csv("t.csv", &["a"], &[vec!["1".into()]]).unwrap();
        let path = out.finish("test").unwrap();
        assert_eq!(
            fs::read_to_string(path.join("t.csv")).unwrap(),
            "a,spec_hash,seed\n1,abc,9\n"
        );
        let manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(path.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["files"][0]["file"], "t.csv");
    }
}
