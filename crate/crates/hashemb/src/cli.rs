//! Command-line surface over the library: `train`, `evaluate`, `inspect`,
//! `collision-stats` and `params`.
//!
//! Every training run leaves three artifacts next to the model file: the
//! model bundle itself, a `.metrics.jsonl` stream with one record per epoch,
//! and a `.manifest.json` whose `argv` field replays the run bit-identically.
//! Exit codes: 0 on success, 1 on runtime or IO failures, 2 on usage errors.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::embedding::{EmbeddingConfig, HashEmbedding};
use crate::hashing::{combined_collision_probability, CollisionReport};
use crate::model::{
    argmax, ensemble_predict, evaluate, evaluate_detailed, top_importance, train_observed,
    AdamConfig, ImportanceEntry, LinearClassifier, ModelBundle, RankOrder, TrainConfig,
};
use crate::text::{build_vocab, load_dataset, TokenDocs, Vocabulary};

/// Datasets whose class count is known by name, so `--data ag_news` needs no
/// `--classes`.
const KNOWN_DATASETS: &[(&str, usize)] = &[
    ("ag_news", 4),
    ("amazon_full", 5),
    ("amazon_polarity", 2),
    ("dbpedia", 14),
    ("sogou_news", 5),
    ("yahoo_answers", 10),
    ("yelp_full", 5),
    ("yelp_polarity", 2),
];

#[derive(Debug, Parser)]
#[command(
    name = "hashemb",
    version,
    about = "Bag-of-n-grams text classifiers on hashed component embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a classifier and write the model, metrics and a run manifest
    Train(TrainArgs),
    /// Score a model, or a soft-voting ensemble, on a test file
    Evaluate(EvalArgs),
    /// Show vocabulary entries with the largest and smallest importance
    Inspect(InspectArgs),
    /// Collision statistics for hashed id spaces
    CollisionStats(CollisionArgs),
    /// Parameter accounting against a standard embedding table
    Params(ParamsArgs),
}

/// Token-to-vector wiring selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Hashed ids, `k` shared-pool rows per id, trainable importance
    Hashed,
    /// Dictionary ids (vocabulary built from the training split), otherwise
    /// like `hashed`
    Dict,
    /// Hashing trick: one hashed bucket per token, no importance
    Trick,
    /// Standard embedding: one dedicated row per vocabulary entry
    Standard,
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Hashed => "hashed",
        Mode::Dict => "dict",
        Mode::Trick => "trick",
        Mode::Standard => "standard",
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset directory with train.csv/test.csv, or a known dataset name
    /// resolved under ./data
    #[arg(long)]
    data: Option<String>,
    /// Training CSV (label field first, 1-based); overrides --data
    #[arg(long, value_name = "FILE")]
    train_file: Option<PathBuf>,
    /// Test CSV scored after training; overrides --data
    #[arg(long, value_name = "FILE")]
    test_file: Option<PathBuf>,
    /// Number of classes; required unless --data names a known dataset
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Hashed)]
    mode: Mode,
    /// Token id range (importance table rows)
    #[arg(long = "K", default_value_t = 1 << 20)]
    num_ids: u64,
    /// Shared component pool rows
    #[arg(long = "B", default_value_t = 1 << 16)]
    num_buckets: u64,
    /// Pool rows combined per token
    #[arg(long = "k", default_value_t = 2)]
    num_hashes: usize,
    /// Component vector dimension
    #[arg(long = "d", default_value_t = 20)]
    dim: usize,
    /// Use all n-grams up to this order
    #[arg(long, default_value_t = 2)]
    ngrams: usize,
    /// Vocabulary capacity for dict and standard modes
    #[arg(long, default_value_t = 1_000_000)]
    vocab_size: usize,
    #[arg(long, env = "HASHEMB_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 100)]
    max_epochs: usize,
    /// Stop after this many epochs without validation improvement
    #[arg(long, default_value_t = 10)]
    patience: usize,
    /// Fraction of training data held out for validation
    #[arg(long, default_value_t = 0.05)]
    val_fraction: f64,
    /// Adam learning rate
    #[arg(long, default_value_t = 0.001)]
    alpha: f32,
    /// Train on full documents instead of per-epoch random snippets
    #[arg(long)]
    no_snippets: bool,
    /// Concatenate the importance weights onto each token vector
    #[arg(long)]
    append_importance: bool,
    /// Hash importance ids independently from pool ids
    #[arg(long)]
    separate_importance_hash: bool,
    /// Use only the first N training samples
    #[arg(long, value_name = "N")]
    limit: Option<usize>,
    /// Model bundle output path
    #[arg(long, default_value = "model.hemb")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Model bundle; repeat the flag for a soft-voting ensemble
    #[arg(long = "model", value_name = "FILE", required = true)]
    models: Vec<PathBuf>,
    /// Dataset directory or known dataset name (its test.csv is scored)
    #[arg(long)]
    data: Option<String>,
    /// Explicit test CSV; overrides --data
    #[arg(long, value_name = "FILE")]
    test_file: Option<PathBuf>,
    /// Score only the first N samples
    #[arg(long, value_name = "N")]
    limit: Option<usize>,
    /// Append one JSON record per scored model (plus the ensemble) here
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    /// Model bundle trained in dict or standard mode
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// token<TAB>id table written at training time
    #[arg(long, value_name = "FILE")]
    vocab: PathBuf,
    /// Entries to show from each end of the importance ranking
    #[arg(long, short = 'n', default_value_t = 5)]
    top: usize,
    /// Append one JSON record per listed entry here
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CollisionArgs {
    /// Slot count for the direct collision question (token id range)
    #[arg(long = "K")]
    id_range: Option<u64>,
    /// Token universe size
    #[arg(long)]
    vocab: u64,
    /// Bucket count per hash function, for the combined k-hash range
    #[arg(long = "B", requires = "num_hashes")]
    num_buckets: Option<u64>,
    /// Number of hash functions, for the combined k-hash range
    #[arg(long = "k", requires = "num_buckets")]
    num_hashes: Option<u32>,
    /// Cross-check the expected collision count by simulation
    #[arg(long)]
    simulate: bool,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, env = "HASHEMB_SEED", default_value_t = 42)]
    seed: u64,
    /// Append one JSON record here
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ParamsArgs {
    /// Token id range (importance table rows; vocabulary size for the
    /// standard table)
    #[arg(long = "K", default_value_t = 10_000_000)]
    id_range: u64,
    /// Shared component pool rows
    #[arg(long = "B", default_value_t = 1_000_000)]
    num_buckets: u64,
    /// Pool rows combined per token
    #[arg(long = "k", default_value_t = 2)]
    num_hashes: u64,
    /// Component vector dimension
    #[arg(long = "d", default_value_t = 20)]
    dim: u64,
    /// Also show the parameter cost of admitting this many extra ids;
    /// repeat for a growth table
    #[arg(long, value_name = "N")]
    grow: Vec<u64>,
    /// Append one JSON record here
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

/// Argument problem detected after parsing; exits 2 like clap's own errors.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Parses `std::env::args` and runs the selected subcommand.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Inspect(args) => cmd_inspect(args),
        Command::CollisionStats(args) => cmd_collision_stats(args),
        Command::Params(args) => cmd_params(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if err.is::<UsageError>() { 2 } else { 1 })
        }
    }
}

fn known_classes(name: &str) -> Option<usize> {
    KNOWN_DATASETS
        .iter()
        .find(|&&(n, _)| n == name)
        .map(|&(_, c)| c)
}

/// `--data NAME` means `./data/NAME` unless NAME is already a directory.
fn data_dir(name: &str) -> PathBuf {
    let as_path = PathBuf::from(name);
    if as_path.is_dir() {
        as_path
    } else {
        Path::new("data").join(name)
    }
}

struct ResolvedData {
    train: PathBuf,
    test: Option<PathBuf>,
    classes: usize,
}

fn resolve_train_data(args: &TrainArgs) -> anyhow::Result<ResolvedData> {
    let mut train = args.train_file.clone();
    let mut test = args.test_file.clone();
    let mut classes = args.classes;
    if let Some(name) = &args.data {
        let dir = data_dir(name);
        if train.is_none() {
            train = Some(dir.join("train.csv"));
        }
        if test.is_none() {
            let candidate = dir.join("test.csv");
            if candidate.is_file() {
                test = Some(candidate);
            }
        }
        if classes.is_none() {
            classes = dir
                .file_name()
                .and_then(|n| known_classes(&n.to_string_lossy()));
        }
    }
    let train =
        train.ok_or_else(|| usage("no training data: pass --data DIR or --train-file FILE"))?;
    let classes =
        classes.ok_or_else(|| usage("class count unknown for this dataset: pass --classes N"))?;
    Ok(ResolvedData {
        train,
        test,
        classes,
    })
}

fn resolve_test_path(data: Option<&str>, test_file: Option<&Path>) -> anyhow::Result<PathBuf> {
    if let Some(file) = test_file {
        return Ok(file.to_path_buf());
    }
    if let Some(name) = data {
        return Ok(data_dir(name).join("test.csv"));
    }
    Err(usage("no test data: pass --data DIR or --test-file FILE"))
}

fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut file =
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher)
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(hasher.finalize()))
}

/// `model.hemb` + `.metrics.jsonl` -> `model.hemb.metrics.jsonl`, keeping the
/// artifact family together in one directory listing.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path
        .file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    name.push_str(suffix);
    path.with_file_name(name)
}

fn append_json_line<T: Serialize>(path: &Path, record: &T) -> anyhow::Result<()> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let line = serde_json::to_string(record)?;
    writeln!(file, "{line}").with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// An input file pinned by content digest.
#[derive(Debug, Serialize)]
struct DataDigest {
    path: String,
    sha256: String,
    samples: usize,
}

/// Everything needed to audit or replay a training run: the exact argument
/// vector (`argv` re-fed to this binary reproduces the model bit for bit),
/// resolved configuration and seeds, input digests, and artifact digests.
#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    argv: Vec<String>,
    seed: u64,
    embedding: EmbeddingConfig,
    train_config: TrainConfig,
    ngram_order: usize,
    parameter_count: u64,
    train_data: DataDigest,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_data: Option<DataDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vocab_file: Option<String>,
    model_file: String,
    model_sha256: String,
    epochs_run: usize,
    best_epoch: usize,
    best_val_loss: f64,
    best_val_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_accuracy: Option<f64>,
    duration_secs: f64,
}

/// The canonical argument vector equivalent to this run: fully resolved, so
/// replaying it does not depend on --data lookups or environment seeds.
fn train_argv(args: &TrainArgs, data: &ResolvedData) -> Vec<String> {
    let mut argv: Vec<String> = vec![
        "train".into(),
        "--train-file".into(),
        data.train.display().to_string(),
        "--classes".into(),
        data.classes.to_string(),
        "--mode".into(),
        mode_name(args.mode).into(),
        "--K".into(),
        args.num_ids.to_string(),
        "--B".into(),
        args.num_buckets.to_string(),
        "--k".into(),
        args.num_hashes.to_string(),
        "--d".into(),
        args.dim.to_string(),
        "--ngrams".into(),
        args.ngrams.to_string(),
        "--vocab-size".into(),
        args.vocab_size.to_string(),
        "--seed".into(),
        args.seed.to_string(),
        "--batch-size".into(),
        args.batch_size.to_string(),
        "--max-epochs".into(),
        args.max_epochs.to_string(),
        "--patience".into(),
        args.patience.to_string(),
        "--val-fraction".into(),
        args.val_fraction.to_string(),
        "--alpha".into(),
        args.alpha.to_string(),
    ];
    if let Some(test) = &data.test {
        argv.push("--test-file".into());
        argv.push(test.display().to_string());
    }
    if let Some(limit) = args.limit {
        argv.push("--limit".into());
        argv.push(limit.to_string());
    }
    if args.no_snippets {
        argv.push("--no-snippets".into());
    }
    if args.append_importance {
        argv.push("--append-importance".into());
    }
    if args.separate_importance_hash {
        argv.push("--separate-importance-hash".into());
    }
    argv.push("--out".into());
    argv.push(args.out.display().to_string());
    argv
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    if args.ngrams == 0 {
        return Err(usage("--ngrams must be at least 1"));
    }
    if matches!(args.mode, Mode::Trick | Mode::Standard)
        && (args.append_importance || args.separate_importance_hash)
    {
        return Err(usage(
            "importance switches only apply to hashed and dict modes",
        ));
    }
    if args.limit == Some(0) {
        return Err(usage("--limit must be at least 1"));
    }
    let data = resolve_train_data(&args)?;

    let mut train_ds = load_dataset(&data.train, data.classes)?;
    if let Some(limit) = args.limit {
        train_ds.samples.truncate(limit);
    }
    let train_digest = DataDigest {
        path: data.train.display().to_string(),
        sha256: sha256_file(&data.train)?,
        samples: train_ds.len(),
    };
    println!(
        "loaded {} training samples from {} ({} classes)",
        train_ds.len(),
        data.train.display(),
        data.classes
    );

    let vocab = match args.mode {
        Mode::Dict | Mode::Standard => {
            let texts = train_ds.samples.iter().map(|s| s.text.as_str());
            let v = build_vocab(texts, args.ngrams, args.vocab_size)?;
            println!(
                "built vocabulary: {} n-grams up to order {}",
                v.len(),
                args.ngrams
            );
            Some(v)
        }
        Mode::Hashed | Mode::Trick => None,
    };

    // The vocabulary written to disk mirrors the embedding's own id
    // assignment, so `inspect` rows always line up with it.
    let (embedding, vocab_to_save) = match args.mode {
        Mode::Hashed => {
            let mut config = EmbeddingConfig::hashed(
                args.num_ids,
                args.num_buckets,
                args.num_hashes,
                args.dim,
                args.seed,
            );
            config.append_importance = args.append_importance;
            config.separate_importance_hash = args.separate_importance_hash;
            (HashEmbedding::new(config)?, None)
        }
        Mode::Dict => {
            let v = vocab.unwrap();
            let mut config = EmbeddingConfig::dictionary(
                v.required_id_range(),
                args.num_buckets,
                args.num_hashes,
                args.dim,
                args.seed,
            );
            config.append_importance = args.append_importance;
            config.separate_importance_hash = args.separate_importance_hash;
            let embedding = HashEmbedding::with_dictionary(config, v.to_table())?;
            (embedding, Some(v))
        }
        Mode::Trick => (
            HashEmbedding::hashing_trick(args.num_buckets, args.dim, args.seed)?,
            None,
        ),
        Mode::Standard => {
            let v = vocab.unwrap();
            let mut by_id: Vec<(&str, u64)> = v.entries().collect();
            by_id.sort_by_key(|&(_, id)| id);
            let ordered: Vec<&str> = by_id.iter().map(|&(t, _)| t).collect();
            let embedding = HashEmbedding::standard(&ordered, args.dim, args.seed)?;
            // Standard mode assigns dense 0-based ids in enrollment order.
            let table: HashMap<String, u64> = ordered
                .iter()
                .enumerate()
                .map(|(i, t)| ((*t).to_string(), i as u64))
                .collect();
            (embedding, Some(Vocabulary::from_table(table, args.ngrams)?))
        }
    };

    let cfg = embedding.config().clone();
    println!(
        "embedding: mode={} K={} B={} k={} d={} append_importance={} trainable_importance={} params={}",
        mode_name(args.mode),
        cfg.num_ids,
        cfg.num_buckets,
        cfg.num_hashes,
        cfg.dim,
        cfg.append_importance,
        cfg.importance_trainable,
        embedding.parameter_count()
    );

    let docs = TokenDocs::from_dataset(&train_ds, args.ngrams);
    let mut model = LinearClassifier::new(embedding, data.classes)?;
    println!("total trainable parameters: {}", model.parameter_count());

    let train_config = TrainConfig {
        batch_size: args.batch_size,
        max_epochs: args.max_epochs,
        patience: args.patience,
        val_fraction: args.val_fraction,
        snippets: !args.no_snippets,
        seed: args.seed,
        adam: AdamConfig {
            alpha: args.alpha,
            ..AdamConfig::default()
        },
    };

    let metrics_path = sibling(&args.out, ".metrics.jsonl");
    let metrics_file = File::create(&metrics_path)
        .with_context(|| format!("cannot create {}", metrics_path.display()))?;
    let mut metrics_out = BufWriter::new(metrics_file);
    let mut metrics_err: Option<std::io::Error> = None;
    let history = train_observed(&mut model, &docs, &train_config, |m| {
        println!(
            "epoch {:>3}: train_loss {:.4}  val_loss {:.4}  val_acc {:.4}",
            m.epoch, m.train_loss, m.val_loss, m.val_accuracy
        );
        if metrics_err.is_none() {
            let line = serde_json::to_string(m).expect("epoch metrics serialize");
            if let Err(e) = writeln!(metrics_out, "{line}") {
                metrics_err = Some(e);
            }
        }
    })?;
    if let Some(e) = metrics_err {
        return Err(e).with_context(|| format!("cannot write {}", metrics_path.display()));
    }
    metrics_out
        .flush()
        .with_context(|| format!("cannot write {}", metrics_path.display()))?;

    let best = history
        .epochs
        .iter()
        .find(|m| m.epoch == history.best_epoch)
        .copied()
        .expect("best epoch is recorded in the history");
    println!(
        "kept epoch {} of {} (val_loss {:.4}, val_acc {:.4})",
        history.best_epoch,
        history.epochs.len(),
        best.val_loss,
        best.val_accuracy
    );

    let bundle = ModelBundle {
        classifier: model,
        ngram_order: args.ngrams,
    };
    bundle.save_file(&args.out)?;
    let model_sha256 = sha256_file(&args.out)?;
    println!("model written to {} (sha256 {model_sha256})", args.out.display());

    let vocab_file = match &vocab_to_save {
        Some(v) => {
            let path = sibling(&args.out, ".vocab.tsv");
            v.save(&path)?;
            println!("vocabulary written to {}", path.display());
            Some(path)
        }
        None => None,
    };

    let mut test_digest = None;
    let mut test_accuracy = None;
    if let Some(test_path) = &data.test {
        let test_ds = load_dataset(test_path, data.classes)?;
        test_digest = Some(DataDigest {
            path: test_path.display().to_string(),
            sha256: sha256_file(test_path)?,
            samples: test_ds.len(),
        });
        let test_docs = TokenDocs::from_dataset(&test_ds, args.ngrams);
        let (acc, confusion) = evaluate_detailed(&bundle.classifier, &test_docs)?;
        println!("test accuracy {acc:.4}");
        print_confusion(&confusion, data.classes);
        test_accuracy = Some(acc);
    }

    let manifest = RunManifest {
        command: "train".into(),
        argv: train_argv(&args, &data),
        seed: args.seed,
        embedding: cfg,
        train_config,
        ngram_order: args.ngrams,
        parameter_count: bundle.classifier.parameter_count(),
        train_data: train_digest,
        test_data: test_digest,
        vocab_file: vocab_file.map(|p| p.display().to_string()),
        model_file: args.out.display().to_string(),
        model_sha256,
        epochs_run: history.epochs.len(),
        best_epoch: history.best_epoch,
        best_val_loss: best.val_loss,
        best_val_accuracy: best.val_accuracy,
        test_accuracy,
        duration_secs: started.elapsed().as_secs_f64(),
    };
    let manifest_path = sibling(&args.out, ".manifest.json");
    let mut manifest_json = serde_json::to_string_pretty(&manifest)?;
    manifest_json.push('\n');
    std::fs::write(&manifest_path, manifest_json)
        .with_context(|| format!("cannot write {}", manifest_path.display()))?;
    println!("manifest written to {}", manifest_path.display());
    Ok(())
}

fn print_confusion(confusion: &[u64], classes: usize) {
    println!("confusion matrix (rows true class, columns predicted):");
    for t in 0..classes {
        let row = &confusion[t * classes..(t + 1) * classes];
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>8}")).collect();
        let total: u64 = row.iter().sum();
        println!("  class {t}: {}  (n={total})", cells.join(" "));
    }
}

#[derive(Debug, Serialize)]
struct EvalRecord<'a> {
    model: &'a str,
    test_file: &'a str,
    samples: usize,
    accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    confusion: Option<&'a [u64]>,
}

fn cmd_evaluate(args: EvalArgs) -> anyhow::Result<()> {
    if args.limit == Some(0) {
        return Err(usage("--limit must be at least 1"));
    }
    let test_path = resolve_test_path(args.data.as_deref(), args.test_file.as_deref())?;

    let mut bundles = Vec::with_capacity(args.models.len());
    for path in &args.models {
        let bundle = ModelBundle::load_file(path)
            .with_context(|| format!("loading {}", path.display()))?;
        bundles.push(bundle);
    }
    let classes = bundles[0].classifier.num_classes();
    let ngram_order = bundles[0].ngram_order;
    for (bundle, path) in bundles.iter().zip(&args.models).skip(1) {
        if bundle.classifier.num_classes() != classes {
            anyhow::bail!(
                "{}: {} classes, but {} has {classes}",
                path.display(),
                bundle.classifier.num_classes(),
                args.models[0].display()
            );
        }
        if bundle.ngram_order != ngram_order {
            anyhow::bail!(
                "{}: n-gram order {}, but {} was trained with {ngram_order}",
                path.display(),
                bundle.ngram_order,
                args.models[0].display()
            );
        }
    }

    let mut test_ds = load_dataset(&test_path, classes)?;
    if let Some(limit) = args.limit {
        test_ds.samples.truncate(limit);
    }
    let docs = TokenDocs::from_dataset(&test_ds, ngram_order);
    println!(
        "scoring {} samples from {} (n-grams up to order {ngram_order})",
        docs.len(),
        test_path.display()
    );
    let test_file = test_path.display().to_string();

    if let [bundle] = &bundles[..] {
        let (accuracy, confusion) = evaluate_detailed(&bundle.classifier, &docs)?;
        println!("accuracy {accuracy:.4}");
        print_confusion(&confusion, classes);
        if let Some(json) = &args.json {
            append_json_line(
                json,
                &EvalRecord {
                    model: &args.models[0].display().to_string(),
                    test_file: &test_file,
                    samples: docs.len(),
                    accuracy,
                    confusion: Some(&confusion),
                },
            )?;
        }
        return Ok(());
    }

    let members: Vec<LinearClassifier> = bundles.into_iter().map(|b| b.classifier).collect();
    for (member, path) in members.iter().zip(&args.models) {
        let accuracy = evaluate(member, &docs)?;
        println!("member {}: accuracy {accuracy:.4}", path.display());
        if let Some(json) = &args.json {
            append_json_line(
                json,
                &EvalRecord {
                    model: &path.display().to_string(),
                    test_file: &test_file,
                    samples: docs.len(),
                    accuracy,
                    confusion: None,
                },
            )?;
        }
    }
    let mut confusion = vec![0u64; classes * classes];
    for (doc, &label) in docs.docs.iter().zip(&docs.labels) {
        let probs = ensemble_predict(&members, doc)?;
        confusion[label * classes + argmax(&probs)] += 1;
    }
    let correct: u64 = (0..classes).map(|i| confusion[i * classes + i]).sum();
    let accuracy = correct as f64 / docs.len() as f64;
    println!("ensemble ({} members) accuracy {accuracy:.4}", members.len());
    print_confusion(&confusion, classes);
    if let Some(json) = &args.json {
        append_json_line(
            json,
            &EvalRecord {
                model: "ensemble",
                test_file: &test_file,
                samples: docs.len(),
                accuracy,
                confusion: Some(&confusion),
            },
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RankedEntry<'a> {
    list: &'static str,
    rank: usize,
    #[serde(flatten)]
    entry: &'a ImportanceEntry,
}

fn print_importance(entries: &[ImportanceEntry]) {
    for (i, e) in entries.iter().enumerate() {
        let row = e
            .row
            .iter()
            .map(|v| format!("{v:+.4}"))
            .collect::<Vec<_>>()
            .join(", ");
        println!(
            "  {:>4}. {:<24} id {:<8} magnitude {:.4}  row [{row}]",
            i + 1,
            e.token,
            e.id,
            e.magnitude
        );
    }
}

fn cmd_inspect(args: InspectArgs) -> anyhow::Result<()> {
    if args.top == 0 {
        return Err(usage("-n must be at least 1"));
    }
    let bundle = ModelBundle::load_file(&args.model)
        .with_context(|| format!("loading {}", args.model.display()))?;
    let vocab = Vocabulary::load(&args.vocab)?;
    let embedding = bundle.classifier.embedding();
    let top = top_importance(embedding, &vocab, args.top, RankOrder::Largest)?;
    let bottom = top_importance(embedding, &vocab, args.top, RankOrder::Smallest)?;

    println!(
        "model {} ({} vocabulary entries, importance width {})",
        args.model.display(),
        vocab.len(),
        embedding.config().num_hashes
    );
    println!("top {} by importance magnitude:", top.len());
    print_importance(&top);
    println!("bottom {} by importance magnitude:", bottom.len());
    print_importance(&bottom);

    if let Some(json) = &args.json {
        for (i, entry) in top.iter().enumerate() {
            append_json_line(
                json,
                &RankedEntry {
                    list: "top",
                    rank: i + 1,
                    entry,
                },
            )?;
        }
        for (i, entry) in bottom.iter().enumerate() {
            append_json_line(
                json,
                &RankedEntry {
                    list: "bottom",
                    rank: i + 1,
                    entry,
                },
            )?;
        }
    }
    Ok(())
}

fn cmd_collision_stats(args: CollisionArgs) -> anyhow::Result<()> {
    if args.id_range.is_none() && args.num_buckets.is_none() {
        return Err(usage(
            "pass --K for a direct range, or --B with --k for a combined range",
        ));
    }
    if args.vocab == 0 {
        return Err(usage("--vocab must be at least 1"));
    }
    if args.id_range == Some(0) || args.num_buckets == Some(0) || args.num_hashes == Some(0) {
        return Err(usage("--K, --B and --k must be at least 1"));
    }

    let mut record = serde_json::Map::new();
    record.insert("vocab_size".into(), args.vocab.into());

    if let Some(id_range) = args.id_range {
        let mut report = CollisionReport::compute(id_range, args.vocab)?;
        if args.simulate {
            report = report.with_simulation(args.trials, args.seed)?;
        }
        println!("K={id_range}");
        println!("vocab_size={}", args.vocab);
        println!("p_col_exact={:.6e}", report.p_col_exact);
        println!("p_col_approx={:.6e}", report.p_col_approx);
        println!(
            "expected_tokens_in_collision={:.3}",
            report.expected_tokens_in_collision
        );
        if let Some(mc) = &report.monte_carlo_estimate {
            println!("monte_carlo_mean={:.3}", mc.mean);
            println!("monte_carlo_se={:.3}", mc.standard_error);
            println!("monte_carlo_trials={}", mc.trials);
        }
        if let serde_json::Value::Object(fields) = serde_json::to_value(&report)? {
            record.extend(fields);
        }
    }

    if let (Some(buckets), Some(hashes)) = (args.num_buckets, args.num_hashes) {
        let combined = combined_collision_probability(buckets, hashes, args.vocab);
        println!("combined_B={buckets}");
        println!("combined_k={hashes}");
        println!("combined_p_col={combined:.6e}");
        record.insert("combined_B".into(), buckets.into());
        record.insert("combined_k".into(), hashes.into());
        record.insert("combined_p_col".into(), combined.into());
    }

    if let Some(json) = &args.json {
        append_json_line(json, &serde_json::Value::Object(record))?;
    }
    Ok(())
}

fn cmd_params(args: ParamsArgs) -> anyhow::Result<()> {
    if args.id_range == 0 || args.num_buckets == 0 || args.num_hashes == 0 || args.dim == 0 {
        return Err(usage("--K, --B, --k and --d must be at least 1"));
    }
    let hash = args
        .num_buckets
        .checked_mul(args.dim)
        .and_then(|pool| args.id_range.checked_mul(args.num_hashes).map(|imp| (pool, imp)))
        .and_then(|(pool, imp)| pool.checked_add(imp))
        .ok_or_else(|| usage("parameter count overflows u64"))?;
    let standard = args
        .id_range
        .checked_mul(args.dim)
        .ok_or_else(|| usage("parameter count overflows u64"))?;
    let ratio = standard as f64 / hash as f64;

    println!("hash_embedding_params={hash}");
    println!("standard_embedding_params={standard}");
    println!("ratio={ratio:.3}");

    let mut growth = Vec::with_capacity(args.grow.len());
    if !args.grow.is_empty() {
        println!("{:>16} {:>20} {:>20}", "extra_ids", "hash_delta", "standard_delta");
        for &extra in &args.grow {
            let hash_delta = extra
                .checked_mul(args.num_hashes)
                .ok_or_else(|| usage("growth delta overflows u64"))?;
            let standard_delta = extra
                .checked_mul(args.dim)
                .ok_or_else(|| usage("growth delta overflows u64"))?;
            println!("{extra:>16} {hash_delta:>20} {standard_delta:>20}");
            growth.push(serde_json::json!({
                "extra_ids": extra,
                "hash_delta": hash_delta,
                "standard_delta": standard_delta,
            }));
        }
    }

    if let Some(json) = &args.json {
        let mut record = serde_json::json!({
            "K": args.id_range,
            "B": args.num_buckets,
            "k": args.num_hashes,
            "d": args.dim,
            "hash_embedding_params": hash,
            "standard_embedding_params": standard,
            "ratio": ratio,
        });
        if !growth.is_empty() {
            record["growth"] = serde_json::Value::Array(growth);
        }
        append_json_line(json, &record)?;
    }
    Ok(())
}
