//! Desk-scale run on the AG News benchmark: 120k training headlines in four
//! topics, bigram features hashed into a shared pool.
//!
//! Expects `train.csv` and `test.csv` under the given directory (default
//! `data/ag_news`; `scripts/fetch_ag_news.sh` downloads them). Without the
//! files the example prints fetch instructions and exits cleanly.
//!
//! Usage:
//!   cargo run --release --example ag_news -- [DIR] [--full]
//!
//! The default is a 20k-document subsample with a smaller table, a few
//! minutes on one core. `--full` trains the whole split with the benchmark
//! configuration (K = 2^20, B = 2^16, k = 2, d = 20), which takes a while.

use std::path::PathBuf;

use hashemb::embedding::{EmbeddingConfig, HashEmbedding};
use hashemb::model::{evaluate_detailed, train_observed, LinearClassifier, TrainConfig};
use hashemb::text::{load_dataset, TokenDocs};

fn main() -> hashemb::Result<()> {
    let mut dir = PathBuf::from("data/ag_news");
    let mut full = false;
    for arg in std::env::args().skip(1) {
        if arg == "--full" {
            full = true;
        } else {
            dir = PathBuf::from(arg);
        }
    }
    let train_path = dir.join("train.csv");
    let test_path = dir.join("test.csv");
    if !train_path.is_file() || !test_path.is_file() {
        println!("AG News CSVs not found under {}", dir.display());
        println!("fetch them with: scripts/fetch_ag_news.sh");
        println!("(or pass a directory containing train.csv and test.csv)");
        return Ok(());
    }

    let mut train_ds = load_dataset(&train_path, 4)?;
    let test_ds = load_dataset(&test_path, 4)?;
    if !full {
        train_ds.samples.truncate(20_000);
    }
    println!(
        "AG News: {} train / {} test documents ({})",
        train_ds.len(),
        test_ds.len(),
        if full { "full split" } else { "subsample; pass --full for the whole split" }
    );

    let (num_ids, num_buckets) = if full { (1u64 << 20, 1u64 << 16) } else { (1 << 18, 1 << 14) };
    let embedding =
        HashEmbedding::new(EmbeddingConfig::hashed(num_ids, num_buckets, 2, 20, 42))?;
    let mut model = LinearClassifier::new(embedding, 4)?;
    println!(
        "bigram features, K = {num_ids}, B = {num_buckets}, k = 2, d = 20; \
         {} trainable parameters",
        model.parameter_count()
    );

    let docs = TokenDocs::from_dataset(&train_ds, 2);
    let config = TrainConfig {
        batch_size: 256,
        max_epochs: if full { 100 } else { 15 },
        patience: if full { 10 } else { 4 },
        val_fraction: 0.05,
        snippets: true,
        seed: 42,
        adam: Default::default(),
    };
    let history = train_observed(&mut model, &docs, &config, |m| {
        println!(
            "epoch {:>3}: train_loss {:.4}  val_loss {:.4}  val_acc {:.4}",
            m.epoch, m.train_loss, m.val_loss, m.val_accuracy
        );
    })?;
    println!("kept epoch {}", history.best_epoch);

    let test_docs = TokenDocs::from_dataset(&test_ds, 2);
    let (accuracy, confusion) = evaluate_detailed(&model, &test_docs)?;
    println!();
    println!("test accuracy: {accuracy:.4}");
    println!("confusion (rows true, columns predicted):");
    for t in 0..4 {
        println!("  class {t}: {:?}", &confusion[t * 4..(t + 1) * 4]);
    }
    Ok(())
}
