//! End-to-end training on a synthetic topic corpus: hashed bigram features,
//! minibatch Adam with snippet sampling, early stopping on a held-out
//! validation split, then scoring on fresh documents.

use hashemb::embedding::{EmbeddingConfig, HashEmbedding};
use hashemb::model::{evaluate_detailed, train_observed, LinearClassifier, TrainConfig};
use hashemb::text::{Dataset, Sample, TokenDocs};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOPICS: [&[&str]; 4] = [
    &["striker", "goal", "league", "coach", "derby", "transfer", "midfield", "keeper"],
    &["shares", "market", "profit", "merger", "earnings", "investor", "dividend", "bond"],
    &["rocket", "orbit", "telescope", "genome", "neutrino", "reactor", "probe", "quantum"],
    &["treaty", "senate", "ballot", "minister", "reform", "coalition", "embassy", "summit"],
];

/// Balanced corpus: each document mixes a few topic words into common
/// filler, shuffled so position carries no signal.
fn synthetic_dataset(per_class: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler: Vec<String> = (0..120).map(|i| format!("filler{i}")).collect();
    let mut samples = Vec::new();
    for _ in 0..per_class {
        for (label, topic) in TOPICS.iter().enumerate() {
            let mut words: Vec<String> = Vec::new();
            for _ in 0..rng.random_range(3..=6) {
                words.push((*topic.choose(&mut rng).unwrap()).to_string());
            }
            for _ in 0..rng.random_range(6..=14) {
                words.push(filler.choose(&mut rng).unwrap().clone());
            }
            words.shuffle(&mut rng);
            samples.push(Sample {
                label,
                text: words.join(" "),
            });
        }
    }
    Dataset::new(samples, TOPICS.len(), "synthetic").unwrap()
}

fn main() -> hashemb::Result<()> {
    let train_ds = synthetic_dataset(150, 11);
    let test_ds = synthetic_dataset(40, 999);
    let docs = TokenDocs::from_dataset(&train_ds, 2);
    let test_docs = TokenDocs::from_dataset(&test_ds, 2);

    let embedding = HashEmbedding::new(EmbeddingConfig::hashed(1 << 14, 1 << 9, 2, 16, 5))?;
    let mut model = LinearClassifier::new(embedding, TOPICS.len())?;
    println!(
        "training on {} documents, {} trainable parameters",
        docs.len(),
        model.parameter_count()
    );

    let config = TrainConfig {
        batch_size: 64,
        max_epochs: 25,
        patience: 5,
        val_fraction: 0.1,
        snippets: true,
        seed: 5,
        adam: Default::default(),
    };
    let history = train_observed(&mut model, &docs, &config, |m| {
        println!(
            "epoch {:>2}: train_loss {:.4}  val_loss {:.4}  val_acc {:.4}",
            m.epoch, m.train_loss, m.val_loss, m.val_accuracy
        );
    })?;
    println!(
        "kept epoch {} of {}",
        history.best_epoch,
        history.epochs.len()
    );

    let (accuracy, confusion) = evaluate_detailed(&model, &test_docs)?;
    println!();
    println!("held-out accuracy: {accuracy:.4}");
    println!("confusion (rows true, columns predicted):");
    let c = TOPICS.len();
    for t in 0..c {
        println!("  class {t}: {:?}", &confusion[t * c..(t + 1) * c]);
    }
    Ok(())
}
