//! Soft-voting ensembles: members trained with different seeds and pool
//! sizes suffer different hash collisions, so averaging their probability
//! vectors recovers accuracy the individual tables gave up. Pool sizes here
//! are deliberately starved to make the effect visible.

use hashemb::embedding::{EmbeddingConfig, HashEmbedding};
use hashemb::model::{ensemble_evaluate, evaluate, train, LinearClassifier, TrainConfig};
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

fn synthetic_dataset(per_class: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler: Vec<String> = (0..120).map(|i| format!("filler{i}")).collect();
    let mut samples = Vec::new();
    for _ in 0..per_class {
        for (label, topic) in TOPICS.iter().enumerate() {
            let mut words: Vec<String> = Vec::new();
            for _ in 0..rng.random_range(2..=4) {
                words.push((*topic.choose(&mut rng).unwrap()).to_string());
            }
            for _ in 0..rng.random_range(8..=16) {
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
    let train_ds = synthetic_dataset(120, 11);
    let test_ds = synthetic_dataset(50, 999);
    let docs = TokenDocs::from_dataset(&train_ds, 1);
    let test_docs = TokenDocs::from_dataset(&test_ds, 1);

    // Tiny pools collide hard; each (seed, B) pair collides differently.
    let member_shapes = [(1u64, 24u64), (2, 32), (3, 48)];
    let mut members: Vec<LinearClassifier> = Vec::new();
    for &(seed, buckets) in &member_shapes {
        let embedding = HashEmbedding::new(EmbeddingConfig::hashed(1 << 12, buckets, 2, 8, seed))?;
        let mut model = LinearClassifier::new(embedding, TOPICS.len())?;
        let config = TrainConfig {
            batch_size: 64,
            max_epochs: 15,
            patience: 4,
            val_fraction: 0.1,
            snippets: false,
            seed,
            adam: Default::default(),
        };
        train(&mut model, &docs, &config)?;
        members.push(model);
    }

    println!("{:<28} {:>10}", "model", "accuracy");
    for (model, &(seed, buckets)) in members.iter().zip(&member_shapes) {
        let accuracy = evaluate(model, &test_docs)?;
        println!("{:<28} {accuracy:>10.4}", format!("member seed={seed} B={buckets}"));
    }
    let ensemble = ensemble_evaluate(&members, &test_docs)?;
    println!("{:<28} {ensemble:>10.4}", "soft-voting ensemble");
    Ok(())
}
