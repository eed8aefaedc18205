//! Importance weights double as a learned relevance detector. This corpus
//! plants ten signal tokens that decide the label among two thousand noise
//! tokens; after dictionary-mode training the planted tokens surface at the
//! top of the importance ranking.

use hashemb::embedding::{EmbeddingConfig, HashEmbedding};
use hashemb::model::{top_importance, train, LinearClassifier, RankOrder, TrainConfig};
use hashemb::text::{build_vocab, Dataset, Sample, TokenDocs};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two balanced classes. Documents of class c contain a few of c's five
/// signal tokens (`sig0..sig4` vs `sig5..sig9`) buried in noise drawn from a
/// shared pool.
fn planted_corpus(docs: usize, noise_pool: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<String> = (0..noise_pool).map(|i| format!("noise{i}")).collect();
    let mut samples = Vec::new();
    for i in 0..docs {
        let label = i % 2;
        let mut words: Vec<String> = Vec::new();
        for _ in 0..rng.random_range(2..=4) {
            let s = rng.random_range(0..5) + 5 * label;
            words.push(format!("sig{s}"));
        }
        for _ in 0..20 {
            words.push(noise.choose(&mut rng).unwrap().clone());
        }
        words.shuffle(&mut rng);
        samples.push(Sample {
            label,
            text: words.join(" "),
        });
    }
    Dataset::new(samples, 2, "planted").unwrap()
}

fn main() -> hashemb::Result<()> {
    let dataset = planted_corpus(1200, 2000, 21);
    let vocab = build_vocab(dataset.samples.iter().map(|s| s.text.as_str()), 1, 50_000)?;
    println!("vocabulary: {} tokens, 10 of them planted signals", vocab.len());

    let config = EmbeddingConfig::dictionary(vocab.required_id_range(), 1 << 10, 2, 12, 33);
    let embedding = HashEmbedding::with_dictionary(config, vocab.to_table())?;
    let mut model = LinearClassifier::new(embedding, 2)?;

    let docs = TokenDocs::from_dataset(&dataset, 1);
    let train_config = TrainConfig {
        batch_size: 64,
        max_epochs: 20,
        patience: 5,
        val_fraction: 0.1,
        snippets: false,
        seed: 33,
        adam: Default::default(),
    };
    let history = train(&mut model, &docs, &train_config)?;
    println!(
        "trained {} epochs, kept epoch {}",
        history.epochs.len(),
        history.best_epoch
    );
    println!();

    let top = top_importance(model.embedding(), &vocab, 15, RankOrder::Largest)?;
    println!("top 15 by importance magnitude (max |weight| per token):");
    for (i, entry) in top.iter().enumerate() {
        let marker = if entry.token.starts_with("sig") {
            "  <- planted"
        } else {
            ""
        };
        println!(
            "  {:>2}. {:<10} magnitude {:.3}{marker}",
            i + 1,
            entry.token,
            entry.magnitude
        );
    }

    let planted_in_top10 = top
        .iter()
        .take(10)
        .filter(|e| e.token.starts_with("sig"))
        .count();
    println!();
    println!("planted tokens in the top 10: {planted_in_top10} of 10");
    Ok(())
}
