//! Shared helpers for the integration suites: a double-precision twin of the
//! model for finite-difference gradient checks, and synthetic corpora.
#![allow(dead_code)]

use hashemb::embedding::HashEmbedding;
use hashemb::model::LinearClassifier;
use hashemb::text::{Dataset, Sample};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// f64 copy of an embedding's tables. The hash wiring (ids, buckets) still
/// comes from the original embedding; only the arithmetic is promoted, which
/// makes the forward pass smooth enough for central differences.
#[derive(Debug, Clone)]
pub struct TwinEmbedding {
    pub pool: Vec<f64>,
    pub importance: Vec<f64>,
    pub dim: usize,
    pub num_hashes: usize,
    pub append: bool,
    pub output_dim: usize,
}

impl TwinEmbedding {
    pub fn of(emb: &HashEmbedding) -> Self {
        let (pool, importance) = emb.snapshot();
        TwinEmbedding {
            pool: pool.iter().map(|&x| f64::from(x)).collect(),
            importance: importance.iter().map(|&x| f64::from(x)).collect(),
            dim: emb.config().dim,
            num_hashes: emb.config().num_hashes,
            append: emb.config().append_importance,
            output_dim: emb.output_dim(),
        }
    }

    pub fn embed_bag(&self, emb: &HashEmbedding, tokens: &[String]) -> Vec<f64> {
        let mut out = vec![0.0f64; self.output_dim];
        for token in tokens {
            let imp_id = emb.importance_token_id(token) as usize;
            for (i, &bucket) in emb.token_buckets(token).iter().enumerate() {
                let p = self.importance[imp_id * self.num_hashes + i];
                let row = &self.pool[bucket as usize * self.dim..][..self.dim];
                for (o, &e) in out[..self.dim].iter_mut().zip(row) {
                    *o += p * e;
                }
                if self.append {
                    out[self.dim + i] += p;
                }
            }
        }
        out
    }
}

/// f64 copy of the full classifier.
#[derive(Debug, Clone)]
pub struct TwinModel {
    pub emb: TwinEmbedding,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub num_classes: usize,
}

impl TwinModel {
    pub fn of(model: &LinearClassifier) -> Self {
        TwinModel {
            emb: TwinEmbedding::of(model.embedding()),
            weights: model.weights().iter().map(|&x| f64::from(x)).collect(),
            bias: model.bias().iter().map(|&x| f64::from(x)).collect(),
            num_classes: model.num_classes(),
        }
    }

    /// Softmax cross-entropy loss, computed stably in f64.
    pub fn loss(&self, model: &LinearClassifier, tokens: &[String], label: usize) -> f64 {
        let doc = self.emb.embed_bag(model.embedding(), tokens);
        let e_dim = doc.len();
        let logits: Vec<f64> = (0..self.num_classes)
            .map(|c| {
                self.bias[c]
                    + self.weights[c * e_dim..(c + 1) * e_dim]
                        .iter()
                        .zip(&doc)
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        log_z - logits[label]
    }
}

/// Relative error with a denominator floor so near-zero pairs compare
/// absolutely instead of blowing up.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Distinct pseudo-random tokens (lowercase word plus a serial suffix).
pub fn random_tokens(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let len = rng.random_range(1..=10);
            let mut token: String = (0..len)
                .map(|_| char::from(b'a' + rng.random_range(0..26u8)))
                .collect();
            token.push_str(&format!("{i}"));
            token
        })
        .collect()
}

pub const TOPICS: [&[&str]; 4] = [
    &["striker", "goal", "league", "coach", "derby", "transfer", "midfield", "keeper"],
    &["shares", "market", "profit", "merger", "earnings", "investor", "dividend", "bond"],
    &["rocket", "orbit", "telescope", "genome", "neutrino", "reactor", "probe", "quantum"],
    &["treaty", "senate", "ballot", "minister", "reform", "coalition", "embassy", "summit"],
];

/// Balanced linearly separable corpus: a few topic words per document mixed
/// into shared filler, shuffled so position carries no signal.
pub fn separable_dataset(per_class: usize, classes: usize, seed: u64) -> Dataset {
    assert!(classes <= TOPICS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler: Vec<String> = (0..120).map(|i| format!("filler{i}")).collect();
    let mut samples = Vec::new();
    for _ in 0..per_class {
        for (label, topic) in TOPICS.iter().take(classes).enumerate() {
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
    Dataset::new(samples, classes, "separable").unwrap()
}

/// Balanced two-class corpus where ten planted tokens decide the label:
/// `sig0..sig4` appear only in class 0 documents, `sig5..sig9` only in
/// class 1, buried under noise drawn from a pool of `noise_pool` tokens.
pub fn planted_dataset(docs: usize, noise_pool: usize, seed: u64) -> Dataset {
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
