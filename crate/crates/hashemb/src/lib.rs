//! Compact word embeddings built from shared hashed component pools.
//!
//! Instead of giving every token its own trainable vector, each token id is
//! hashed onto `k` rows of a small shared pool and its vector is the
//! importance-weighted sum of those rows. The weights live in a second small
//! table, so the trainable parameter count is decoupled from the vocabulary
//! size. The crate also ships a bag-of-n-grams linear classifier trained on
//! top of these embeddings, collision analytics for sizing the tables, and a
//! small CLI.
//!
//! Start with the runnable examples:
//!
//! ```text
//! cargo run --example collision_stats
//! cargo run --example parameter_savings
//! cargo run --example embed_tokens
//! cargo run --example special_cases
//! cargo run --example train_synthetic
//! cargo run --example importance_inspection
//! cargo run --example ensemble_voting
//! cargo run --example ag_news -- data/ag_news
//! ```

pub mod cli;
pub mod error;
pub mod embedding;
pub mod hashing;
pub mod model;
pub mod text;

pub use error::{Error, Result};
