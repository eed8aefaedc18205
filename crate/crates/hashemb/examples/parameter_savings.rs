//! Parameter accounting: what the two small tables of a hash embedding cost
//! next to a hashing-trick table and a standard embedding matrix covering
//! the same token universe.

use hashemb::embedding::EmbeddingConfig;

fn main() {
    // A web-scale bigram universe and the usual small vector width.
    let vocab: u64 = 100_000_000;
    let dim = 20;

    // One dedicated row per distinct token.
    let standard = EmbeddingConfig::standard(vocab, dim, 0);
    // One shared row per hash bucket, tokens collide silently.
    let trick = EmbeddingConfig::hashing_trick(10_000_000, dim, 0);
    // k pool rows per id plus a scalar weight per (id, row) pair.
    let hash = EmbeddingConfig::hashed(10_000_000, 1_000_000, 2, dim, 0);

    println!("{:<24} {:>16} {:>10}", "layout", "parameters", "savings");
    let base = standard.parameter_count() as f64;
    for (name, config) in [
        ("standard embedding", &standard),
        ("hashing trick", &trick),
        ("hash embedding", &hash),
    ] {
        let count = config.parameter_count();
        println!("{name:<24} {count:>16} {:>9.0}x", base / count as f64);
    }

    println!();
    println!(
        "the hash embedding splits its budget: {} pool weights (B*d) plus {} \
         importance weights (K*k)",
        hash.num_buckets as usize * hash.dim,
        hash.num_ids as usize * hash.num_hashes,
    );

    println!();
    println!("cost of admitting 1,000,000 extra token ids:");
    println!("  hash embedding    : {:>12} new weights (k per id)", 1_000_000 * 2);
    println!(
        "  standard embedding: {:>12} new weights (d per id)",
        1_000_000 * dim
    );
}
