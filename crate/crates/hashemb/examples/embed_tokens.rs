//! Walks through how a token becomes a vector: hash to an id, map the id
//! onto k shared pool rows, weight the rows by the id's importance, sum.
//! Also shows bag embedding and the append-importance variant.

use hashemb::embedding::{EmbeddingConfig, HashEmbedding};

fn fmt(v: &[f32]) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:+.3}")).collect();
    format!("[{}]", cells.join(", "))
}

fn main() -> hashemb::Result<()> {
    let config = EmbeddingConfig::hashed(1 << 12, 64, 2, 6, 7);
    let emb = HashEmbedding::new(config)?;
    let cfg = emb.config();
    println!(
        "K = {} ids, B = {} pool rows, k = {}, d = {}; {} trainable parameters",
        cfg.num_ids,
        cfg.num_buckets,
        cfg.num_hashes,
        cfg.dim,
        emb.parameter_count()
    );

    for token in ["coffee", "espresso", "moon"] {
        let id = emb.token_id(token);
        let buckets = emb.token_buckets(token);
        let importance = emb.importance_row(id);
        println!();
        println!("{token:?} -> id {id} -> pool rows {buckets:?}");
        println!("  importance {}", fmt(importance));
        println!("  vector     {}", fmt(&emb.embed_token(token)));
    }

    let bag = ["coffee", "with", "milk"];
    println!();
    println!("a document is the sum of its token vectors:");
    println!("  {:?} -> {}", bag, fmt(&emb.embed_bag(&bag)));

    let mut wide = EmbeddingConfig::hashed(1 << 12, 64, 2, 6, 7);
    wide.append_importance = true;
    let wide = HashEmbedding::new(wide)?;
    println!();
    println!(
        "append_importance concatenates the k weights onto the vector, \
         widening the output from {} to {}:",
        emb.output_dim(),
        wide.output_dim()
    );
    println!("  {:?} -> {}", "coffee", fmt(&wide.embed_token("coffee")));
    Ok(())
}
