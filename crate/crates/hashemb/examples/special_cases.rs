//! The pooled representation contains two classical layouts as exact special
//! cases: the hashing trick (k = 1, bucket = hashed id, unit weights) and a
//! standard embedding table (dictionary ids, one dedicated row each). The
//! equalities below are bit-level, not approximate.

use hashemb::embedding::HashEmbedding;

fn main() -> hashemb::Result<()> {
    // Hashing trick: each token's vector IS its hashed pool row.
    let trick = HashEmbedding::hashing_trick(512, 8, 3)?;
    for token in ["gravity", "tea", "π"] {
        let id = trick.token_id(token);
        assert_eq!(trick.token_buckets(token), vec![id]);
        assert_eq!(trick.embed_token(token), trick.pool_row(id));
        println!("trick: {token:?} -> row {id} (vector equals the row bit for bit)");
    }

    // Standard table: enrolled tokens own consecutive rows, everything else
    // shares row 0.
    let vocab = ["alpha", "beta", "gamma"];
    let standard = HashEmbedding::standard(&vocab, 8, 3)?;
    println!();
    for (i, token) in vocab.iter().enumerate() {
        assert_eq!(standard.token_id(token), i as u64);
        assert_eq!(standard.embed_token(token), standard.pool_row(i as u64));
        println!("standard: {token:?} owns row {i}");
    }
    assert_eq!(standard.embed_token("delta"), standard.pool_row(0));
    println!("standard: unenrolled \"delta\" falls back to row 0");

    println!();
    println!(
        "parameter counts exclude the frozen unit importance: trick {} = B*d, \
         standard {} = |V|*d",
        trick.parameter_count(),
        standard.parameter_count()
    );
    Ok(())
}
