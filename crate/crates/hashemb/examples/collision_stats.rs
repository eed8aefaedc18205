//! Collision statistics for hashed id spaces: how likely a token is to share
//! its slot, how many tokens collide in expectation, and why combining k
//! hash functions behaves like one function with a much larger range. Ends
//! with a Monte Carlo run against the closed form.

use hashemb::hashing::{
    collision_probability, collision_probability_approx, combined_collision_probability,
    expected_collisions, simulate_collisions,
};

fn main() -> hashemb::Result<()> {
    let vocab: u64 = 100_000_000;
    println!("token universe: {vocab} distinct n-grams");
    println!();

    println!(
        "{:>8} {:>14} {:>14} {:>18}",
        "slots", "p_col exact", "p_col approx", "expected colliding"
    );
    for exp in [20u32, 22, 24, 26, 28, 30] {
        let slots = 1u64 << exp;
        println!(
            "{:>8} {:>14.6e} {:>14.6e} {:>18.1}",
            format!("2^{exp}"),
            collision_probability(slots, vocab),
            collision_probability_approx(slots, vocab),
            expected_collisions(slots, vocab),
        );
    }

    println!();
    println!("k independent hash functions into B buckets act like one function");
    println!("with B^k slots, so even small pools get collision-free in aggregate:");
    for (buckets, k) in [(1u64 << 20, 1u32), (1 << 20, 2), (1 << 16, 2), (1 << 16, 3)] {
        println!(
            "  B = 2^{:<2} k = {k}: p_col = {:.6e}",
            buckets.trailing_zeros(),
            combined_collision_probability(buckets, k, vocab)
        );
    }

    println!();
    println!("Monte Carlo cross-check: 1000 tokens into 500 slots, 2000 trials");
    let estimate = simulate_collisions(500, 1000, 2000, 42)?;
    let closed = expected_collisions(500, 1000);
    println!("  closed form: {closed:.2} tokens in collision");
    println!(
        "  simulated  : {:.2} +/- {:.2}",
        estimate.mean, estimate.standard_error
    );
    Ok(())
}
