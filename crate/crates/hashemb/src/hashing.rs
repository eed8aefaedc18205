//! Seeded hash family, the two-layer token→id→bucket mapping, and collision
//! analytics (closed-form and Monte Carlo).
//!
//! Layer one maps a token string to an id in `{0..K-1}`, either through an
//! explicit dictionary or by hashing. Layer two maps that id onto `k` bucket
//! indices in `{0..B-1}`, one per hash function. All mappings are pure
//! functions of (seed, input) and are identical across platforms and runs.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

/// Seed for one member of the hash family. Distinct seeds give
/// independent-looking hash streams (validated statistically in tests, not
/// by construction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct HashSeed(pub u64);

impl HashSeed {
    /// Derives a child seed for a named purpose, so one base seed can fan
    /// out into decorrelated per-role seeds.
    #[must_use]
    pub fn derive(self, label: &[u8]) -> HashSeed {
        HashSeed(seeded_hash(self, label))
    }
}

impl From<u64> for HashSeed {
    fn from(value: u64) -> Self {
        HashSeed(value)
    }
}

/// Final mixing step from MurmurHash3; breaks up the linear structure FNV
/// leaves in the low bits so `hash % B` is usable directly.
#[inline]
fn fmix64(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    h
}

/// Seeded 64-bit hash of a byte sequence: FNV-1a with the (pre-mixed) seed
/// folded into the offset basis, then a murmur-style finalizer.
#[must_use]
pub fn seeded_hash(seed: HashSeed, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET_BASIS ^ fmix64(seed.0);
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    fmix64(h)
}

/// What a dictionary map does with tokens that are not enrolled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownPolicy {
    /// Map every unenrolled token to the reserved id 0.
    ReservedZero,
    /// Fall through to a hashed id over the full id range.
    Hashed(HashSeed),
}

#[derive(Debug, Clone)]
enum IdMapMode {
    Dictionary {
        table: HashMap<String, u64>,
        unknown: UnknownPolicy,
    },
    Hashed {
        seed: HashSeed,
    },
}

/// First-layer map from token strings onto ids in `{0..id_range-1}`.
///
/// Dictionary mode is injective over enrolled tokens; hashed mode is a pure
/// function of (seed, token).
#[derive(Debug, Clone)]
pub struct TokenIdMap {
    mode: IdMapMode,
    id_range: u64,
}

impl TokenIdMap {
    /// Dictionary map with the default unknown-token policy (reserved id 0).
    /// Every enrolled id must be below `id_range`.
    pub fn dictionary(table: HashMap<String, u64>, id_range: u64) -> Result<Self> {
        Self::dictionary_with_unknown(table, id_range, UnknownPolicy::ReservedZero)
    }

    /// Dictionary map with an explicit unknown-token policy.
    pub fn dictionary_with_unknown(
        table: HashMap<String, u64>,
        id_range: u64,
        unknown: UnknownPolicy,
    ) -> Result<Self> {
        if id_range == 0 {
            return Err(Error::invalid("id range must be positive"));
        }
        if let Some((token, &id)) = table.iter().find(|&(_, &id)| id >= id_range) {
            return Err(Error::invalid(format!(
                "token {token:?} enrolled with id {id}, expected < {id_range}"
            )));
        }
        Ok(TokenIdMap {
            mode: IdMapMode::Dictionary { table, unknown },
            id_range,
        })
    }

    /// Hashed map: `seeded_hash(seed, token) % id_range`.
    pub fn hashed(seed: HashSeed, id_range: u64) -> Result<Self> {
        if id_range == 0 {
            return Err(Error::invalid("id range must be positive"));
        }
        Ok(TokenIdMap {
            mode: IdMapMode::Hashed { seed },
            id_range,
        })
    }

    /// Maps a token to its id. Total: unenrolled dictionary tokens resolve
    /// through the unknown-token policy rather than erroring.
    #[must_use]
    pub fn token_to_id(&self, token: &str) -> u64 {
        match &self.mode {
            IdMapMode::Dictionary { table, unknown } => match table.get(token) {
                Some(&id) => id,
                None => match *unknown {
                    UnknownPolicy::ReservedZero => 0,
                    UnknownPolicy::Hashed(seed) => {
                        seeded_hash(seed, token.as_bytes()) % self.id_range
                    }
                },
            },
            IdMapMode::Hashed { seed } => seeded_hash(*seed, token.as_bytes()) % self.id_range,
        }
    }

    /// Number of distinct ids the map can produce (the `K` of the first layer).
    #[must_use]
    pub fn id_range(&self) -> u64 {
        self.id_range
    }

    #[must_use]
    pub fn is_dictionary(&self) -> bool {
        matches!(self.mode, IdMapMode::Dictionary { .. })
    }

    /// Enrolled (token, id) pairs, unordered. Empty iterator in hashed mode.
    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> {
        let table = match &self.mode {
            IdMapMode::Dictionary { table, .. } => Some(table),
            IdMapMode::Hashed { .. } => None,
        };
        table
            .into_iter()
            .flat_map(|t| t.iter().map(|(tok, &id)| (tok.as_str(), id)))
    }

    /// Seed of a hashed map; `None` in dictionary mode.
    #[must_use]
    pub fn hash_seed(&self) -> Option<HashSeed> {
        match self.mode {
            IdMapMode::Hashed { seed } => Some(seed),
            IdMapMode::Dictionary { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
enum MapperKind {
    /// One independently seeded hash function per bucket slot.
    Seeded(Vec<HashSeed>),
    /// Bucket i equals the id itself; requires `num_buckets == id_range`.
    Identity,
}

/// Second-layer map from ids in `{0..id_range-1}` onto `k` buckets in
/// `{0..num_buckets-1}`, one per hash function.
#[derive(Debug, Clone)]
pub struct BucketMapper {
    kind: MapperKind,
    num_buckets: u64,
    id_range: u64,
}

impl BucketMapper {
    /// Mapper with `seeds.len()` hash functions. Seeds must be pairwise
    /// distinct, otherwise the functions would coincide.
    pub fn seeded(seeds: Vec<HashSeed>, num_buckets: u64, id_range: u64) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::invalid("at least one hash seed required"));
        }
        if num_buckets == 0 || id_range == 0 {
            return Err(Error::invalid("bucket count and id range must be positive"));
        }
        let mut seen: HashMap<u64, usize> = HashMap::with_capacity(seeds.len());
        for (pos, seed) in seeds.iter().enumerate() {
            if let Some(&first) = seen.get(&seed.0) {
                return Err(Error::DuplicateSeed {
                    seed: seed.0,
                    first,
                    second: pos,
                });
            }
            seen.insert(seed.0, pos);
        }
        Ok(BucketMapper {
            kind: MapperKind::Seeded(seeds),
            num_buckets,
            id_range,
        })
    }

    /// Identity mapper (`k = 1`, bucket = id). Used where the id space and
    /// the bucket space are the same table.
    pub fn identity(size: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("identity mapper size must be positive"));
        }
        Ok(BucketMapper {
            kind: MapperKind::Identity,
            num_buckets: size,
            id_range: size,
        })
    }

    /// Buckets `(b_1, …, b_k)` for an id, each in `{0..num_buckets-1}`.
    pub fn buckets_for_id(&self, id: u64) -> Result<Vec<u64>> {
        if id >= self.id_range {
            return Err(Error::IdOutOfRange {
                id,
                size: self.id_range,
            });
        }
        Ok((0..self.num_hashes())
            .map(|i| self.bucket_unchecked(i, id))
            .collect())
    }

    /// Bucket of hash function `i` for an in-range id. Hot path for the
    /// embedding lookup; callers guarantee `i < k` and `id < id_range`.
    #[inline]
    pub(crate) fn bucket_unchecked(&self, i: usize, id: u64) -> u64 {
        debug_assert!(id < self.id_range);
        match &self.kind {
            MapperKind::Seeded(seeds) => {
                debug_assert!(i < seeds.len());
                seeded_hash(seeds[i], &id.to_le_bytes()) % self.num_buckets
            }
            MapperKind::Identity => {
                debug_assert!(i == 0);
                id
            }
        }
    }

    #[must_use]
    pub fn num_hashes(&self) -> usize {
        match &self.kind {
            MapperKind::Seeded(seeds) => seeds.len(),
            MapperKind::Identity => 1,
        }
    }

    #[must_use]
    pub fn num_buckets(&self) -> u64 {
        self.num_buckets
    }

    #[must_use]
    pub fn id_range(&self) -> u64 {
        self.id_range
    }

    /// Seeds of a seeded mapper; `None` for the identity mapper.
    #[must_use]
    pub fn seeds(&self) -> Option<&[HashSeed]> {
        match &self.kind {
            MapperKind::Seeded(seeds) => Some(seeds),
            MapperKind::Identity => None,
        }
    }

    #[must_use]
    pub fn is_identity(&self) -> bool {
        matches!(self.kind, MapperKind::Identity)
    }
}

/// Probability that a fixed token shares its slot with at least one of the
/// other `vocab_size - 1` tokens when all are placed uniformly into `slots`
/// slots: `1 - (1 - 1/slots)^(vocab_size-1)`.
///
/// Evaluated as `-expm1((n-1) * ln1p(-1/slots))` so it stays accurate for
/// exponents up to 1e9 and probabilities near 0 or 1.
#[must_use]
pub fn collision_probability(slots: u64, vocab_size: u64) -> f64 {
    assert!(slots >= 1, "slot count must be positive");
    assert!(vocab_size >= 1, "vocab size must be positive");
    if vocab_size == 1 {
        // Zero exponent; also sidesteps 0 * ln(0) = NaN when slots == 1.
        return 0.0;
    }
    let n = (vocab_size - 1) as f64;
    let per_slot = -(slots as f64).recip();
    -f64::exp_m1(n * f64::ln_1p(per_slot))
}

/// Large-vocabulary approximation of [`collision_probability`]:
/// `1 - exp(-vocab_size / slots)`.
#[must_use]
pub fn collision_probability_approx(slots: u64, vocab_size: u64) -> f64 {
    assert!(slots >= 1, "slot count must be positive");
    -f64::exp_m1(-(vocab_size as f64) / slots as f64)
}

/// Expected number of tokens that end up sharing a slot with another token:
/// `vocab_size * collision_probability(slots, vocab_size)`.
#[must_use]
pub fn expected_collisions(slots: u64, vocab_size: u64) -> f64 {
    vocab_size as f64 * collision_probability(slots, vocab_size)
}

/// Collision probability of `k` independent hash functions with `num_buckets`
/// buckets each, treated as one function with range `num_buckets^k`. The
/// range is kept in log space, so `num_buckets^k` may exceed `u64`.
#[must_use]
pub fn combined_collision_probability(num_buckets: u64, k: u32, vocab_size: u64) -> f64 {
    assert!(num_buckets >= 1, "bucket count must be positive");
    assert!(k >= 1, "need at least one hash function");
    if vocab_size == 0 {
        return 0.0;
    }
    let ln_ratio = (vocab_size as f64).ln() - f64::from(k) * (num_buckets as f64).ln();
    -f64::exp_m1(-ln_ratio.exp())
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub trials: u64,
}

/// Estimates the expected tokens-in-collision count empirically: each trial
/// places `vocab_size` tokens uniformly at random into `slots` slots and
/// counts tokens whose slot holds at least one other token.
pub fn simulate_collisions(
    slots: u64,
    vocab_size: u64,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    use rand::Rng;
    use rand::SeedableRng;

    if slots == 0 {
        return Err(Error::invalid("slot count must be positive"));
    }
    if trials < 2 {
        return Err(Error::invalid(
            "need at least 2 trials for a standard error",
        ));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut counts = SlotCounts::new(slots);
    let mut per_trial = Vec::with_capacity(trials as usize);
    for _ in 0..trials {
        counts.clear();
        for _ in 0..vocab_size {
            counts.add(rng.random_range(0..slots));
        }
        per_trial.push(counts.tokens_in_collision() as f64);
    }
    let n = per_trial.len() as f64;
    let mean = per_trial.iter().sum::<f64>() / n;
    let var = per_trial.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloEstimate {
        mean,
        standard_error: (var / n).sqrt(),
        trials,
    })
}

/// Occupancy counters; dense below a size cutoff, sparse above it so huge
/// slot counts do not allocate proportional memory.
enum SlotCounts {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, u32>),
}

impl SlotCounts {
    fn new(slots: u64) -> Self {
        if slots <= 1 << 22 {
            SlotCounts::Dense(vec![0; slots as usize])
        } else {
            SlotCounts::Sparse(HashMap::new())
        }
    }

    fn clear(&mut self) {
        match self {
            SlotCounts::Dense(v) => v.fill(0),
            SlotCounts::Sparse(m) => m.clear(),
        }
    }

    fn add(&mut self, slot: u64) {
        match self {
            SlotCounts::Dense(v) => v[slot as usize] += 1,
            SlotCounts::Sparse(m) => *m.entry(slot).or_insert(0) += 1,
        }
    }

    fn tokens_in_collision(&self) -> u64 {
        match self {
            SlotCounts::Dense(v) => v
                .iter()
                .filter(|&&c| c >= 2)
                .map(|&c| u64::from(c))
                .sum(),
            SlotCounts::Sparse(m) => m
                .values()
                .filter(|&&c| c >= 2)
                .map(|&c| u64::from(c))
                .sum(),
        }
    }
}

/// Closed-form collision summary for one (slots, vocab) setting, with an
/// optional Monte Carlo cross-check.
#[derive(Debug, Clone, Serialize)]
pub struct CollisionReport {
    #[serde(rename = "K")]
    pub id_range: u64,
    pub vocab_size: u64,
    pub p_col_exact: f64,
    pub p_col_approx: f64,
    pub expected_tokens_in_collision: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo_estimate: Option<MonteCarloEstimate>,
}

impl CollisionReport {
    pub fn compute(id_range: u64, vocab_size: u64) -> Result<Self> {
        if id_range == 0 || vocab_size == 0 {
            return Err(Error::invalid("id range and vocab size must be positive"));
        }
        Ok(CollisionReport {
            id_range,
            vocab_size,
            p_col_exact: collision_probability(id_range, vocab_size),
            p_col_approx: collision_probability_approx(id_range, vocab_size),
            expected_tokens_in_collision: expected_collisions(id_range, vocab_size),
            monte_carlo_estimate: None,
        })
    }

    /// Attaches a Monte Carlo estimate alongside the closed forms.
    pub fn with_simulation(mut self, trials: u64, seed: u64) -> Result<Self> {
        self.monte_carlo_estimate =
            Some(simulate_collisions(self.id_range, self.vocab_size, trials, seed)?);
        Ok(self)
    }
}
