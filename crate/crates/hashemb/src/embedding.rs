//! Hash-embedding parameter structure and its forward/backward maps.
//!
//! A token embeds as the importance-weighted sum of `k` rows of a shared
//! component pool: the token id selects a row of the importance table `P`
//! (K × k) and `k` buckets into the pool `E` (B × d), and the embedding is
//! `ê_w = Σ_i p_i · E[b_i]`, optionally concatenated with the importance row
//! itself. Because `B` and `K` are free table sizes rather than the
//! vocabulary size, the trainable parameter count `B·d + K·k` stays small
//! even for unbounded vocabularies.
//!
//! Two degenerate configurations are first-class: the hashing trick
//! (`k = 1`, unit fixed importance, `K = B`) and a standard per-token
//! embedding table (`k = 1`, dictionary ids, identity bucket map,
//! `K = B = |vocab|`).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hashing::{BucketMapper, HashSeed, TokenIdMap};

const MAGIC: [u8; 4] = *b"HEMB";
const FORMAT_VERSION: u32 = 1;

/// How tokens map onto ids in `{0..K-1}` (the first layer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IdMode {
    /// Seeded hash of the token modulo `K`; no vocabulary needed.
    Hashed,
    /// Explicit token table; unenrolled tokens map to reserved id 0.
    Dictionary,
}

/// How ids map onto pool buckets (the second layer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BucketMode {
    /// `k` independently seeded hash functions into `{0..B-1}`.
    Seeded,
    /// Bucket = id; requires `K == B` and `k == 1`.
    Identity,
}

/// Shape and behavior switches for a [`HashEmbedding`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmbeddingConfig {
    /// Id range K: number of importance rows.
    pub num_ids: u64,
    /// Pool size B: number of shared component vectors.
    pub num_buckets: u64,
    /// Number of hash functions k (columns of the importance table).
    pub num_hashes: usize,
    /// Component vector dimension d.
    pub dim: usize,
    pub id_mode: IdMode,
    pub bucket_mode: BucketMode,
    /// Concatenate the importance row after the weighted sum
    /// (output dimension becomes d + k).
    pub append_importance: bool,
    /// Index the importance table with an independent hash instead of the
    /// token id, sharing importance rows across unrelated tokens.
    pub separate_importance_hash: bool,
    /// When false the importance table is fixed (the degenerate cases).
    pub importance_trainable: bool,
    /// Base seed; every internal seed derives deterministically from it.
    pub seed: u64,
}

impl EmbeddingConfig {
    /// Standard hash-embedding shape: hashed ids, seeded buckets, trainable
    /// importance.
    pub fn hashed(num_ids: u64, num_buckets: u64, num_hashes: usize, dim: usize, seed: u64) -> Self {
        EmbeddingConfig {
            num_ids,
            num_buckets,
            num_hashes,
            dim,
            id_mode: IdMode::Hashed,
            bucket_mode: BucketMode::Seeded,
            append_importance: false,
            separate_importance_hash: false,
            importance_trainable: true,
            seed,
        }
    }

    /// Hash embedding over a dictionary: enrolled tokens get dedicated ids,
    /// everything else shares reserved id 0.
    pub fn dictionary(
        num_ids: u64,
        num_buckets: u64,
        num_hashes: usize,
        dim: usize,
        seed: u64,
    ) -> Self {
        EmbeddingConfig {
            id_mode: IdMode::Dictionary,
            ..EmbeddingConfig::hashed(num_ids, num_buckets, num_hashes, dim, seed)
        }
    }

    /// Hashing-trick shape: one hash straight into the pool, importance
    /// fixed at 1.
    pub fn hashing_trick(num_buckets: u64, dim: usize, seed: u64) -> Self {
        EmbeddingConfig {
            num_ids: num_buckets,
            num_buckets,
            num_hashes: 1,
            dim,
            id_mode: IdMode::Hashed,
            bucket_mode: BucketMode::Identity,
            append_importance: false,
            separate_importance_hash: false,
            importance_trainable: false,
            seed,
        }
    }

    /// Standard-embedding shape: one dedicated pool row per vocabulary
    /// entry, importance fixed at 1.
    pub fn standard(vocab_size: u64, dim: usize, seed: u64) -> Self {
        EmbeddingConfig {
            num_ids: vocab_size,
            num_buckets: vocab_size,
            num_hashes: 1,
            dim,
            id_mode: IdMode::Dictionary,
            bucket_mode: BucketMode::Identity,
            append_importance: false,
            separate_importance_hash: false,
            importance_trainable: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_ids == 0 || self.num_buckets == 0 || self.num_hashes == 0 || self.dim == 0 {
            return Err(Error::invalid("K, B, k and d must all be positive"));
        }
        if self.bucket_mode == BucketMode::Identity {
            if self.num_buckets != self.num_ids {
                return Err(Error::invalid(format!(
                    "identity bucket mode needs K == B, got K={} B={}",
                    self.num_ids, self.num_buckets
                )));
            }
            if self.num_hashes != 1 {
                return Err(Error::invalid("identity bucket mode needs k == 1"));
            }
        }
        Ok(())
    }

    /// Length of vectors produced by `embed_token`/`embed_bag`.
    #[must_use]
    pub fn output_dim(&self) -> usize {
        if self.append_importance {
            self.dim + self.num_hashes
        } else {
            self.dim
        }
    }

    /// Trainable parameter count: `B·d`, plus `K·k` when the importance
    /// table is trainable.
    #[must_use]
    pub fn parameter_count(&self) -> u64 {
        let pool = self.num_buckets * self.dim as u64;
        if self.importance_trainable {
            pool + self.num_ids * self.num_hashes as u64
        } else {
            pool
        }
    }
}

/// Per-role seeds fanned out from the config's base seed. The bucket, id and
/// importance-id seeds are persisted with the tables; the init seed is only
/// needed at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
struct SeedSchedule {
    buckets: Vec<HashSeed>,
    id: HashSeed,
    importance_id: HashSeed,
    param_init: u64,
}

impl SeedSchedule {
    fn derive(base: u64, num_hashes: usize) -> Self {
        let base = HashSeed(base);
        SeedSchedule {
            buckets: (0..num_hashes)
                .map(|i| base.derive(format!("bucket-{i}").as_bytes()))
                .collect(),
            id: base.derive(b"token-id"),
            importance_id: base.derive(b"importance-id"),
            param_init: base.derive(b"component-init").0,
        }
    }
}

/// Sparse gradients (or deltas) for the two parameter tables: touched pool
/// rows keyed by bucket, touched importance rows keyed by id.
#[derive(Debug, Clone, Default)]
pub struct SparseGrad {
    pub pool_rows: HashMap<u64, Vec<f32>>,
    pub importance_rows: HashMap<u64, Vec<f32>>,
}

impl SparseGrad {
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.pool_rows.is_empty() && self.importance_rows.is_empty()
    }

    /// Adds another gradient row-wise (rows are independent, so accumulation
    /// order across rows does not affect any value).
    pub fn accumulate(&mut self, other: &SparseGrad) {
        for (&row, grad) in &other.pool_rows {
            add_into(
                self.pool_rows
                    .entry(row)
                    .or_insert_with(|| vec![0.0; grad.len()]),
                grad,
            );
        }
        for (&row, grad) in &other.importance_rows {
            add_into(
                self.importance_rows
                    .entry(row)
                    .or_insert_with(|| vec![0.0; grad.len()]),
                grad,
            );
        }
    }

    pub fn scale(&mut self, factor: f32) {
        for grad in self.pool_rows.values_mut() {
            for g in grad {
                *g *= factor;
            }
        }
        for grad in self.importance_rows.values_mut() {
            for g in grad {
                *g *= factor;
            }
        }
    }
}

fn add_into(acc: &mut [f32], inc: &[f32]) {
    debug_assert_eq!(acc.len(), inc.len());
    for (a, &b) in acc.iter_mut().zip(inc) {
        *a += b;
    }
}

/// Trainable hash embedding: shared component pool `E` (B × d), importance
/// table `P` (K × k), and the two hash layers connecting tokens to them.
#[derive(Debug, Clone)]
pub struct HashEmbedding {
    config: EmbeddingConfig,
    /// B × d, row-major.
    pool: Vec<f32>,
    /// K × k, row-major.
    importance: Vec<f32>,
    mapper: BucketMapper,
    id_map: TokenIdMap,
    /// Present only with `separate_importance_hash`; otherwise the id map
    /// doubles as the importance index.
    importance_id_map: Option<TokenIdMap>,
    seeds: SeedSchedule,
}

fn try_alloc_f32(len: u64) -> Result<Vec<f32>> {
    let len_usize =
        usize::try_from(len).map_err(|_| Error::Allocation { bytes: len.saturating_mul(4) })?;
    let mut v: Vec<f32> = Vec::new();
    v.try_reserve_exact(len_usize)
        .map_err(|_| Error::Allocation { bytes: len.saturating_mul(4) })?;
    Ok(v)
}

impl HashEmbedding {
    /// Builds a hashed-id embedding: pool entries i.i.d. uniform on
    /// (−1/d, 1/d), importance fixed to 1, all seeds derived from
    /// `config.seed`. Equal configs construct bit-identical tables.
    pub fn new(config: EmbeddingConfig) -> Result<Self> {
        config.validate()?;
        if config.id_mode == IdMode::Dictionary {
            return Err(Error::MissingDictionary);
        }
        Self::build(config, None)
    }

    /// Builds a dictionary-id embedding over an explicit token table.
    /// Reserved id 0 (unenrolled tokens) starts with zero importance so
    /// unknown tokens are inert until training says otherwise.
    pub fn with_dictionary(config: EmbeddingConfig, table: HashMap<String, u64>) -> Result<Self> {
        config.validate()?;
        if config.id_mode != IdMode::Dictionary {
            return Err(Error::invalid(
                "with_dictionary requires dictionary id mode",
            ));
        }
        Self::build(config, Some(table))
    }

    /// Hashing trick: `embed_token(w)` is exactly the pool row at
    /// `hash(w) % B`. Importance is fixed; trainable parameters are `B·d`.
    pub fn hashing_trick(num_buckets: u64, dim: usize, seed: u64) -> Result<Self> {
        Self::new(EmbeddingConfig::hashing_trick(num_buckets, dim, seed))
    }

    /// Standard embedding table: each vocabulary entry owns one pool row;
    /// unenrolled tokens fall back to row 0 (shared with the first entry).
    /// Trainable parameters are `|vocab|·d`.
    pub fn standard<S: AsRef<str>>(vocab: &[S], dim: usize, seed: u64) -> Result<Self> {
        let mut table = HashMap::with_capacity(vocab.len());
        for (i, token) in vocab.iter().enumerate() {
            if table.insert(token.as_ref().to_string(), i as u64).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate vocabulary token {:?}",
                    token.as_ref()
                )));
            }
        }
        let config = EmbeddingConfig::standard(vocab.len() as u64, dim, seed);
        config.validate()?;
        Self::build(config, Some(table))
    }

    fn build(config: EmbeddingConfig, table: Option<HashMap<String, u64>>) -> Result<Self> {
        let seeds = SeedSchedule::derive(config.seed, config.num_hashes);
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.param_init);

        let pool_len = config.num_buckets * config.dim as u64;
        let mut pool = try_alloc_f32(pool_len)?;
        let span = 1.0 / config.dim as f64;
        for _ in 0..pool_len {
            pool.push(rng.random_range(-span..span) as f32);
        }

        let imp_len = config.num_ids * config.num_hashes as u64;
        let mut importance = try_alloc_f32(imp_len)?;
        importance.resize(imp_len as usize, 1.0);
        // Dictionary embeddings reserve id 0 for unknown tokens; its initial
        // importance is zero unless the table is fixed (standard embedding,
        // where row 0 belongs to a real token).
        if config.id_mode == IdMode::Dictionary && config.importance_trainable {
            importance[..config.num_hashes].fill(0.0);
        }

        Self::assemble(config, pool, importance, seeds, table)
    }

    /// Wires tables, mapper and id maps together; shared by construction and
    /// deserialization (which must reuse stored seeds, not re-derive them).
    fn assemble(
        config: EmbeddingConfig,
        pool: Vec<f32>,
        importance: Vec<f32>,
        seeds: SeedSchedule,
        table: Option<HashMap<String, u64>>,
    ) -> Result<Self> {
        let mapper = match config.bucket_mode {
            BucketMode::Seeded => {
                BucketMapper::seeded(seeds.buckets.clone(), config.num_buckets, config.num_ids)?
            }
            BucketMode::Identity => BucketMapper::identity(config.num_buckets)?,
        };
        let id_map = match config.id_mode {
            IdMode::Hashed => TokenIdMap::hashed(seeds.id, config.num_ids)?,
            IdMode::Dictionary => {
                TokenIdMap::dictionary(table.ok_or(Error::MissingDictionary)?, config.num_ids)?
            }
        };
        let importance_id_map = if config.separate_importance_hash {
            Some(TokenIdMap::hashed(seeds.importance_id, config.num_ids)?)
        } else {
            None
        };
        Ok(HashEmbedding {
            config,
            pool,
            importance,
            mapper,
            id_map,
            importance_id_map,
            seeds,
        })
    }

    #[must_use]
    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    #[must_use]
    pub fn output_dim(&self) -> usize {
        self.config.output_dim()
    }

    #[must_use]
    pub fn parameter_count(&self) -> u64 {
        self.config.parameter_count()
    }

    /// First-layer id of a token.
    #[must_use]
    pub fn token_id(&self, token: &str) -> u64 {
        self.id_map.token_to_id(token)
    }

    /// Id used to select the importance row (differs from [`token_id`] only
    /// with `separate_importance_hash`).
    ///
    /// [`token_id`]: HashEmbedding::token_id
    #[must_use]
    pub fn importance_token_id(&self, token: &str) -> u64 {
        match &self.importance_id_map {
            Some(map) => map.token_to_id(token),
            None => self.id_map.token_to_id(token),
        }
    }

    /// Pool buckets a token's id hashes to.
    #[must_use]
    pub fn token_buckets(&self, token: &str) -> Vec<u64> {
        let id = self.token_id(token);
        (0..self.config.num_hashes)
            .map(|i| self.mapper.bucket_unchecked(i, id))
            .collect()
    }

    #[must_use]
    pub fn pool_row(&self, bucket: u64) -> &[f32] {
        let d = self.config.dim;
        let start = bucket as usize * d;
        &self.pool[start..start + d]
    }

    #[must_use]
    pub fn importance_row(&self, id: u64) -> &[f32] {
        let k = self.config.num_hashes;
        let start = id as usize * k;
        &self.importance[start..start + k]
    }

    /// Embedding of one token: `Σ_i p_i · E[b_i]`, with the importance row
    /// appended when configured.
    #[must_use]
    pub fn embed_token(&self, token: &str) -> Vec<f32> {
        let mut out = vec![0.0; self.output_dim()];
        self.accumulate_token(token, &mut out);
        out
    }

    /// Embedding of a token sequence: the sum of the token embeddings. The
    /// empty sequence gives the zero vector.
    #[must_use]
    pub fn embed_bag<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f32> {
        let mut out = vec![0.0; self.output_dim()];
        for token in tokens {
            self.accumulate_token(token.as_ref(), &mut out);
        }
        out
    }

    fn accumulate_token(&self, token: &str, out: &mut [f32]) {
        let d = self.config.dim;
        let k = self.config.num_hashes;
        let id = self.token_id(token);
        let p_start = self.importance_token_id(token) as usize * k;
        for i in 0..k {
            let weight = self.importance[p_start + i];
            let bucket = self.mapper.bucket_unchecked(i, id) as usize;
            let row = &self.pool[bucket * d..(bucket + 1) * d];
            for (o, &e) in out[..d].iter_mut().zip(row) {
                *o += weight * e;
            }
        }
        if self.config.append_importance {
            for i in 0..k {
                out[d + i] += self.importance[p_start + i];
            }
        }
    }

    /// Gradients of `upstream · embed_bag(tokens)` with respect to the
    /// touched pool and importance rows. Repeated tokens accumulate.
    pub fn backward_bag<S: AsRef<str>>(&self, tokens: &[S], upstream: &[f32]) -> Result<SparseGrad> {
        let mut grad = SparseGrad::default();
        self.backward_bag_into(tokens, upstream, &mut grad)?;
        Ok(grad)
    }

    /// As [`backward_bag`], accumulating into an existing gradient.
    ///
    /// [`backward_bag`]: HashEmbedding::backward_bag
    pub fn backward_bag_into<S: AsRef<str>>(
        &self,
        tokens: &[S],
        upstream: &[f32],
        grad: &mut SparseGrad,
    ) -> Result<()> {
        let up: Vec<f64> = upstream.iter().map(|&x| f64::from(x)).collect();
        self.backward_bag_f64_into(tokens, &up, grad)
    }

    /// Backward core. Sensitivities arrive and accumulate in f64; each
    /// touched row folds into the f32 gradient with one final rounding, so
    /// storage precision is the only loss against the exact derivative.
    pub(crate) fn backward_bag_f64_into<S: AsRef<str>>(
        &self,
        tokens: &[S],
        upstream: &[f64],
        grad: &mut SparseGrad,
    ) -> Result<()> {
        let d = self.config.dim;
        let k = self.config.num_hashes;
        if upstream.len() != self.output_dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("upstream gradient of length {}", self.output_dim()),
                got: format!("length {}", upstream.len()),
            });
        }
        let g_e = &upstream[..d];
        let mut pool_acc: HashMap<u64, Vec<f64>> = HashMap::new();
        let mut imp_acc: HashMap<u64, Vec<f64>> = HashMap::new();
        for token in tokens {
            let token = token.as_ref();
            let id = self.token_id(token);
            let imp_id = self.importance_token_id(token);
            let p_start = imp_id as usize * k;
            let p_grad = imp_acc.entry(imp_id).or_insert_with(|| vec![0.0; k]);
            if self.config.append_importance {
                for i in 0..k {
                    p_grad[i] += upstream[d + i];
                }
            }
            for i in 0..k {
                let bucket = self.mapper.bucket_unchecked(i, id);
                let row = &self.pool[bucket as usize * d..(bucket as usize + 1) * d];
                // ∂L/∂P[t][i] = g_e · E[b_i]
                let mut dot = 0.0;
                for (ge, &e) in g_e.iter().zip(row) {
                    dot += ge * f64::from(e);
                }
                imp_acc.get_mut(&imp_id).unwrap()[i] += dot;
                // ∂L/∂E[b_i] += p_i · g_e
                let weight = f64::from(self.importance[p_start + i]);
                let e_grad = pool_acc.entry(bucket).or_insert_with(|| vec![0.0; d]);
                for (eg, &ge) in e_grad.iter_mut().zip(g_e) {
                    *eg += weight * ge;
                }
            }
        }
        // Distinct keys, so map order cannot affect the folded values.
        for (bucket, acc) in pool_acc {
            let row = grad.pool_rows.entry(bucket).or_insert_with(|| vec![0.0; d]);
            for (r, a) in row.iter_mut().zip(acc) {
                *r += a as f32;
            }
        }
        for (id, acc) in imp_acc {
            let row = grad.importance_rows.entry(id).or_insert_with(|| vec![0.0; k]);
            for (r, a) in row.iter_mut().zip(acc) {
                *r += a as f32;
            }
        }
        Ok(())
    }

    /// Adds deltas to the referenced rows in place; every untouched row is
    /// left bit-identical. Rejects out-of-range keys, wrong row lengths, and
    /// importance updates when the table is fixed.
    pub fn apply_sparse_update(&mut self, update: &SparseGrad) -> Result<()> {
        let d = self.config.dim;
        let k = self.config.num_hashes;
        if !self.config.importance_trainable {
            if let Some(&id) = update.importance_rows.keys().next() {
                return Err(Error::FrozenImportance { id });
            }
        }
        for (&bucket, delta) in &update.pool_rows {
            if bucket >= self.config.num_buckets {
                return Err(Error::IdOutOfRange {
                    id: bucket,
                    size: self.config.num_buckets,
                });
            }
            if delta.len() != d {
                return Err(Error::ShapeMismatch {
                    expected: format!("pool delta of length {d}"),
                    got: format!("length {}", delta.len()),
                });
            }
        }
        for (&id, delta) in &update.importance_rows {
            if id >= self.config.num_ids {
                return Err(Error::IdOutOfRange {
                    id,
                    size: self.config.num_ids,
                });
            }
            if delta.len() != k {
                return Err(Error::ShapeMismatch {
                    expected: format!("importance delta of length {k}"),
                    got: format!("length {}", delta.len()),
                });
            }
        }
        for (&bucket, delta) in &update.pool_rows {
            let start = bucket as usize * d;
            add_into(&mut self.pool[start..start + d], delta);
            debug_assert!(
                self.pool[start..start + d].iter().all(|v| v.is_finite()),
                "non-finite pool row {bucket} after update"
            );
        }
        for (&id, delta) in &update.importance_rows {
            let start = id as usize * k;
            add_into(&mut self.importance[start..start + k], delta);
            debug_assert!(
                self.importance[start..start + k].iter().all(|v| v.is_finite()),
                "non-finite importance row {id} after update"
            );
        }
        Ok(())
    }

    /// Snapshot of both parameter tables (for best-weights bookkeeping).
    #[must_use]
    pub fn snapshot(&self) -> (Vec<f32>, Vec<f32>) {
        (self.pool.clone(), self.importance.clone())
    }

    /// Restores tables captured by [`snapshot`].
    ///
    /// [`snapshot`]: HashEmbedding::snapshot
    pub fn restore(&mut self, snapshot: &(Vec<f32>, Vec<f32>)) -> Result<()> {
        if snapshot.0.len() != self.pool.len() || snapshot.1.len() != self.importance.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("tables of {} and {} entries", self.pool.len(), self.importance.len()),
                got: format!("{} and {} entries", snapshot.0.len(), snapshot.1.len()),
            });
        }
        self.pool.copy_from_slice(&snapshot.0);
        self.importance.copy_from_slice(&snapshot.1);
        Ok(())
    }

    /// Writes the embedding in its bit-exact binary format: magic, version,
    /// config (u64 LE integers, one byte per flag), the k+2 layer seeds, the
    /// importance table then the pool as f32 LE row-major, and in dictionary
    /// mode the token table sorted by id (length-prefixed UTF-8, u64 LE id).
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        w.write_u64::<LittleEndian>(self.config.num_ids)?;
        w.write_u64::<LittleEndian>(self.config.num_buckets)?;
        w.write_u64::<LittleEndian>(self.config.num_hashes as u64)?;
        w.write_u64::<LittleEndian>(self.config.dim as u64)?;
        w.write_u64::<LittleEndian>(self.config.seed)?;
        w.write_u8(matches!(self.config.id_mode, IdMode::Dictionary) as u8)?;
        w.write_u8(matches!(self.config.bucket_mode, BucketMode::Identity) as u8)?;
        w.write_u8(self.config.append_importance as u8)?;
        w.write_u8(self.config.separate_importance_hash as u8)?;
        w.write_u8(self.config.importance_trainable as u8)?;
        for seed in &self.seeds.buckets {
            w.write_u64::<LittleEndian>(seed.0)?;
        }
        w.write_u64::<LittleEndian>(self.seeds.id.0)?;
        w.write_u64::<LittleEndian>(self.seeds.importance_id.0)?;
        for &v in &self.importance {
            w.write_f32::<LittleEndian>(v)?;
        }
        for &v in &self.pool {
            w.write_f32::<LittleEndian>(v)?;
        }
        if self.id_map.is_dictionary() {
            let mut entries: Vec<(&str, u64)> = self.id_map.entries().collect();
            entries.sort_by_key(|&(_, id)| id);
            w.write_u64::<LittleEndian>(entries.len() as u64)?;
            for (token, id) in entries {
                w.write_u64::<LittleEndian>(token.len() as u64)?;
                w.write_all(token.as_bytes())?;
                w.write_u64::<LittleEndian>(id)?;
            }
        }
        Ok(())
    }

    /// Reads an embedding previously written by [`write_to`]. The stored
    /// seeds are reused verbatim, so a round trip is bit-identical even if
    /// the seed-derivation schedule ever changes.
    ///
    /// [`write_to`]: HashEmbedding::write_to
    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::BadMagic {
                expected: MAGIC,
                got: magic,
            });
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                expected: FORMAT_VERSION,
                found: version,
            });
        }
        let num_ids = r.read_u64::<LittleEndian>()?;
        let num_buckets = r.read_u64::<LittleEndian>()?;
        let num_hashes = r.read_u64::<LittleEndian>()?;
        let dim = r.read_u64::<LittleEndian>()?;
        let seed = r.read_u64::<LittleEndian>()?;
        let num_hashes = usize::try_from(num_hashes)
            .map_err(|_| Error::CorruptFile("hash count exceeds platform size".into()))?;
        let dim = usize::try_from(dim)
            .map_err(|_| Error::CorruptFile("dimension exceeds platform size".into()))?;
        let mut flags = [0u8; 5];
        r.read_exact(&mut flags)?;
        if flags.iter().any(|&f| f > 1) {
            return Err(Error::CorruptFile(format!("flag bytes out of range: {flags:?}")));
        }
        let config = EmbeddingConfig {
            num_ids,
            num_buckets,
            num_hashes,
            dim,
            id_mode: if flags[0] == 1 { IdMode::Dictionary } else { IdMode::Hashed },
            bucket_mode: if flags[1] == 1 { BucketMode::Identity } else { BucketMode::Seeded },
            append_importance: flags[2] == 1,
            separate_importance_hash: flags[3] == 1,
            importance_trainable: flags[4] == 1,
            seed,
        };
        config.validate()?;
        let mut bucket_seeds = Vec::with_capacity(num_hashes);
        for _ in 0..num_hashes {
            bucket_seeds.push(HashSeed(r.read_u64::<LittleEndian>()?));
        }
        let seeds = SeedSchedule {
            buckets: bucket_seeds,
            id: HashSeed(r.read_u64::<LittleEndian>()?),
            importance_id: HashSeed(r.read_u64::<LittleEndian>()?),
            param_init: 0, // tables are stored; the init seed is spent
        };
        let imp_len = num_ids * num_hashes as u64;
        let mut importance = try_alloc_f32(imp_len)?;
        for _ in 0..imp_len {
            importance.push(r.read_f32::<LittleEndian>()?);
        }
        let pool_len = num_buckets * dim as u64;
        let mut pool = try_alloc_f32(pool_len)?;
        for _ in 0..pool_len {
            pool.push(r.read_f32::<LittleEndian>()?);
        }
        let table = if config.id_mode == IdMode::Dictionary {
            let count = r.read_u64::<LittleEndian>()?;
            let mut table = HashMap::with_capacity(count.min(1 << 24) as usize);
            for _ in 0..count {
                let len = r.read_u64::<LittleEndian>()? as usize;
                let mut bytes = vec![0u8; len];
                r.read_exact(&mut bytes)?;
                let token = String::from_utf8(bytes)
                    .map_err(|e| Error::CorruptFile(format!("non-UTF-8 token: {e}")))?;
                let id = r.read_u64::<LittleEndian>()?;
                if table.insert(token, id).is_some() {
                    return Err(Error::CorruptFile("duplicate token in stored table".into()));
                }
            }
            Some(table)
        } else {
            None
        };
        Self::assemble(config, pool, importance, seeds, table)
    }

    pub fn save_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }

    /// Exact byte length [`write_to`] will produce.
    ///
    /// [`write_to`]: HashEmbedding::write_to
    #[must_use]
    pub fn serialized_len(&self) -> u64 {
        let c = &self.config;
        let mut len = 4 + 4 // magic + version
            + 5 * 8          // config integers
            + 5              // flag bytes
            + (c.num_hashes as u64 + 2) * 8 // layer seeds
            + (c.num_ids * c.num_hashes as u64 + c.num_buckets * c.dim as u64) * 4;
        if self.id_map.is_dictionary() {
            len += 8;
            for (token, _) in self.id_map.entries() {
                len += 8 + token.len() as u64 + 8;
            }
        }
        len
    }
}
