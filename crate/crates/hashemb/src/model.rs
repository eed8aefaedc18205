//! Bag-of-n-grams linear classifier on top of a hash embedding, trained
//! with cross-entropy, Adam (lazy on the embedding tables), early stopping
//! on validation loss, and soft-voting ensembles.
//!
//! A document embeds as the sum of its token embeddings; a single dense
//! layer with softmax produces class probabilities. Training samples a
//! fresh contiguous snippet of each document every epoch as input dropout;
//! evaluation always uses the full document.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::embedding::{HashEmbedding, SparseGrad};
use crate::error::{Error, Result};
use crate::text::{sample_snippet, TokenDocs, Vocabulary};

/// Softmax in place with max subtraction, so large logits cannot overflow.
pub fn softmax(logits: &mut [f32]) {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

/// Cross-entropy of a probability vector against the true label:
/// `-ln(probs[label])`, with the probability clamped at 1e-12.
pub fn cross_entropy(probs: &[f32], label: usize) -> Result<f32> {
    if label >= probs.len() {
        return Err(Error::invalid(format!(
            "label {label} outside 0..{}",
            probs.len()
        )));
    }
    Ok(-probs[label].max(1e-12).ln())
}

/// Dense layer gradients plus the sparse embedding gradient for one sample
/// or one accumulated batch.
#[derive(Debug, Clone)]
pub struct Gradients {
    /// num_classes × e_dim, row-major.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    pub embedding: SparseGrad,
}

impl Gradients {
    #[must_use]
    pub fn zeros(num_classes: usize, e_dim: usize) -> Self {
        Gradients {
            weights: vec![0.0; num_classes * e_dim],
            bias: vec![0.0; num_classes],
            embedding: SparseGrad::default(),
        }
    }

    /// Element-wise accumulation; used to form batch gradients as the sum of
    /// per-sample gradients in sample order.
    pub fn accumulate(&mut self, other: &Gradients) {
        debug_assert_eq!(self.weights.len(), other.weights.len());
        for (a, &b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, &b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
        self.embedding.accumulate(&other.embedding);
    }

    pub fn scale(&mut self, factor: f32) {
        for g in &mut self.weights {
            *g *= factor;
        }
        for g in &mut self.bias {
            *g *= factor;
        }
        self.embedding.scale(factor);
    }
}

/// Shallow text classifier: document embedding into one dense softmax layer.
#[derive(Debug, Clone)]
pub struct LinearClassifier {
    embedding: HashEmbedding,
    /// num_classes × e_dim, row-major; zero-initialized so an untrained
    /// model predicts the uniform distribution.
    weights: Vec<f32>,
    bias: Vec<f32>,
    num_classes: usize,
}

impl LinearClassifier {
    pub fn new(embedding: HashEmbedding, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::invalid("need at least one class"));
        }
        let e_dim = embedding.output_dim();
        Ok(LinearClassifier {
            embedding,
            weights: vec![0.0; num_classes * e_dim],
            bias: vec![0.0; num_classes],
            num_classes,
        })
    }

    #[must_use]
    pub fn embedding(&self) -> &HashEmbedding {
        &self.embedding
    }

    #[must_use]
    pub fn embedding_mut(&mut self) -> &mut HashEmbedding {
        &mut self.embedding
    }

    #[must_use]
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    #[must_use]
    pub fn e_dim(&self) -> usize {
        self.embedding.output_dim()
    }

    #[must_use]
    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    /// Direct weight access for diagnostics and tests.
    #[must_use]
    pub fn weights_mut(&mut self) -> &mut [f32] {
        &mut self.weights
    }

    #[must_use]
    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    #[must_use]
    pub fn bias_mut(&mut self) -> &mut [f32] {
        &mut self.bias
    }

    /// Trainable parameters: embedding tables plus the dense layer.
    #[must_use]
    pub fn parameter_count(&self) -> u64 {
        self.embedding.parameter_count() + (self.weights.len() + self.bias.len()) as u64
    }

    fn logits(&self, doc: &[f32]) -> Vec<f32> {
        let e_dim = doc.len();
        (0..self.num_classes)
            .map(|c| {
                let row = &self.weights[c * e_dim..(c + 1) * e_dim];
                let mut z = self.bias[c];
                for (w, x) in row.iter().zip(doc) {
                    z += w * x;
                }
                z
            })
            .collect()
    }

    /// Class probabilities for a token sequence.
    #[must_use]
    pub fn forward<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f32> {
        let doc = self.embedding.embed_bag(tokens);
        let mut logits = self.logits(&doc);
        softmax(&mut logits);
        logits
    }

    /// Predicted class: argmax probability, ties to the lowest index.
    #[must_use]
    pub fn predict<S: AsRef<str>>(&self, tokens: &[S]) -> usize {
        argmax(&self.forward(tokens))
    }

    /// Cross-entropy gradients for one sample: softmax gradient
    /// `probs - one_hot(label)`, pushed through the dense layer and the
    /// embedding. Returns the gradients and the sample loss. The pass runs
    /// in f64 and rounds once per gradient slot, so the result stays within
    /// storage precision of the exact derivative.
    pub fn backward<S: AsRef<str>>(&self, tokens: &[S], label: usize) -> Result<(Gradients, f32)> {
        if label >= self.num_classes {
            return Err(Error::invalid(format!(
                "label {label} outside 0..{}",
                self.num_classes
            )));
        }
        let doc = self.embedding.embed_bag(tokens);
        let e_dim = doc.len();
        let doc64: Vec<f64> = doc.iter().map(|&x| f64::from(x)).collect();
        let mut probs: Vec<f64> = (0..self.num_classes)
            .map(|c| {
                let row = &self.weights[c * e_dim..(c + 1) * e_dim];
                let mut z = f64::from(self.bias[c]);
                for (&w, x) in row.iter().zip(&doc64) {
                    z += f64::from(w) * x;
                }
                z
            })
            .collect();
        let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for p in &mut probs {
            *p = (*p - max).exp();
            sum += *p;
        }
        for p in &mut probs {
            *p /= sum;
        }
        let loss = (-probs[label].max(1e-12).ln()) as f32;

        let mut grads = Gradients::zeros(self.num_classes, e_dim);
        let mut upstream = vec![0.0f64; e_dim];
        for c in 0..self.num_classes {
            let mut g = probs[c];
            if c == label {
                g -= 1.0;
            }
            grads.bias[c] = g as f32;
            let w_row = &self.weights[c * e_dim..(c + 1) * e_dim];
            let g_row = &mut grads.weights[c * e_dim..(c + 1) * e_dim];
            for j in 0..e_dim {
                g_row[j] = (g * doc64[j]) as f32;
                upstream[j] += f64::from(w_row[j]) * g;
            }
        }
        self.embedding
            .backward_bag_f64_into(tokens, &upstream, &mut grads.embedding)?;
        Ok((grads, loss))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Adam hyperparameters. Defaults: α = 0.001 and the method's customary
/// β1 = 0.9, β2 = 0.999, ε = 1e-8.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AdamConfig {
    pub alpha: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            alpha: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam optimizer state: dense moments for the layer, lazy per-row moments
/// for the embedding tables (rows untouched in a step keep their moments and
/// values bit-unchanged; bias correction always uses the global step).
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    w_m: Vec<f32>,
    w_v: Vec<f32>,
    b_m: Vec<f32>,
    b_v: Vec<f32>,
    pool_m: HashMap<u64, Vec<f32>>,
    pool_v: HashMap<u64, Vec<f32>>,
    imp_m: HashMap<u64, Vec<f32>>,
    imp_v: HashMap<u64, Vec<f32>>,
}

/// One Adam update on a parameter row. Moment math runs in f64; parameters
/// stay f32.
fn adam_row(
    config: &AdamConfig,
    bc1: f64,
    bc2: f64,
    params: &mut [f32],
    grads: &[f32],
    m: &mut [f32],
    v: &mut [f32],
) {
    let b1 = f64::from(config.beta1);
    let b2 = f64::from(config.beta2);
    let alpha = f64::from(config.alpha);
    let eps = f64::from(config.epsilon);
    for i in 0..params.len() {
        let g = f64::from(grads[i]);
        let mi = b1 * f64::from(m[i]) + (1.0 - b1) * g;
        let vi = b2 * f64::from(v[i]) + (1.0 - b2) * g * g;
        m[i] = mi as f32;
        v[i] = vi as f32;
        let update = alpha * (mi / bc1) / ((vi / bc2).sqrt() + eps);
        params[i] = (f64::from(params[i]) - update) as f32;
    }
}

impl AdamState {
    #[must_use]
    pub fn new(model: &LinearClassifier, config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            w_m: vec![0.0; model.weights.len()],
            w_v: vec![0.0; model.weights.len()],
            b_m: vec![0.0; model.bias.len()],
            b_v: vec![0.0; model.bias.len()],
            pool_m: HashMap::new(),
            pool_v: HashMap::new(),
            imp_m: HashMap::new(),
            imp_v: HashMap::new(),
        }
    }

    #[must_use]
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one Adam step to the dense layer and every embedding row the
    /// gradient touches. Gradients for a fixed importance table are ignored.
    pub fn step(&mut self, model: &mut LinearClassifier, grads: &Gradients) -> Result<()> {
        self.step += 1;
        let bc1 = 1.0 - f64::from(self.config.beta1).powi(self.step as i32);
        let bc2 = 1.0 - f64::from(self.config.beta2).powi(self.step as i32);

        adam_row(
            &self.config,
            bc1,
            bc2,
            &mut model.weights,
            &grads.weights,
            &mut self.w_m,
            &mut self.w_v,
        );
        adam_row(
            &self.config,
            bc1,
            bc2,
            &mut model.bias,
            &grads.bias,
            &mut self.b_m,
            &mut self.b_v,
        );

        let dim = model.embedding.config().dim;
        let mut deltas = SparseGrad::default();
        for (&bucket, grad) in &grads.embedding.pool_rows {
            let m = self
                .pool_m
                .entry(bucket)
                .or_insert_with(|| vec![0.0; dim]);
            let v = self
                .pool_v
                .entry(bucket)
                .or_insert_with(|| vec![0.0; dim]);
            let mut row = vec![0.0f32; grad.len()];
            adam_row(&self.config, bc1, bc2, &mut row, grad, m, v);
            deltas.pool_rows.insert(bucket, row);
        }
        if model.embedding.config().importance_trainable {
            let k = model.embedding.config().num_hashes;
            for (&id, grad) in &grads.embedding.importance_rows {
                let m = self.imp_m.entry(id).or_insert_with(|| vec![0.0; k]);
                let v = self.imp_v.entry(id).or_insert_with(|| vec![0.0; k]);
                let mut row = vec![0.0f32; grad.len()];
                adam_row(&self.config, bc1, bc2, &mut row, grad, m, v);
                deltas.importance_rows.insert(id, row);
            }
        }
        model.embedding.apply_sparse_update(&deltas)
    }
}

/// Training protocol settings.
#[derive(Debug, Clone, Serialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many epochs without validation-loss improvement.
    pub patience: usize,
    pub val_fraction: f64,
    /// Sample a fresh contiguous snippet of each document every epoch; off
    /// means full documents.
    pub snippets: bool,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            max_epochs: 100,
            patience: 10,
            val_fraction: 0.05,
            snippets: true,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::invalid(
                "batch size, epoch limit and patience must be positive",
            ));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "validation fraction must be in (0, 1), got {}",
                self.val_fraction
            )));
        }
        Ok(())
    }
}

/// Metrics of one completed epoch.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpochMetrics {
    /// 1-based epoch number.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

/// Per-epoch metrics and which epoch's weights the model kept.
#[derive(Debug, Clone, Serialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochMetrics>,
    /// 1-based; indexes the epoch with the lowest validation loss.
    pub best_epoch: usize,
}

/// Early-stopping bookkeeping: tracks the best monitored loss and how long
/// since it improved (strict improvement only).
#[derive(Debug, Clone)]
struct EarlyStopping {
    patience: usize,
    best_loss: f64,
    best_epoch: usize,
}

#[derive(Debug, PartialEq, Eq)]
enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best_loss: f64::INFINITY,
            best_epoch: 0,
        }
    }

    fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_epoch = epoch;
            StopDecision::Improved
        } else if epoch - self.best_epoch > self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}

struct ModelSnapshot {
    weights: Vec<f32>,
    bias: Vec<f32>,
    embedding: (Vec<f32>, Vec<f32>),
}

fn take_snapshot(model: &LinearClassifier) -> ModelSnapshot {
    ModelSnapshot {
        weights: model.weights.clone(),
        bias: model.bias.clone(),
        embedding: model.embedding.snapshot(),
    }
}

fn restore_snapshot(model: &mut LinearClassifier, snap: &ModelSnapshot) -> Result<()> {
    model.weights.copy_from_slice(&snap.weights);
    model.bias.copy_from_slice(&snap.bias);
    model.embedding.restore(&snap.embedding)
}

/// Validation size for a given split fraction: `ceil(n · fraction)`, clamped
/// so both sides stay non-empty.
fn validation_len(n: usize, fraction: f64) -> usize {
    (((n as f64) * fraction).ceil() as usize).clamp(1, n - 1)
}

fn mean_loss_and_accuracy(
    model: &LinearClassifier,
    docs: &TokenDocs,
    indices: &[usize],
) -> Result<(f64, f64)> {
    let mut loss_sum = 0.0f64;
    let mut correct = 0usize;
    for &i in indices {
        let probs = model.forward(&docs.docs[i]);
        loss_sum += f64::from(cross_entropy(&probs, docs.labels[i])?);
        if argmax(&probs) == docs.labels[i] {
            correct += 1;
        }
    }
    let n = indices.len() as f64;
    Ok((loss_sum / n, correct as f64 / n))
}

/// Trains the model in place and reports per-epoch metrics. See
/// [`train_observed`] for the protocol; this variant just drops the
/// per-epoch callback.
pub fn train(
    model: &mut LinearClassifier,
    docs: &TokenDocs,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    train_observed(model, docs, config, |_| {})
}

/// Training protocol: hold out `val_fraction` of the documents, then iterate
/// shuffled minibatches of freshly sampled snippets, one Adam step per
/// batch. After each epoch the full held-out documents are scored; training
/// stops when validation loss has not improved for `patience` epochs (or at
/// `max_epochs`) and the best epoch's weights are restored. Deterministic
/// given `config.seed`. The callback sees each epoch's metrics as they
/// complete.
pub fn train_observed<F: FnMut(&EpochMetrics)>(
    model: &mut LinearClassifier,
    docs: &TokenDocs,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainHistory> {
    config.validate()?;
    if docs.num_classes != model.num_classes {
        return Err(Error::ShapeMismatch {
            expected: format!("{} classes", model.num_classes),
            got: format!("{} classes", docs.num_classes),
        });
    }
    if docs.len() < 2 {
        return Err(Error::invalid("need at least 2 documents to train"));
    }
    if let Some(&bad) = docs.labels.iter().find(|&&l| l >= docs.num_classes) {
        return Err(Error::invalid(format!(
            "label {bad} outside 0..{}",
            docs.num_classes
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut indices: Vec<usize> = (0..docs.len()).collect();
    indices.shuffle(&mut rng);
    let val_len = validation_len(docs.len(), config.val_fraction);
    let val_idx = indices.split_off(docs.len() - val_len);
    let mut train_idx = indices;

    let mut adam = AdamState::new(model, config.adam);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best: Option<ModelSnapshot> = None;
    let mut history = Vec::new();

    for epoch in 1..=config.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        for batch in train_idx.chunks(config.batch_size) {
            let mut acc = Gradients::zeros(model.num_classes, model.e_dim());
            for &i in batch {
                let tokens: &[String] = if config.snippets {
                    sample_snippet(&docs.docs[i], &mut rng)
                } else {
                    &docs.docs[i]
                };
                let (grads, loss) = model.backward(tokens, docs.labels[i])?;
                acc.accumulate(&grads);
                loss_sum += f64::from(loss);
            }
            acc.scale(1.0 / batch.len() as f32);
            adam.step(model, &acc)?;
        }
        let train_loss = loss_sum / train_idx.len() as f64;
        let (val_loss, val_accuracy) = mean_loss_and_accuracy(model, docs, &val_idx)?;
        let metrics = EpochMetrics {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
        };
        on_epoch(&metrics);
        history.push(metrics);
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best = Some(take_snapshot(model)),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }
    if let Some(snap) = &best {
        restore_snapshot(model, snap)?;
    }
    Ok(TrainHistory {
        epochs: history,
        best_epoch: stopper.best_epoch,
    })
}

/// Accuracy over full documents: fraction of samples whose argmax
/// probability hits the label (ties to the lowest class index).
pub fn evaluate(model: &LinearClassifier, docs: &TokenDocs) -> Result<f64> {
    Ok(evaluate_detailed(model, docs)?.0)
}

/// Accuracy plus a row-major confusion matrix (`confusion[true][predicted]`).
pub fn evaluate_detailed(model: &LinearClassifier, docs: &TokenDocs) -> Result<(f64, Vec<u64>)> {
    check_eval_inputs(model.num_classes, docs)?;
    let c = model.num_classes;
    let mut confusion = vec![0u64; c * c];
    for (doc, &label) in docs.docs.iter().zip(&docs.labels) {
        confusion[label * c + model.predict(doc)] += 1;
    }
    let correct: u64 = (0..c).map(|i| confusion[i * c + i]).sum();
    Ok((correct as f64 / docs.len() as f64, confusion))
}

fn check_eval_inputs(num_classes: usize, docs: &TokenDocs) -> Result<()> {
    if docs.num_classes != num_classes {
        return Err(Error::ShapeMismatch {
            expected: format!("{num_classes} classes"),
            got: format!("{} classes", docs.num_classes),
        });
    }
    if docs.is_empty() {
        return Err(Error::invalid("nothing to evaluate"));
    }
    if let Some(&bad) = docs.labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::invalid(format!("label {bad} outside 0..{num_classes}")));
    }
    Ok(())
}

/// Soft voting: the arithmetic mean of the members' probability vectors,
/// summed in member order.
pub fn ensemble_predict<S: AsRef<str>>(
    models: &[LinearClassifier],
    tokens: &[S],
) -> Result<Vec<f32>> {
    let [first, rest @ ..] = models else {
        return Err(Error::invalid("ensemble needs at least one member"));
    };
    let mut sum = first.forward(tokens);
    for model in rest {
        if model.num_classes != first.num_classes {
            return Err(Error::ShapeMismatch {
                expected: format!("{} classes", first.num_classes),
                got: format!("{} classes", model.num_classes),
            });
        }
        for (s, p) in sum.iter_mut().zip(model.forward(tokens)) {
            *s += p;
        }
    }
    let inv = 1.0 / models.len() as f32;
    for s in &mut sum {
        *s *= inv;
    }
    Ok(sum)
}

/// Accuracy of the soft-voting ensemble over full documents.
pub fn ensemble_evaluate(models: &[LinearClassifier], docs: &TokenDocs) -> Result<f64> {
    let [first, ..] = models else {
        return Err(Error::invalid("ensemble needs at least one member"));
    };
    check_eval_inputs(first.num_classes, docs)?;
    let mut correct = 0usize;
    for (doc, &label) in docs.docs.iter().zip(&docs.labels) {
        if argmax(&ensemble_predict(models, doc)?) == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / docs.len() as f64)
}

/// Ranking direction for [`top_importance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankOrder {
    Largest,
    Smallest,
}

/// One ranked vocabulary entry with its importance row.
#[derive(Debug, Clone, Serialize)]
pub struct ImportanceEntry {
    pub token: String,
    pub id: u64,
    pub row: Vec<f32>,
    /// max_i |row[i]|, the ranking key.
    pub magnitude: f32,
}

/// The `n` enrolled tokens with the largest (or smallest) importance
/// magnitude `max_i |P[id][i]|`. Ties resolve by ascending id, so a freshly
/// initialized table ranks in id order. Requires dictionary ids: hashed ids
/// cannot be mapped back to tokens.
pub fn top_importance(
    embedding: &HashEmbedding,
    vocab: &Vocabulary,
    n: usize,
    order: RankOrder,
) -> Result<Vec<ImportanceEntry>> {
    if embedding.config().id_mode != crate::embedding::IdMode::Dictionary {
        return Err(Error::DictionaryRequired(
            "importance ranking maps ids back to tokens".into(),
        ));
    }
    let mut entries = Vec::with_capacity(vocab.len());
    for (token, id) in vocab.entries() {
        if id >= embedding.config().num_ids {
            return Err(Error::IdOutOfRange {
                id,
                size: embedding.config().num_ids,
            });
        }
        let row = embedding.importance_row(id).to_vec();
        let magnitude = row.iter().fold(0.0f32, |m, v| m.max(v.abs()));
        entries.push(ImportanceEntry {
            token: token.to_string(),
            id,
            row,
            magnitude,
        });
    }
    match order {
        RankOrder::Largest => {
            entries.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude).then(a.id.cmp(&b.id)));
        }
        RankOrder::Smallest => {
            entries.sort_by(|a, b| a.magnitude.total_cmp(&b.magnitude).then(a.id.cmp(&b.id)));
        }
    }
    entries.truncate(n);
    Ok(entries)
}

/// A trained classifier plus the n-gram order its documents were expanded
/// with, as stored on disk: the embedding section, then a shape header
/// (num_classes, e_dim, ngram order; u64 LE), then W and bias (f32 LE).
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub classifier: LinearClassifier,
    pub ngram_order: usize,
}

impl ModelBundle {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        self.classifier.embedding.write_to(w)?;
        w.write_u64::<LittleEndian>(self.classifier.num_classes as u64)?;
        w.write_u64::<LittleEndian>(self.classifier.e_dim() as u64)?;
        w.write_u64::<LittleEndian>(self.ngram_order as u64)?;
        for &v in &self.classifier.weights {
            w.write_f32::<LittleEndian>(v)?;
        }
        for &v in &self.classifier.bias {
            w.write_f32::<LittleEndian>(v)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let embedding = HashEmbedding::read_from(r)?;
        let num_classes = r.read_u64::<LittleEndian>()? as usize;
        let e_dim = r.read_u64::<LittleEndian>()? as usize;
        let ngram_order = r.read_u64::<LittleEndian>()? as usize;
        if e_dim != embedding.output_dim() {
            return Err(Error::CorruptFile(format!(
                "stored layer width {e_dim} does not match embedding output {}",
                embedding.output_dim()
            )));
        }
        if num_classes == 0 || ngram_order == 0 {
            return Err(Error::CorruptFile(
                "class count and n-gram order must be positive".into(),
            ));
        }
        let mut weights = vec![0.0f32; num_classes * e_dim];
        for v in &mut weights {
            *v = r.read_f32::<LittleEndian>()?;
        }
        let mut bias = vec![0.0f32; num_classes];
        for v in &mut bias {
            *v = r.read_f32::<LittleEndian>()?;
        }
        Ok(ModelBundle {
            classifier: LinearClassifier {
                embedding,
                weights,
                bias,
                num_classes,
            },
            ngram_order,
        })
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
}
