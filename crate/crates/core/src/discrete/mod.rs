//! Discrete composed training with the score-function (REINFORCE) estimator.
//!
//! For a labeled pair `(x, y)` the maximised objective is
//!
//! ```text
//! scale · E_{ŷ∼p_θ(·|x)} [ max(log p_Π(y | ŷ), γ) ]  +  λ · log p_θ(y | x)
//! ```
//!
//! averaged over the batch. Only the composed reward is clamped.
//!
//! Sequences of length `len` over `vocab` tokens are identified with indices
//! in `0..vocab^len`, first position most significant.

mod experiment;

pub use experiment::{
    run_discrete_experiment, run_discrete_seed, DiscreteArm, DiscreteArmMetrics, DiscreteExperimentConfig,
    DiscreteReport, DiscreteSeedReport, DiscreteTask, DiscreteTaskConfig,
};

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::rng;

pub const MAX_LEN: usize = 4;
pub const MAX_VOCAB: usize = 8;
/// Largest output space `exact_grad` will enumerate.
pub const MAX_ENUMERATION: usize = 4096;

/// Per-position probabilities must sum to one within this tolerance.
const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// All sequences of a fixed length over a fixed vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqSpace {
    len: usize,
    vocab: usize,
}

#[allow(clippy::len_without_is_empty)]
impl SeqSpace {
    pub fn new(len: usize, vocab: usize) -> Result<Self> {
        if !(1..=MAX_LEN).contains(&len) {
            bail!(InvalidInput, "sequence length must lie in 1..={MAX_LEN} (got {len})");
        }
        if !(2..=MAX_VOCAB).contains(&vocab) {
            bail!(InvalidInput, "vocabulary size must lie in 2..={MAX_VOCAB} (got {vocab})");
        }
        Ok(Self { len, vocab })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    /// Number of sequences, `vocab^len`.
    pub fn size(&self) -> usize {
        self.vocab.pow(self.len as u32)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut seq = vec![0; self.len];
        for t in (0..self.len).rev() {
            seq[t] = index % self.vocab;
            index /= self.vocab;
        }
        seq
    }

    pub fn encode(&self, seq: &[usize]) -> Result<usize> {
        if seq.len() != self.len || seq.iter().any(|&v| v >= self.vocab) {
            bail!(InvalidInput, "sequence {seq:?} is not in the space");
        }
        Ok(seq.iter().fold(0, |acc, &v| acc * self.vocab + v))
    }

    pub fn hamming(&self, a: usize, b: usize) -> usize {
        let (a, b) = (self.decode(a), self.decode(b));
        a.iter().zip(&b).filter(|(x, y)| x != y).count()
    }

    fn check(&self, index: usize) -> Result<()> {
        if index >= self.size() {
            bail!(InvalidInput, "sequence index {index} is outside a space of {}", self.size());
        }
        Ok(())
    }
}

/// Tabular logits per (input id, position); positions are independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalSeqModel {
    space: SeqSpace,
    inputs: usize,
    logits: Vec<f64>,
}

impl CategoricalSeqModel {
    /// Uniform model (all logits zero).
    pub fn uniform(inputs: usize, space: SeqSpace) -> Result<Self> {
        if inputs == 0 {
            bail!(InvalidInput, "the model needs at least one input id");
        }
        Ok(Self { space, inputs, logits: vec![0.0; inputs * space.len * space.vocab] })
    }

    /// Logits drawn from `N(0, scale²)`.
    pub fn random(inputs: usize, space: SeqSpace, scale: f64, seed: u64) -> Result<Self> {
        let normal = match Normal::new(0.0, scale) {
            Ok(n) if scale.is_finite() => n,
            _ => bail!(InvalidParameter, "logit scale must be finite and non-negative"),
        };
        let mut model = Self::uniform(inputs, space)?;
        let mut rng = rng::seeded(seed);
        for l in &mut model.logits {
            *l = normal.sample(&mut rng);
        }
        Ok(model)
    }

    /// Logits laid out as `[input][position][token]`.
    pub fn from_logits(inputs: usize, space: SeqSpace, logits: Vec<f64>) -> Result<Self> {
        if inputs == 0 || logits.len() != inputs * space.len * space.vocab {
            bail!(InvalidInput, "expected {} logits", inputs * space.len * space.vocab);
        }
        Ok(Self { space, inputs, logits })
    }

    pub fn space(&self) -> SeqSpace {
        self.space
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn num_params(&self) -> usize {
        self.logits.len()
    }

    fn block(&self, x: usize) -> usize {
        x * self.space.len * self.space.vocab
    }

    fn check_input(&self, x: usize) -> Result<()> {
        if x >= self.inputs {
            bail!(InvalidInput, "input id {x} is outside 0..{}", self.inputs);
        }
        Ok(())
    }

    /// Softmax probabilities laid out as `[position][token]`.
    pub fn probs(&self, x: usize) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let v = self.space.vocab;
        let logits = &self.logits[self.block(x)..self.block(x) + self.space.len * v];
        let mut probs = vec![0.0; logits.len()];
        for (row, out) in logits.chunks(v).zip(probs.chunks_mut(v)) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for (o, &l) in out.iter_mut().zip(row) {
                *o = libm::exp(l - m);
            }
            let z: f64 = out.iter().sum();
            for o in out.iter_mut() {
                *o /= z;
            }
            let total: f64 = out.iter().sum();
            if (total - 1.0).abs().is_nan() || (total - 1.0).abs() > NORMALIZATION_TOLERANCE || out.iter().any(|p| !p.is_finite()) {
                bail!(InvalidState, "probabilities for input {x} do not normalize");
            }
        }
        Ok(probs)
    }

    pub fn log_prob(&self, x: usize, y: usize) -> Result<f64> {
        self.space.check(y)?;
        let probs = self.probs(x)?;
        Ok(seq_log_prob(self.space, &probs, &self.space.decode(y)))
    }

    /// Most likely sequence; ties go to the lowest token.
    pub fn argmax(&self, x: usize) -> Result<usize> {
        let probs = self.probs(x)?;
        let seq: Vec<usize> = probs.chunks(self.space.vocab).map(argmax_lowest).collect();
        self.space.encode(&seq)
    }

    /// Apply `θ ← θ + step · direction`.
    pub fn add_scaled(&mut self, direction: &[f64], step: f64) -> Result<()> {
        if direction.len() != self.logits.len() {
            bail!(InvalidInput, "direction has {} entries, expected {}", direction.len(), self.logits.len());
        }
        for (l, d) in self.logits.iter_mut().zip(direction) {
            *l += step * d;
        }
        Ok(())
    }

    /// `grad += weight · ∇ log p_θ(seq | x)` given precomputed `probs`.
    fn add_score(&self, x: usize, seq: &[usize], probs: &[f64], weight: f64, grad: &mut [f64]) {
        let v = self.space.vocab;
        let base = self.block(x);
        for (t, &tok) in seq.iter().enumerate() {
            for k in 0..v {
                let indicator = if k == tok { 1.0 } else { 0.0 };
                grad[base + t * v + k] += weight * (indicator - probs[t * v + k]);
            }
        }
    }
}

fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in row.iter().enumerate() {
        if p > row[best] {
            best = k;
        }
    }
    best
}

fn seq_log_prob(space: SeqSpace, probs: &[f64], seq: &[usize]) -> f64 {
    seq.iter()
        .enumerate()
        .map(|(t, &tok)| libm::log(probs[t * space.vocab + tok]))
        .sum()
}

fn sample_seq(space: SeqSpace, probs: &[f64], rng: &mut rng::Rng, out: &mut [usize]) {
    for (t, row) in probs.chunks(space.vocab).enumerate() {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        out[t] = space.vocab - 1;
        for (k, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                out[t] = k;
                break;
            }
        }
    }
}

/// Sorted, de-duplicated sequence indices.
fn normalize_valid(space: SeqSpace, valid: &[usize]) -> Result<Vec<usize>> {
    if valid.is_empty() {
        bail!(InvalidInput, "the valid set is empty");
    }
    for &v in valid {
        space.check(v)?;
    }
    let mut valid = valid.to_vec();
    valid.sort_unstable();
    valid.dedup();
    Ok(valid)
}

/// Nearest valid sequence in Hamming distance; ties go to the lowest index.
pub fn nearest_valid(space: SeqSpace, valid: &[usize], y: usize) -> usize {
    let mut best = (usize::MAX, 0);
    for &v in valid {
        let d = space.hamming(v, y);
        if d < best.0 {
            best = (d, v);
        }
    }
    best.1
}

/// Hyperparameters of the count-based denoiser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    /// Per-position probability of replacing a token by a uniform draw.
    pub rate: f64,
    pub samples: usize,
    /// Pseudo-count on `y = ŷ`, so unseen inputs are left alone.
    pub identity_count: f64,
    /// Pseudo-count on every sequence, so every row has full support.
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        Self { rate: 0.25, samples: 20_000, identity_count: 1.0, smoothing: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CountTable {
    identity_count: f64,
    smoothing: f64,
    /// `(ŷ, y) → count`.
    counts: BTreeMap<(usize, usize), u64>,
    totals: BTreeMap<usize, u64>,
}

/// A conditional distribution `p_Π(y | ŷ)` over a sequence space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDenoiser {
    space: SeqSpace,
    kind: DenoiserKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum DenoiserKind {
    /// Dense rows `rows[ŷ · size + y]`.
    Table(Vec<f64>),
    /// Each position keeps the nearest valid sequence's token with
    /// probability `keep` and otherwise moves to another token uniformly.
    Channel { valid: Vec<usize>, keep: f64 },
    /// Counts of (corrupted, clean) pairs plus pseudo-counts.
    Counts(CountTable),
}

impl DiscreteDenoiser {
    /// Explicit rows; each must be a probability distribution.
    pub fn table(space: SeqSpace, rows: Vec<f64>) -> Result<Self> {
        let n = space.size();
        if rows.len() != n * n {
            bail!(InvalidInput, "a table over {n} sequences needs {} entries", n * n);
        }
        for (i, row) in rows.chunks(n).enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
                bail!(InvalidInput, "row {i} is not a probability distribution");
            }
        }
        Ok(Self { space, kind: DenoiserKind::Table(rows) })
    }

    /// Per-position channel towards the nearest valid sequence; `keep = 1` is
    /// the hard projection.
    pub fn channel(space: SeqSpace, valid: &[usize], keep: f64) -> Result<Self> {
        let chance = 1.0 / space.vocab as f64;
        if !(keep > chance && keep <= 1.0) {
            bail!(InvalidParameter, "keep probability must lie in ({chance}, 1] (got {keep})");
        }
        Ok(Self { space, kind: DenoiserKind::Channel { valid: normalize_valid(space, valid)?, keep } })
    }

    /// Fit by counting corrupted copies of uniformly drawn valid sequences.
    /// Half the draws are left clean.
    pub fn from_corruptions(space: SeqSpace, valid: &[usize], cfg: &CorruptionConfig) -> Result<Self> {
        let valid = normalize_valid(space, valid)?;
        if !(0.0..=1.0).contains(&cfg.rate) || cfg.samples == 0 {
            bail!(InvalidParameter, "corruption rate must lie in [0, 1] with at least one sample");
        }
        if !(cfg.identity_count >= 0.0 && cfg.smoothing > 0.0 && cfg.identity_count.is_finite() && cfg.smoothing.is_finite()) {
            bail!(InvalidParameter, "pseudo-counts must be finite, smoothing positive");
        }
        let mut rng = rng::seeded(cfg.seed);
        let mut counts = BTreeMap::new();
        let mut totals = BTreeMap::new();
        for s in 0..cfg.samples {
            let y = valid[rng.random_range(0..valid.len())];
            let mut seq = space.decode(y);
            if s % 2 == 1 {
                for tok in &mut seq {
                    if rng.random::<f64>() < cfg.rate {
                        *tok = rng.random_range(0..space.vocab);
                    }
                }
            }
            let noisy = space.encode(&seq)?;
            *counts.entry((noisy, y)).or_insert(0) += 1;
            *totals.entry(noisy).or_insert(0) += 1;
        }
        Ok(Self {
            space,
            kind: DenoiserKind::Counts(CountTable {
                identity_count: cfg.identity_count,
                smoothing: cfg.smoothing,
                counts,
                totals,
            }),
        })
    }

    pub fn space(&self) -> SeqSpace {
        self.space
    }

    /// `p_Π(y | ŷ)`.
    pub fn prob(&self, y: usize, y_hat: usize) -> f64 {
        let n = self.space.size();
        match &self.kind {
            DenoiserKind::Table(rows) => rows[y_hat * n + y],
            DenoiserKind::Channel { valid, keep } => {
                let target = self.space.decode(nearest_valid(self.space, valid, y_hat));
                let other = (1.0 - keep) / (self.space.vocab - 1) as f64;
                self.space
                    .decode(y)
                    .iter()
                    .zip(&target)
                    .map(|(a, b)| if a == b { *keep } else { other })
                    .product()
            }
            DenoiserKind::Counts(t) => {
                let c = t.counts.get(&(y_hat, y)).copied().unwrap_or(0) as f64;
                let total = t.totals.get(&y_hat).copied().unwrap_or(0) as f64;
                let id = if y == y_hat { t.identity_count } else { 0.0 };
                (c + id + t.smoothing) / (total + t.identity_count + t.smoothing * n as f64)
            }
        }
    }

    /// `max(log p_Π(y | ŷ), γ)`.
    pub fn clamped_log_prob(&self, y: usize, y_hat: usize, gamma: f64) -> f64 {
        let p = self.prob(y, y_hat);
        if p > 0.0 {
            libm::log(p).max(gamma)
        } else {
            gamma
        }
    }

    /// The hard denoiser `argmax_y p_Π(y | ŷ)`; ties go to the lowest index.
    pub fn denoise(&self, y_hat: usize) -> usize {
        let n = self.space.size();
        match &self.kind {
            DenoiserKind::Table(rows) => argmax_lowest(&rows[y_hat * n..(y_hat + 1) * n]),
            DenoiserKind::Channel { valid, .. } => nearest_valid(self.space, valid, y_hat),
            DenoiserKind::Counts(t) => {
                // with no identity pseudo-count every unseen entry ties at the smoothing floor
                let mut best = if t.identity_count > 0.0 { (t.identity_count, y_hat) } else { (0.0, 0) };
                for (&(_, y), &c) in t.counts.range((y_hat, 0)..(y_hat + 1, 0)) {
                    let score = c as f64 + if y == y_hat { t.identity_count } else { 0.0 };
                    if score > best.0 || (score == best.0 && y < best.1) {
                        best = (score, y);
                    }
                }
                best.1
            }
        }
    }
}

/// Weights of the discrete composed objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub lambda: f64,
    /// Floor on the composed reward `log p_Π(y | ŷ)`.
    pub gamma: f64,
    /// Multiplier on the composed term.
    pub scale: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self { lambda: 1.0, gamma: -50.0, scale: 0.1 }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            bail!(InvalidParameter, "lambda must be finite and non-negative (got {})", self.lambda);
        }
        if !(self.gamma.is_finite() && self.gamma < 0.0) {
            bail!(InvalidParameter, "gamma must be finite and negative (got {})", self.gamma);
        }
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            bail!(InvalidParameter, "scale must be finite and non-negative (got {})", self.scale);
        }
        Ok(())
    }
}

/// Labeled pairs `(input id, target sequence index)`.
pub type Batch = [(usize, usize)];

fn check_batch(model: &CategoricalSeqModel, denoiser: &DiscreteDenoiser, batch: &Batch) -> Result<()> {
    if batch.is_empty() {
        bail!(InvalidInput, "empty batch");
    }
    if model.space != denoiser.space {
        bail!(InvalidInput, "model and denoiser use different sequence spaces");
    }
    for &(x, y) in batch {
        model.check_input(x)?;
        model.space.check(y)?;
    }
    Ok(())
}

/// The objective evaluated by enumerating every output sequence.
pub fn exact_objective(
    model: &CategoricalSeqModel,
    denoiser: &DiscreteDenoiser,
    batch: &Batch,
    cfg: &ObjectiveConfig,
) -> Result<f64> {
    let (value, _) = enumerate(model, denoiser, batch, cfg, false)?;
    Ok(value)
}

/// The exact gradient of the objective, by enumeration.
pub fn exact_grad(
    model: &CategoricalSeqModel,
    denoiser: &DiscreteDenoiser,
    batch: &Batch,
    cfg: &ObjectiveConfig,
) -> Result<Vec<f64>> {
    let (_, grad) = enumerate(model, denoiser, batch, cfg, true)?;
    Ok(grad)
}

fn enumerate(
    model: &CategoricalSeqModel,
    denoiser: &DiscreteDenoiser,
    batch: &Batch,
    cfg: &ObjectiveConfig,
    with_grad: bool,
) -> Result<(f64, Vec<f64>)> {
    cfg.validate()?;
    check_batch(model, denoiser, batch)?;
    let space = model.space;
    if space.size() > MAX_ENUMERATION {
        bail!(InvalidInput, "cannot enumerate {} sequences", space.size());
    }
    let w = 1.0 / batch.len() as f64;
    let mut grad = if with_grad { vec![0.0; model.num_params()] } else { Vec::new() };
    let mut value = 0.0;
    let seqs: Vec<Vec<usize>> = (0..space.size()).map(|i| space.decode(i)).collect();
    for &(x, y) in batch {
        let probs = model.probs(x)?;
        for (i, seq) in seqs.iter().enumerate() {
            let p = libm::exp(seq_log_prob(space, &probs, seq));
            if p == 0.0 {
                continue;
            }
            let r = denoiser.clamped_log_prob(y, i, cfg.gamma);
            value += w * cfg.scale * p * r;
            if with_grad {
                model.add_score(x, seq, &probs, w * cfg.scale * p * r, &mut grad);
            }
        }
        value += w * cfg.lambda * seq_log_prob(space, &probs, &seqs[y]);
        if with_grad {
            model.add_score(x, &seqs[y], &probs, w * cfg.lambda, &mut grad);
        }
    }
    Ok((value, grad))
}

/// A Monte-Carlo gradient with per-coordinate standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradEstimate {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub n_samples: usize,
}

impl GradEstimate {
    /// Largest `|mean − exact| / std_err` over coordinates. Coordinates with
    /// zero standard error must agree to rounding, else the score is infinite.
    pub fn max_z_score(&self, exact: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for ((m, s), e) in self.mean.iter().zip(&self.std_err).zip(exact) {
            let diff = (m - e).abs();
            let z = if *s > 0.0 {
                diff / s
            } else if diff <= 1e-9 * e.abs().max(1.0) {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
        worst
    }
}

/// REINFORCE estimate of the objective's gradient from `n_samples` draws of
/// `ŷ` per example. Each draw yields one full-batch gradient; the report
/// holds their mean and standard error.
pub fn reinforce_grad(
    model: &CategoricalSeqModel,
    denoiser: &DiscreteDenoiser,
    batch: &Batch,
    cfg: &ObjectiveConfig,
    n_samples: usize,
    seed: u64,
) -> Result<GradEstimate> {
    cfg.validate()?;
    check_batch(model, denoiser, batch)?;
    if n_samples == 0 {
        bail!(InvalidParameter, "at least one sample is needed");
    }
    let space = model.space;
    let w = 1.0 / batch.len() as f64;
    let probs = batch.iter().map(|&(x, _)| model.probs(x)).collect::<Result<Vec<_>>>()?;

    let mut fixed = vec![0.0; model.num_params()];
    for (&(x, y), p) in batch.iter().zip(&probs) {
        model.add_score(x, &space.decode(y), p, w * cfg.lambda, &mut fixed);
    }

    let mut rng = rng::seeded(seed);
    let mut mean = vec![0.0; model.num_params()];
    let mut m2 = vec![0.0; model.num_params()];
    let mut g = vec![0.0; model.num_params()];
    let mut seq = vec![0; space.len];
    for s in 1..=n_samples {
        g.copy_from_slice(&fixed);
        for (&(x, y), p) in batch.iter().zip(&probs) {
            sample_seq(space, p, &mut rng, &mut seq);
            let r = denoiser.clamped_log_prob(y, space.encode(&seq)?, cfg.gamma);
            model.add_score(x, &seq, p, w * cfg.scale * r, &mut g);
        }
        for ((m, q), &v) in mean.iter_mut().zip(m2.iter_mut()).zip(&g) {
            let d = v - *m;
            *m += d / s as f64;
            *q += d * (v - *m);
        }
    }
    let n = n_samples as f64;
    let std_err = m2
        .iter()
        .map(|q| if n_samples > 1 { libm::sqrt(q / (n - 1.0) / n) } else { 0.0 })
        .collect();
    Ok(GradEstimate { mean, std_err, n_samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTrainConfig {
    pub objective: ObjectiveConfig,
    pub lr: f64,
    pub steps: usize,
    /// Draws per example per step; unused when `scale = 0`.
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for DiscreteTrainConfig {
    fn default() -> Self {
        Self { objective: ObjectiveConfig::default(), lr: 0.5, steps: 500, n_samples: 8, seed: 0 }
    }
}

impl DiscreteTrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        if !(self.lr.is_finite() && self.lr > 0.0) {
            bail!(InvalidParameter, "learning rate must be positive (got {})", self.lr);
        }
        if self.n_samples == 0 {
            bail!(InvalidParameter, "at least one sample per step is needed");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTrainResult {
    pub model: CategoricalSeqModel,
    /// Mean `−log p_θ(y | x)` over the batch before each step.
    pub nll_trace: Vec<f64>,
}

/// Gradient ascent on the objective with REINFORCE gradients.
pub fn train_discrete(
    model: &CategoricalSeqModel,
    denoiser: &DiscreteDenoiser,
    batch: &Batch,
    cfg: &DiscreteTrainConfig,
) -> Result<DiscreteTrainResult> {
    cfg.validate()?;
    check_batch(model, denoiser, batch)?;
    let mut model = model.clone();
    let mut nll_trace = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let mut nll = 0.0;
        for &(x, y) in batch {
            nll -= model.log_prob(x, y)?;
        }
        nll_trace.push(nll / batch.len() as f64);
        let grad = if cfg.objective.scale == 0.0 {
            reinforce_grad(&model, denoiser, batch, &cfg.objective, 1, 0)?.mean
        } else {
            let seed = cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(step as u64);
            reinforce_grad(&model, denoiser, batch, &cfg.objective, cfg.n_samples, seed)?.mean
        };
        model.add_scaled(&grad, cfg.lr)?;
        if model.logits.iter().any(|l| !l.is_finite()) {
            bail!(InvalidState, "training diverged; lower the learning rate");
        }
    }
    Ok(DiscreteTrainResult { model, nll_trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(len: usize, vocab: usize) -> SeqSpace {
        SeqSpace::new(len, vocab).unwrap()
    }

    #[test]
    fn encode_decode_round_trip() {
        let s = space(3, 4);
        for i in 0..s.size() {
            assert_eq!(s.encode(&s.decode(i)).unwrap(), i);
        }
        assert_eq!(s.decode(6), vec![0, 1, 2]);
        assert!(s.encode(&[0, 4, 0]).is_err());
        assert!(SeqSpace::new(5, 2).is_err());
        assert!(SeqSpace::new(2, 9).is_err());
    }

    #[test]
    fn probabilities_normalize() {
        let m = CategoricalSeqModel::random(3, space(4, 8), 3.0, 1).unwrap();
        for x in 0..3 {
            for row in m.probs(x).unwrap().chunks(8) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_logits_are_an_invalid_state() {
        let mut logits = vec![0.0; 4];
        logits[1] = f64::NAN;
        let m = CategoricalSeqModel::from_logits(1, space(2, 2), logits).unwrap();
        assert!(matches!(m.probs(0), Err(crate::Error::InvalidState(_))));
        let d = DiscreteDenoiser::channel(space(2, 2), &[0], 0.9).unwrap();
        let cfg = ObjectiveConfig::default();
        assert!(matches!(reinforce_grad(&m, &d, &[(0, 0)], &cfg, 10, 0), Err(crate::Error::InvalidState(_))));
    }

    #[test]
    fn two_outcome_hand_computation() {
        // uniform over {0, 1}; p_Π(0 | 0) = 0.9, p_Π(0 | 1) = 0.1
        let s = space(1, 2);
        let d = DiscreteDenoiser::table(s, vec![0.9, 0.1, 0.1, 0.9]).unwrap();
        let m = CategoricalSeqModel::uniform(1, s).unwrap();
        let cfg = ObjectiveConfig { lambda: 0.0, gamma: -50.0, scale: 1.0 };
        let g = exact_grad(&m, &d, &[(0, 0)], &cfg).unwrap();
        // Σ_ŷ p(ŷ) r(ŷ) (1[ŷ=k] − ½) = ¼ (ln 0.9 − ln 0.1) for k = 0
        let expect = 0.25 * (libm::log(0.9) - libm::log(0.1));
        assert!((g[0] - expect).abs() < 1e-12);
        assert!((g[1] + expect).abs() < 1e-12);
        let v = exact_objective(&m, &d, &[(0, 0)], &cfg).unwrap();
        assert!((v - 0.5 * (libm::log(0.9) + libm::log(0.1))).abs() < 1e-12);
    }

    #[test]
    fn exact_grad_matches_finite_differences() {
        let s = space(2, 3);
        let m = CategoricalSeqModel::random(2, s, 1.0, 4).unwrap();
        let d = DiscreteDenoiser::channel(s, &[1, 5, 7], 0.7).unwrap();
        let batch = [(0, 1), (1, 5), (0, 7)];
        let cfg = ObjectiveConfig { lambda: 0.7, gamma: -3.0, scale: 0.4 };
        let g = exact_grad(&m, &d, &batch, &cfg).unwrap();
        let h = 1e-6;
        for i in 0..m.num_params() {
            let mut e = vec![0.0; m.num_params()];
            e[i] = 1.0;
            let (mut plus, mut minus) = (m.clone(), m.clone());
            plus.add_scaled(&e, h).unwrap();
            minus.add_scaled(&e, -h).unwrap();
            let fd = (exact_objective(&plus, &d, &batch, &cfg).unwrap()
                - exact_objective(&minus, &d, &batch, &cfg).unwrap())
                / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7, "coordinate {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn reinforce_agrees_with_enumeration() {
        let s = space(2, 2);
        let m = CategoricalSeqModel::random(1, s, 1.0, 2).unwrap();
        let d = DiscreteDenoiser::channel(s, &[0, 3], 0.8).unwrap();
        let batch = [(0, 3)];
        let cfg = ObjectiveConfig::default();
        let est = reinforce_grad(&m, &d, &batch, &cfg, 100_000, 9).unwrap();
        let exact = exact_grad(&m, &d, &batch, &cfg).unwrap();
        assert!(est.max_z_score(&exact) <= 3.0);
    }

    #[test]
    fn reinforce_is_deterministic_given_seed() {
        let s = space(2, 3);
        let m = CategoricalSeqModel::random(2, s, 1.0, 2).unwrap();
        let d = DiscreteDenoiser::channel(s, &[0, 4], 0.8).unwrap();
        let batch = [(0, 4), (1, 0)];
        let cfg = ObjectiveConfig::default();
        let a = reinforce_grad(&m, &d, &batch, &cfg, 50, 3).unwrap();
        assert_eq!(a, reinforce_grad(&m, &d, &batch, &cfg, 50, 3).unwrap());
        assert_ne!(a, reinforce_grad(&m, &d, &batch, &cfg, 50, 4).unwrap());
    }

    #[test]
    fn lambda_term_alone_is_maximum_likelihood() {
        let s = space(3, 3);
        let m = CategoricalSeqModel::random(2, s, 1.0, 6).unwrap();
        let d = DiscreteDenoiser::channel(s, &[0], 0.9).unwrap();
        let batch = [(0, 5), (1, 20)];
        let cfg = ObjectiveConfig { lambda: 1.0, gamma: -50.0, scale: 0.0 };
        let est = reinforce_grad(&m, &d, &batch, &cfg, 7, 0).unwrap();
        let exact = exact_grad(&m, &d, &batch, &cfg).unwrap();
        for (e, x) in est.mean.iter().zip(&exact) {
            assert!((e - x).abs() < 1e-12);
        }
        assert!(est.std_err.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn clamp_floors_impossible_rewards() {
        let s = space(2, 2);
        // hard projection onto {0}: p_Π(3 | ŷ) = 0 for every ŷ
        let d = DiscreteDenoiser::channel(s, &[0], 1.0).unwrap();
        let m = CategoricalSeqModel::random(1, s, 1.0, 0).unwrap();
        let cfg = ObjectiveConfig { lambda: 0.0, gamma: -50.0, scale: 0.1 };
        for y_hat in 0..4 {
            assert_eq!(d.clamped_log_prob(3, y_hat, -50.0), -50.0);
        }
        // a constant reward has zero expected score
        let g = exact_grad(&m, &d, &[(0, 3)], &cfg).unwrap();
        assert!(g.iter().all(|v| v.is_finite() && v.abs() < 1e-12));
        let v = exact_objective(&m, &d, &[(0, 3)], &cfg).unwrap();
        assert!((v - 0.1 * -50.0).abs() < 1e-12);
    }

    #[test]
    fn inactive_clamp_leaves_gradient_unchanged() {
        let s = space(2, 3);
        let m = CategoricalSeqModel::random(1, s, 1.0, 8).unwrap();
        let d = DiscreteDenoiser::channel(s, &[2, 6], 0.6).unwrap();
        let batch = [(0, 2)];
        let floor = (0..s.size()).map(|i| libm::log(d.prob(2, i))).fold(0.0, f64::min);
        let low = ObjectiveConfig { gamma: floor - 5.0, ..ObjectiveConfig::default() };
        let high = ObjectiveConfig { gamma: floor - 0.5, ..ObjectiveConfig::default() };
        assert_eq!(exact_grad(&m, &d, &batch, &low).unwrap(), exact_grad(&m, &d, &batch, &high).unwrap());
    }

    #[test]
    fn deterministic_model_limit() {
        let s = space(2, 2);
        let m = CategoricalSeqModel::from_logits(1, s, vec![40.0, -40.0, -40.0, 40.0]).unwrap();
        let d = DiscreteDenoiser::channel(s, &[1, 2], 0.8).unwrap();
        let cfg = ObjectiveConfig { lambda: 0.0, ..ObjectiveConfig::default() };
        // ŷ* = [0, 1] = 1
        let v = exact_objective(&m, &d, &[(0, 2)], &cfg).unwrap();
        assert!((v - 0.1 * libm::log(d.prob(2, 1))).abs() < 1e-9);
        assert!(exact_grad(&m, &d, &[(0, 2)], &cfg).unwrap().iter().all(|g| g.abs() < 1e-9));
    }

    #[test]
    fn channel_rows_normalize_and_project() {
        let s = space(3, 3);
        let valid = [4, 13, 26];
        let d = DiscreteDenoiser::channel(s, &valid, 0.7).unwrap();
        for y_hat in 0..s.size() {
            let total: f64 = (0..s.size()).map(|y| d.prob(y, y_hat)).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(valid.contains(&d.denoise(y_hat)));
        }
        assert!(DiscreteDenoiser::channel(s, &valid, 0.2).is_err());
    }

    #[test]
    fn count_denoiser_rows_normalize() {
        let s = space(3, 4);
        let valid = [3, 17, 40, 61];
        let cfg = CorruptionConfig { samples: 2000, ..CorruptionConfig::default() };
        let d = DiscreteDenoiser::from_corruptions(s, &valid, &cfg).unwrap();
        for y_hat in 0..s.size() {
            let total: f64 = (0..s.size()).map(|y| d.prob(y, y_hat)).sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(valid.iter().all(|&v| d.prob(v, y_hat) > 0.0));
        }
        for &v in &valid {
            assert_eq!(d.denoise(v), v);
        }
        // never seen as a corruption: left alone
        let unseen = (0..s.size()).find(|&i| valid.iter().all(|&v| s.hamming(i, v) == 3));
        if let Some(u) = unseen {
            if d.prob(u, u) > 0.4 {
                assert_eq!(d.denoise(u), u);
            }
        }
    }

    #[test]
    fn table_rejects_bad_rows() {
        let s = space(1, 2);
        assert!(DiscreteDenoiser::table(s, vec![0.5, 0.5, 0.2, 0.2]).is_err());
        assert!(DiscreteDenoiser::table(s, vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn huge_lambda_tracks_standard_training() {
        let s = space(2, 3);
        let m = CategoricalSeqModel::uniform(2, s).unwrap();
        let d = DiscreteDenoiser::channel(s, &[0, 4, 8], 0.8).unwrap();
        let batch = [(0, 4), (0, 3), (1, 8)];
        let standard = DiscreteTrainConfig {
            objective: ObjectiveConfig { lambda: 1.0, scale: 0.0, ..ObjectiveConfig::default() },
            lr: 0.5,
            steps: 100,
            ..DiscreteTrainConfig::default()
        };
        let big = 1e6;
        let heavy = DiscreteTrainConfig {
            objective: ObjectiveConfig { lambda: big, ..ObjectiveConfig::default() },
            lr: 0.5 / big,
            ..standard.clone()
        };
        let a = train_discrete(&m, &d, &batch, &standard).unwrap();
        let b = train_discrete(&m, &d, &batch, &heavy).unwrap();
        for (x, y) in a.nll_trace.iter().zip(&b.nll_trace) {
            assert!((x - y).abs() < 1e-4);
        }
        for (x, y) in a.model.logits().iter().zip(b.model.logits()) {
            assert!((x - y).abs() < 1e-4);
        }
    }
}
