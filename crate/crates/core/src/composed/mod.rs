//! Continuous composed training: a base network trained through a frozen,
//! pre-trained denoiser network.
//!
//! The objective for a batch of pairs `(x, y)` is
//!
//! ```text
//! mean ‖Π(f(x)) − y‖²  +  λ · mean ‖f(x) − y‖²
//! ```
//!
//! where `Π` is frozen and only `f` receives gradient.

mod experiment;

pub use experiment::{
    prepare_staircase, pretrain_staircase_denoiser, run_staircase_experiment, run_staircase_seed,
    Arm, ArmMetrics, SeedReport, StaircaseConfig, StaircaseReport, StaircaseSetup,
};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::relu_net::{LossKind, Momentum, ReluNet2};
use crate::rng;

/// FNV-1a over the bit patterns of `values`.
pub fn fingerprint(values: impl Iterator<Item = f64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// A denoiser network `R^k → R^k` behind a fixed affine normalisation.
///
/// `Π(y) = shift + scale ⊙ net((y − shift) / scale)`. There is no way to
/// mutate a frozen denoiser; [`FrozenDenoiser::verify`] re-hashes the
/// parameters as a tripwire anyway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenDenoiser {
    net: ReluNet2,
    shift: Vec<f64>,
    scale: Vec<f64>,
    fingerprint: u64,
}

impl FrozenDenoiser {
    pub fn freeze(net: ReluNet2, shift: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        let k = net.input_dim();
        if net.output_dim() != k || shift.len() != k || scale.len() != k {
            bail!(InvalidInput, "denoiser must map R^k to R^k with k-dimensional normalisation");
        }
        if shift.iter().any(|s| !s.is_finite()) || scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            bail!(InvalidInput, "normalisation must be finite with positive scale");
        }
        let mut d = Self { net, shift, scale, fingerprint: 0 };
        d.fingerprint = d.current_fingerprint();
        Ok(d)
    }

    /// `Π(y) = y`.
    pub fn identity(k: usize) -> Self {
        Self::freeze(ReluNet2::identity(k), vec![0.0; k], vec![1.0; k]).expect("identity is well formed")
    }

    pub fn net(&self) -> &ReluNet2 {
        &self.net
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// Fingerprint taken when the denoiser was frozen.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn current_fingerprint(&self) -> u64 {
        fingerprint(self.net.params().chain(self.shift.iter().copied()).chain(self.scale.iter().copied()))
    }

    pub fn verify(&self) -> Result<()> {
        if self.current_fingerprint() != self.fingerprint {
            bail!(InvalidState, "frozen denoiser parameters changed");
        }
        Ok(())
    }

    fn normalise(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.shift)
            .zip(&self.scale)
            .map(|((v, s), c)| (v - s) / c)
            .collect()
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let out = self.net.eval(&self.normalise(y));
        out.iter()
            .zip(&self.shift)
            .zip(&self.scale)
            .map(|((o, s), c)| s + c * o)
            .collect()
    }

    /// Vector-Jacobian product: `∂⟨dout, Π(y)⟩/∂y`.
    pub fn vjp(&self, y: &[f64], dout: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = dout.iter().zip(&self.scale).map(|(d, c)| d * c).collect();
        let du = self.net.input_grad(&self.normalise(y), &scaled);
        du.iter().zip(&self.scale).map(|(g, c)| g / c).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiserConfig {
    /// Standard deviation of the additive Gaussian corruption.
    pub sigma: f64,
    /// Corrupted training samples.
    pub samples: usize,
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self { sigma: 0.3, samples: 2000, epochs: 200, lr: 0.01, momentum: 0.9, seed: 0 }
    }
}

/// Train a denoiser to recover `y` from `y + N(0, σ²)` over the unlabeled
/// valid outputs, then freeze it.
///
/// The network starts as a smoothed coordinate-wise projection built from the
/// observed values; gradient descent on the corrupted pairs then refines it.
pub fn pretrain_denoiser(unlabeled: &[Vec<f64>], cfg: &DenoiserConfig) -> Result<FrozenDenoiser> {
    let Some(first) = unlabeled.first() else {
        bail!(InvalidInput, "denoiser pre-training needs unlabeled outputs");
    };
    let k = first.len();
    if k == 0 || unlabeled.iter().any(|y| y.len() != k || y.iter().any(|v| !v.is_finite())) {
        bail!(InvalidInput, "unlabeled outputs must be finite vectors of equal dimension");
    }
    if !(cfg.sigma.is_finite() && cfg.sigma > 0.0) {
        bail!(InvalidParameter, "corruption scale must be positive (got {})", cfg.sigma);
    }
    if cfg.samples == 0 {
        bail!(InvalidParameter, "denoiser pre-training needs at least one sample");
    }

    let mut shift = Vec::with_capacity(k);
    let mut scale = Vec::with_capacity(k);
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut v: Vec<f64> = unlabeled.iter().map(|y| y[j]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        let (lo, hi) = (v[0], v[v.len() - 1]);
        shift.push(lo + (hi - lo) / 2.0);
        scale.push(((hi - lo) / 2.0).max(1.0));
        values.push(v);
    }

    let net = ramp_init(&values, &shift, &scale, cfg.sigma);
    let mut rng = rng::seeded(cfg.seed);
    let noise = Normal::new(0.0, cfg.sigma).map_err(|_| crate::Error::InvalidParameter("bad sigma".into()))?;
    let data: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.samples)
        .map(|_| {
            let y = &unlabeled[rng.random_range(0..unlabeled.len())];
            let noisy: Vec<f64> = y.iter().map(|v| v + noise.sample(&mut rng)).collect();
            let norm = |v: &[f64]| -> Vec<f64> {
                v.iter().zip(&shift).zip(&scale).map(|((a, s), c)| (a - s) / c).collect()
            };
            (norm(&noisy), norm(y))
        })
        .collect();

    let mut net = net;
    let mut opt = Momentum::new(&net, cfg.momentum);
    let mut best = (net.loss(&data, LossKind::SquaredError)?, net.clone());
    for _ in 0..cfg.epochs {
        let (loss, grad) = net.loss_grad(&data, LossKind::SquaredError)?;
        if loss < best.0 {
            best = (loss, net.clone());
        }
        opt.step(&mut net, &grad, cfg.lr);
        if net.params().any(|p| !p.is_finite()) {
            bail!(InvalidState, "denoiser training diverged; lower the learning rate");
        }
    }
    let last = net.loss(&data, LossKind::SquaredError)?;
    let net = if last < best.0 { net } else { best.1 };
    FrozenDenoiser::freeze(net, shift, scale)
}

/// Slope of the posterior-mean denoiser at a valid value, for values spaced
/// `g` apart under noise `σ` (nearest neighbours only).
fn posterior_slope(g: f64, sigma: f64) -> f64 {
    let t = libm::exp(-g * g / (2.0 * sigma * sigma));
    let var = 2.0 * g * g * t / (1.0 + 2.0 * t);
    (var / (sigma * sigma)).min(0.5)
}

/// `(1 − η)·Σ g·clamp((u − m)/w + ½, 0, 1) + η·u` per coordinate, in normalised
/// units: ramps of width `σ` at the midpoints plus a leak `η` matching the
/// slope of the posterior mean at valid values.
fn ramp_init(values: &[Vec<f64>], shift: &[f64], scale: &[f64], sigma: f64) -> ReluNet2 {
    let k = values.len();
    let h: usize = values.iter().map(|v| 2 * v.len()).sum();
    let mut w1 = vec![0.0; h * k];
    let mut b1 = vec![0.0; h];
    let mut w2 = vec![0.0; k * h];
    let mut b2 = vec![0.0; k];
    let mut l = 0;
    for j in 0..k {
        let norm = |v: f64| (v - shift[j]) / scale[j];
        let v = &values[j];
        let spacing = v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let leak = if spacing.is_finite() { posterior_slope(spacing, sigma) } else { 0.0 };
        b2[j] = (1.0 - leak) * norm(v[0]);
        for (sign, unit) in [(1.0, l), (-1.0, l + 1)] {
            w1[unit * k + j] = sign;
            w2[j * h + unit] = sign * leak;
        }
        l += 2;
        let a = scale[j] / sigma;
        for pair in v.windows(2) {
            let m = norm(pair[0] + (pair[1] - pair[0]) / 2.0);
            let gap = (1.0 - leak) * (pair[1] - pair[0]) / scale[j];
            for (offset, sign) in [(0.5, 1.0), (-0.5, -1.0)] {
                w1[l * k + j] = a;
                b1[l] = -a * m + offset;
                w2[j * h + l] = sign * gap;
                l += 1;
            }
        }
    }
    ReluNet2::from_parts(k, h, k, w1, b1, w2, b2).expect("ramp shapes")
}

/// Composed objective on a batch, split into its two terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedLoss {
    /// `mean ‖Π(f(x)) − y‖²`
    pub composed: f64,
    /// `mean ‖f(x) − y‖²`
    pub direct: f64,
    /// `composed + λ·direct`
    pub total: f64,
    /// Gradient of `total` with respect to the base parameters.
    pub grad: ReluNet2,
}

pub fn composed_loss(
    base: &ReluNet2,
    denoiser: &FrozenDenoiser,
    batch: &[(Vec<f64>, Vec<f64>)],
    lambda: f64,
) -> Result<ComposedLoss> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        bail!(InvalidParameter, "lambda must be finite and non-negative (got {lambda})");
    }
    if batch.is_empty() {
        bail!(InvalidInput, "empty batch");
    }
    if base.output_dim() != denoiser.dim() {
        bail!(InvalidInput, "base output dimension does not match the denoiser");
    }
    let n = batch.len() as f64;
    let mut grad = base.zeros_like();
    let (mut composed, mut direct) = (0.0, 0.0);
    for (x, y) in batch {
        if x.len() != base.input_dim() || y.len() != base.output_dim() {
            bail!(InvalidInput, "example does not match the network shape");
        }
        let f = base.eval(x);
        let d = denoiser.apply(&f);
        composed += LossKind::SquaredError.value(&d, y);
        direct += LossKind::SquaredError.value(&f, y);
        let dd: Vec<f64> = d.iter().zip(y).map(|(a, b)| 2.0 * (a - b) / n).collect();
        let mut df = denoiser.vjp(&f, &dd);
        for ((g, a), b) in df.iter_mut().zip(&f).zip(y) {
            *g += lambda * 2.0 * (a - b) / n;
        }
        base.backward(x, &df, &mut grad);
    }
    let (composed, direct) = (composed / n, direct / n);
    Ok(ComposedLoss { composed, direct, total: composed + lambda * direct, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu_net::{central_difference, max_relative_error};
    use crate::valid_set::cell_of;

    fn batch() -> Vec<(Vec<f64>, Vec<f64>)> {
        [(0.2, 1.0), (1.1, 1.0), (2.3, 2.0), (3.7, 4.0)]
            .iter()
            .map(|&(x, y)| (vec![x], vec![y]))
            .collect()
    }

    #[test]
    fn identity_denoiser_scales_standard_loss() {
        let base = ReluNet2::random(1, 6, 1, 1);
        let id = FrozenDenoiser::identity(1);
        let (std_loss, std_grad) = base.loss_grad(&batch(), LossKind::SquaredError).unwrap();
        let c = composed_loss(&base, &id, &batch(), 0.5).unwrap();
        assert!((c.total - 1.5 * std_loss).abs() < 1e-12);
        let mut expect = std_grad.clone();
        expect.scale(1.5);
        assert!(max_relative_error(&c.grad.to_vec(), &expect.to_vec()) < 1e-12);
    }

    #[test]
    fn lambda_term_is_linear() {
        let base = ReluNet2::random(1, 6, 1, 2);
        let d = pretrain_denoiser(&[vec![1.0], vec![2.0], vec![3.0]], &DenoiserConfig { epochs: 5, ..Default::default() })
            .unwrap();
        let (_, std_grad) = base.loss_grad(&batch(), LossKind::SquaredError).unwrap();
        let g0 = composed_loss(&base, &d, &batch(), 0.0).unwrap();
        let g2 = composed_loss(&base, &d, &batch(), 2.0).unwrap();
        assert_eq!(g0.composed, g2.composed);
        let mut diff = g2.grad.clone();
        diff.add_scaled(&g0.grad, -1.0);
        let mut expect = std_grad;
        expect.scale(2.0);
        assert!(max_relative_error(&diff.to_vec(), &expect.to_vec()) < 1e-9);
    }

    #[test]
    fn composed_gradient_matches_finite_differences() {
        let base = ReluNet2::random(1, 5, 1, 7);
        let d = pretrain_denoiser(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]], &DenoiserConfig::default()).unwrap();
        let c = composed_loss(&base, &d, &batch(), 0.3).unwrap();
        let mut probe = base.clone();
        let fd = central_difference(
            |p| {
                probe.set_params(p).unwrap();
                composed_loss(&probe, &d, &batch(), 0.3).unwrap().total
            },
            &base.to_vec(),
            1e-5,
        );
        assert!(max_relative_error(&c.grad.to_vec(), &fd) < 1e-4);
    }

    #[test]
    fn pretrained_denoiser_snaps_to_cells() {
        let unlabeled: Vec<Vec<f64>> = (0..=10).map(|v| vec![v as f64]).collect();
        let d = pretrain_denoiser(&unlabeled, &DenoiserConfig::default()).unwrap();
        let cells: Vec<f64> = (0..=10).map(|v| v as f64).collect();
        let mut rng = rng::seeded(4);
        let mut hits = 0;
        for _ in 0..1000 {
            let y = rng.random_range(0..=10) as f64;
            let probe = y + rng.random_range(-0.3..=0.3);
            if cell_of(d.apply(&[probe])[0], &cells).unwrap() == y as usize {
                hits += 1;
            }
        }
        assert!(hits >= 950, "{hits}");
    }

    #[test]
    fn small_noise_denoiser_is_near_identity_on_clean_outputs() {
        let unlabeled: Vec<Vec<f64>> = (0..5).map(|v| vec![v as f64]).collect();
        let d = pretrain_denoiser(&unlabeled, &DenoiserConfig { sigma: 1e-3, ..Default::default() }).unwrap();
        for y in &unlabeled {
            assert!((d.apply(y)[0] - y[0]).abs() < 1e-3);
        }
    }

    #[test]
    fn fingerprint_detects_changes() {
        let d = FrozenDenoiser::identity(2);
        assert!(d.verify().is_ok());
        let mut tampered = d.clone();
        tampered.shift[0] = 0.5;
        assert!(tampered.verify().is_err());
    }
}
