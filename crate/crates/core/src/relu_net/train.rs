use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ReluNet2;
use crate::error::{bail, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `‖o − y‖²`
    SquaredError,
    /// `Σ |o_j − y_j|`
    AbsoluteError,
}

impl LossKind {
    pub fn value(self, out: &[f64], target: &[f64]) -> f64 {
        let diffs = out.iter().zip(target).map(|(o, y)| o - y);
        match self {
            LossKind::SquaredError => diffs.map(|d| d * d).sum(),
            LossKind::AbsoluteError => diffs.map(f64::abs).sum(),
        }
    }

    /// Derivative with respect to `out`; the subgradient of `|·|` at 0 is 0.
    pub fn grad(self, out: &[f64], target: &[f64]) -> Vec<f64> {
        let diffs = out.iter().zip(target).map(|(o, y)| o - y);
        match self {
            LossKind::SquaredError => diffs.map(|d| 2.0 * d).collect(),
            LossKind::AbsoluteError => diffs
                .map(|d| if d == 0.0 { 0.0 } else { d.signum() })
                .collect(),
        }
    }
}

fn check_batch(net: &ReluNet2, batch: &[(Vec<f64>, Vec<f64>)]) -> Result<()> {
    if batch.is_empty() {
        bail!(InvalidInput, "empty batch");
    }
    for (i, (x, y)) in batch.iter().enumerate() {
        if x.len() != net.input_dim() || y.len() != net.output_dim() {
            bail!(InvalidInput, "example {i} does not match the network shape");
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            bail!(InvalidInput, "example {i} is not finite");
        }
    }
    Ok(())
}

impl ReluNet2 {
    /// Mean loss over `batch`.
    pub fn loss(&self, batch: &[(Vec<f64>, Vec<f64>)], kind: LossKind) -> Result<f64> {
        check_batch(self, batch)?;
        let total: f64 = batch.iter().map(|(x, y)| kind.value(&self.eval(x), y)).sum();
        Ok(total / batch.len() as f64)
    }

    /// Mean loss and its exact gradient with respect to every parameter.
    pub fn loss_grad(&self, batch: &[(Vec<f64>, Vec<f64>)], kind: LossKind) -> Result<(f64, ReluNet2)> {
        check_batch(self, batch)?;
        let scale = 1.0 / batch.len() as f64;
        let mut grad = self.zeros_like();
        let mut total = 0.0;
        for (x, y) in batch {
            let out = self.eval(x);
            total += kind.value(&out, y);
            let dout: Vec<f64> = kind.grad(&out, y).iter().map(|g| g * scale).collect();
            self.backward(x, &dout, &mut grad);
        }
        Ok((total * scale, grad))
    }
}

/// Gradient descent with heavy-ball momentum.
#[derive(Debug, Clone)]
pub struct Momentum {
    velocity: ReluNet2,
    mu: f64,
}

impl Momentum {
    pub fn new(net: &ReluNet2, mu: f64) -> Self {
        Self { velocity: net.zeros_like(), mu }
    }

    /// `v ← μv − lr·g`, `θ ← θ + v`.
    pub fn step(&mut self, net: &mut ReluNet2, grad: &ReluNet2, lr: f64) {
        self.velocity.scale(self.mu);
        self.velocity.add_scaled(grad, -lr);
        net.add_scaled(&self.velocity, 1.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub momentum: f64,
    /// Weight on `C(θ)` added to the objective.
    pub weight_decay: f64,
    /// Minibatch size; `None` for full-batch descent.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 0.01, epochs: 1000, momentum: 0.9, weight_decay: 0.0, batch_size: None, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            bail!(InvalidParameter, "learning rate must be positive (got {})", self.lr);
        }
        if !(0.0..1.0).contains(&self.momentum) {
            bail!(InvalidParameter, "momentum must lie in [0, 1) (got {})", self.momentum);
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            bail!(InvalidParameter, "weight decay must be non-negative (got {})", self.weight_decay);
        }
        if self.batch_size == Some(0) {
            bail!(InvalidParameter, "batch size must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub net: ReluNet2,
    /// Objective (mean loss plus weight decay term) at the start of each epoch.
    pub trace: Vec<f64>,
}

/// Fit `net` to `data` by minimising mean loss plus `weight_decay · C(θ)`.
pub fn train(
    net: &ReluNet2,
    data: &[(Vec<f64>, Vec<f64>)],
    kind: LossKind,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    check_batch(net, data)?;
    let mut net = net.clone();
    let mut opt = Momentum::new(&net, cfg.momentum);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut rng = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch_size = cfg.batch_size.unwrap_or(data.len()).min(data.len());
    let mut batch = Vec::with_capacity(batch_size);
    for _ in 0..cfg.epochs {
        if batch_size == data.len() {
            let (loss, mut grad) = net.loss_grad(data, kind)?;
            trace.push(loss + cfg.weight_decay * net.complexity());
            grad.add_scaled(&net.complexity_grad(), cfg.weight_decay);
            opt.step(&mut net, &grad, cfg.lr);
        } else {
            trace.push(net.loss(data, kind)? + cfg.weight_decay * net.complexity());
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch_size) {
                batch.clear();
                batch.extend(chunk.iter().map(|&i| data[i].clone()));
                let (_, mut grad) = net.loss_grad(&batch, kind)?;
                grad.add_scaled(&net.complexity_grad(), cfg.weight_decay);
                opt.step(&mut net, &grad, cfg.lr);
            }
        }
        if net.params().any(|p| !p.is_finite()) {
            bail!(InvalidState, "training diverged; lower the learning rate");
        }
    }
    Ok(TrainResult { net, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn line_data() -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..50)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / 49.0;
                (vec![x], vec![2.0 * x])
            })
            .collect()
    }

    #[test]
    fn fits_a_line() {
        let net = ReluNet2::random(1, 8, 1, 3);
        let cfg = TrainConfig { lr: 0.05, epochs: 3000, ..TrainConfig::default() };
        let r = train(&net, &line_data(), LossKind::SquaredError, &cfg).unwrap();
        let mse = r.net.loss(&line_data(), LossKind::SquaredError).unwrap();
        assert!(mse <= 1e-4, "mse {mse}");
    }

    #[test]
    fn zero_epochs_is_identity() {
        let net = ReluNet2::random(1, 4, 1, 0);
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let r = train(&net, &line_data(), LossKind::SquaredError, &cfg).unwrap();
        assert_eq!(r.net, net);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn seeded_minibatch_runs_repeat() {
        let net = ReluNet2::random(1, 4, 1, 0);
        let cfg = TrainConfig { epochs: 20, batch_size: Some(8), seed: 11, ..TrainConfig::default() };
        let a = train(&net, &line_data(), LossKind::AbsoluteError, &cfg).unwrap();
        let b = train(&net, &line_data(), LossKind::AbsoluteError, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_residual_has_zero_gradient() {
        let net = ReluNet2::random(1, 4, 1, 5);
        let data: Vec<_> = [-0.5, 0.1, 0.8].iter().map(|&x| (vec![x], net.eval1(x))).collect();
        let (loss, grad) = net.loss_grad(&data, LossKind::SquaredError).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.params().all(|g| g == 0.0));
    }

    #[test]
    fn rejects_bad_config() {
        let net = ReluNet2::random(1, 2, 1, 0);
        for cfg in [
            TrainConfig { lr: 0.0, ..TrainConfig::default() },
            TrainConfig { momentum: 1.0, ..TrainConfig::default() },
            TrainConfig { weight_decay: -1.0, ..TrainConfig::default() },
        ] {
            assert!(train(&net, &line_data(), LossKind::SquaredError, &cfg).is_err());
        }
    }
}
