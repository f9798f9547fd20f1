//! Standard versus composed training on an arithmetic staircase, with a
//! held-out-interval and extrapolation split.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{composed_loss, pretrain_denoiser, DenoiserConfig, FrozenDenoiser};
use crate::error::{bail, Result};
use crate::relu_net::{LossKind, Momentum, ReluNet2};
use crate::rng;
use crate::spline::StaircaseSpec;
use crate::valid_set::ValidSet;

/// Relative tolerance for "equal lengths" and "equal steps".
const ARITHMETIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseConfig {
    /// Weight of the direct term.
    pub lambda: f64,
    /// Hidden width of the base networks.
    pub hidden: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Validation checks happen every `eval_every` epochs...
    pub eval_every: usize,
    /// ...and training stops after this many checks without improvement.
    pub patience: usize,
    pub n_labeled: usize,
    pub val_fraction: f64,
    pub n_test: usize,
    pub ood_per_interval: usize,
    /// Corruption scale in units of the staircase step.
    pub sigma: f64,
    pub denoiser_samples: usize,
    pub denoiser_epochs: usize,
    pub denoiser_lr: f64,
    pub seed: u64,
    pub n_seeds: usize,
}

impl Default for StaircaseConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            hidden: 32,
            lr: 2e-2,
            momentum: 0.9,
            weight_decay: 1e-4,
            max_epochs: 20000,
            eval_every: 50,
            patience: 40,
            n_labeled: 200,
            val_fraction: 0.2,
            n_test: 200,
            ood_per_interval: 10,
            sigma: 0.3,
            denoiser_samples: 2000,
            denoiser_epochs: 200,
            denoiser_lr: 0.01,
            seed: 0,
            n_seeds: 10,
        }
    }
}

impl StaircaseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            bail!(InvalidParameter, "lambda must be finite and non-negative");
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            bail!(InvalidParameter, "sigma must be positive");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            bail!(InvalidParameter, "need lr > 0 and momentum in [0, 1)");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            bail!(InvalidParameter, "weight decay must be non-negative");
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            bail!(InvalidParameter, "validation fraction must lie in [0, 1)");
        }
        if self.hidden == 0 || self.eval_every == 0 || self.n_labeled < 2 || self.n_test == 0 {
            bail!(InvalidParameter, "hidden, eval_every, n_test must be positive and n_labeled ≥ 2");
        }
        if self.ood_per_interval < 2 {
            bail!(InvalidParameter, "need at least two OOD points per interval");
        }
        Ok(())
    }
}

/// Shared, seed-independent parts of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseSetup {
    pub spec: StaircaseSpec,
    /// Interval indices used for labeled training data.
    pub train_intervals: Vec<usize>,
    /// Interval indices held out for OOD evaluation.
    pub heldout_intervals: Vec<usize>,
    /// OOD inputs with their targets: held-out intervals and the extrapolation range.
    pub ood: Vec<(f64, f64)>,
    /// The staircase values extended over the extrapolation range.
    pub valid: ValidSet,
    /// Base networks see `(x − input_shift) / input_scale`, mapping the
    /// staircase domain to `[−1, 1]`.
    pub input_shift: f64,
    pub input_scale: f64,
}

impl StaircaseSetup {
    pub fn feature(&self, x: f64) -> f64 {
        (x - self.input_shift) / self.input_scale
    }
}

/// Check the staircase is arithmetic and build the split.
///
/// Every third interval (`2, 5, 8, …`) is held out. The extrapolation range
/// continues the staircase for one domain width on each side.
pub fn prepare_staircase(spec: &StaircaseSpec, cfg: &StaircaseConfig) -> Result<StaircaseSetup> {
    cfg.validate()?;
    if spec.dim() != 1 {
        bail!(InvalidInput, "the staircase experiment is univariate");
    }
    let n = spec.len();
    if n < 3 {
        bail!(InvalidInput, "the staircase experiment needs at least three intervals");
    }
    let ys = spec.coordinate_values(0);
    let step = ys[1] - ys[0];
    let len = spec.intervals()[0][1] - spec.intervals()[0][0];
    let tol = |scale: f64| ARITHMETIC_TOLERANCE * scale.abs().max(1.0);
    if ys.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > tol(step))
        || spec.intervals().iter().any(|[lo, hi]| ((hi - lo) - len).abs() > tol(len))
    {
        bail!(
            InvalidInput,
            "the extrapolation split needs equal interval lengths and equal value steps"
        );
    }
    let period = len + spec.gap();
    let start = spec.intervals()[0][0];
    let at = |i: i64| -> ([f64; 2], f64) {
        let lo = start + i as f64 * period;
        ([lo, lo + len], ys[0] + i as f64 * step)
    };

    let heldout_intervals: Vec<usize> = (0..n).filter(|i| i % 3 == 2).collect();
    let train_intervals: Vec<usize> = (0..n).filter(|i| i % 3 != 2).collect();
    let n_i = n as i64;
    let extrapolated = (-n_i..0).chain(n_i..2 * n_i);
    let mut ood = Vec::new();
    for i in heldout_intervals.iter().map(|&i| i as i64).chain(extrapolated) {
        let ([lo, hi], y) = at(i);
        let m = cfg.ood_per_interval;
        ood.extend((0..m).map(|t| (lo + (hi - lo) * t as f64 / (m - 1) as f64, y)));
    }
    let valid = ValidSet::from_scalars(&(-n_i..2 * n_i).map(|i| at(i).1).collect::<Vec<_>>())?;
    let (lo, hi) = spec.domain();
    Ok(StaircaseSetup {
        spec: spec.clone(),
        train_intervals,
        heldout_intervals,
        ood,
        valid,
        input_shift: lo + (hi - lo) / 2.0,
        input_scale: (hi - lo) / 2.0,
    })
}

/// Pre-train the shared denoiser on corrupted extended staircase values.
pub fn pretrain_staircase_denoiser(setup: &StaircaseSetup, cfg: &StaircaseConfig) -> Result<FrozenDenoiser> {
    let step = setup.spec.values()[1][0] - setup.spec.values()[0][0];
    pretrain_denoiser(
        setup.valid.points(),
        &DenoiserConfig {
            sigma: cfg.sigma * step.abs(),
            samples: cfg.denoiser_samples,
            epochs: cfg.denoiser_epochs,
            lr: cfg.denoiser_lr,
            momentum: cfg.momentum,
            seed: cfg.seed,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Standard,
    /// Standard base, hard projection at test time.
    StandardProjected,
    /// Base composed with the learned denoiser.
    Composed,
    /// Composed predictor followed by hard projection.
    ComposedProjected,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Standard, Arm::StandardProjected, Arm::Composed, Arm::ComposedProjected];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Standard => "standard",
            Arm::StandardProjected => "standard_projected",
            Arm::Composed => "composed",
            Arm::ComposedProjected => "composed_projected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmMetrics {
    pub arm: Arm,
    pub mse_train: f64,
    pub mse_test: f64,
    pub mse_ood: f64,
    /// Fraction of in-distribution test inputs whose projected prediction is the target.
    pub em_test: f64,
    pub em_ood: f64,
    /// `C(θ)` of the base network behind this arm.
    pub complexity: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub arms: Vec<ArmMetrics>,
}

impl SeedReport {
    pub fn arm(&self, arm: Arm) -> &ArmMetrics {
        self.arms.iter().find(|m| m.arm == arm).expect("every arm is reported")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseReport {
    pub config: StaircaseConfig,
    pub denoiser_fingerprint: u64,
    pub seeds: Vec<SeedReport>,
}

type Data = Vec<(Vec<f64>, Vec<f64>)>;

fn sample(setup: &StaircaseSetup, count: usize, rng: &mut rng::Rng) -> Data {
    (0..count)
        .map(|_| {
            let i = setup.train_intervals[rng.random_range(0..setup.train_intervals.len())];
            let [lo, hi] = setup.spec.intervals()[i];
            (vec![setup.feature(rng.random_range(lo..=hi))], setup.spec.values()[i].clone())
        })
        .collect()
}

/// Unit-magnitude first layer with kinks spread evenly over `[−1, 1]` and
/// random signs; small random output weights.
fn spread_init(hidden: usize, rng: &mut rng::Rng) -> Result<ReluNet2> {
    let mut w1 = Vec::with_capacity(hidden);
    let mut b1 = Vec::with_capacity(hidden);
    for i in 0..hidden {
        let c = -1.0 + 2.0 * (i as f64 + 0.5) / hidden as f64;
        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        w1.push(s);
        b1.push(-s * c);
    }
    let a = 1.0 / libm::sqrt(hidden as f64);
    let w2 = (0..hidden).map(|_| rng.random_range(-a..a)).collect();
    ReluNet2::from_parts(1, hidden, 1, w1, b1, w2, vec![0.0])
}

/// Full-batch descent on `objective + weight_decay·C(θ)` with early stopping on `validation`.
fn fit(
    init: &ReluNet2,
    cfg: &StaircaseConfig,
    objective: impl Fn(&ReluNet2) -> Result<ReluNet2>,
    validation: impl Fn(&ReluNet2) -> Result<f64>,
) -> Result<(ReluNet2, usize)> {
    let mut net = init.clone();
    let mut opt = Momentum::new(&net, cfg.momentum);
    let mut best = (validation(&net)?, net.clone(), 0);
    let mut stale = 0;
    let mut epochs = 0;
    while epochs < cfg.max_epochs {
        let mut grad = objective(&net)?;
        grad.add_scaled(&net.complexity_grad(), cfg.weight_decay);
        opt.step(&mut net, &grad, cfg.lr);
        epochs += 1;
        if net.params().any(|p| !p.is_finite()) {
            bail!(InvalidState, "base training diverged; lower the learning rate");
        }
        if epochs % cfg.eval_every == 0 {
            let v = validation(&net)?;
            if v < best.0 {
                best = (v, net.clone(), epochs);
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        }
    }
    Ok((best.1, best.2))
}

fn mse(pred: impl Fn(f64) -> f64, data: &[(f64, f64)]) -> f64 {
    data.iter().map(|&(x, y)| (pred(x) - y) * (pred(x) - y)).sum::<f64>() / data.len() as f64
}

fn exact_match(valid: &ValidSet, pred: impl Fn(f64) -> f64, data: &[(f64, f64)]) -> Result<f64> {
    let mut hits = 0;
    for &(x, y) in data {
        if valid.project(&[pred(x)])?.1[0] == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Train and evaluate all four arms for one seed.
pub fn run_staircase_seed(
    setup: &StaircaseSetup,
    denoiser: &FrozenDenoiser,
    cfg: &StaircaseConfig,
    seed: u64,
) -> Result<SeedReport> {
    cfg.validate()?;
    let mut rng = rng::substream(seed, 1);
    let labeled = sample(setup, cfg.n_labeled, &mut rng);
    let n_val = ((cfg.n_labeled as f64 * cfg.val_fraction) as usize).min(cfg.n_labeled - 1);
    let (val, train) = labeled.split_at(n_val);
    let val = if val.is_empty() { train } else { val };
    let test = sample(setup, cfg.n_test, &mut rng);
    let init = spread_init(cfg.hidden, &mut rng)?;

    let (standard, std_epochs) = fit(
        &init,
        cfg,
        |net| Ok(net.loss_grad(train, LossKind::SquaredError)?.1),
        |net| net.loss(val, LossKind::SquaredError),
    )?;
    let before = denoiser.current_fingerprint();
    let (base, comp_epochs) = fit(
        &init,
        cfg,
        |net| Ok(composed_loss(net, denoiser, train, cfg.lambda)?.grad),
        |net| Ok(composed_loss(net, denoiser, val, cfg.lambda)?.total),
    )?;
    if denoiser.current_fingerprint() != before {
        bail!(InvalidState, "denoiser changed during composed training");
    }

    let raw = |d: &[(Vec<f64>, Vec<f64>)]| -> Vec<(f64, f64)> {
        d.iter().map(|(x, y)| (x[0] * setup.input_scale + setup.input_shift, y[0])).collect()
    };
    let (train_s, test_s) = (raw(train), raw(&test));
    let hard = |v: f64| setup.valid.project(&[v]).map(|(_, p)| p[0]).unwrap_or(f64::NAN);
    let mut arms = Vec::with_capacity(4);
    for arm in Arm::ALL {
        let (net, epochs) = match arm {
            Arm::Standard | Arm::StandardProjected => (&standard, std_epochs),
            Arm::Composed | Arm::ComposedProjected => (&base, comp_epochs),
        };
        let pred = |x: f64| -> f64 {
            let f = net.eval1(setup.feature(x))[0];
            match arm {
                Arm::Standard => f,
                Arm::StandardProjected => hard(f),
                Arm::Composed => denoiser.apply(&[f])[0],
                Arm::ComposedProjected => hard(denoiser.apply(&[f])[0]),
            }
        };
        arms.push(ArmMetrics {
            arm,
            mse_train: mse(pred, &train_s),
            mse_test: mse(pred, &test_s),
            mse_ood: mse(pred, &setup.ood),
            em_test: exact_match(&setup.valid, pred, &test_s)?,
            em_ood: exact_match(&setup.valid, pred, &setup.ood)?,
            complexity: net.complexity(),
            epochs,
        });
    }
    Ok(SeedReport { seed, arms })
}

/// Seeds `cfg.seed, cfg.seed + 1, …` run in order with one shared denoiser.
pub fn run_staircase_experiment(spec: &StaircaseSpec, cfg: &StaircaseConfig) -> Result<StaircaseReport> {
    let setup = prepare_staircase(spec, cfg)?;
    let denoiser = pretrain_staircase_denoiser(&setup, cfg)?;
    let seeds = (0..cfg.n_seeds as u64)
        .map(|s| run_staircase_seed(&setup, &denoiser, cfg, cfg.seed + s))
        .collect::<Result<Vec<_>>>()?;
    denoiser.verify()?;
    Ok(StaircaseReport { config: cfg.clone(), denoiser_fingerprint: denoiser.fingerprint(), seeds })
}
