use clap::Args;
use composed_core::discrete::{
    exact_grad, reinforce_grad, CategoricalSeqModel, DiscreteDenoiser, ObjectiveConfig, SeqSpace, MAX_VOCAB,
};
use composed_core::rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, Result};
use crate::io::{json_bytes, Run};
use crate::parallel::par_map;

#[derive(Debug, Clone, Args)]
pub struct ReinforceArgs {
    /// Use a single-token output space of this size for every instance.
    #[arg(long, conflicts_with_all = ["len", "vocab"])]
    pub space: Option<usize>,
    /// Sequence length; with `--vocab`, fixes the output space.
    #[arg(long, requires = "vocab")]
    pub len: Option<usize>,
    #[arg(long, requires = "len")]
    pub vocab: Option<usize>,
    /// Largest output space drawn when the shape is not fixed.
    #[arg(long, default_value_t = 16)]
    pub max_space: usize,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest accepted |estimate − exact| in standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinforceConfig {
    pub shape: Option<(usize, usize)>,
    pub max_space: usize,
    pub instances: usize,
    pub samples: usize,
    pub seed: u64,
    pub threshold: f64,
    pub objective: ObjectiveConfig,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        Self {
            shape: None,
            max_space: 16,
            instances: 20,
            samples: 100_000,
            seed: 0,
            threshold: 3.0,
            objective: ObjectiveConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub index: usize,
    pub len: usize,
    pub vocab: usize,
    pub batch: Vec<(usize, usize)>,
    pub params: usize,
    pub max_z_score: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinforceVerdict {
    pub config: ReinforceConfig,
    pub instances: Vec<InstanceResult>,
    pub max_z_score: f64,
    pub pass: bool,
}

/// Inputs of every random model; batches draw from these.
const INPUTS: usize = 2;

fn shapes(max_space: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for len in 1u32..=2 {
        for vocab in 2usize..=4 {
            if vocab.pow(len) <= max_space {
                out.push((len as usize, vocab));
            }
        }
    }
    out
}

/// Instance `index`: a random model, a random dense denoiser and a batch of
/// one or two examples, all drawn from stream `index` of the seed.
fn instance(cfg: &ReinforceConfig, index: usize) -> Result<InstanceResult> {
    let mut r = rng::substream(cfg.seed, index as u64);
    let (len, vocab) = match cfg.shape {
        Some(s) => s,
        None => {
            let options = shapes(cfg.max_space);
            options[r.random_range(0..options.len())]
        }
    };
    let space = SeqSpace::new(len, vocab)?;
    let n = space.size();
    let model = CategoricalSeqModel::random(INPUTS, space, 1.0, r.random())?;
    let mut rows = Vec::with_capacity(n * n);
    for _ in 0..n {
        let w: Vec<f64> = (0..n).map(|_| (3.0 * r.random_range(-1.0..1.0f64)).exp()).collect();
        let z: f64 = w.iter().sum();
        rows.extend(w.iter().map(|v| v / z));
    }
    let denoiser = DiscreteDenoiser::table(space, rows)?;
    let batch: Vec<(usize, usize)> =
        (0..r.random_range(1..=2)).map(|_| (r.random_range(0..INPUTS), r.random_range(0..n))).collect();
    let exact = exact_grad(&model, &denoiser, &batch, &cfg.objective)?;
    let est = reinforce_grad(&model, &denoiser, &batch, &cfg.objective, cfg.samples, r.random())?;
    let max_abs_error = est.mean.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(InstanceResult {
        index,
        len,
        vocab,
        params: exact.len(),
        max_z_score: est.max_z_score(&exact),
        max_abs_error,
        batch,
    })
}

pub fn reinforce_check(cfg: &ReinforceConfig, threads: usize) -> Result<ReinforceVerdict> {
    if cfg.instances == 0 || cfg.samples < 2 {
        return Err(Failure::config("need at least one instance and two samples"));
    }
    if cfg.threshold.is_nan() || cfg.threshold <= 0.0 {
        return Err(Failure::config("threshold must be positive"));
    }
    match cfg.shape {
        Some((len, vocab)) => {
            SeqSpace::new(len, vocab)?;
        }
        None if shapes(cfg.max_space).is_empty() => {
            return Err(Failure::config("max space must allow at least two outputs"));
        }
        None => {}
    }
    cfg.objective.validate()?;
    let indices: Vec<usize> = (0..cfg.instances).collect();
    let instances =
        par_map(&indices, threads, |&i| instance(cfg, i)).into_iter().collect::<Result<Vec<_>>>()?;
    let max_z_score = instances.iter().map(|r| r.max_z_score).fold(0.0, f64::max);
    Ok(ReinforceVerdict { config: cfg.clone(), instances, max_z_score, pass: max_z_score <= cfg.threshold })
}

pub fn run(args: &ReinforceArgs, run: &mut Run) -> Result<u8> {
    let shape = match (args.space, args.len, args.vocab) {
        (Some(v), _, _) if v > MAX_VOCAB => {
            return Err(Failure::config(format!("a single-token space has at most {MAX_VOCAB} outputs")))
        }
        (Some(v), _, _) => Some((1, v)),
        (None, Some(l), Some(v)) => Some((l, v)),
        _ => None,
    };
    let cfg = ReinforceConfig {
        shape,
        max_space: args.max_space,
        instances: args.instances,
        samples: args.samples,
        seed: args.seed,
        threshold: args.threshold,
        objective: ObjectiveConfig::default(),
    };
    run.set_config(&cfg, Some(cfg.seed))?;
    let verdict = reinforce_check(&cfg, run.threads())?;
    run.emit("reinforce.json", &json_bytes(&verdict)?, true)?;
    Ok(0)
}
