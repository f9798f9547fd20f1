use std::path::PathBuf;

use clap::Args;
use composed_core::discrete::{
    run_discrete_seed, DiscreteDenoiser, DiscreteExperimentConfig, DiscreteReport, DiscreteTask,
};

use crate::failure::Result;
use crate::io::{csv_bytes, json_bytes, num, overlay, Run};
use crate::parallel::par_map;

#[derive(Debug, Clone, Args)]
pub struct DiscreteArgs {
    /// JSON object overriding any of the experiment defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Floor on the denoiser log-likelihood.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Weight of the denoiser term.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Monte-Carlo samples per example and step.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub seeds: Option<usize>,
}

impl DiscreteArgs {
    pub fn config(&self) -> Result<DiscreteExperimentConfig> {
        let mut cfg = overlay(&DiscreteExperimentConfig::default(), self.config.as_deref())?;
        if let Some(v) = self.lambda {
            cfg.objective.lambda = v;
        }
        if let Some(v) = self.gamma {
            cfg.objective.gamma = v;
        }
        if let Some(v) = self.scale {
            cfg.objective.scale = v;
        }
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.samples {
            cfg.n_samples = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.seeds {
            cfg.n_seeds = v;
        }
        cfg.objective.validate()?;
        Ok(cfg)
    }
}

/// The discrete experiment with seeds spread over `threads` workers.
pub fn run_parallel(cfg: &DiscreteExperimentConfig, threads: usize) -> Result<DiscreteReport> {
    let task = DiscreteTask::generate(&cfg.task, cfg.seed)?;
    let denoiser = DiscreteDenoiser::from_corruptions(task.space, &task.valid, &cfg.corruption)?;
    let seeds: Vec<u64> = (0..cfg.n_seeds as u64).map(|s| cfg.seed + s).collect();
    let seeds = par_map(&seeds, threads, |&s| run_discrete_seed(&task, &denoiser, cfg, s))
        .into_iter()
        .collect::<composed_core::Result<Vec<_>>>()?;
    Ok(DiscreteReport { config: cfg.clone(), task, seeds })
}

pub const HEADER: [&str; 4] = ["arm", "seed", "valid_rate", "correct_rate"];

pub fn rows(report: &DiscreteReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for s in &report.seeds {
        for m in &s.arms {
            rows.push(vec![m.arm.name().into(), s.seed.to_string(), num(m.valid_rate), num(m.correct_rate)]);
        }
    }
    rows
}

pub fn run(args: &DiscreteArgs, run: &mut Run) -> Result<u8> {
    let cfg = args.config()?;
    run.set_config(&cfg, Some(cfg.seed))?;
    let report = run_parallel(&cfg, run.threads())?;
    run.emit("seeds.csv", &csv_bytes(&HEADER, &rows(&report))?, true)?;
    run.emit("report.json", &json_bytes(&report)?, false)?;
    Ok(0)
}
