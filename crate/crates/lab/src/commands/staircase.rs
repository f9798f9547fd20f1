use std::path::PathBuf;

use clap::Args;
use composed_core::composed::{
    prepare_staircase, pretrain_staircase_denoiser, run_staircase_seed, StaircaseConfig, StaircaseReport,
};
use composed_core::spline::StaircaseSpec;

use super::SpecArgs;
use crate::failure::Result;
use crate::io::{csv_bytes, json_bytes, num, overlay, Run};
use crate::parallel::par_map;

#[derive(Debug, Clone, Args)]
pub struct StaircaseArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// JSON object overriding any of the training defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of replicate seeds, starting at `--seed`.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

impl StaircaseArgs {
    pub fn config(&self) -> Result<StaircaseConfig> {
        let mut cfg = overlay(&StaircaseConfig::default(), self.config.as_deref())?;
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.seeds {
            cfg.n_seeds = v;
        }
        if let Some(v) = self.hidden {
            cfg.hidden = v;
        }
        if let Some(v) = self.epochs {
            cfg.max_epochs = v;
        }
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The staircase experiment with seeds spread over `threads` workers. The
/// report is the same as a sequential run's.
pub fn run_parallel(spec: &StaircaseSpec, cfg: &StaircaseConfig, threads: usize) -> Result<StaircaseReport> {
    let setup = prepare_staircase(spec, cfg)?;
    let denoiser = pretrain_staircase_denoiser(&setup, cfg)?;
    let seeds: Vec<u64> = (0..cfg.n_seeds as u64).map(|s| cfg.seed + s).collect();
    let seeds = par_map(&seeds, threads, |&s| run_staircase_seed(&setup, &denoiser, cfg, s))
        .into_iter()
        .collect::<composed_core::Result<Vec<_>>>()?;
    denoiser.verify()?;
    Ok(StaircaseReport { config: cfg.clone(), denoiser_fingerprint: denoiser.fingerprint(), seeds })
}

pub const HEADER: [&str; 9] =
    ["arm", "seed", "mse_train", "mse_test", "mse_ood", "em_test", "em_ood", "complexity", "epochs"];

pub fn rows(report: &StaircaseReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for s in &report.seeds {
        for m in &s.arms {
            rows.push(vec![
                m.arm.name().into(),
                s.seed.to_string(),
                num(m.mse_train),
                num(m.mse_test),
                num(m.mse_ood),
                num(m.em_test),
                num(m.em_ood),
                num(m.complexity),
                m.epochs.to_string(),
            ]);
        }
    }
    rows
}

pub fn run(args: &StaircaseArgs, run: &mut Run) -> Result<u8> {
    let spec = args.spec.single()?;
    let cfg = args.config()?;
    run.set_config(&serde_json::json!({ "spec": spec, "training": cfg }), Some(cfg.seed))?;
    let report = run_parallel(&spec, &cfg, run.threads())?;
    run.emit("seeds.csv", &csv_bytes(&HEADER, &rows(&report))?, true)?;
    run.emit("report.json", &json_bytes(&report)?, false)?;
    Ok(0)
}
