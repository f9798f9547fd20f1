use clap::{Args, ValueEnum};
use composed_core::spline::{staircase_std_interpolant, theorem_report, TheoremReport};

use super::SpecArgs;
use crate::failure::Result;
use crate::io::{csv_bytes, json_bytes, num, opt_num, Run};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct NormsArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Construction margin; defaults to 1e-4 of the smallest valid spacing.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Format printed to stdout when no output directory is given.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

pub const HEADER: [&str; 21] = [
    "id",
    "n",
    "k",
    "delta",
    "dx",
    "adjacent",
    "non_adjacent",
    "l",
    "u",
    "epsilon",
    "lower",
    "std_norm",
    "upper",
    "measured",
    "slack",
    "within_bound",
    "grid_points",
    "grid_mismatches",
    "flat_pairs",
    "ratio",
    "ratio_bound",
];

pub fn row(r: &TheoremReport, std_norm: Option<f64>) -> Vec<String> {
    vec![
        r.id.clone().unwrap_or_default(),
        r.n.to_string(),
        r.k.to_string(),
        num(r.delta),
        num(r.min_interval_len),
        r.adjacent().to_string(),
        r.non_adjacent().to_string(),
        opt_num(r.min_separation()),
        opt_num(r.max_separation()),
        num(r.epsilon),
        num(r.std_lower_bound),
        opt_num(std_norm),
        num(r.base_upper_bound),
        num(r.measured_base_norm),
        num(r.slack_constant),
        r.within_bound.to_string(),
        r.grid_points.to_string(),
        r.grid_mismatches.to_string(),
        r.flat_pairs.to_string(),
        opt_num(r.measured_ratio),
        opt_num(r.ratio_bound),
    ]
}

pub fn run(args: &NormsArgs, run: &mut Run) -> Result<u8> {
    let specs = args.spec.specs()?;
    let valids = specs.iter().map(|s| args.spec.valid_for(s)).collect::<Result<Vec<_>>>()?;
    run.set_config(&serde_json::json!({ "specs": specs, "epsilon": args.epsilon }), None)?;

    let mut reports = Vec::with_capacity(specs.len());
    let mut rows = Vec::with_capacity(specs.len());
    for (spec, valid) in specs.iter().zip(&valids) {
        let report = theorem_report(spec, valid, args.epsilon)?;
        let std_norm = if spec.dim() == 1 { Some(staircase_std_interpolant(spec)?.norm()) } else { None };
        rows.push(row(&report, std_norm));
        reports.push(report);
    }
    run.emit("norms.csv", &csv_bytes(&HEADER, &rows)?, args.format == Format::Csv)?;
    run.emit("norms.json", &json_bytes(&reports)?, args.format == Format::Json)?;
    Ok(0)
}
