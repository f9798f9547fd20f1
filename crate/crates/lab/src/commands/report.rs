use std::path::PathBuf;

use clap::Args;
use composed_core::composed::{Arm, StaircaseReport};
use composed_core::discrete::{DiscreteArm, DiscreteReport};
use composed_core::spline::TheoremReport;
use serde::Deserialize;
use serde_json::Value;

use super::median;
use super::reinforce::ReinforceVerdict;
use crate::failure::{Failure, Result};
use crate::io::{csv_bytes, json_bytes, num, read_json, Run};

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Result files: train-staircase or train-discrete `report.json`,
    /// `norms.json`, or `reinforce.json`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

pub const HEADER: [&str; 8] = ["source", "experiment", "group", "metric", "n", "median", "min", "max"];

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyReport {
    Staircase(StaircaseReport),
    Discrete(DiscreteReport),
    Reinforce(ReinforceVerdict),
    Norms(Vec<TheoremReport>),
}

struct Rows<'a> {
    source: &'a str,
    experiment: &'static str,
    out: Vec<Vec<String>>,
}

impl Rows<'_> {
    fn push(&mut self, group: &str, metric: &str, mut values: Vec<f64>) {
        let n = values.len();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let med = median(&mut values);
        self.out.push(vec![
            self.source.into(),
            self.experiment.into(),
            group.into(),
            metric.into(),
            n.to_string(),
            num(med),
            num(min),
            num(max),
        ]);
    }
}

fn staircase(r: &StaircaseReport, rows: &mut Rows) {
    for arm in Arm::ALL {
        let get = |f: fn(&composed_core::composed::ArmMetrics) -> f64| {
            r.seeds.iter().map(|s| f(s.arm(arm))).collect::<Vec<_>>()
        };
        rows.push(arm.name(), "em_ood", get(|m| m.em_ood));
        rows.push(arm.name(), "mse_ood", get(|m| m.mse_ood));
        rows.push(arm.name(), "em_test", get(|m| m.em_test));
        rows.push(arm.name(), "complexity", get(|m| m.complexity));
    }
    let wins = |f: fn(&composed_core::composed::SeedReport) -> bool| {
        r.seeds.iter().map(|s| f64::from(u8::from(f(s)))).collect::<Vec<_>>()
    };
    rows.push(
        "composed_vs_standard",
        "em_ood_not_lower",
        wins(|s| s.arm(Arm::Composed).em_ood >= s.arm(Arm::Standard).em_ood),
    );
    rows.push(
        "composed_vs_standard",
        "complexity_lower",
        wins(|s| s.arm(Arm::Composed).complexity < s.arm(Arm::Standard).complexity),
    );
}

fn discrete(r: &DiscreteReport, rows: &mut Rows) {
    for arm in DiscreteArm::ALL {
        rows.push(arm.name(), "valid_rate", r.seeds.iter().map(|s| s.arm(arm).valid_rate).collect());
        rows.push(arm.name(), "correct_rate", r.seeds.iter().map(|s| s.arm(arm).correct_rate).collect());
    }
}

pub fn run(args: &ReportArgs, run: &mut Run) -> Result<u8> {
    let mut parsed = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let value: Value = read_json(path)?;
        let report: AnyReport = serde_json::from_value(value)
            .map_err(|_| Failure::config(format!("{} is not a recognised result file", path.display())))?;
        parsed.push((path.display().to_string(), report));
    }
    run.set_config(&serde_json::json!({ "inputs": args.inputs }), None)?;

    let mut all = Vec::new();
    for (source, report) in &parsed {
        let experiment = match report {
            AnyReport::Staircase(_) => "staircase",
            AnyReport::Discrete(_) => "discrete",
            AnyReport::Reinforce(_) => "reinforce",
            AnyReport::Norms(_) => "norms",
        };
        let mut rows = Rows { source, experiment, out: Vec::new() };
        match report {
            AnyReport::Staircase(r) => staircase(r, &mut rows),
            AnyReport::Discrete(r) => discrete(r, &mut rows),
            AnyReport::Reinforce(r) => {
                rows.push("all", "max_z_score", r.instances.iter().map(|i| i.max_z_score).collect());
                rows.push("all", "pass", vec![f64::from(u8::from(r.pass))]);
            }
            AnyReport::Norms(rs) => {
                rows.push("all", "lower", rs.iter().map(|r| r.std_lower_bound).collect());
                rows.push("all", "measured", rs.iter().map(|r| r.measured_base_norm).collect());
                rows.push("all", "ratio", rs.iter().filter_map(|r| r.measured_ratio).collect());
            }
        }
        all.extend(rows.out);
    }
    run.emit("summary.csv", &csv_bytes(&HEADER, &all)?, true)?;
    let json: Vec<Value> = all
        .iter()
        .map(|r| serde_json::Value::Object(HEADER.iter().zip(r).map(|(k, v)| ((*k).into(), v.clone().into())).collect()))
        .collect();
    run.emit("summary.json", &json_bytes(&json)?, false)?;
    Ok(0)
}
