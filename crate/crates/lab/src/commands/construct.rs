use clap::Args;
use composed_core::spline::{
    coordinate_construction, default_epsilon, staircase_std_interpolant, theorem_report, LinearSpline, StaircaseSpec,
};
use serde::Serialize;

use super::SpecArgs;
use crate::failure::{Failure, Result};
use crate::io::{csv_bytes, json_bytes, num, opt_num, Run};

#[derive(Debug, Clone, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Evenly spaced sample points over the domain, padded by 10% per side.
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
}

#[derive(Serialize)]
struct Construction<'a> {
    spec: &'a StaircaseSpec,
    epsilon: f64,
    std_interpolant: Option<LinearSpline>,
    coordinates: Vec<LinearSpline>,
    measured_base_norm: f64,
    base_upper_bound: f64,
    grid_points: usize,
    grid_mismatches: usize,
}

pub fn run(args: &ConstructArgs, run: &mut Run) -> Result<u8> {
    if args.samples < 2 {
        return Err(Failure::config("need at least two samples"));
    }
    let spec = args.spec.single()?;
    let valid = args.spec.valid_for(&spec)?;
    let epsilon = args.epsilon.unwrap_or_else(|| default_epsilon(&valid));
    run.set_config(&serde_json::json!({ "spec": spec, "epsilon": epsilon, "samples": args.samples }), None)?;

    let report = theorem_report(&spec, &valid, Some(epsilon))?;
    let coordinates = (0..spec.dim())
        .map(|j| coordinate_construction(&spec, &valid, j, epsilon))
        .collect::<composed_core::Result<Vec<_>>>()?;
    let std_interpolant = if spec.dim() == 1 { Some(staircase_std_interpolant(&spec)?) } else { None };

    let k = spec.dim();
    let mut header: Vec<String> = vec!["x".into(), "interval".into()];
    header.extend((0..k).map(|j| format!("target_{j}")));
    header.push("std".into());
    header.extend((0..k).map(|j| format!("base_{j}")));
    header.extend((0..k).map(|j| format!("projected_{j}")));
    let (lo, hi) = spec.domain();
    let pad = 0.1 * (hi - lo);
    let mut rows = Vec::with_capacity(args.samples);
    for t in 0..args.samples {
        let x = lo - pad + (hi - lo + 2.0 * pad) * t as f64 / (args.samples - 1) as f64;
        let interval = spec.interval_of(x);
        let base: Vec<f64> = coordinates.iter().map(|c| c.eval(x)).collect();
        let projected = valid.project(&base)?.1.to_vec();
        let mut row = vec![num(x), interval.map(|i| i.to_string()).unwrap_or_default()];
        match spec.target(x) {
            Some(y) => row.extend(y.iter().map(|v| num(*v))),
            None => row.extend((0..k).map(|_| String::new())),
        }
        row.push(opt_num(std_interpolant.as_ref().map(|f| f.eval(x))));
        row.extend(base.iter().map(|v| num(*v)));
        row.extend(projected.iter().map(|v| num(*v)));
        rows.push(row);
    }

    let out = Construction {
        spec: &spec,
        epsilon,
        std_interpolant,
        coordinates,
        measured_base_norm: report.measured_base_norm,
        base_upper_bound: report.base_upper_bound,
        grid_points: report.grid_points,
        grid_mismatches: report.grid_mismatches,
    };
    run.emit("construction.json", &json_bytes(&out)?, true)?;
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    run.emit("samples.csv", &csv_bytes(&header, &rows)?, false)?;
    Ok(0)
}
