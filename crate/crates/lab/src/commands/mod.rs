pub mod construct;
pub mod discrete;
pub mod norms;
pub mod reinforce;
pub mod report;
pub mod sanstype;
pub mod staircase;

use std::path::PathBuf;

use clap::Args;
use composed_core::spline::StaircaseSpec;
use composed_core::valid_set::ValidSet;
use serde::Deserialize;

use crate::failure::{Failure, Result};
use crate::io::read_json;

/// Where a staircase comes from. Without `--spec`, the rounding staircase
/// `--rounding N --delta D` is used (5 steps, δ = 0.5 unless given).
#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    /// Staircase JSON: one spec or an array of specs.
    #[arg(long, conflicts_with = "rounding")]
    pub spec: Option<PathBuf>,
    /// Number of steps of the rounding staircase.
    #[arg(long)]
    pub rounding: Option<usize>,
    /// Gap between intervals of the rounding staircase.
    #[arg(long, default_value_t = 0.5, conflicts_with = "spec")]
    pub delta: f64,
    /// Valid set JSON: an array of points (numbers or arrays). Defaults to
    /// the distinct staircase values.
    #[arg(long)]
    pub valid: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecFile {
    Many(Vec<StaircaseSpec>),
    One(StaircaseSpec),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Point {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl SpecArgs {
    pub fn specs(&self) -> Result<Vec<StaircaseSpec>> {
        if let Some(path) = &self.spec {
            let specs = match read_json::<SpecFile>(path)? {
                SpecFile::Many(v) => v,
                SpecFile::One(s) => vec![s],
            };
            if specs.is_empty() {
                return Err(Failure::config(format!("{} holds no staircase", path.display())));
            }
            return Ok(specs);
        }
        let n = self.rounding.unwrap_or(5);
        Ok(vec![StaircaseSpec::rounding(n, self.delta)?.with_id(format!("rounding-{n}-{}", self.delta))])
    }

    pub fn single(&self) -> Result<StaircaseSpec> {
        let mut specs = self.specs()?;
        if specs.len() != 1 {
            return Err(Failure::config("this command takes exactly one staircase"));
        }
        Ok(specs.remove(0))
    }

    pub fn valid_for(&self, spec: &StaircaseSpec) -> Result<ValidSet> {
        match &self.valid {
            Some(path) => {
                let points: Vec<Point> = read_json(path)?;
                let points = points
                    .into_iter()
                    .map(|p| match p {
                        Point::Scalar(v) => vec![v],
                        Point::Vector(v) => v,
                    })
                    .collect();
                Ok(ValidSet::new(points)?)
            }
            None => distinct_values(spec),
        }
    }
}

/// The staircase's values in order of first appearance.
pub fn distinct_values(spec: &StaircaseSpec) -> Result<ValidSet> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    for v in spec.values() {
        if !points.contains(v) {
            points.push(v.clone());
        }
    }
    Ok(ValidSet::new(points)?)
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}
