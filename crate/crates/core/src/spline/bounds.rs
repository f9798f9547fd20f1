//! Norm bounds for staircase interpolants and the gap report comparing them.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::construct::{coordinate_construction, default_epsilon, grid};
use super::{LinearSpline, StaircaseSpec};
use crate::error::{bail, Result};
use crate::valid_set::{adjacency_stats, AdjacencyStats, CoordinateStats, ValidSet};

/// Lower bound on the norm of any direct interpolant: the largest per-coordinate
/// `Σ |y_{i+1,j} − y_{i,j}| / δ`.
pub fn std_lower_bound(spec: &StaircaseSpec) -> f64 {
    (0..spec.dim())
        .map(|j| coordinate_lower_bound(spec, j))
        .fold(0.0, f64::max)
}

fn coordinate_lower_bound(spec: &StaircaseSpec, j: usize) -> f64 {
    let ys = spec.coordinate_values(j);
    ys.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / spec.gap()
}

fn coordinate_upper_bound(stats: &CoordinateStats, delta: f64, dx: f64) -> f64 {
    let u = stats.max_separation.unwrap_or(0.0);
    let j = stats.non_adjacent as f64;
    let i = stats.effective_adjacent() as f64;
    (j * u / delta + i * u / dx).max(u / dx)
}

/// Upper bound on the base construction norm, summed over output coordinates.
pub fn base_upper_bound(spec: &StaircaseSpec, stats: &AdjacencyStats) -> f64 {
    let (delta, dx) = (spec.gap(), spec.min_interval_len());
    stats
        .coords
        .iter()
        .map(|c| coordinate_upper_bound(c, delta, dx))
        .sum()
}

/// Ratio lower bound `N·max_j L_j / Σ_j U_j(|J_j| + δ|I_j|/Δ_x)`; `None` when
/// the denominator vanishes.
fn ratio_bound(spec: &StaircaseSpec, stats: &AdjacencyStats) -> Option<f64> {
    let (delta, dx) = (spec.gap(), spec.min_interval_len());
    let l = stats
        .coords
        .iter()
        .filter_map(|c| c.min_separation)
        .fold(0.0, f64::max);
    let denom: f64 = stats
        .coords
        .iter()
        .map(|c| {
            c.max_separation.unwrap_or(0.0)
                * (c.non_adjacent as f64 + delta * c.effective_adjacent() as f64 / dx)
        })
        .sum();
    (denom > 0.0).then(|| spec.len() as f64 * l / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateReport {
    pub stats: CoordinateStats,
    pub std_lower_bound: f64,
    pub base_upper_bound: f64,
    pub measured_norm: f64,
    pub construction: LinearSpline,
}

/// Both sides of the standard-vs-composed complexity gap for one staircase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub id: Option<String>,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub min_interval_len: f64,
    pub epsilon: f64,
    pub coords: Vec<CoordinateReport>,
    pub std_lower_bound: f64,
    pub base_upper_bound: f64,
    /// Sum of the per-coordinate construction norms.
    pub measured_base_norm: f64,
    /// Slack constant `c` in `measured ≤ upper + c·ε`.
    pub slack_constant: f64,
    pub within_bound: bool,
    pub grid_points: usize,
    pub grid_mismatches: usize,
    /// Some coordinate repeats a value between consecutive intervals.
    pub flat_pairs: bool,
    /// `std_lower_bound / measured_base_norm`.
    pub measured_ratio: Option<f64>,
    pub ratio_bound: Option<f64>,
}

impl TheoremReport {
    /// Construction reproduces the staircase on the grid and respects the bound.
    pub fn passed(&self) -> bool {
        self.grid_mismatches == 0 && self.within_bound
    }

    /// Adjacent pairs summed over coordinates (flat pairs excluded).
    pub fn adjacent(&self) -> usize {
        self.coords.iter().map(|c| c.stats.effective_adjacent()).sum()
    }

    pub fn non_adjacent(&self) -> usize {
        self.coords.iter().map(|c| c.stats.non_adjacent).sum()
    }

    /// Largest per-coordinate minimum separation.
    pub fn min_separation(&self) -> Option<f64> {
        self.coords
            .iter()
            .filter_map(|c| c.stats.min_separation)
            .reduce(f64::max)
    }

    /// Largest separation over all coordinates.
    pub fn max_separation(&self) -> Option<f64> {
        self.coords
            .iter()
            .filter_map(|c| c.stats.max_separation)
            .reduce(f64::max)
    }
}

/// Evaluate both bounds, build the per-coordinate construction, and verify the
/// multivariate composition `Π ∘ f̂ = f★` on a dense grid.
pub fn theorem_report(spec: &StaircaseSpec, valid: &ValidSet, epsilon: Option<f64>) -> Result<TheoremReport> {
    let stats = adjacency_stats(spec, valid)?;
    let epsilon = epsilon.unwrap_or_else(|| default_epsilon(valid));
    let (delta, dx) = (spec.gap(), spec.min_interval_len());
    let n = spec.len();
    let k = spec.dim();

    let mut coords = Vec::with_capacity(k);
    for (j, cstats) in stats.coords.iter().enumerate() {
        let construction = coordinate_construction(spec, valid, j, epsilon)?;
        coords.push(CoordinateReport {
            stats: cstats.clone(),
            std_lower_bound: coordinate_lower_bound(spec, j),
            base_upper_bound: coordinate_upper_bound(cstats, delta, dx),
            measured_norm: construction.norm(),
            construction,
        });
    }

    let mut grid_points = 0;
    let mut grid_mismatches = 0;
    let mut y = alloc::vec![0.0; k];
    for (i, x) in grid(spec) {
        grid_points += 1;
        for (yj, c) in y.iter_mut().zip(&coords) {
            *yj = c.construction.eval(x);
        }
        if valid.project(&y)?.1 != spec.values()[i].as_slice() {
            grid_mismatches += 1;
        }
    }
    if grid_points == 0 {
        bail!(InvalidState, "empty verification grid");
    }

    let std_lower = std_lower_bound(spec);
    let base_upper = base_upper_bound(spec, &stats);
    let measured: f64 = coords.iter().map(|c| c.measured_norm).sum();
    let slack_constant = 8.0 * (n * k) as f64 * (1.0 / delta + 1.0 / dx);
    let within_bound = measured <= base_upper + slack_constant * epsilon;
    Ok(TheoremReport {
        id: spec.id().map(String::from),
        n,
        k,
        delta,
        min_interval_len: dx,
        epsilon,
        coords,
        std_lower_bound: std_lower,
        base_upper_bound: base_upper,
        measured_base_norm: measured,
        slack_constant,
        within_bound,
        grid_points,
        grid_mismatches,
        flat_pairs: stats.has_flat_pairs(),
        measured_ratio: (measured > 0.0).then(|| std_lower / measured),
        ratio_bound: ratio_bound(spec, &stats),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn lower_bound_is_max_over_coordinates() {
        let spec = StaircaseSpec::from_lengths(
            0.0,
            &[1.0, 1.0, 1.0],
            0.5,
            vec![vec![0.0, 0.0], vec![2.0, 1.0], vec![4.0, 0.5]],
        )
        .unwrap();
        // coordinate sums 4/0.5 = 8 and 1.5/0.5 = 3
        assert!((std_lower_bound(&spec) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn single_interval_bounds_vanish() {
        let spec = StaircaseSpec::univariate(vec![[0.0, 1.0]], 0.5, &[2.0]).unwrap();
        let v = ValidSet::from_scalars(&[1.0, 2.0]).unwrap();
        let r = theorem_report(&spec, &v, None).unwrap();
        assert_eq!(r.std_lower_bound, 0.0);
        assert_eq!(r.base_upper_bound, 0.0);
        assert_eq!(r.measured_base_norm, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn all_adjacent_unit_staircase_bound() {
        let spec = StaircaseSpec::rounding(6, 0.2).unwrap();
        let v = ValidSet::integer_range(1, 6).unwrap();
        let stats = adjacency_stats(&spec, &v).unwrap();
        // (N−1)·U/Δx with Δx = 0.8
        assert!((base_upper_bound(&spec, &stats) - 5.0 / 0.8).abs() < 1e-9);
    }

    #[test]
    fn figure_one_report() {
        let spec = StaircaseSpec::rounding(5, 0.5).unwrap();
        let v = ValidSet::integer_range(1, 5).unwrap();
        let r = theorem_report(&spec, &v, None).unwrap();
        assert!((r.std_lower_bound - 8.0).abs() < 1e-12);
        assert!((r.measured_base_norm - 1.0).abs() < 1e-6);
        assert!(r.passed());
        assert_eq!(r.adjacent(), 4);
        assert_eq!(r.non_adjacent(), 0);
    }

    #[test]
    fn multivariate_bound_is_sum_of_coordinates() {
        let lengths = [1.0, 0.5, 1.0, 0.7];
        let a = [0.0, 1.0, 3.0, 2.0];
        let b = [2.0, 0.0, 1.0, 3.0];
        let spec = StaircaseSpec::from_lengths(
            0.0,
            &lengths,
            0.3,
            (0..4).map(|i| vec![a[i], b[i]]).collect(),
        )
        .unwrap();
        let v = ValidSet::new(
            (0..4)
                .flat_map(|x| (0..4).map(move |y| vec![x as f64, y as f64]))
                .collect(),
        )
        .unwrap();
        let r = theorem_report(&spec, &v, None).unwrap();
        let mut sum = 0.0;
        for ys in [a, b] {
            let s = StaircaseSpec::from_lengths(0.0, &lengths, 0.3, ys.iter().map(|&y| vec![y]).collect())
                .unwrap();
            let vs = ValidSet::integer_range(0, 3).unwrap();
            sum += base_upper_bound(&s, &adjacency_stats(&s, &vs).unwrap());
        }
        assert!((r.base_upper_bound - sum).abs() < 1e-9);
        assert!(r.passed());
    }

    #[test]
    fn flat_coordinate_pairs_are_flagged() {
        let spec = StaircaseSpec::from_lengths(
            0.0,
            &[1.0, 1.0, 1.0],
            0.5,
            vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![1.0, 2.0]],
        )
        .unwrap();
        let v = ValidSet::new(vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let r = theorem_report(&spec, &v, None).unwrap();
        assert!(r.flat_pairs);
        assert!(r.passed());
    }
}
