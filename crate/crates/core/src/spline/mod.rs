//! Linear splines, their function norm, and the staircase constructions that
//! bound the norm of standard and composed predictors.
//!
//! For a continuous piecewise-linear `f` with slope sequence
//! `α_left, α_1, …, α_m, α_right` the norm is
//!
//! ```text
//! ‖f‖ = ½ · max( Σ |α_{t+1} − α_t| , |α_left + α_right| )
//! ```
//!
//! which is the minimum weight-norm `C(θ)` of any two-layer ReLU network
//! representing `f` (see [`crate::relu_net`]).

mod bounds;
mod construct;
mod staircase;

pub use bounds::{
    base_upper_bound, std_lower_bound, theorem_report, CoordinateReport, TheoremReport,
};
pub use construct::{
    base_construction, check_composition, coordinate_construction, default_epsilon,
    staircase_std_interpolant, CompositionCheck,
};
pub use staircase::StaircaseSpec;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};

/// A continuous piecewise-linear function of one variable.
///
/// Knots are strictly ascending; beyond the first and last knot the function
/// continues with `left_slope` and `right_slope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineFile", into = "SplineFile")]
pub struct LinearSpline {
    knots: Vec<(f64, f64)>,
    left_slope: f64,
    right_slope: f64,
}

impl LinearSpline {
    pub fn new(knots: Vec<(f64, f64)>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if knots.is_empty() {
            bail!(InvalidInput, "a spline needs at least one knot");
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            bail!(InvalidInput, "spline knots must be finite");
        }
        if !(left_slope.is_finite() && right_slope.is_finite()) {
            bail!(InvalidInput, "spline end slopes must be finite");
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            bail!(InvalidInput, "spline knots must be strictly ascending in x");
        }
        Ok(Self { knots, left_slope, right_slope })
    }

    pub fn constant(x: f64, value: f64) -> Result<Self> {
        Self::new(alloc::vec![(x, value)], 0.0, 0.0)
    }

    /// The line `x ↦ slope·x + intercept`, anchored at the origin.
    pub fn line(slope: f64, intercept: f64) -> Result<Self> {
        Self::new(alloc::vec![(0.0, intercept)], slope, slope)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn left_slope(&self) -> f64 {
        self.left_slope
    }

    pub fn right_slope(&self) -> f64 {
        self.right_slope
    }

    /// Full slope sequence: left extrapolation, each segment, right extrapolation.
    pub fn slopes(&self) -> Vec<f64> {
        let mut slopes = Vec::with_capacity(self.knots.len() + 1);
        slopes.push(self.left_slope);
        slopes.extend(self.knots.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)));
        slopes.push(self.right_slope);
        slopes
    }

    /// Slope change at each knot, `α_after − α_before`.
    pub fn slope_changes(&self) -> Vec<f64> {
        self.slopes().windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `Σ |Δα|` over all knots.
    pub fn total_slope_variation(&self) -> f64 {
        self.slope_changes().iter().map(|d| d.abs()).sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if x <= first.0 {
            return first.1 + self.left_slope * (x - first.0);
        }
        if x >= last.0 {
            return last.1 + self.right_slope * (x - last.0);
        }
        let i = self.knots.partition_point(|k| k.0 <= x);
        let (x0, y0) = self.knots[i - 1];
        let (x1, y1) = self.knots[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// The function norm `½·max(Σ|Δα|, |α_left + α_right|)`.
    pub fn norm(&self) -> f64 {
        0.5 * self
            .total_slope_variation()
            .max((self.left_slope + self.right_slope).abs())
    }

    /// Insert a knot on the existing graph; the function is unchanged.
    pub fn with_knot(&self, x: f64) -> Result<Self> {
        if self.knots.iter().any(|k| k.0 == x) {
            return Ok(self.clone());
        }
        let mut knots = self.knots.clone();
        let i = knots.partition_point(|k| k.0 < x);
        knots.insert(i, (x, self.eval(x)));
        Self::new(knots, self.left_slope, self.right_slope)
    }
}

/// Free-function form of [`LinearSpline::norm`].
pub fn spline_norm(f: &LinearSpline) -> f64 {
    f.norm()
}

#[derive(Serialize, Deserialize)]
struct SplineFile {
    knots: Vec<[f64; 2]>,
    left_slope: f64,
    right_slope: f64,
}

impl TryFrom<SplineFile> for LinearSpline {
    type Error = Error;

    fn try_from(file: SplineFile) -> Result<Self> {
        Self::new(
            file.knots.into_iter().map(|[x, y]| (x, y)).collect(),
            file.left_slope,
            file.right_slope,
        )
    }
}

impl From<LinearSpline> for SplineFile {
    fn from(s: LinearSpline) -> Self {
        SplineFile {
            knots: s.knots.into_iter().map(|(x, y)| [x, y]).collect(),
            left_slope: s.left_slope,
            right_slope: s.right_slope,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identity_line_has_norm_one() {
        assert_eq!(LinearSpline::line(1.0, 0.0).unwrap().norm(), 1.0);
    }

    #[test]
    fn constant_has_norm_zero() {
        assert_eq!(LinearSpline::constant(0.0, 3.5).unwrap().norm(), 0.0);
    }

    #[test]
    fn absolute_value_norm() {
        let abs = LinearSpline::new(vec![(0.0, 0.0)], -1.0, 1.0).unwrap();
        // Σ|Δα| = 2, |α_l + α_r| = 0
        assert_eq!(abs.norm(), 1.0);
        assert_eq!(abs.eval(-2.0), 2.0);
        assert_eq!(abs.eval(3.0), 3.0);
    }

    #[test]
    fn eval_interpolates_between_knots() {
        let f = LinearSpline::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0)], 0.0, -1.0).unwrap();
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(2.0), 2.0);
        assert_eq!(f.eval(4.0), 1.0);
        assert_eq!(f.eval(-1.0), 0.0);
        assert_eq!(f.slopes(), vec![0.0, 2.0, 0.0, -1.0]);
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(LinearSpline::new(vec![(1.0, 0.0), (0.0, 0.0)], 0.0, 0.0).is_err());
        assert!(LinearSpline::new(vec![], 0.0, 0.0).is_err());
        assert!(LinearSpline::new(vec![(0.0, f64::NAN)], 0.0, 0.0).is_err());
    }
}
