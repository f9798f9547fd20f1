//! Explicit staircase interpolants.
//!
//! [`staircase_std_interpolant`] represents the staircase directly.
//! [`base_construction`] builds a low-norm base predictor whose hard
//! projection onto the valid values reproduces the staircase on every interval.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{LinearSpline, StaircaseSpec};
use crate::error::{bail, Result};
use crate::valid_set::{cell_bounds, cell_of, midpoint, ValidSet};

/// Grid resolution for composition checks: at least this many points overall...
const GRID_TOTAL: usize = 10_000;
/// ...and at least this many per interval.
const GRID_PER_INTERVAL: usize = 100;

/// Flat on every interval and linear across every gap, with zero end slopes.
pub fn staircase_std_interpolant(spec: &StaircaseSpec) -> Result<LinearSpline> {
    if spec.dim() != 1 {
        bail!(
            InvalidInput,
            "direct interpolant is univariate; decompose a {}-dimensional staircase per coordinate",
            spec.dim()
        );
    }
    let knots = spec
        .intervals()
        .iter()
        .zip(spec.values())
        .flat_map(|(&[lo, hi], y)| [(lo, y[0]), (hi, y[0])])
        .collect();
    LinearSpline::new(knots, 0.0, 0.0)
}

/// Default construction margin: `1e-4` times the smallest spacing of valid values.
pub fn default_epsilon(valid: &ValidSet) -> f64 {
    let spacing = (0..valid.dim())
        .filter_map(|j| valid.min_spacing(j))
        .fold(f64::INFINITY, f64::min);
    if spacing.is_finite() {
        1e-4 * spacing
    } else {
        1e-4
    }
}

/// Low-norm base predictor for a univariate staircase over a univariate valid set.
pub fn base_construction(spec: &StaircaseSpec, valid: &ValidSet, epsilon: f64) -> Result<LinearSpline> {
    if spec.dim() != 1 || valid.dim() != 1 {
        bail!(InvalidInput, "base construction is univariate; use coordinate_construction");
    }
    construct(spec, &valid.coordinate_values(0), epsilon)
}

/// Base construction for output coordinate `j`, projecting onto the values
/// that coordinate takes in `valid`. Runs of equal values are merged first.
pub fn coordinate_construction(
    spec: &StaircaseSpec,
    valid: &ValidSet,
    j: usize,
    epsilon: f64,
) -> Result<LinearSpline> {
    if spec.dim() != valid.dim() || j >= spec.dim() {
        bail!(InvalidInput, "coordinate {j} out of range for the staircase and valid set");
    }
    let (merged, _) = spec.coordinate(j);
    construct(&merged, &valid.coordinate_values(j), epsilon)
}

/// Relation of an interior interval to its two neighbours.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Shape {
    Rising,
    Falling,
    Peak,
    Valley,
}

/// Feasible slopes `[lo, hi]` for an end segment.
#[derive(Clone, Copy)]
struct SlopeRange {
    lo: f64,
    hi: f64,
}

impl SlopeRange {
    fn clamp(&self, s: f64) -> f64 {
        s.max(self.lo).min(self.hi)
    }
}

fn construct(spec: &StaircaseSpec, cells: &[f64], eps: f64) -> Result<LinearSpline> {
    if !(eps.is_finite() && eps > 0.0) {
        bail!(InvalidParameter, "epsilon must be positive and finite (got {eps})");
    }
    if let Some(spacing) = cells.windows(2).map(|w| w[1] - w[0]).min_by(f64::total_cmp) {
        if eps >= spacing / 2.0 {
            bail!(
                InvalidParameter,
                "epsilon {eps} must be below half the smallest valid-value spacing {spacing}"
            );
        }
    }
    let n = spec.len();
    let ys = spec.coordinate_values(0);
    let iv = spec.intervals();
    let mut idx = Vec::with_capacity(n);
    for (i, y) in ys.iter().enumerate() {
        match cells.binary_search_by(|c| c.total_cmp(y)) {
            Ok(c) => idx.push(c),
            Err(_) => bail!(InvalidInput, "staircase value {i} ({y}) is not a valid value"),
        }
    }
    if n == 1 {
        return LinearSpline::constant(iv[0][0], ys[0]);
    }

    let bounds: Vec<(f64, f64)> = idx.iter().map(|&c| cell_bounds(cells, c)).collect();
    let adjacent: Vec<bool> = (0..n - 1).map(|i| idx[i].abs_diff(idx[i + 1]) == 1).collect();
    // Adjacent pairs meet at the middle of their gap, on the shared cell boundary.
    let junction: Vec<(f64, f64)> = (0..n - 1)
        .map(|i| {
            let x = midpoint(iv[i][1], iv[i + 1][0]);
            let v = if ys[i + 1] > ys[i] { bounds[i].1 } else { bounds[i].0 };
            (x, v)
        })
        .collect();

    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(3 * n);

    // Inner knot of the first interval.
    let (lo0, hi0) = bounds[0];
    knots.push(if adjacent[0] {
        junction[0]
    } else if ys[1] > ys[0] {
        (iv[0][1], hi0 - eps)
    } else {
        (iv[0][1], lo0 + eps)
    });

    for i in 1..n - 1 {
        let (lo, hi) = bounds[i];
        let shape = match (ys[i] > ys[i - 1], ys[i + 1] > ys[i]) {
            (true, true) => Shape::Rising,
            (false, false) => Shape::Falling,
            (true, false) => Shape::Peak,
            (false, true) => Shape::Valley,
        };
        // Values on the interval itself sit `eps` inside the cell.
        let (left, right) = match shape {
            Shape::Rising => (lo + eps, hi - eps),
            Shape::Falling => (hi - eps, lo + eps),
            Shape::Peak => (lo + eps, lo + eps),
            Shape::Valley => (hi - eps, hi - eps),
        };
        if !adjacent[i - 1] {
            knots.push((iv[i][0], left));
        }
        if adjacent[i - 1] && adjacent[i] && matches!(shape, Shape::Peak | Shape::Valley) {
            // Both junctions sit on the same boundary: lift the middle into the cell.
            knots.push((midpoint(iv[i][0], iv[i][1]), left));
        }
        knots.push(if adjacent[i] { junction[i] } else { (iv[i][1], right) });
    }

    // Inner knot of the last interval (a junction was already pushed).
    let (lo_last, hi_last) = bounds[n - 1];
    if !adjacent[n - 2] {
        knots.push(if ys[n - 1] > ys[n - 2] {
            (iv[n - 1][0], lo_last + eps)
        } else {
            (iv[n - 1][0], hi_last - eps)
        });
    }

    // End segments continue the neighbouring interior slope where the cell
    // allows it; the spline extends them linearly beyond the domain.
    let first = knots[0];
    let last = knots[knots.len() - 1];
    let left_range = end_range(first, iv[0], bounds[0], eps, Side::Left);
    let right_range = end_range(last, iv[n - 1], bounds[n - 1], eps, Side::Right);
    let (Some(left_range), Some(right_range)) = (left_range, right_range) else {
        bail!(InvalidParameter, "epsilon {eps} too large to keep the end intervals inside their cells");
    };
    let inner_slope = |a: (f64, f64), b: (f64, f64)| (b.1 - a.1) / (b.0 - a.0);
    let (sl, sr) = if knots.len() >= 2 {
        (
            left_range.clamp(inner_slope(knots[0], knots[1])),
            right_range.clamp(inner_slope(knots[knots.len() - 2], last)),
        )
    } else {
        // Two adjacent intervals: one shared line if possible.
        let shared = SlopeRange {
            lo: left_range.lo.max(right_range.lo),
            hi: left_range.hi.min(right_range.hi),
        };
        if shared.lo <= shared.hi {
            let s = shared.clamp(0.0);
            (s, s)
        } else {
            (left_range.clamp(0.0), right_range.clamp(0.0))
        }
    };
    let mut all = Vec::with_capacity(knots.len() + 2);
    all.push((iv[0][0], first.1 - sl * (first.0 - iv[0][0])));
    all.extend_from_slice(&knots);
    all.push((iv[n - 1][1], last.1 + sr * (iv[n - 1][1] - last.0)));
    let spline = LinearSpline::new(all, sl, sr)?;

    let check = check_composition(&spline, spec, cells)?;
    if check.mismatches > 0 {
        bail!(
            InvalidParameter,
            "epsilon {eps} too large: construction leaves its cell at {} of {} grid points",
            check.mismatches,
            check.points
        );
    }
    Ok(spline)
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

/// Slopes of a line through `inner` that keep the end interval inside `[lo+eps, hi-eps]`.
fn end_range(
    inner: (f64, f64),
    interval: [f64; 2],
    (lo, hi): (f64, f64),
    eps: f64,
    side: Side,
) -> Option<SlopeRange> {
    let (a, b) = (lo + eps, hi - eps);
    let mut range = SlopeRange { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    for x in interval {
        let d = match side {
            Side::Left => inner.0 - x,
            Side::Right => x - inner.0,
        };
        if d <= 0.0 {
            // The inner knot itself; its value is inside by construction.
            continue;
        }
        // Left: value = v - s·d. Right: value = v + s·d.
        let (s_min, s_max) = match side {
            Side::Left => ((inner.1 - b) / d, (inner.1 - a) / d),
            Side::Right => ((a - inner.1) / d, (b - inner.1) / d),
        };
        range.lo = range.lo.max(s_min);
        range.hi = range.hi.min(s_max);
    }
    (range.lo <= range.hi).then_some(range)
}

/// Outcome of checking `Π ∘ f = f★` on a dense grid over the intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionCheck {
    pub points: usize,
    pub mismatches: usize,
    /// First grid input where the projected value differs from the target.
    pub first_mismatch: Option<f64>,
}

impl CompositionCheck {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Grid inputs covering every interval: `max(100, ⌈10⁴/N⌉)` evenly spaced
/// points per interval, endpoints included.
pub(crate) fn grid(spec: &StaircaseSpec) -> impl Iterator<Item = (usize, f64)> + '_ {
    let per = GRID_PER_INTERVAL.max(GRID_TOTAL.div_ceil(spec.len()));
    spec.intervals().iter().enumerate().flat_map(move |(i, &[lo, hi])| {
        (0..per).map(move |t| {
            let x = if t + 1 == per { hi } else { lo + (hi - lo) * (t as f64) / ((per - 1) as f64) };
            (i, x)
        })
    })
}

/// Verify that projecting `f` onto `cells` reproduces the univariate staircase.
pub fn check_composition(f: &LinearSpline, spec: &StaircaseSpec, cells: &[f64]) -> Result<CompositionCheck> {
    if spec.dim() != 1 {
        bail!(InvalidInput, "composition check is univariate");
    }
    let ys = spec.coordinate_values(0);
    let mut targets = Vec::with_capacity(ys.len());
    for y in &ys {
        match cells.binary_search_by(|c| c.total_cmp(y)) {
            Ok(c) => targets.push(c),
            Err(_) => bail!(InvalidInput, "staircase value {y} is not a valid value"),
        }
    }
    let mut check = CompositionCheck { points: 0, mismatches: 0, first_mismatch: None };
    for (i, x) in grid(spec) {
        check.points += 1;
        if cell_of(f.eval(x), cells)? != targets[i] {
            check.mismatches += 1;
            check.first_mismatch.get_or_insert(x);
        }
    }
    Ok(check)
}
