//! Discrete valid output sets and the hard projection denoiser.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::spline::StaircaseSpec;

/// A finite set of distinct points in `R^k`.
///
/// The order of `points` is significant: projection ties resolve to the
/// lowest index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ValidSet {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl ValidSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            bail!(InvalidInput, "valid set must contain at least one point");
        };
        let dim = first.len();
        if dim == 0 {
            bail!(InvalidInput, "valid points must have at least one coordinate");
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                bail!(InvalidInput, "point {i} has dimension {} (expected {dim})", p.len());
            }
            if p.iter().any(|c| !c.is_finite()) {
                bail!(InvalidInput, "point {i} has a non-finite coordinate");
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    bail!(InvalidInput, "points {j} and {i} coincide");
                }
            }
        }
        Ok(Self { points, dim })
    }

    /// A one-dimensional valid set, in the given order.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| alloc::vec![v]).collect())
    }

    /// The integers `lo..=hi` as a one-dimensional valid set.
    pub fn integer_range(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            bail!(InvalidInput, "empty integer range {lo}..={hi}");
        }
        Self::new((lo..=hi).map(|v| alloc::vec![v as f64]).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index]
    }

    /// Index of a point equal to `y`, if any.
    pub fn position(&self, y: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| p.as_slice() == y)
    }

    /// Nearest point in Euclidean distance; exact ties go to the lowest index.
    pub fn project(&self, y: &[f64]) -> Result<(usize, &[f64])> {
        if y.len() != self.dim {
            bail!(InvalidInput, "query has dimension {} (expected {})", y.len(), self.dim);
        }
        if y.iter().any(|c| !c.is_finite()) {
            bail!(InvalidInput, "query has a non-finite coordinate");
        }
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = squared_distance(p, y);
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        Ok((best, &self.points[best]))
    }

    /// Sorted distinct values taken by coordinate `j` across the set.
    pub fn coordinate_values(&self, j: usize) -> Vec<f64> {
        let mut values: Vec<f64> = self.points.iter().map(|p| p[j]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        values
    }

    /// Smallest distance between consecutive distinct values of coordinate `j`,
    /// or `None` when the coordinate takes a single value.
    pub fn min_spacing(&self, j: usize) -> Option<f64> {
        self.coordinate_values(j)
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(f64::total_cmp)
    }
}

impl TryFrom<Vec<Vec<f64>>> for ValidSet {
    type Error = Error;

    fn try_from(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<ValidSet> for Vec<Vec<f64>> {
    fn from(set: ValidSet) -> Self {
        set.points
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_sorted(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        bail!(InvalidInput, "cell values must be nonempty");
    }
    if values.iter().any(|v| !v.is_finite()) {
        bail!(InvalidInput, "cell values must be finite");
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        bail!(InvalidInput, "cell values must be strictly ascending");
    }
    Ok(())
}

/// Index `i` of the half-open projection cell `(lo_i, hi_i]` containing `y`.
///
/// Cell boundaries are the midpoints between consecutive `values`; the outer
/// cells extend to infinity. A midpoint belongs to the lower cell, matching
/// the tie-break of [`ValidSet::project`] on a sorted set.
pub fn cell_of(y: f64, values: &[f64]) -> Result<usize> {
    check_sorted(values)?;
    if !y.is_finite() {
        bail!(InvalidInput, "query must be finite");
    }
    // Number of midpoints strictly below y.
    Ok(values
        .windows(2)
        .take_while(|w| y > midpoint(w[0], w[1]))
        .count())
}

/// Bounds `(lo, hi)` of cell `i`; infinite at the extremes.
pub fn cell_bounds(values: &[f64], i: usize) -> (f64, f64) {
    let lo = if i == 0 {
        f64::NEG_INFINITY
    } else {
        midpoint(values[i - 1], values[i])
    };
    let hi = if i + 1 == values.len() {
        f64::INFINITY
    } else {
        midpoint(values[i], values[i + 1])
    };
    (lo, hi)
}

pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) / 2.0
}

/// Adjacency statistics of one output coordinate of a staircase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateStats {
    /// Consecutive pairs with no valid value strictly between them (`|I_j|`).
    /// Includes `flat` pairs.
    pub adjacent: usize,
    /// Consecutive pairs with at least one valid value strictly between them (`|J_j|`).
    pub non_adjacent: usize,
    /// Consecutive pairs whose values coincide in this coordinate.
    pub flat: usize,
    /// Smallest nonzero consecutive separation (`L_j`); `None` without such pairs.
    pub min_separation: Option<f64>,
    /// Largest consecutive separation (`U_j`); `None` without nonzero pairs.
    pub max_separation: Option<f64>,
}

impl CoordinateStats {
    /// Adjacent pairs that take part in the norm bounds (flat pairs excluded).
    pub fn effective_adjacent(&self) -> usize {
        self.adjacent - self.flat
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyStats {
    pub coords: Vec<CoordinateStats>,
}

impl AdjacencyStats {
    pub fn has_flat_pairs(&self) -> bool {
        self.coords.iter().any(|c| c.flat > 0)
    }
}

/// Per-coordinate adjacency statistics of the staircase values against `valid`.
pub fn adjacency_stats(spec: &StaircaseSpec, valid: &ValidSet) -> Result<AdjacencyStats> {
    if spec.dim() != valid.dim() {
        bail!(
            InvalidInput,
            "staircase has dimension {} but valid set has {}",
            spec.dim(),
            valid.dim()
        );
    }
    for (i, y) in spec.values().iter().enumerate() {
        if valid.position(y).is_none() {
            bail!(InvalidInput, "staircase value {i} is not a member of the valid set");
        }
    }
    let coords = (0..spec.dim())
        .map(|j| {
            let values = valid.coordinate_values(j);
            let seq: Vec<f64> = spec.values().iter().map(|y| y[j]).collect();
            coordinate_stats(&seq, &values)
        })
        .collect();
    Ok(AdjacencyStats { coords })
}

fn coordinate_stats(seq: &[f64], values: &[f64]) -> CoordinateStats {
    let mut stats = CoordinateStats {
        adjacent: 0,
        non_adjacent: 0,
        flat: 0,
        min_separation: None,
        max_separation: None,
    };
    for w in seq.windows(2) {
        let (a, b) = if w[0] <= w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
        let between = values.iter().filter(|&&v| a < v && v < b).count();
        if between == 0 {
            stats.adjacent += 1;
        } else {
            stats.non_adjacent += 1;
        }
        let sep = b - a;
        if sep == 0.0 {
            stats.flat += 1;
            continue;
        }
        stats.min_separation = Some(stats.min_separation.map_or(sep, |m: f64| m.min(sep)));
        stats.max_separation = Some(stats.max_separation.map_or(sep, |m: f64| m.max(sep)));
    }
    stats
}
