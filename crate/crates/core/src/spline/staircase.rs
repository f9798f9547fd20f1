use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};

/// Relative tolerance when checking that every gap equals the declared `gap`.
const GAP_TOLERANCE: f64 = 1e-9;

/// A piecewise-constant target on `N` disjoint closed intervals.
///
/// Intervals ascend and are separated by the constant gap `δ`; interval `i`
/// maps to `values[i]`. Consecutive values differ as vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StaircaseFile", into = "StaircaseFile")]
pub struct StaircaseSpec {
    id: Option<String>,
    intervals: Vec<[f64; 2]>,
    gap: f64,
    values: Vec<Vec<f64>>,
}

impl StaircaseSpec {
    pub fn new(intervals: Vec<[f64; 2]>, gap: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        let spec = Self { id: None, intervals, gap, values };
        spec.validate()?;
        Ok(spec)
    }

    /// Scalar-valued staircase.
    pub fn univariate(intervals: Vec<[f64; 2]>, gap: f64, values: &[f64]) -> Result<Self> {
        Self::new(intervals, gap, values.iter().map(|&v| vec![v]).collect())
    }

    /// Intervals of the given lengths laid out from `start` with gap `gap`.
    pub fn from_lengths(start: f64, lengths: &[f64], gap: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        let mut intervals = Vec::with_capacity(lengths.len());
        let mut x = start;
        for &len in lengths {
            intervals.push([x, x + len]);
            x += len + gap;
        }
        Self::new(intervals, gap, values)
    }

    /// The rounding staircase `x ↦ ⌊x⌉` on `[i − (1−δ)/2, i + (1−δ)/2]`, `i = 1..=n`.
    pub fn rounding(n: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            bail!(InvalidInput, "rounding staircase needs 0 < delta < 1 (got {delta})");
        }
        let half = (1.0 - delta) / 2.0;
        let intervals = (1..=n).map(|i| [i as f64 - half, i as f64 + half]).collect();
        let values = (1..=n).map(|i| vec![i as f64]).collect();
        Self::new(intervals, delta, values)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.intervals.len();
        if n == 0 {
            bail!(InvalidInput, "staircase needs at least one interval");
        }
        if self.values.len() != n {
            bail!(InvalidInput, "{} intervals but {} values", n, self.values.len());
        }
        if !(self.gap.is_finite() && self.gap > 0.0) {
            bail!(InvalidInput, "gap must be positive and finite (got {})", self.gap);
        }
        let dim = self.values[0].len();
        if dim == 0 {
            bail!(InvalidInput, "staircase values need at least one coordinate");
        }
        for (i, y) in self.values.iter().enumerate() {
            if y.len() != dim {
                bail!(InvalidInput, "value {i} has dimension {} (expected {dim})", y.len());
            }
            if y.iter().any(|c| !c.is_finite()) {
                bail!(InvalidInput, "value {i} has a non-finite coordinate");
            }
        }
        for (i, &[lo, hi]) in self.intervals.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) {
                bail!(InvalidInput, "interval {i} has a non-finite endpoint");
            }
            if hi <= lo {
                bail!(InvalidInput, "interval {i} is empty or reversed");
            }
        }
        for i in 0..n - 1 {
            let gap = self.intervals[i + 1][0] - self.intervals[i][1];
            let scale = self.gap.max(self.intervals[i + 1][0].abs()).max(1.0);
            if (gap - self.gap).abs() > GAP_TOLERANCE * scale {
                bail!(
                    InvalidInput,
                    "gap between intervals {i} and {} is {gap}, expected {}",
                    i + 1,
                    self.gap
                );
            }
            if self.values[i] == self.values[i + 1] {
                bail!(InvalidInput, "consecutive values {i} and {} coincide", i + 1);
            }
        }
        Ok(())
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    /// Number of intervals `N`.
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Output dimension `k`.
    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// The gap `δ`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Length of the shortest interval, `Δ_x`.
    pub fn min_interval_len(&self) -> f64 {
        self.intervals
            .iter()
            .map(|[lo, hi]| hi - lo)
            .fold(f64::INFINITY, f64::min)
    }

    /// Leftmost and rightmost input covered.
    pub fn domain(&self) -> (f64, f64) {
        (self.intervals[0][0], self.intervals[self.len() - 1][1])
    }

    /// Index of the interval containing `x`, if any.
    pub fn interval_of(&self, x: f64) -> Option<usize> {
        let i = self.intervals.partition_point(|iv| iv[1] < x);
        (i < self.len() && self.intervals[i][0] <= x).then_some(i)
    }

    /// The target value at `x`, or `None` in a gap or outside the domain.
    pub fn target(&self, x: f64) -> Option<&[f64]> {
        self.interval_of(x).map(|i| self.values[i].as_slice())
    }

    /// Coordinate `j` of the values as a scalar sequence.
    pub fn coordinate_values(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|y| y[j]).collect()
    }

    /// Coordinate `j` as a univariate staircase, merging runs of equal values.
    ///
    /// A merged run covers its intervals and the gaps between them, so the
    /// remaining gaps are still `δ`. Returns the merged spec and, for each
    /// merged interval, the range of original interval indices it covers.
    pub fn coordinate(&self, j: usize) -> (StaircaseSpec, Vec<(usize, usize)>) {
        let mut intervals: Vec<[f64; 2]> = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        let mut runs: Vec<(usize, usize)> = Vec::new();
        for (i, (iv, y)) in self.intervals.iter().zip(&self.values).enumerate() {
            match values.last() {
                Some(last) if last[0] == y[j] => {
                    intervals.last_mut().expect("nonempty")[1] = iv[1];
                    runs.last_mut().expect("nonempty").1 = i;
                }
                _ => {
                    intervals.push(*iv);
                    values.push(vec![y[j]]);
                    runs.push((i, i));
                }
            }
        }
        let spec = StaircaseSpec { id: self.id.clone(), intervals, gap: self.gap, values };
        (spec, runs)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ValueRepr {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// On-disk form: `{"id"?, "intervals": [[lo, hi], ...], "gap": δ, "values": [y | [y...], ...]}`.
#[derive(Serialize, Deserialize)]
struct StaircaseFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    intervals: Vec<[f64; 2]>,
    gap: f64,
    values: Vec<ValueRepr>,
}

impl TryFrom<StaircaseFile> for StaircaseSpec {
    type Error = Error;

    fn try_from(file: StaircaseFile) -> Result<Self> {
        let values = file
            .values
            .into_iter()
            .map(|v| match v {
                ValueRepr::Scalar(s) => vec![s],
                ValueRepr::Vector(v) => v,
            })
            .collect();
        let spec = StaircaseSpec { id: file.id, intervals: file.intervals, gap: file.gap, values };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<StaircaseSpec> for StaircaseFile {
    fn from(spec: StaircaseSpec) -> Self {
        let values = spec
            .values
            .into_iter()
            .map(|v| if v.len() == 1 { ValueRepr::Scalar(v[0]) } else { ValueRepr::Vector(v) })
            .collect();
        StaircaseFile { id: spec.id, intervals: spec.intervals, gap: spec.gap, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_staircase_layout() {
        let s = StaircaseSpec::rounding(5, 0.5).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.intervals()[0], [0.75, 1.25]);
        assert!((s.min_interval_len() - 0.5).abs() < 1e-12);
        assert_eq!(s.target(2.1), Some(&[2.0][..]));
        assert_eq!(s.target(2.5), None);
        assert_eq!(s.target(0.0), None);
    }

    #[test]
    fn rejects_bad_gaps_and_repeats() {
        assert!(StaircaseSpec::univariate(vec![[0.0, 1.0], [1.5, 2.0]], 0.4, &[0.0, 1.0]).is_err());
        assert!(StaircaseSpec::univariate(vec![[0.0, 1.0], [1.5, 2.0]], 0.5, &[1.0, 1.0]).is_err());
        assert!(StaircaseSpec::univariate(vec![[0.0, 1.0], [1.5, 2.0]], 0.5, &[1.0]).is_err());
        assert!(StaircaseSpec::univariate(vec![[1.0, 0.0]], 0.5, &[1.0]).is_err());
        assert!(StaircaseSpec::univariate(vec![[0.0, 1.0]], 0.0, &[1.0]).is_err());
    }

    #[test]
    fn coordinate_merges_flat_runs() {
        let s = StaircaseSpec::from_lengths(
            0.0,
            &[1.0, 1.0, 1.0],
            0.5,
            vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![1.0, 2.0]],
        )
        .unwrap();
        let (c0, runs0) = s.coordinate(0);
        assert_eq!(c0.intervals(), &[[0.0, 2.5], [3.0, 4.0]]);
        assert_eq!(runs0, vec![(0, 1), (2, 2)]);
        let (c1, _) = s.coordinate(1);
        assert_eq!(c1.intervals(), &[[0.0, 1.0], [1.5, 4.0]]);
    }
}
