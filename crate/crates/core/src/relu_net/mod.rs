//! Two-layer ReLU networks `x ↦ W2·relu(W1·x + b1) + b2`.
//!
//! The complexity measure is `C(θ) = ½(‖W1‖²_F + ‖W2‖²_F)`; biases are not
//! penalised. For a univariate network the infimum of `C` over all
//! representations of `f` is at least the spline norm of `f`.

mod train;

pub use train::{train, LossKind, Momentum, TrainConfig, TrainResult};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::rng;
use crate::spline::LinearSpline;

/// Parameters of a two-layer ReLU network with `d` inputs, `h` hidden units
/// and `k` outputs. A gradient has the same shape and is stored the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetFile", into = "NetFile")]
pub struct ReluNet2 {
    d: usize,
    h: usize,
    k: usize,
    /// `h × d`, row-major.
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// `k × h`, row-major.
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl ReluNet2 {
    /// All-zero parameters.
    pub fn zeros(d: usize, h: usize, k: usize) -> Self {
        Self { d, h, k, w1: vec![0.0; h * d], b1: vec![0.0; h], w2: vec![0.0; k * h], b2: vec![0.0; k] }
    }

    /// Every parameter drawn uniformly from `[−1/√h, 1/√h]`.
    pub fn random(d: usize, h: usize, k: usize, seed: u64) -> Self {
        let mut net = Self::zeros(d, h, k);
        if h == 0 {
            return net;
        }
        let bound = 1.0 / libm::sqrt(h as f64);
        let mut rng = rng::seeded(seed);
        for p in net.params_mut() {
            *p = rng.random_range(-bound..=bound);
        }
        net
    }

    pub fn from_parts(
        d: usize,
        h: usize,
        k: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self> {
        if d == 0 || k == 0 {
            bail!(InvalidInput, "networks need at least one input and one output");
        }
        if w1.len() != h * d || b1.len() != h || w2.len() != k * h || b2.len() != k {
            bail!(InvalidInput, "parameter shapes do not match d={d}, h={h}, k={k}");
        }
        let net = Self { d, h, k, w1, b1, w2, b2 };
        if net.params().any(|p| !p.is_finite()) {
            bail!(InvalidInput, "network parameters must be finite");
        }
        Ok(net)
    }

    /// The identity on `R^k` as `x_j = relu(x_j) − relu(−x_j)`; `C = 2k`.
    pub fn identity(k: usize) -> Self {
        let mut net = Self::zeros(k, 2 * k, k);
        for j in 0..k {
            net.w1[(2 * j) * k + j] = 1.0;
            net.w1[(2 * j + 1) * k + j] = -1.0;
            net.w2[j * 2 * k + 2 * j] = 1.0;
            net.w2[j * 2 * k + 2 * j + 1] = -1.0;
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn hidden(&self) -> usize {
        self.h
    }

    pub fn output_dim(&self) -> usize {
        self.k
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn w2(&self) -> &[f64] {
        &self.w2
    }

    pub fn b2(&self) -> &[f64] {
        &self.b2
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Parameters in the order `W1, b1, W2, b2`.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).copied()
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.params().collect()
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            bail!(InvalidInput, "expected {} parameters, got {}", self.num_params(), values.len());
        }
        for (p, v) in self.params_mut().zip(values) {
            *p = *v;
        }
        Ok(())
    }

    /// Same shape, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.d, self.h, self.k)
    }

    fn same_shape(&self, other: &Self) -> bool {
        (self.d, self.h, self.k) == (other.d, other.h, other.k)
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        assert!(self.same_shape(other), "shape mismatch");
        for (p, q) in self.params_mut().zip(other.params()) {
            *p += scale * q;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for p in self.params_mut() {
            *p *= s;
        }
    }

    /// `C(θ) = ½(‖W1‖² + ‖W2‖²)`.
    pub fn complexity(&self) -> f64 {
        0.5 * self.w1.iter().chain(&self.w2).map(|w| w * w).sum::<f64>()
    }

    /// Gradient of `C(θ)`: the weights themselves, zero on biases.
    pub fn complexity_grad(&self) -> Self {
        Self { b1: vec![0.0; self.h], b2: vec![0.0; self.k], ..self.clone() }
    }

    fn pre_activation(&self, x: &[f64], l: usize) -> f64 {
        let row = &self.w1[l * self.d..(l + 1) * self.d];
        row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.b1[l]
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.d, "input dimension");
        let mut out = self.b2.clone();
        for l in 0..self.h {
            let a = self.pre_activation(x, l);
            if a > 0.0 {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += self.w2[j * self.h + l] * a;
                }
            }
        }
        out
    }

    /// Univariate input.
    pub fn eval1(&self, x: f64) -> Vec<f64> {
        self.eval(&[x])
    }

    /// Backpropagate `dout = ∂L/∂output` at input `x`: adds the parameter
    /// gradient into `grad` and returns `∂L/∂x`. The ReLU derivative at 0 is 0.
    #[allow(clippy::needless_range_loop)]
    pub fn backward(&self, x: &[f64], dout: &[f64], grad: &mut Self) -> Vec<f64> {
        assert!(self.same_shape(grad), "shape mismatch");
        assert_eq!(dout.len(), self.k, "output dimension");
        let mut dx = vec![0.0; self.d];
        for (g, d) in grad.b2.iter_mut().zip(dout) {
            *g += d;
        }
        for l in 0..self.h {
            let a = self.pre_activation(x, l);
            if a <= 0.0 {
                continue;
            }
            let mut da = 0.0;
            for j in 0..self.k {
                grad.w2[j * self.h + l] += dout[j] * a;
                da += dout[j] * self.w2[j * self.h + l];
            }
            grad.b1[l] += da;
            for i in 0..self.d {
                grad.w1[l * self.d + i] += da * x[i];
                dx[i] += da * self.w1[l * self.d + i];
            }
        }
        dx
    }

    /// `∂L/∂x` only.
    #[allow(clippy::needless_range_loop)]
    pub fn input_grad(&self, x: &[f64], dout: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.d];
        for l in 0..self.h {
            if self.pre_activation(x, l) <= 0.0 {
                continue;
            }
            let da: f64 = (0..self.k).map(|j| dout[j] * self.w2[j * self.h + l]).sum();
            for i in 0..self.d {
                dx[i] += da * self.w1[l * self.d + i];
            }
        }
        dx
    }
}

/// Stack networks with a shared input into one network whose outputs are the
/// concatenated outputs. Complexity is the sum of the parts.
pub fn concat_outputs(nets: &[ReluNet2]) -> Result<ReluNet2> {
    let Some(first) = nets.first() else {
        bail!(InvalidInput, "nothing to concatenate");
    };
    let d = first.d;
    if nets.iter().any(|n| n.d != d) {
        bail!(InvalidInput, "concatenated networks must share the input dimension");
    }
    let h: usize = nets.iter().map(|n| n.h).sum();
    let k: usize = nets.iter().map(|n| n.k).sum();
    let mut out = ReluNet2::zeros(d, h, k);
    let (mut h0, mut k0) = (0, 0);
    for n in nets {
        out.w1[h0 * d..(h0 + n.h) * d].copy_from_slice(&n.w1);
        out.b1[h0..h0 + n.h].copy_from_slice(&n.b1);
        for j in 0..n.k {
            out.w2[(k0 + j) * h + h0..(k0 + j) * h + h0 + n.h]
                .copy_from_slice(&n.w2[j * n.h..(j + 1) * n.h]);
        }
        out.b2[k0..k0 + n.k].copy_from_slice(&n.b2);
        h0 += n.h;
        k0 += n.k;
    }
    Ok(out)
}

/// Represent `f` on `[a, b]` exactly.
///
/// Each slope change `Δα` becomes one unit `sign(Δα)·√|Δα|·relu(√|Δα|·(x − x_t))`
/// and the leftmost slope is carried by a unit active on the whole domain, so
/// `C = Σ|Δα| + |α_left|`.
pub fn compile_spline(f: &LinearSpline, domain: [f64; 2]) -> Result<ReluNet2> {
    let [a, b] = domain;
    if !(a.is_finite() && b.is_finite()) || a > b {
        bail!(InvalidParameter, "compile domain must be a bounded interval (got [{a}, {b}])");
    }
    let knots = f.knots();
    if knots.iter().any(|&(x, _)| x < a || x > b) {
        bail!(InvalidParameter, "compile domain [{a}, {b}] must contain every knot");
    }
    let changes: Vec<(f64, f64)> = knots
        .iter()
        .zip(f.slope_changes())
        .map(|(&(x, _), d)| (x, d))
        .filter(|&(_, d)| d != 0.0)
        .collect();
    let left = f.left_slope();
    let units: Vec<(f64, f64)> = (left != 0.0)
        .then_some((a, left))
        .into_iter()
        .chain(changes)
        .collect();
    let h = units.len();
    let mut net = ReluNet2::zeros(1, h, 1);
    for (l, &(x, d)) in units.iter().enumerate() {
        let w = libm::sqrt(d.abs());
        net.w1[l] = w;
        net.b1[l] = -w * x;
        net.w2[l] = w.copysign(d);
    }
    net.b2[0] = f.eval(a);
    Ok(net)
}

/// Central finite differences of `loss` at `params`.
pub fn central_difference(mut loss: impl FnMut(&[f64]) -> f64, params: &[f64], step: f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + step;
            let up = loss(&p);
            p[i] = orig - step;
            let down = loss(&p);
            p[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Largest coordinate-wise `|a − b| / max(|a|, |b|, 1e−6)`.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

#[derive(Serialize, Deserialize)]
struct NetFile {
    input_dim: usize,
    hidden: usize,
    output_dim: usize,
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
}

impl TryFrom<NetFile> for ReluNet2 {
    type Error = Error;

    fn try_from(f: NetFile) -> Result<Self> {
        if f.w1.iter().any(|r| r.len() != f.input_dim) || f.w2.iter().any(|r| r.len() != f.hidden) {
            bail!(InvalidInput, "ragged weight matrix");
        }
        ReluNet2::from_parts(
            f.input_dim,
            f.hidden,
            f.output_dim,
            f.w1.concat(),
            f.b1,
            f.w2.concat(),
            f.b2,
        )
    }
}

impl From<ReluNet2> for NetFile {
    fn from(n: ReluNet2) -> Self {
        let rows = |m: &[f64], cols: usize, count: usize| -> Vec<Vec<f64>> {
            (0..count).map(|r| m[r * cols..(r + 1) * cols].to_vec()).collect()
        };
        NetFile {
            input_dim: n.d,
            hidden: n.h,
            output_dim: n.k,
            w1: rows(&n.w1, n.d, n.h),
            b1: n.b1.clone(),
            w2: rows(&n.w2, n.h, n.k),
            b2: n.b2.clone(),
        }
    }
}
