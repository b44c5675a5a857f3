//! Symmetric log-graded meshes on the real line and quadrature for integrands
//! with algebraic behaviour at the origin and at infinity.
//!
//! A grid stores the positive nodes `x_k = exp(s_0 + k h)`; the negative nodes
//! are their mirror images. Every integral is computed in the variable
//! `s = ln|x|`, where power laws become exponentials and a sixth-order
//! interpolatory rule is accurate. The two unresolved ends, `(0, x_min)` and
//! `(x_max, inf)`, are closed analytically from a fitted power-law model.

use alloc::vec::Vec;
use core::ops::{Add, Mul};
use num_complex::Complex64;
use num_traits::Zero;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::log_log_fit;
use crate::interp::Barycentric;

/// Number of samples entering each cell rule.
const CELL_POINTS: usize = 6;

/// Tolerance on fitted exponents when metadata is validated against data.
pub const EXPONENT_FIT_TOLERANCE: f64 = 0.05;

/// Mesh bounds and grading density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub points_per_decade: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: 1e-6,
            x_max: 1e6,
            points_per_decade: 32,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        build_grid(self.x_min, self.x_max, self.points_per_decade)
    }

    /// Same span, doubled density.
    pub fn refined(&self) -> Self {
        Self {
            points_per_decade: 2 * self.points_per_decade,
            ..*self
        }
    }
}

/// Eight-point Gauss-Legendre rule on `[0, 1]`: `(node, weight)`.
const GAUSS8: [(f64, f64); 8] = [
    (0.019855071751231856, 0.05061426814518813),
    (0.10166676129318664, 0.11119051722668724),
    (0.2372337950418355, 0.15685332293894363),
    (0.4082826787521751, 0.181341891689181),
    (0.591717321247825, 0.181341891689181),
    (0.7627662049581645, 0.15685332293894363),
    (0.8983332387068134, 0.11119051722668724),
    (0.9801449282487681, 0.05061426814518813),
];

/// Weights integrating `e^{r t} w(t)` over one cell, where `w` is the
/// interpolating polynomial of `y_m e^{-r m}` through the stencil. With
/// `r = 0` this is plain interpolatory quadrature; with `r = (p + 1) h` it is
/// exact for `|x|^p`.
#[derive(Debug, Clone)]
struct CellRule {
    /// `coeffs[o][m]`: weight of stencil sample `m` for the cell `[o, o+1]`
    /// in units of the step.
    coeffs: [[f64; CELL_POINTS]; CELL_POINTS - 1],
}

impl CellRule {
    fn new() -> Self {
        Self::weighted(0.0)
    }

    fn weighted(rate: f64) -> Self {
        let basis = |m: usize, t: f64| -> f64 {
            (0..CELL_POINTS)
                .filter(|&j| j != m)
                .map(|j| (t - j as f64) / (m as f64 - j as f64))
                .product()
        };
        let mut coeffs = [[0.0; CELL_POINTS]; CELL_POINTS - 1];
        for (o, row) in coeffs.iter_mut().enumerate() {
            for (m, c) in row.iter_mut().enumerate() {
                *c = GAUSS8
                    .iter()
                    .map(|&(node, w)| {
                        let t = o as f64 + node;
                        w * basis(m, t) * (rate * (t - m as f64)).exp()
                    })
                    .sum();
            }
        }
        Self { coeffs }
    }

    /// Stencil start and cell-rule row for cell `k` of a sequence of `n` samples.
    fn stencil(&self, k: usize, n: usize) -> (usize, &[f64; CELL_POINTS]) {
        let start = k.saturating_sub(CELL_POINTS / 2 - 1).min(n - CELL_POINTS);
        (start, &self.coeffs[k - start])
    }
}

/// Symmetric graded mesh. Only the positive half is stored.
#[derive(Debug, Clone)]
pub struct Grid {
    x: Vec<f64>,
    s: Vec<f64>,
    h: f64,
    points_per_decade: usize,
    rule: CellRule,
}

/// Builds the geometric mesh on `[x_min, x_max]` mirrored to the negative axis.
pub fn build_grid(x_min: f64, x_max: f64, points_per_decade: usize) -> Result<Grid> {
    if !(x_min > 0.0 && x_min < 1.0 && x_max > 1.0 && x_max.is_finite()) {
        return Err(Error::Parameter(alloc::format!(
            "grid bounds must satisfy 0 < x_min < 1 < x_max (got {x_min}, {x_max})"
        )));
    }
    if x_max / x_min < 1e4 {
        return Err(Error::Parameter(alloc::format!(
            "grid span x_max/x_min = {} is below 1e4",
            x_max / x_min
        )));
    }
    if points_per_decade < 16 {
        return Err(Error::Parameter(alloc::format!(
            "points_per_decade = {points_per_decade} is below 16"
        )));
    }
    let decades = (x_max / x_min).log10();
    let half = (points_per_decade as f64 * decades).round() as usize;
    let s0 = x_min.ln();
    let s1 = x_max.ln();
    let h = (s1 - s0) / (half - 1) as f64;
    let mut s: Vec<f64> = (0..half).map(|k| s0 + k as f64 * h).collect();
    s[half - 1] = s1;
    let mut x: Vec<f64> = s.iter().map(|v| v.exp()).collect();
    x[0] = x_min;
    x[half - 1] = x_max;
    Ok(Grid {
        x,
        s,
        h,
        points_per_decade,
        rule: CellRule::new(),
    })
}

impl Grid {
    /// Number of positive nodes (half the total).
    pub fn half_len(&self) -> usize {
        self.x.len()
    }

    pub fn len(&self) -> usize {
        2 * self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Positive nodes, ascending.
    pub fn positive(&self) -> &[f64] {
        &self.x
    }

    /// `ln x_k` for the positive nodes.
    pub fn log_nodes(&self) -> &[f64] {
        &self.s
    }

    /// Uniform spacing in `ln|x|`.
    pub fn log_step(&self) -> f64 {
        self.h
    }

    pub fn inner_cutoff(&self) -> f64 {
        self.x[0]
    }

    pub fn outer_cutoff(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn points_per_decade(&self) -> usize {
        self.points_per_decade
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            x_min: self.inner_cutoff(),
            x_max: self.outer_cutoff(),
            points_per_decade: self.points_per_decade,
        }
    }

    /// All nodes in ascending order.
    pub fn nodes(&self) -> Vec<f64> {
        self.x
            .iter()
            .rev()
            .map(|x| -x)
            .chain(self.x.iter().copied())
            .collect()
    }

    /// Quadrature weight of every node (ascending order) for integrals over
    /// `[-x_max, x_max]` minus the two cells around the origin.
    pub fn weights(&self) -> Vec<f64> {
        let half = self.node_weights_half();
        half.iter()
            .rev()
            .copied()
            .chain(half.iter().copied())
            .collect()
    }

    /// Weight per positive node for `int_{x_min}^{x_max} f dx`.
    pub fn node_weights_half(&self) -> Vec<f64> {
        let mut w = log_node_weights(self, self.x.len());
        for (wk, xk) in w.iter_mut().zip(&self.x) {
            *wk *= xk;
        }
        w
    }

    /// Number of nodes in one full decade at either end.
    pub fn decade_len(&self) -> usize {
        let per = (core::f64::consts::LN_10 / self.h).round() as usize + 1;
        per.min(self.x.len())
    }

    /// Interpolator in `ln|x|` on the positive half.
    pub fn interpolator(&self) -> Barycentric {
        Barycentric::new(self.s[0], self.h, self.x.len())
    }

    /// Integral of each cell `[x_k, x_{k+1}]` given the `s`-integrand
    /// `y_k = f(x_k) x_k`.
    pub fn cell_integrals<T>(&self, y: &[T]) -> Vec<T>
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        cell_integrals_uniform(&self.rule, y, self.h)
    }

    /// Like [`Grid::cell_integrals`], but cells below `|x| = 1` are exact for
    /// `|x|^{p_inner}` and cells above for `|x|^{p_outer}`.
    pub fn cell_integrals_modeled<T>(&self, y: &[T], p_inner: f64, p_outer: f64) -> Vec<T>
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        let inner = CellRule::weighted((p_inner + 1.0) * self.h);
        let outer = CellRule::weighted((p_outer + 1.0) * self.h);
        let n = y.len();
        (0..n - 1)
            .map(|k| {
                let rule = if self.s[k] + 0.5 * self.h < 0.0 { &inner } else { &outer };
                let (start, w) = rule.stencil(k, n);
                let mut acc = T::zero();
                for (m, wm) in w.iter().enumerate() {
                    acc = acc + y[start + m] * *wm;
                }
                acc * self.h
            })
            .collect()
    }
}

fn cell_integrals_uniform<T>(rule: &CellRule, y: &[T], h: f64) -> Vec<T>
where
    T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = y.len();
    (0..n - 1)
        .map(|k| {
            let (start, w) = rule.stencil(k, n);
            let mut acc = T::zero();
            for (m, wm) in w.iter().enumerate() {
                acc = acc + y[start + m] * *wm;
            }
            acc * h
        })
        .collect()
}

/// Node weights (in `s`, without the `x` Jacobian) of the composite cell rule
/// on `n` uniformly spaced samples with the grid's spacing.
pub(crate) fn log_node_weights(grid: &Grid, n: usize) -> Vec<f64> {
    let mut w = alloc::vec![0.0; n];
    for k in 0..n - 1 {
        let (start, c) = grid.rule.stencil(k, n);
        for (m, cm) in c.iter().enumerate() {
            w[start + m] += cm * grid.h;
        }
    }
    w
}

/// Fitted tail contribution to the leading power of the coefficient at the
/// trouble end (`exp(a)` times a first-order exponential correction).
///
/// Along `s` moving away from the boundary, `ln|v| -/+ p s = a + delta e^{q t}`
/// where `t` is the distance from the boundary node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndModel {
    /// Exponent of the leading power in `x` (`v ~ C x^p`).
    pub exponent: f64,
    /// `ln|C|` at the boundary, already corrected.
    pub log_coeff: f64,
    pub sign: f64,
    /// Relative correction at the boundary node, `delta`.
    pub correction: f64,
    /// Rate of the correction in `s` (always > 0, directed into the unresolved end).
    pub correction_rate: f64,
}

impl EndModel {
    /// Fits the model from the three samples closest to a boundary.
    ///
    /// `xs` / `vs` are ordered from the boundary inwards.
    pub fn fit(xs: [f64; 3], vs: [f64; 3], exponent: f64) -> Self {
        let sign = if vs[0] < 0.0 { -1.0 } else { 1.0 };
        let pure = |v: f64, x: f64| Self {
            exponent,
            log_coeff: if v == 0.0 { f64::NEG_INFINITY } else { v.abs().ln() - exponent * x.ln() },
            sign,
            correction: 0.0,
            correction_rate: 0.0,
        };
        let same_sign = vs.iter().all(|v| *v != 0.0 && (*v < 0.0) == (sign < 0.0));
        if !same_sign || vs.iter().any(|v| !v.is_finite()) {
            return pure(vs[0], xs[0]);
        }
        let y: [f64; 3] = core::array::from_fn(|k| vs[k].abs().ln() - exponent * xs[k].ln());
        let step = (xs[1] / xs[0]).ln().abs();
        let d0 = y[1] - y[0];
        let d1 = y[2] - y[1];
        if d0.abs() <= 1e-13 * (1.0 + y[0].abs()) {
            return pure(vs[0], xs[0]);
        }
        let rho = d1 / d0;
        if !(rho > 1.0 + 1e-9) || !rho.is_finite() {
            return pure(vs[0], xs[0]);
        }
        let rate = rho.ln() / step;
        let delta = d0 / (rho - 1.0);
        if delta.abs() > 0.5 || rate > 20.0 {
            return pure(vs[0], xs[0]);
        }
        Self {
            exponent,
            log_coeff: y[0] - delta,
            sign,
            correction: delta,
            correction_rate: rate,
        }
    }

    /// Value at `x` beyond the boundary node `x_b`.
    pub fn value(&self, x: f64, x_b: f64) -> f64 {
        if self.log_coeff == f64::NEG_INFINITY {
            return 0.0;
        }
        let t = (x / x_b).ln().abs();
        let corr = self.correction * (-self.correction_rate * t).exp();
        self.sign * (self.log_coeff + self.exponent * x.ln() + corr).exp()
    }

    /// `int_0^{x_b} v dx` for an inner model.
    pub fn integral_to_zero(&self, x_b: f64) -> Result<f64> {
        let a = self.exponent + 1.0;
        if a <= 0.0 {
            return Err(Error::NonIntegrableSingularity(self.exponent));
        }
        Ok(self.series(x_b, a, 1.0))
    }

    /// `int_{x_b}^inf v dx` for an outer model (`exponent` is negative).
    pub fn integral_to_infinity(&self, x_b: f64) -> Result<f64> {
        let a = -(self.exponent + 1.0);
        if a <= 0.0 {
            return Err(Error::DivergentTail(-self.exponent));
        }
        Ok(self.series(x_b, a, 1.0))
    }

    // sum_m C delta^m x_b^{p+1} / (m! (a + m q))
    fn series(&self, x_b: f64, a: f64, _dir: f64) -> f64 {
        if self.log_coeff == f64::NEG_INFINITY {
            return 0.0;
        }
        let base = (self.log_coeff + (self.exponent + 1.0) * x_b.ln()).exp();
        let mut term = 1.0;
        let mut acc = 0.0;
        for m in 0..6 {
            if m > 0 {
                term *= self.correction / m as f64;
            }
            acc += term / (a + m as f64 * self.correction_rate);
            if self.correction == 0.0 {
                break;
            }
        }
        self.sign * base * acc
    }
}

/// Values of a function on a [`Grid`], split into the two half-lines, with
/// optional asymptotic metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction<T = f64> {
    /// `f(x_k)` for the positive nodes.
    pub plus: Vec<T>,
    /// `f(-x_k)` for the positive nodes `x_k`.
    pub minus: Vec<T>,
    /// `p0` with `f ~ C |x|^p0` as `x -> 0`.
    pub zero_exponent: Option<f64>,
    /// `p_inf` with `f ~ C |x|^{-p_inf}` as `|x| -> inf`.
    pub tail_exponent: Option<f64>,
    /// Fitted tail coefficients `(C_minus, C_plus)`.
    pub tail_coeffs: Option<(f64, f64)>,
}

impl<T: Copy> GridFunction<T> {
    pub fn from_halves(plus: Vec<T>, minus: Vec<T>) -> Self {
        Self {
            plus,
            minus,
            zero_exponent: None,
            tail_exponent: None,
            tail_coeffs: None,
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64) -> T) -> Self {
        let plus = grid.positive().iter().map(|&x| f(x)).collect();
        let minus = grid.positive().iter().map(|&x| f(-x)).collect();
        Self::from_halves(plus, minus)
    }

    pub fn with_zero_exponent(mut self, p: f64) -> Self {
        self.zero_exponent = Some(p);
        self
    }

    pub fn with_tail_exponent(mut self, p: f64) -> Self {
        self.tail_exponent = Some(p);
        self
    }

    /// Values in ascending node order.
    pub fn values(&self) -> Vec<T> {
        self.minus
            .iter()
            .rev()
            .chain(self.plus.iter())
            .copied()
            .collect()
    }

    /// Pointwise map, dropping metadata.
    pub fn map<U: Copy>(&self, mut f: impl FnMut(T) -> U) -> GridFunction<U> {
        GridFunction::from_halves(
            self.plus.iter().map(|&v| f(v)).collect(),
            self.minus.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Pointwise map with access to the node.
    pub fn map_with_x<U: Copy>(&self, grid: &Grid, mut f: impl FnMut(f64, T) -> U) -> GridFunction<U> {
        let xs = grid.positive();
        GridFunction::from_halves(
            xs.iter().zip(&self.plus).map(|(&x, &v)| f(x, v)).collect(),
            xs.iter().zip(&self.minus).map(|(&x, &v)| f(-x, v)).collect(),
        )
    }
}

impl GridFunction<f64> {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.half_len();
        Self::from_halves(alloc::vec![0.0; n], alloc::vec![0.0; n])
    }

    pub fn is_finite(&self) -> bool {
        self.plus.iter().chain(&self.minus).all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        self.plus
            .iter()
            .chain(&self.minus)
            .map(|v| v.abs())
            .fold(0.0, nan_max)
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.plus
            .iter()
            .zip(&other.plus)
            .chain(self.minus.iter().zip(&other.minus))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, nan_max)
    }

    /// `a * self + b * other`, dropping metadata.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        Self::from_halves(
            self.plus.iter().zip(&other.plus).map(|(x, y)| a * x + b * y).collect(),
            self.minus.iter().zip(&other.minus).map(|(x, y)| a * x + b * y).collect(),
        )
    }

    /// Least-squares log-log exponent over the innermost decade (per side,
    /// reported as the mean of both sides).
    pub fn fit_zero_exponent(&self, grid: &Grid) -> Option<f64> {
        let m = grid.decade_len();
        let xs = &grid.positive()[..m];
        let a = log_log_fit(xs, &self.plus[..m])?;
        let b = log_log_fit(xs, &self.minus[..m])?;
        Some(0.5 * (a.slope + b.slope))
    }

    /// Least-squares decay exponent over the outermost decade.
    pub fn fit_tail_exponent(&self, grid: &Grid) -> Option<f64> {
        let n = grid.half_len();
        let m = grid.decade_len();
        let xs = &grid.positive()[n - m..];
        let a = log_log_fit(xs, &self.plus[n - m..])?;
        let b = log_log_fit(xs, &self.minus[n - m..])?;
        Some(-0.5 * (a.slope + b.slope))
    }

    /// Fits the tail coefficients `C_pm` for the stored tail exponent.
    pub fn fit_tail_coeffs(mut self, grid: &Grid) -> Self {
        if let Some(p) = self.tail_exponent {
            let n = grid.half_len();
            let xb = grid.outer_cutoff();
            let c_plus = self.plus[n - 1] * xb.powf(p);
            let c_minus = self.minus[n - 1] * xb.powf(p);
            self.tail_coeffs = Some((c_minus, c_plus));
        }
        self
    }

    /// Checks stored exponents against log-log fits of the data.
    pub fn metadata_consistent(&self, grid: &Grid) -> bool {
        let zero_ok = match (self.zero_exponent, self.fit_zero_exponent(grid)) {
            (Some(p), Some(q)) => (p - q).abs() <= EXPONENT_FIT_TOLERANCE,
            (Some(_), None) => false,
            (None, _) => true,
        };
        let tail_ok = match (self.tail_exponent, self.fit_tail_exponent(grid)) {
            (Some(p), Some(q)) => (p - q).abs() <= EXPONENT_FIT_TOLERANCE,
            (Some(_), None) => false,
            (None, _) => true,
        };
        zero_ok && tail_ok
    }

    /// Value at an arbitrary `x` by smooth interpolation in `ln|x|`; beyond
    /// the mesh the fitted end models are used.
    pub fn eval_at(&self, grid: &Grid, x: f64) -> f64 {
        let half = if x < 0.0 { &self.minus } else { &self.plus };
        let ax = x.abs();
        let n = grid.half_len();
        if ax <= grid.inner_cutoff() {
            let xs = grid.positive();
            let p = self.zero_exponent.unwrap_or(0.0);
            return inner_model(grid, half, p).value(ax, xs[0]);
        }
        if ax >= grid.outer_cutoff() {
            let xs = grid.positive();
            let p = self.tail_exponent.unwrap_or(0.0);
            return outer_model(grid, half, p).value(ax, xs[n - 1]);
        }
        grid.interpolator().eval(half, ax.ln())
    }
}

impl GridFunction<Complex64> {
    pub fn re(&self) -> GridFunction<f64> {
        self.map(|z| z.re)
    }

    pub fn im(&self) -> GridFunction<f64> {
        self.map(|z| z.im)
    }
}

/// Cumulative integral on one half-line: `out[k] = closure + int_{x_0}^{x_k} v`.
fn cumulative_from_inner<T>(grid: &Grid, v: &[T], closure: T, model: (f64, f64)) -> Vec<T>
where
    T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
{
    let y: Vec<T> = v.iter().zip(grid.positive()).map(|(&a, &x)| a * x).collect();
    let cells = grid.cell_integrals_modeled(&y, model.0, model.1);
    let mut out = Vec::with_capacity(v.len());
    let mut acc = closure;
    out.push(acc);
    for c in cells {
        acc = acc + c;
        out.push(acc);
    }
    out
}

/// Reverse cumulative integral: `out[k] = closure + int_{x_k}^{x_max} v`.
fn cumulative_from_outer<T>(grid: &Grid, v: &[T], closure: T, model: (f64, f64)) -> Vec<T>
where
    T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
{
    let y: Vec<T> = v.iter().zip(grid.positive()).map(|(&a, &x)| a * x).collect();
    let cells = grid.cell_integrals_modeled(&y, model.0, model.1);
    let mut out = alloc::vec![T::zero(); v.len()];
    let mut acc = closure;
    let n = v.len();
    out[n - 1] = acc;
    for k in (0..n - 1).rev() {
        acc = acc + cells[k];
        out[k] = acc;
    }
    out
}

/// Exponents the inner and outer cell rules are made exact for; without
/// metadata the plain rule in `ln|x|` is used.
fn modeled_exponents<T>(f: &GridFunction<T>) -> (f64, f64) {
    (
        f.zero_exponent.unwrap_or(-1.0),
        f.tail_exponent.map(|p| -p).unwrap_or(-1.0),
    )
}

/// `max` that lets a NaN through instead of skipping it.
fn nan_max(m: f64, v: f64) -> f64 {
    if v > m || v.is_nan() {
        v
    } else {
        m
    }
}

/// Indices of the three samples an end model is fitted to, boundary first.
/// They are a quarter decade apart: adjacent nodes make the extrapolated
/// limit hypersensitive to the boundary sample.
pub(crate) fn end_fit_indices(grid: &Grid, inner: bool) -> [usize; 3] {
    let n = grid.half_len();
    let m = (grid.decade_len() / 4).clamp(1, (n - 1) / 2);
    if inner {
        [0, m, 2 * m]
    } else {
        [n - 1, n - 1 - m, n - 1 - 2 * m]
    }
}

fn end_model(grid: &Grid, half: &[f64], exponent: f64, inner: bool) -> EndModel {
    let xs = grid.positive();
    let idx = end_fit_indices(grid, inner);
    EndModel::fit(idx.map(|k| xs[k]), idx.map(|k| half[k]), exponent)
}

fn inner_model(grid: &Grid, half: &[f64], p0: f64) -> EndModel {
    end_model(grid, half, p0, true)
}

fn outer_model(grid: &Grid, half: &[f64], p_inf: f64) -> EndModel {
    end_model(grid, half, -p_inf, false)
}

/// `int_0^{x_min} f` on each side: `(minus side over (-x_min, 0), plus side)`,
/// both as positive-orientation integrals of `|x|`-parametrised halves.
pub fn inner_closures(grid: &Grid, fp: &GridFunction) -> Result<(f64, f64)> {
    let p0 = fp
        .zero_exponent
        .ok_or(Error::MissingMetadata("zero_exponent"))?;
    if p0 <= -1.0 {
        return Err(Error::NonIntegrableSingularity(p0));
    }
    let xb = grid.inner_cutoff();
    Ok((
        inner_model(grid, &fp.minus, p0).integral_to_zero(xb)?,
        inner_model(grid, &fp.plus, p0).integral_to_zero(xb)?,
    ))
}

/// `int_{x_max}^inf f(+-x) dx` on each side, `(minus, plus)`.
pub fn outer_closures(grid: &Grid, fp: &GridFunction) -> Result<(f64, f64)> {
    let p = fp
        .tail_exponent
        .ok_or(Error::MissingMetadata("tail_exponent"))?;
    if p <= 1.0 {
        return Err(Error::DivergentTail(p));
    }
    let xb = grid.outer_cutoff();
    Ok((
        outer_model(grid, &fp.minus, p).integral_to_infinity(xb)?,
        outer_model(grid, &fp.plus, p).integral_to_infinity(xb)?,
    ))
}

/// Antiderivative vanishing at the origin.
///
/// The cell `(0, x_min)` is integrated analytically from the local power-law
/// model `C |x|^p0` (with a fitted first-order correction); interior cells use
/// the sixth-order rule in `ln|x|`.
pub fn integrate_from_zero(grid: &Grid, fp: &GridFunction) -> Result<GridFunction> {
    let (c_minus, c_plus) = inner_closures(grid, fp)?;
    let p0 = fp.zero_exponent.unwrap_or_default();
    let plus = cumulative_from_inner(grid, &fp.plus, c_plus, modeled_exponents(fp));
    let minus: Vec<f64> = cumulative_from_inner(grid, &fp.minus, c_minus, modeled_exponents(fp))
        .into_iter()
        .map(|v| -v)
        .collect();
    Ok(GridFunction::from_halves(plus, minus).with_zero_exponent(p0 + 1.0))
}

/// Complex antiderivative from the origin with a caller-supplied inner
/// closure per side: `(minus, plus)` values of `int_0^{+-x_min}`.
pub fn integrate_from_zero_complex(
    grid: &Grid,
    fp: &GridFunction<Complex64>,
    closures: (Complex64, Complex64),
) -> GridFunction<Complex64> {
    let plus = cumulative_from_inner(grid, &fp.plus, closures.1, modeled_exponents(fp));
    let minus: Vec<Complex64> = cumulative_from_inner(grid, &fp.minus, -closures.0, modeled_exponents(fp))
        .into_iter()
        .map(|v| -v)
        .collect();
    GridFunction::from_halves(plus, minus)
}

/// Tail integrals: `int_x^inf f` for `x > 0` and `int_{-inf}^x f` for `x < 0`.
pub fn integrate_from_infinity(grid: &Grid, fp: &GridFunction) -> Result<GridFunction> {
    let (c_minus, c_plus) = outer_closures(grid, fp)?;
    let plus = cumulative_from_outer(grid, &fp.plus, c_plus, modeled_exponents(fp));
    let minus = cumulative_from_outer(grid, &fp.minus, c_minus, modeled_exponents(fp));
    let mut out = GridFunction::from_halves(plus, minus);
    out.tail_exponent = fp.tail_exponent.map(|p| p - 1.0);
    Ok(out)
}

/// `int_{-inf}^{inf} f`, with both ends closed analytically.
pub fn integrate_total_with_tails(grid: &Grid, fp: &GridFunction) -> Result<f64> {
    let (i_minus, i_plus) = half_line_totals(grid, fp)?;
    Ok(i_minus + i_plus)
}

/// `(int_{-inf}^0 f, int_0^inf f)`.
pub fn half_line_totals(grid: &Grid, fp: &GridFunction) -> Result<(f64, f64)> {
    let mut fp = fp.clone();
    if fp.zero_exponent.is_none() {
        fp.zero_exponent = fp.fit_zero_exponent(grid);
    }
    let (in_minus, in_plus) = inner_closures(grid, &fp)?;
    let tails = integrate_from_infinity(grid, &fp)?;
    Ok((in_minus + tails.minus[0], in_plus + tails.plus[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn default_grid() -> Grid {
        GridSpec::default().build().unwrap()
    }

    #[test]
    fn node_count_and_symmetry() {
        let g = build_grid(1e-6, 1e6, 32).unwrap();
        assert_eq!(g.len(), 768);
        let nodes = g.nodes();
        for (a, b) in nodes.iter().zip(nodes.iter().rev()) {
            assert_eq!(*a, -*b);
        }
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn endpoints_preserved() {
        let g = build_grid(1e-4, 1e4, 16).unwrap();
        assert_eq!(g.inner_cutoff(), 1e-4);
        assert_eq!(g.outer_cutoff(), 1e4);
        assert_eq!(g.len(), 2 * 128);
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(matches!(build_grid(1.0, 0.5, 16), Err(Error::Parameter(_))));
        assert!(matches!(build_grid(1e-2, 1e1, 16), Err(Error::Parameter(_))));
        assert!(matches!(build_grid(1e-6, 1e6, 8), Err(Error::Parameter(_))));
    }

    #[test]
    fn weights_positive_and_symmetric() {
        let g = default_grid();
        let w = g.weights();
        assert!(w.iter().all(|v| *v > 0.0));
        for (a, b) in w.iter().zip(w.iter().rev()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cell_rule_exact_for_quintics() {
        let rule = CellRule::new();
        for o in 0..5 {
            let sum: f64 = rule.coeffs[o].iter().sum();
            assert!((sum - 1.0).abs() < 1e-13);
            // t^5 over [o, o+1]
            let q: f64 = rule.coeffs[o]
                .iter()
                .enumerate()
                .map(|(m, c)| c * (m as f64).powi(5))
                .sum();
            let exact = ((o + 1) as f64).powi(6) / 6.0 - (o as f64).powi(6) / 6.0;
            assert!((q - exact).abs() < 1e-10 * exact.max(1.0));
        }
    }

    #[test]
    fn weighted_cell_rule_exact_for_exponentials() {
        let rate = 0.37;
        let rule = CellRule::weighted(rate);
        for o in 0..5 {
            let q: f64 = rule.coeffs[o]
                .iter()
                .enumerate()
                .map(|(m, c)| c * (rate * m as f64).exp())
                .sum();
            let exact = ((rate * (o + 1) as f64).exp() - (rate * o as f64).exp()) / rate;
            assert!((q - exact).abs() < 1e-10 * exact.max(1.0));
        }
    }

    #[test]
    fn inverse_three_quarter_power_integrates_to_four() {
        let g = default_grid();
        let fp = GridFunction::from_fn(&g, |x| x.abs().powf(-0.75)).with_zero_exponent(-0.75);
        let anti = integrate_from_zero(&g, &fp).unwrap();
        assert!((anti.eval_at(&g, 1.0) - 4.0).abs() < 1e-9);
        assert!((anti.eval_at(&g, -1.0) + 4.0).abs() < 1e-9);
    }

    #[test]
    fn zero_integrand_gives_zero() {
        let g = default_grid();
        let fp = GridFunction::zeros(&g).with_zero_exponent(0.0);
        let anti = integrate_from_zero(&g, &fp).unwrap();
        assert_eq!(anti.sup_norm(), 0.0);
    }

    #[test]
    fn non_integrable_singularity_rejected() {
        let g = default_grid();
        let fp = GridFunction::from_fn(&g, |x| 1.0 / x.abs()).with_zero_exponent(-1.0);
        assert!(matches!(
            integrate_from_zero(&g, &fp),
            Err(Error::NonIntegrableSingularity(_))
        ));
    }

    #[test]
    fn lorentzian_total_is_pi() {
        let g = default_grid();
        let fp = GridFunction::from_fn(&g, |x| 1.0 / (1.0 + x * x))
            .with_zero_exponent(0.0)
            .with_tail_exponent(2.0);
        let total = integrate_total_with_tails(&g, &fp).unwrap();
        assert!((total - core::f64::consts::PI).abs() < 1e-6, "{total}");
    }

    #[test]
    fn odd_total_vanishes() {
        let g = default_grid();
        let fp = GridFunction::from_fn(&g, |x| x / (1.0 + x * x * x * x))
            .with_zero_exponent(1.0)
            .with_tail_exponent(3.0);
        assert!(integrate_total_with_tails(&g, &fp).unwrap().abs() < 1e-14);
    }

    #[test]
    fn divergent_tail_rejected() {
        let g = default_grid();
        let fp = GridFunction::from_fn(&g, |x| 1.0 / (1.0 + x.abs()))
            .with_zero_exponent(0.0)
            .with_tail_exponent(1.0);
        assert!(matches!(
            integrate_total_with_tails(&g, &fp),
            Err(Error::DivergentTail(_))
        ));
    }

    #[test]
    fn even_halves_agree() {
        let g = default_grid();
        let fp = GridFunction::from_fn(&g, |x| x.abs().powf(-0.5) / (1.0 + x * x))
            .with_zero_exponent(-0.5)
            .with_tail_exponent(2.5);
        let (a, b) = half_line_totals(&g, &fp).unwrap();
        assert!((a - b).abs() <= 1e-15 * a.abs());
    }

    #[test]
    fn metadata_check_detects_wrong_exponent() {
        let g = default_grid();
        let good = GridFunction::from_fn(&g, |x| x.abs().powf(-0.75) * (1.0 + x * x).powf(0.375))
            .with_zero_exponent(-0.75)
            .with_tail_exponent(0.0);
        assert!(good.metadata_consistent(&g));
        let bad = good.clone().with_zero_exponent(-0.5);
        assert!(!bad.metadata_consistent(&g));
    }

    #[test]
    fn inverse_map_density_matches_substitution_oracle() {
        // int_0^1 x^{-3/4} (x^2+1)^{3/8} dx = int_0^1 4 (t^8+1)^{3/8} dt with x = t^4
        let want = oracle::integrate(&|t: f64| 4.0 * (t.powi(8) + 1.0).powf(0.375), 0.0, 1.0, 1e-14);
        let g = default_grid();
        let fp = GridFunction::from_fn(&g, |x| x.abs().powf(-0.75) * (x * x + 1.0).powf(0.375))
            .with_zero_exponent(-0.75);
        let got = integrate_from_zero(&g, &fp).unwrap().eval_at(&g, 1.0);
        assert!(((got - want) / want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn normalisation_density_total_matches_split_oracle() {
        // |x|^{-1/2} (x^2+1)^{-3/4}; (0,1) with x = t^2, (1,inf) with x = u^{-2}
        let inner = oracle::integrate(&|t: f64| 2.0 * (1.0 + t.powi(4)).powf(-0.75), 0.0, 1.0, 1e-14);
        let outer = oracle::integrate(&|u: f64| 2.0 * u * (1.0 + u.powi(4)).powf(-0.75), 0.0, 1.0, 1e-14);
        let want = 2.0 * (inner + outer);
        let g = default_grid();
        let fp = GridFunction::from_fn(&g, |x| x.abs().powf(-0.5) * (x * x + 1.0).powf(-0.75))
            .with_zero_exponent(-0.5)
            .with_tail_exponent(2.0);
        let got = integrate_total_with_tails(&g, &fp).unwrap();
        assert!(((got - want) / want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn single_cell_power_is_exact() {
        let g = default_grid();
        let p = 0.3;
        let fp = GridFunction::from_fn(&g, |x| x.abs().powf(p))
            .with_zero_exponent(p)
            .with_tail_exponent(-p);
        let anti = integrate_from_zero(&g, &fp).unwrap();
        for k in [10, 200, 380] {
            let (a, b) = (g.positive()[k], g.positive()[k + 1]);
            let exact = (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0);
            let got = anti.plus[k + 1] - anti.plus[k];
            assert!(((got - exact) / exact).abs() < 1e-10);
        }
    }
}
