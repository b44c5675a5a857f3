//! Principal-value Hilbert transform `Hf(x) = (1/pi) p.v. int f(y) / (x - y) dy`
//! on graded grids.
//!
//! With `x = +-e^s` and `y = +-e^sigma` the transform splits into two
//! convolutions in the log variable: the same-sign half carries the kernel
//! `K(u) = 1 / (e^u - 1)`, singular like `1/u`, and the opposite-sign half the
//! smooth kernel `L(u) = 1 / (e^u + 1)`, with `u = s - sigma`. Both are
//! integrated on a uniform mesh in `sigma` that extends the grid by
//! [`EXTENSION`] on each side; beyond the grid the samples come from fitted end
//! models and beyond the extension the remaining integrals are closed
//! analytically. The `1/u` singularity is handled by subtraction.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::grid::{log_node_weights, Grid, GridFunction};
use crate::interp::{UniformDerivative, FD_POINTS};

/// Length (in `ln|x|`) of the auxiliary mesh appended at each end of the grid.
pub const EXTENSION: f64 = 24.0;

/// One term `C_pm |x|^{-p}` of an algebraic tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailTerm {
    pub exponent: f64,
    pub coeff_plus: f64,
    pub coeff_minus: f64,
}

/// Far-field model `f(+-x) ~ sum_t C_pm,t x^{-p_t}` fitted on the outer decade.
///
/// The leading term is stored in the flat fields; further terms, if any, are
/// corrections with larger exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub exponent: f64,
    pub coeff_plus: f64,
    pub coeff_minus: f64,
    pub corrections: Vec<TailTerm>,
    /// Root-mean-square misfit relative to the largest sample on the outer decade.
    pub relative_residual: f64,
    /// Exponents `r` of the corrections `f(x) - f(0+-) ~ |x|^r` used to continue
    /// the samples towards the origin. Empty means a constant continuation.
    #[serde(default)]
    pub inner_rates: Vec<f64>,
}

impl TailModel {
    pub fn pure(exponent: f64, coeff_minus: f64, coeff_plus: f64) -> Self {
        Self {
            exponent,
            coeff_plus,
            coeff_minus,
            corrections: Vec::new(),
            relative_residual: 0.0,
            inner_rates: Vec::new(),
        }
    }

    /// Sets the exponents of the near-origin corrections. Rates closer than
    /// 0.05 to an earlier one are dropped so the inner fit stays well posed.
    pub fn with_inner_rates(mut self, rates: &[f64]) -> Self {
        let mut kept: Vec<f64> = Vec::new();
        for &r in rates {
            if r > 0.0 && r.is_finite() && kept.iter().all(|k| (k - r).abs() >= 0.05) {
                kept.push(r);
            }
        }
        self.inner_rates = kept;
        self
    }

    /// Least-squares fit of the coefficients for the given exponents, each side
    /// separately, over the outermost decade of the grid.
    pub fn fit(grid: &Grid, f: &GridFunction, exponents: &[f64]) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::Parameter("tail model needs at least one exponent".into()));
        }
        let n = grid.half_len();
        let m = grid.decade_len().max(exponents.len() + 1);
        let xs = &grid.positive()[n - m..];
        let xb = grid.outer_cutoff();
        let columns: Vec<Vec<f64>> = exponents
            .iter()
            .map(|&p| xs.iter().map(|x| (x / xb).powf(-p)).collect())
            .collect();
        let mut fitted = [Vec::new(), Vec::new()];
        let mut resid: f64 = 0.0;
        for (side, values) in [&f.plus, &f.minus].into_iter().enumerate() {
            let rhs = &values[n - m..];
            let scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let c = if scale == 0.0 {
                alloc::vec![0.0; exponents.len()]
            } else {
                least_squares(&columns, rhs).ok_or_else(|| {
                    Error::NumericalFailure("tail fit with dependent exponents".into())
                })?
            };
            if scale > 0.0 {
                let rss: f64 = rhs
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let model: f64 = c.iter().zip(&columns).map(|(ct, col)| ct * col[k]).sum();
                        (v - model) * (v - model)
                    })
                    .sum();
                resid = resid.max((rss / m as f64).sqrt() / scale);
            }
            fitted[side] = c
                .iter()
                .zip(exponents)
                .map(|(ct, p)| ct * xb.powf(*p))
                .collect();
        }
        let mut terms = exponents.iter().enumerate().map(|(t, &p)| TailTerm {
            exponent: p,
            coeff_plus: fitted[0][t],
            coeff_minus: fitted[1][t],
        });
        let lead = terms.next().expect("non-empty");
        Ok(Self {
            exponent: lead.exponent,
            coeff_plus: lead.coeff_plus,
            coeff_minus: lead.coeff_minus,
            corrections: terms.collect(),
            relative_residual: resid,
            inner_rates: Vec::new(),
        })
    }

    pub fn terms(&self) -> impl Iterator<Item = TailTerm> + '_ {
        core::iter::once(TailTerm {
            exponent: self.exponent,
            coeff_plus: self.coeff_plus,
            coeff_minus: self.coeff_minus,
        })
        .chain(self.corrections.iter().copied())
    }

    /// Model value at `x` (either sign).
    pub fn value(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.terms()
            .map(|t| {
                let c = if x < 0.0 { t.coeff_minus } else { t.coeff_plus };
                c * ax.powf(-t.exponent)
            })
            .sum()
    }
}

/// Precomputed kernel tables for one grid.
#[derive(Debug, Clone)]
pub struct HilbertOperator {
    n: usize,
    /// Extension length in mesh steps on each side.
    pad: usize,
    h: f64,
    s: Vec<f64>,
    sigma_lo: f64,
    sigma_hi: f64,
    weights: Vec<f64>,
    /// `R(d h)` with `R(u) = 1/(e^u - 1) - 1/u`, indexed by `d + (len - 1)`.
    smooth_same: Vec<f64>,
    /// `L(d h)`, same indexing.
    smooth_opposite: Vec<f64>,
    derivative: UniformDerivative,
    /// Number of innermost samples the near-origin continuation is fitted to.
    inner_fit: usize,
}

fn kernel_same_regular(u: f64) -> f64 {
    if u == 0.0 {
        -0.5
    } else {
        1.0 / u.exp_m1() - 1.0 / u
    }
}

fn kernel_opposite(u: f64) -> f64 {
    1.0 / (u.exp() + 1.0)
}

impl HilbertOperator {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.half_len();
        let h = grid.log_step();
        let pad = (EXTENSION / h).ceil() as usize;
        let len = n + 2 * pad;
        let s = grid.log_nodes().to_vec();
        let sigma_lo = s[0] - pad as f64 * h;
        let sigma_hi = s[n - 1] + pad as f64 * h;
        let weights = log_node_weights(grid, len);
        let table = |k: fn(f64) -> f64| -> Vec<f64> {
            (0..2 * len - 1)
                .map(|idx| k((idx as f64 - (len - 1) as f64) * h))
                .collect()
        };
        Self {
            n,
            pad,
            h,
            s,
            sigma_lo,
            sigma_hi,
            weights,
            smooth_same: table(kernel_same_regular),
            smooth_opposite: table(kernel_opposite),
            derivative: UniformDerivative::new(1),
            inner_fit: grid.decade_len().max(8).min(n),
        }
    }

    fn len(&self) -> usize {
        self.n + 2 * self.pad
    }

    /// Samples of one half on the extended mesh, with the value used for the
    /// analytic closure towards `sigma -> -inf`.
    fn extend(&self, half: &[f64], tail: &[(f64, f64)], rates: &[f64]) -> (Vec<f64>, f64) {
        let n = self.n;
        let left = self.inner_limit(half, rates);
        let mut out = Vec::with_capacity(self.len());
        for k in (1..=self.pad).rev() {
            out.push(left.value(self.s[0] - k as f64 * self.h));
        }
        out.extend_from_slice(half);
        let last = self.s[n - 1];
        for k in 1..=self.pad {
            let sigma = last + k as f64 * self.h;
            out.push(tail.iter().map(|(p, c)| c * (-p * sigma).exp()).sum());
        }
        (out, left.limit)
    }

    /// `p.v. int a(sigma) K(s_i - sigma) + b(sigma) L(s_i - sigma) dsigma` for
    /// grid node `i`, on the extended mesh plus the analytic closures.
    fn pair_sum(
        &self,
        i: usize,
        a: &[f64],
        b: &[f64],
        a_limit: f64,
        b_limit: f64,
        tail: &[(f64, f64, f64)],
    ) -> f64 {
        let len = self.len();
        let ie = i + self.pad;
        let si = self.s[i];
        let ai = a[ie];
        let off = len - 1 + ie;
        let mut acc = 0.0;
        for j in 0..len {
            let d = ie as isize - j as isize;
            let kidx = (off as isize - j as isize) as usize;
            let regular = a[j] * self.smooth_same[kidx] + b[j] * self.smooth_opposite[kidx];
            let subtracted = if d == 0 {
                -self.derivative.at(a, ie, self.h)
            } else {
                (a[j] - ai) / (d as f64 * self.h)
            };
            acc += self.weights[j] * (subtracted + regular);
        }
        acc += ai * ((si - self.sigma_lo) / (self.sigma_hi - si)).ln();
        acc += (a_limit + b_limit) * (self.sigma_lo - si).exp();
        for &(p, ca, cb) in tail {
            let lead = if p == 0.0 {
                if ca == cb {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (cb - ca) * (-p * self.sigma_hi).exp() / p
            };
            acc += lead - (ca + cb) * (si - (p + 1.0) * self.sigma_hi).exp() / (p + 1.0);
        }
        acc
    }

    /// Applies the transform given explicit tail terms `(p, C_minus, C_plus)`.
    /// A zero exponent is accepted only with equal coefficients, which is the
    /// symmetric-truncation limit.
    fn apply_terms(&self, f: &GridFunction, terms: &[(f64, f64, f64)], rates: &[f64]) -> GridFunction {
        let tail_plus: Vec<(f64, f64)> = terms.iter().map(|&(p, _, c)| (p, c)).collect();
        let tail_minus: Vec<(f64, f64)> = terms.iter().map(|&(p, c, _)| (p, c)).collect();
        let (ep, lp) = self.extend(&f.plus, &tail_plus, rates);
        let (em, lm) = self.extend(&f.minus, &tail_minus, rates);
        let swapped: Vec<(f64, f64, f64)> = terms.iter().map(|&(p, cm, cp)| (p, cp, cm)).collect();
        let flipped: Vec<(f64, f64, f64)> = terms.to_vec();
        let inv_pi = core::f64::consts::FRAC_1_PI;
        // x > 0: a = f(+), b = f(-); the tail triples are (p, C_a, C_b).
        let plus = (0..self.n)
            .map(|i| inv_pi * self.pair_sum(i, &ep, &em, lp, lm, &swapped))
            .collect();
        let minus = (0..self.n)
            .map(|i| -inv_pi * self.pair_sum(i, &em, &ep, lm, lp, &flipped))
            .collect();
        GridFunction::from_halves(plus, minus)
    }

    pub fn apply(&self, f: &GridFunction, tail: &TailModel) -> Result<GridFunction> {
        if !(tail.exponent > 0.0) {
            return Err(Error::UnsupportedInput(alloc::format!(
                "Hilbert transform needs a decaying input (tail exponent {})",
                tail.exponent
            )));
        }
        if f.plus.len() != self.n || f.minus.len() != self.n {
            return Err(Error::InconsistentState("function does not match the grid".into()));
        }
        let terms: Vec<(f64, f64, f64)> = tail
            .terms()
            .map(|t| (t.exponent, t.coeff_minus, t.coeff_plus))
            .collect();
        let mut out = self.apply_terms(f, &terms, &tail.inner_rates);
        out.tail_exponent = Some(tail.exponent.min(1.0));
        Ok(out)
    }
}

/// Continuation `f0 + sum_r D_r e^{r (sigma - s_0)}` towards the origin. The
/// coefficients are a least-squares fit with fixed rates, so they depend
/// linearly on the samples and the transform stays linear.
#[derive(Debug, Clone)]
struct InnerLimit {
    limit: f64,
    terms: Vec<(f64, f64)>,
    s0: f64,
}

impl InnerLimit {
    fn value(&self, sigma: f64) -> f64 {
        self.limit
            + self
                .terms
                .iter()
                .map(|(r, d)| d * (r * (sigma - self.s0)).exp())
                .sum::<f64>()
    }
}

impl HilbertOperator {
    fn inner_limit(&self, half: &[f64], rates: &[f64]) -> InnerLimit {
        let s0 = self.s[0];
        let constant = InnerLimit {
            limit: half[0],
            terms: Vec::new(),
            s0,
        };
        if rates.is_empty() {
            return constant;
        }
        let m = self.inner_fit;
        let mut columns = alloc::vec![alloc::vec![1.0; m]];
        columns.extend(
            rates
                .iter()
                .map(|r| self.s[..m].iter().map(|s| (r * (s - s0)).exp()).collect()),
        );
        match least_squares(&columns, &half[..m]) {
            Some(c) => InnerLimit {
                limit: c[0],
                terms: rates.iter().copied().zip(c[1..].iter().copied()).collect(),
                s0,
            },
            None => constant,
        }
    }
}

/// `Hf` on the nodes of `grid`; `tail` describes `f` beyond the outer cutoff.
pub fn hilbert_transform(grid: &Grid, f: &GridFunction, tail: &TailModel) -> Result<GridFunction> {
    HilbertOperator::new(grid).apply(f, tail)
}

/// Largest nodal magnitude of the computed transform of the constant `c`,
/// using symmetric truncation for the non-decaying far field.
pub fn hilbert_of_constant(grid: &Grid, c: f64) -> f64 {
    let op = HilbertOperator::new(grid);
    let n = grid.half_len();
    let f = GridFunction::from_halves(alloc::vec![c; n], alloc::vec![c; n]);
    let hf = op.apply_terms(&f, &[(0.0, c, c)], &[]);
    hf.sup_norm()
}

/// Residual of the identity `H1 = 0` on `grid`.
pub fn check_h1_zero(grid: &Grid) -> f64 {
    hilbert_of_constant(grid, 1.0)
}

// Compile-time guard that the derivative stencil fits in the smallest extension.
const _: () = assert!(FD_POINTS < 64);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::oracle;
    use std::vec::Vec;

    fn grid() -> Grid {
        GridSpec::default().build().unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = grid();
        let f = GridFunction::zeros(&g);
        let hf = hilbert_transform(&g, &f, &TailModel::pure(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(hf.sup_norm(), 0.0);
    }

    #[test]
    fn non_decaying_input_rejected() {
        let g = grid();
        let f = GridFunction::zeros(&g);
        assert!(matches!(
            hilbert_transform(&g, &f, &TailModel::pure(0.0, 1.0, 1.0)),
            Err(Error::UnsupportedInput(_))
        ));
    }

    #[test]
    fn lorentzian_matches_pv_oracle() {
        let g = grid();
        let lorentz = |x: f64| 1.0 / (1.0 + x * x);
        // The oracle is checked against the closed form first.
        let samples: Vec<f64> = (0..20).map(|k| -9.5 + k as f64).collect();
        for &x in &samples {
            let o = oracle::principal_value(&lorentz, x);
            assert!((o - x / (1.0 + x * x)).abs() < 1e-9, "oracle at {x}: {o}");
        }
        let f = GridFunction::from_fn(&g, lorentz);
        let tail = TailModel::fit(&g, &f, &[2.0, 4.0]).unwrap();
        let hf = hilbert_transform(&g, &f, &tail).unwrap();
        for (k, &x) in g.positive().iter().enumerate() {
            if x > 10.0 {
                break;
            }
            let want = x / (1.0 + x * x);
            assert!((hf.plus[k] - want).abs() < 1e-8, "x={x}: {} vs {want}", hf.plus[k]);
            assert!((hf.minus[k] + want).abs() < 1e-8);
        }
        for &x in &samples {
            let got = hf.eval_at(&g, x);
            assert!((got - oracle::principal_value(&lorentz, x)).abs() < 1e-7);
        }
    }

    #[test]
    fn shifted_log_trace_identity() {
        let g = grid();
        let f = GridFunction::from_fn(&g, |x| x.atan() - (0.5 * x).atan());
        let tail = TailModel::fit(&g, &f, &[1.0, 3.0]).unwrap();
        let hf = hilbert_transform(&g, &f, &tail).unwrap();
        let mut err: f64 = 0.0;
        for (k, &x) in g.positive().iter().enumerate() {
            if x > 10.0 {
                break;
            }
            let want = 0.5 * ((x * x + 1.0) / (x * x + 4.0)).ln();
            err = err.max((hf.plus[k] - want).abs()).max((hf.minus[k] - want).abs());
        }
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn constant_transform_vanishes() {
        let g = grid();
        let r = check_h1_zero(&g);
        assert!(r <= 1e-8, "{r}");
        assert!(hilbert_of_constant(&g, 5.0) <= 5e-8);
    }

    #[test]
    fn parity_is_swapped() {
        let g = grid();
        let even = GridFunction::from_fn(&g, |x| (-x * x).exp() + 1.0 / (1.0 + x.powi(4)));
        let tail = TailModel::fit(&g, &even, &[4.0, 8.0]).unwrap();
        let he = hilbert_transform(&g, &even, &tail).unwrap();
        let odd_defect = he
            .plus
            .iter()
            .zip(&he.minus)
            .fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
        assert!(odd_defect < 1e-6);

        let odd = GridFunction::from_fn(&g, |x| x / (1.0 + x * x));
        let tail = TailModel::fit(&g, &odd, &[1.0, 3.0]).unwrap();
        let ho = hilbert_transform(&g, &odd, &tail).unwrap();
        let even_defect = ho
            .plus
            .iter()
            .zip(&ho.minus)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(even_defect < 1e-6);
    }

    #[test]
    fn twice_applied_is_minus_identity() {
        let g = grid();
        let f = GridFunction::from_fn(&g, |x| x * (-x * x).exp());
        let tail = TailModel::fit(&g, &f, &[2.0]).unwrap();
        let hf = hilbert_transform(&g, &f, &tail).unwrap();
        let tail2 = TailModel::fit(&g, &hf, &[2.0, 4.0]).unwrap();
        let hhf = hilbert_transform(&g, &hf, &tail2).unwrap();
        let mut err: f64 = 0.0;
        for (k, &x) in g.positive().iter().enumerate() {
            if x > 10.0 {
                break;
            }
            err = err.max((hhf.plus[k] + f.plus[k]).abs()).max((hhf.minus[k] + f.minus[k]).abs());
        }
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn transform_is_linear() {
        let g = grid();
        let f1 = GridFunction::from_fn(&g, |x| 1.0 / (1.0 + x * x));
        let f2 = GridFunction::from_fn(&g, |x| x / (1.0 + x.powi(4)));
        let t1 = TailModel::pure(2.0, 1.0, 1.0);
        let t2 = TailModel::pure(3.0, -1.0, 1.0);
        let h1 = hilbert_transform(&g, &f1, &t1).unwrap();
        let h2 = hilbert_transform(&g, &f2, &t2).unwrap();
        let sum = f1.combine(2.0, &f2, -3.0);
        let mut tsum = TailModel::pure(2.0, 2.0, 2.0);
        tsum.corrections.push(TailTerm {
            exponent: 3.0,
            coeff_plus: -3.0,
            coeff_minus: 3.0,
        });
        let hs = hilbert_transform(&g, &sum, &tsum).unwrap();
        let expect = h1.combine(2.0, &h2, -3.0);
        assert!(hs.sup_distance(&expect) < 1e-12);
    }
}
