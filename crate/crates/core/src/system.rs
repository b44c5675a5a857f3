//! The nonlinear operator `T` whose fixed point encodes the wave.
//!
//! Given a density `g`, the pipeline is
//!
//! ```text
//! (h^-1)'(x) = |x|^{nu-1} (x^2+1)^{(mu-nu)/2} e^{g(x)}
//! h^-1(x)    = int_0^x (h^-1)'
//! F'(x)      = kappa / (x h^-1(x) (h^-1)'(x)),    int F' = (mu-nu) pi
//! F(inf) = 0,  F(-inf) = -(mu-nu) pi
//! f          = F - (mu-nu) arg(x - i)
//! T[g]       = H f
//! ```
//!
//! where `arg(x - i) = atan(x) - pi/2` runs continuously from `-pi` to `0`.
//! `F` is never formed by subtracting two large numbers: on each half-line it
//! is accumulated from the nearer infinity, and `f` is assembled from the tail
//! integral and `atan(1/|x|)` directly.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{half_line_totals, integrate_from_infinity, integrate_from_zero, Grid, GridFunction, GridSpec};
use crate::hilbert::{HilbertOperator, TailModel};

/// The exponent pair `(mu, nu)`: the crest has interior angle `nu pi` and the
/// two branches meet at infinity with angle `mu pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParameters", into = "RawParameters")]
pub struct Parameters {
    mu: f64,
    nu: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParameters {
    mu: f64,
    nu: f64,
}

impl TryFrom<RawParameters> for Parameters {
    type Error = Error;
    fn try_from(raw: RawParameters) -> Result<Self> {
        Parameters::new(raw.mu, raw.nu)
    }
}

impl From<Parameters> for RawParameters {
    fn from(p: Parameters) -> Self {
        Self { mu: p.mu, nu: p.nu }
    }
}

impl Parameters {
    /// Accepts `1/2 < mu <= 2` and `0 < nu < 1/2`.
    pub fn new(mu: f64, nu: f64) -> Result<Self> {
        if !(mu > 0.5 && mu <= 2.0) {
            return Err(Error::Parameter(alloc::format!(
                "mu = {mu} outside the admissible window 1/2 < mu <= 2"
            )));
        }
        if !(nu > 0.0 && nu < 0.5) {
            return Err(Error::Parameter(alloc::format!(
                "nu = {nu} outside the admissible window 0 < nu < 1/2"
            )));
        }
        Ok(Self { mu, nu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `mu - nu`.
    pub fn spread(&self) -> f64 {
        self.mu - self.nu
    }

    /// Downward turn of the tangent at the crest, `(nu - 1) pi`.
    pub fn phi(&self) -> f64 {
        (self.nu - 1.0) * PI
    }

    /// Total increase of the tangent angle along the interface, `(mu - nu) pi`.
    pub fn turning(&self) -> f64 {
        self.spread() * PI
    }

    /// Largest continuation parameter for which the uniform a priori bound on
    /// `g = lambda T[g]` is available.
    pub fn lambda0(&self) -> f64 {
        let d = 2.0 * self.spread();
        ((1.0 - 2.0 * self.nu) / d).min((2.0 * self.mu - 1.0) / d).min(1.0)
    }

    /// `(1/2)(mu - nu) ln(x^2 + 1)`, the part of `G = g + ...` carried by the ansatz.
    pub fn log_weight(&self, x: f64) -> f64 {
        0.5 * self.spread() * (x * x).ln_1p()
    }

    /// Decay exponents of the remainder `f` at infinity (leading first).
    pub fn remainder_tail_exponents(&self) -> Vec<f64> {
        let a = 2.0 * self.mu - 1.0;
        let (lo, hi) = if a < 1.0 { (a, 1.0) } else { (1.0, a) };
        let mut out = alloc::vec![lo];
        if hi - lo > 0.05 {
            out.push(hi);
        } else {
            out.push(lo + 1.0);
        }
        out
    }

    /// A mesh wide enough that the image `beta = h^-1(x)` covers
    /// `|beta| in [1e-4, 1e4]`, which contains both asymptotic fit windows with
    /// a decade of margin. Never narrower than the default mesh.
    pub fn recommended_grid(&self) -> GridSpec {
        let base = GridSpec::default();
        let by_corner = (1e-4 * self.nu * (-2.0f64).exp()).powf(1.0 / self.nu);
        let by_inner_fit = 10f64.powf(-4.0 / (1.0 - 2.0 * self.nu));
        let by_far = 100.0 * 1e4f64.powf(1.0 / self.mu);
        GridSpec {
            x_min: base.x_min.min(by_corner).min(by_inner_fit),
            x_max: base.x_max.max(by_far),
            points_per_decade: base.points_per_decade,
        }
    }
}

/// Everything computed along the way from `g` to `T[g]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub g: GridFunction,
    pub hinv_prime: GridFunction,
    pub hinv: GridFunction,
    pub kappa: f64,
    /// `F' / kappa = 1 / (x h^-1 (h^-1)')`.
    pub density: GridFunction,
    #[serde(rename = "F")]
    pub big_f: GridFunction,
    pub f: GridFunction,
    pub tg: GridFunction,
    pub residual_sup: f64,
    /// `F(0+)`, from the closure of the density integral at the origin.
    pub f_at_zero: f64,
    /// `F(0+) - F(0-)`; zero up to rounding by construction of `kappa`.
    pub matching_defect: f64,
}

/// `(h^-1)'` on the grid.
pub fn eval_hinv_prime(grid: &Grid, g: &GridFunction, params: &Parameters) -> GridFunction {
    let (mu, nu) = (params.mu, params.nu);
    g.map_with_x(grid, |x, gv| {
        let ax = x.abs();
        ax.powf(nu - 1.0) * (x * x + 1.0).powf(0.5 * (mu - nu)) * gv.exp()
    })
    .with_zero_exponent(nu - 1.0)
    .with_tail_exponent(1.0 - mu)
}

/// `h^-1 = int_0^x (h^-1)'`.
pub fn eval_hinv(grid: &Grid, hinv_prime: &GridFunction) -> Result<GridFunction> {
    let mut out = integrate_from_zero(grid, hinv_prime)?;
    out.tail_exponent = hinv_prime.tail_exponent.map(|p| p - 1.0);
    if !out.plus.windows(2).all(|w| w[0] < w[1]) || !out.minus.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::NumericalFailure("h^-1 is not strictly increasing".into()));
    }
    Ok(out)
}

/// `1 / (x h^-1 (h^-1)')`, with its exponents `-2 nu` at the origin and
/// `2 mu` at infinity.
pub fn turning_density(
    grid: &Grid,
    hinv: &GridFunction,
    hinv_prime: &GridFunction,
    params: &Parameters,
) -> GridFunction {
    let xs = grid.positive();
    let side = |h: &[f64], hp: &[f64], sign: f64| -> Vec<f64> {
        xs.iter()
            .zip(h)
            .zip(hp)
            .map(|((x, hv), hpv)| 1.0 / (sign * x * hv * hpv))
            .collect()
    };
    GridFunction::from_halves(
        side(&hinv.plus, &hinv_prime.plus, 1.0),
        side(&hinv.minus, &hinv_prime.minus, -1.0),
    )
    .with_zero_exponent(-2.0 * params.nu)
    .with_tail_exponent(2.0 * params.mu)
}

/// The constant making the total increase of `F` equal to `(mu - nu) pi`.
pub fn eval_kappa(
    grid: &Grid,
    hinv: &GridFunction,
    hinv_prime: &GridFunction,
    params: &Parameters,
) -> Result<f64> {
    let q = turning_density(grid, hinv, hinv_prime, params);
    let (a, b) = half_line_totals(grid, &q)?;
    let total = a + b;
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InconsistentState(alloc::format!(
            "turning integral {total} is not positive"
        )));
    }
    Ok(params.turning() / total)
}

/// `F` and the decaying remainder `f = F - (mu - nu) arg(x - i)`, plus
/// `F(0+)` and the defect `F(0+) - F(0-)`.
pub fn eval_f_and_remainder(
    grid: &Grid,
    kappa: f64,
    density: &GridFunction,
    params: &Parameters,
) -> Result<(GridFunction, GridFunction, f64, f64)> {
    let tails = integrate_from_infinity(grid, density)?;
    let (inner_minus, inner_plus) = crate::grid::inner_closures(grid, density)?;
    let c = params.spread();
    let xs = grid.positive();
    let big_plus: Vec<f64> = tails.plus.iter().map(|r| -kappa * r).collect();
    let big_minus: Vec<f64> = tails.minus.iter().map(|r| -params.turning() + kappa * r).collect();
    let f_plus: Vec<f64> = tails
        .plus
        .iter()
        .zip(xs)
        .map(|(r, x)| -kappa * r + c * (1.0 / x).atan())
        .collect();
    let f_minus: Vec<f64> = tails
        .minus
        .iter()
        .zip(xs)
        .map(|(r, x)| kappa * r - c * (1.0 / x).atan())
        .collect();
    let at_zero_plus = -kappa * (tails.plus[0] + inner_plus);
    let at_zero_minus = -params.turning() + kappa * (tails.minus[0] + inner_minus);
    let big_f = GridFunction::from_halves(big_plus, big_minus);
    let mut f = GridFunction::from_halves(f_plus, f_minus);
    f.tail_exponent = Some(params.remainder_tail_exponents()[0]);
    let nondecreasing = big_f.values().windows(2).all(|w| w[1] >= w[0] - 1e-12);
    if !nondecreasing {
        return Err(Error::NumericalFailure("F is not non-decreasing".into()));
    }
    Ok((big_f, f, at_zero_plus, at_zero_plus - at_zero_minus))
}

/// `F` alone.
pub fn eval_big_f(
    grid: &Grid,
    kappa: f64,
    hinv: &GridFunction,
    hinv_prime: &GridFunction,
    params: &Parameters,
) -> Result<GridFunction> {
    let q = turning_density(grid, hinv, hinv_prime, params);
    Ok(eval_f_and_remainder(grid, kappa, &q, params)?.0)
}

/// `T` bound to one grid and parameter pair, with the transform tables cached.
#[derive(Debug, Clone)]
pub struct System {
    params: Parameters,
    grid: Grid,
    hilbert: HilbertOperator,
}

impl System {
    pub fn new(grid: Grid, params: Parameters) -> Self {
        let hilbert = HilbertOperator::new(&grid);
        Self {
            params,
            grid,
            hilbert,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn hilbert(&self) -> &HilbertOperator {
        &self.hilbert
    }

    /// Full evaluation of `T[g]` with intermediates.
    pub fn apply(&self, g: &GridFunction) -> Result<SystemState> {
        if !g.is_finite() {
            return Err(Error::NumericalFailure("non-finite density".into()));
        }
        let grid = &self.grid;
        let params = &self.params;
        let hinv_prime = eval_hinv_prime(grid, g, params);
        let hinv = eval_hinv(grid, &hinv_prime)?;
        let density = turning_density(grid, &hinv, &hinv_prime, params);
        let (a, b) = half_line_totals(grid, &density)?;
        let total = a + b;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InconsistentState(alloc::format!(
                "turning integral {total} is not positive"
            )));
        }
        let kappa = params.turning() / total;
        let (big_f, f, f_at_zero, matching_defect) = eval_f_and_remainder(grid, kappa, &density, params)?;
        let lead = 1.0 - 2.0 * params.nu();
        let tail = TailModel::fit(grid, &f, &params.remainder_tail_exponents())?
            .with_inner_rates(&[lead, 1.0, 2.0 * lead]);
        let tg = self.hilbert.apply(&f, &tail)?;
        if !tg.is_finite() {
            return Err(Error::NumericalFailure("non-finite T[g]".into()));
        }
        let residual_sup = g.sup_distance(&tg);
        Ok(SystemState {
            g: g.clone(),
            hinv_prime,
            hinv,
            kappa,
            density,
            big_f,
            f,
            tg,
            residual_sup,
            f_at_zero,
            matching_defect,
        })
    }
}

/// One-shot evaluation of `T[g]`.
pub fn apply_t(grid: &Grid, g: &GridFunction, params: &Parameters) -> Result<SystemState> {
    System::new(grid.clone(), *params).apply(g)
}

/// The scale `x0 > 0` at which `F(x0) - F(-x0) = (1/2 - nu) pi`, by bisection
/// in `ln x` to relative precision `1e-13`.
pub fn find_x0(grid: &Grid, big_f: &GridFunction, params: &Parameters) -> Result<f64> {
    let target = (0.5 - params.nu) * PI;
    let defect = |x: f64| big_f.eval_at(grid, x) - big_f.eval_at(grid, -x) - target;
    let xs = grid.positive();
    let k = xs
        .iter()
        .zip(big_f.plus.iter().zip(&big_f.minus))
        .position(|(_, (a, b))| a - b >= target)
        .ok_or_else(|| Error::InconsistentState("F(x) - F(-x) never reaches (1/2 - nu) pi".into()))?;
    if k == 0 {
        return Err(Error::InconsistentState(
            "F(x) - F(-x) exceeds (1/2 - nu) pi already at the inner cutoff".into(),
        ));
    }
    let (mut lo, mut hi) = (xs[k - 1].ln(), xs[k].ln());
    if defect(lo.exp()) > 0.0 || defect(hi.exp()) < 0.0 {
        return Err(Error::InconsistentState("x0 bracket lost after interpolation".into()));
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if defect(mid.exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// `find_x0`, continued beyond the grid with the leading power laws of
/// `F(x) - F(-x)`: `x^(1 - 2 nu)` towards the origin and a remainder of order
/// `x^(1 - 2 mu)` towards infinity. Iterates far from a fixed point can put
/// their scale outside the grid.
pub fn estimate_x0(grid: &Grid, big_f: &GridFunction, params: &Parameters) -> Result<f64> {
    if let Ok(x0) = find_x0(grid, big_f, params) {
        return Ok(x0);
    }
    let target = (0.5 - params.nu) * PI;
    let xs = grid.positive();
    let n = xs.len();
    let inner = big_f.plus[0] - big_f.minus[0];
    let outer = params.turning() - (big_f.plus[n - 1] - big_f.minus[n - 1]);
    let x0 = if inner >= target && inner > 0.0 {
        xs[0] * (target / inner).powf(1.0 / (1.0 - 2.0 * params.nu))
    } else if outer > 0.0 {
        xs[n - 1] * ((params.mu - 0.5) * PI / outer).powf(1.0 / (1.0 - 2.0 * params.mu))
    } else {
        f64::NAN
    };
    if x0.is_finite() && x0 > 0.0 {
        Ok(x0)
    } else {
        Err(Error::InconsistentState("no scale x0 can be assigned to F".into()))
    }
}

/// The density describing the same wave in the conformal coordinate
/// `x -> x0 x`: `G(x) -> G(x0 x) - (mu - nu) ln x0`. `T` commutes with this
/// map, so it moves along the family of fixed points.
pub fn dilate(grid: &Grid, g: &GridFunction, params: &Parameters, x0: f64) -> GridFunction {
    let mut src = g.clone();
    src.zero_exponent = Some(0.0);
    src.tail_exponent = g.fit_tail_exponent(grid).filter(|p| *p > 0.0);
    let shift = params.spread() * x0.ln();
    g.map_with_x(grid, |x, _| {
        let y = x0 * x;
        src.eval_at(grid, y) + params.log_weight(y) - params.log_weight(x) - shift
    })
}

/// `G = g + (1/2)(mu - nu) ln(x^2 + 1)`.
pub fn g_to_big_g(grid: &Grid, g: &GridFunction, params: &Parameters) -> GridFunction {
    g.map_with_x(grid, |x, v| v + params.log_weight(x))
}

/// Inverse of [`g_to_big_g`].
pub fn big_g_to_g(grid: &Grid, big_g: &GridFunction, params: &Parameters) -> GridFunction {
    big_g.map_with_x(grid, |x, v| v - params.log_weight(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn quarter() -> Parameters {
        Parameters::new(1.0, 0.25).unwrap()
    }

    fn grid() -> Grid {
        GridSpec::default().build().unwrap()
    }

    /// `h^-1(x)` for `g = 0`, `mu = 1`, `nu = 1/4`, by substitution `x = t^4`.
    fn hinv_oracle(x: f64) -> f64 {
        if x <= 1.0 {
            let t = x.powf(0.25);
            oracle::integrate(&|u: f64| 4.0 * (u.powi(8) + 1.0).powf(0.375), 0.0, t, 1e-15)
        } else {
            hinv_oracle(1.0) + far_increment(1.0 / x)
        }
    }

    /// `int_1^{1/u} (h^-1)' dx = int_u^1 v^-2 (1 + v^2)^{3/8} dv`, with the
    /// `1/v^2` part taken analytically.
    fn far_increment(u: f64) -> f64 {
        let smooth = oracle::integrate(
            &|v: f64| ((1.0 + v * v).powf(0.375) - 1.0) / (v * v),
            u,
            1.0,
            1e-15,
        );
        1.0 / u - 1.0 + smooth
    }

    /// `(int_0^1 q, int_1^inf q)` for `q = 1 / (x h^-1 (h^-1)')`.
    fn turning_integral_oracle() -> (f64, f64) {
        let inner = oracle::integrate(
            &|t: f64| {
                let h = hinv_oracle(t.powi(4));
                4.0 * t * t / (h * (t.powi(8) + 1.0).powf(0.375))
            },
            0.0,
            1.0,
            1e-11,
        );
        let h1 = hinv_oracle(1.0);
        let outer = oracle::integrate(
            &|u: f64| {
                let h = h1 + far_increment(u);
                1.0 / (u * h * (1.0 + u * u).powf(0.375))
            },
            0.0,
            1.0,
            1e-11,
        );
        (inner, outer)
    }

    #[test]
    fn window_is_enforced() {
        assert!(Parameters::new(0.4, 0.25).is_err());
        assert!(Parameters::new(1.0, 0.5).is_err());
        assert!(Parameters::new(2.0, 0.1).is_ok());
        assert!(Parameters::new(2.01, 0.1).is_err());
        assert!(Parameters::new(1.0, 0.0).is_err());
    }

    #[test]
    fn derived_constants() {
        let p = quarter();
        assert!((p.lambda0() - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.phi() + 0.75 * PI).abs() < 1e-15);
        assert!((p.turning() - 0.75 * PI).abs() < 1e-15);
        for &(mu, nu) in &[(0.51, 0.01), (2.0, 0.49), (1.5, 0.1), (0.75, 0.4)] {
            let p = Parameters::new(mu, nu).unwrap();
            assert!(p.phi() > -PI && p.phi() < -0.5 * PI);
            assert!(p.lambda0() > 0.0 && p.lambda0() <= 1.0);
        }
    }

    #[test]
    fn hinv_prime_at_one() {
        let g = grid();
        let hp = eval_hinv_prime(&g, &GridFunction::zeros(&g), &quarter());
        assert!((hp.eval_at(&g, 1.0) - 2f64.powf(0.375)).abs() < 1e-10);
        let shifted = eval_hinv_prime(&g, &GridFunction::from_fn(&g, |_| 0.3), &quarter());
        for (a, b) in hp.plus.iter().zip(&shifted.plus) {
            assert!((b / a - 0.3f64.exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn hinv_near_origin_and_oddness() {
        let g = grid();
        let hp = eval_hinv_prime(&g, &GridFunction::zeros(&g), &quarter());
        let h = eval_hinv(&g, &hp).unwrap();
        let v = h.eval_at(&g, 1e-4);
        // 4 (1e-4)^{1/4}
        assert!((v / 0.4 - 1.0).abs() < 5e-3);
        let want = hinv_oracle(1e-4);
        assert!((v / want - 1.0).abs() < 1e-8, "{v} vs {want}");
        let want1 = hinv_oracle(1.0);
        assert!((h.eval_at(&g, 1.0) / want1 - 1.0).abs() < 1e-8);
        for (a, b) in h.plus.iter().zip(&h.minus) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn kappa_and_f_match_oracle() {
        let g = grid();
        let p = quarter();
        let (inner, outer) = turning_integral_oracle();
        let kappa_oracle = p.turning() / (2.0 * (inner + outer));
        let hp = eval_hinv_prime(&g, &GridFunction::zeros(&g), &p);
        let h = eval_hinv(&g, &hp).unwrap();
        let kappa = eval_kappa(&g, &h, &hp, &p).unwrap();
        assert!((kappa / kappa_oracle - 1.0).abs() < 1e-6, "{kappa} vs {kappa_oracle}");
        let big_f = eval_big_f(&g, kappa, &h, &hp, &p).unwrap();
        let f1 = big_f.eval_at(&g, 1.0);
        let f1_oracle = -kappa_oracle * outer;
        assert!((f1 - f1_oracle).abs() < 1e-6, "{f1} vs {f1_oracle}");
    }

    #[test]
    fn kappa_scales_with_constant_shift() {
        let g = grid();
        let p = quarter();
        let k = |c: f64| {
            let hp = eval_hinv_prime(&g, &GridFunction::from_fn(&g, |_| c), &p);
            let h = eval_hinv(&g, &hp).unwrap();
            eval_kappa(&g, &h, &hp, &p).unwrap()
        };
        let ratio = k(0.4) / k(0.0);
        assert!((ratio / (0.8f64).exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn even_input_gives_symmetric_f() {
        let g = grid();
        let p = quarter();
        let state = apply_t(&g, &GridFunction::zeros(&g), &p).unwrap();
        let half = -0.5 * p.turning();
        assert!((state.f_at_zero - half).abs() < 1e-12);
        // generic extrapolation from the grid agrees to the size of its
        // sqrt-type correction model
        assert!((state.big_f.eval_at(&g, 1e-12) - half).abs() < 1e-5);
        for k in 0..g.half_len() {
            let sum = state.big_f.plus[k] + state.big_f.minus[k];
            assert!((sum + p.turning()).abs() < 1e-10);
            let span = (state.big_f.plus[k] - state.big_f.minus[k]) / PI;
            assert!(span >= 0.0 && span <= p.spread() + 1e-12);
        }
        assert!(state.matching_defect.abs() < 1e-12);
        // the G-part of T[g] is even
        let tg_big = g_to_big_g(&g, &state.tg, &p);
        let odd = tg_big
            .plus
            .iter()
            .zip(&tg_big.minus)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(odd < 1e-6, "{odd}");
    }

    #[test]
    fn recommended_grid_reaches_small_scales() {
        let p = quarter();
        let spec = p.recommended_grid();
        assert!(spec.x_min <= 1e-16);
        assert!(spec.x_max >= 1e6);
        let wide = Parameters::new(0.75, 0.4).unwrap().recommended_grid();
        assert!(wide.x_max > 1e6);
    }

    #[test]
    fn t_commutes_with_dilation() {
        let grid = GridSpec::default().build().unwrap();
        let p = Parameters::new(1.0, 0.25).unwrap();
        let sys = System::new(grid.clone(), p);
        let g = GridFunction::from_fn(&grid, |x| 0.3 / (1.0 + x * x) + 0.2 * x * x / (1.0 + x * x).powi(2));
        let base = sys.apply(&g).unwrap();
        for c in [0.5, 2.0] {
            let moved = sys.apply(&dilate(&grid, &g, &p, c)).unwrap();
            let want = dilate(&grid, &base.tg, &p, c);
            assert!(moved.tg.sup_distance(&want) < 1e-6);
            let x0 = find_x0(&grid, &base.big_f, &p).unwrap();
            let x0_moved = find_x0(&grid, &moved.big_f, &p).unwrap();
            assert!((x0_moved * c / x0 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn x0_solves_its_equation() {
        let grid = GridSpec::default().build().unwrap();
        let p = Parameters::new(1.0, 0.25).unwrap();
        let s = apply_t(&grid, &GridFunction::zeros(&grid), &p).unwrap();
        let x0 = find_x0(&grid, &s.big_f, &p).unwrap();
        let lhs = s.big_f.eval_at(&grid, x0) - s.big_f.eval_at(&grid, -x0);
        assert!((lhs - PI / 4.0).abs() < 1e-8);
        assert_eq!(estimate_x0(&grid, &s.big_f, &p).unwrap(), x0);
    }
}
