//! Reconstruction of the physical wave from a solved system: tangent angle
//! `b`, interface `zeta`, Taylor coefficient `a`, velocity `W`, acceleration
//! `U`, and the space-time fields `Z(alpha, t) = t zeta(alpha / t)`.
//!
//! The similarity variable is sampled on the image `beta_j = h^-1(x_j)` of the
//! x-grid, so derivatives in `beta` are pushforwards of derivatives in
//! `s = ln|x|`: `d/dbeta = (x (h^-1)'(x))^-1 d/ds`.
//!
//! Near the crest the tangent angle differs from its corner limit by a tiny
//! `psi = b - b(0)`. The interface is assembled as
//! `zeta = e^{i theta0} (beta + Y)` with `Y = int_0^beta (e^{i psi} - 1)`, and
//! the velocity as `W = e^{i theta0} (Y - beta (e^{i psi} - 1))`, which is
//! `zeta - beta zeta'` without the cancellation of two `O(beta)` terms.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{least_squares, line_fit, log_log_fit};
use crate::grid::{integrate_from_infinity, integrate_from_zero, integrate_from_zero_complex, Grid, GridFunction};
use crate::interp::{Barycentric, UniformDerivative};
use crate::system::{Parameters, SystemState};

/// How the additive constant of the tangent angle is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `b(0) = (1 - nu) pi / 2`, which makes the crest symmetric about the
    /// vertical axis.
    #[default]
    Symmetric,
    /// `b(+inf) = 0`.
    Asymptotic,
}

impl core::str::FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(Self::Symmetric),
            "asymptotic" => Ok(Self::Asymptotic),
            other => Err(Error::Parameter(alloc::format!(
                "unknown normalization '{other}' (expected symmetric or asymptotic)"
            ))),
        }
    }
}

/// The stationary profile in the similarity variable `beta = alpha / t`.
///
/// All fields are sampled at `beta_j = h^-1(x_j)`, split into halves like the
/// x-grid they come from.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    grid: Grid,
    pub params: Parameters,
    pub normalization: Normalization,
    pub kappa: f64,
    pub beta: GridFunction,
    /// Tangent angle without the corner jump.
    pub b: GridFunction,
    /// `b - b(0)`, accurate also where it is tiny.
    pub psi: GridFunction,
    pub b_prime: GridFunction,
    pub b_second: GridFunction,
    /// Distance to the limiting angle: `b(+inf) - b` for `beta > 0` and
    /// `b - b(-inf)` for `beta < 0`.
    pub b_to_limit: GridFunction,
    pub zeta: GridFunction<Complex64>,
    /// Unit tangent `e^{i (b + phi chi)}`, `chi` the indicator of `beta > 0`.
    pub zeta_prime: GridFunction<Complex64>,
    /// `beta^2 b'`.
    pub a: GridFunction,
    pub w: GridFunction<Complex64>,
    pub u: GridFunction<Complex64>,
    /// Downward turn of the tangent at the crest, `(nu - 1) pi`.
    pub phi: f64,
    pub b_at_zero: f64,
    y: GridFunction<Complex64>,
    /// `d beta / ds = x (h^-1)'(x)`, `x` signed.
    dbeta_ds: GridFunction,
    log_beta: [Vec<f64>; 2],
    log_a: [Vec<f64>; 2],
    interp: Barycentric,
}

/// Profile quantities at one value of `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub zeta: Complex64,
    pub zeta_prime: Complex64,
    pub w: Complex64,
    pub a: f64,
}

const PLUS: usize = 0;
const MINUS: usize = 1;

fn halves<T>(f: &GridFunction<T>) -> [&Vec<T>; 2] {
    [&f.plus, &f.minus]
}

fn from_sides<T: Copy>(mut side: impl FnMut(usize) -> Vec<T>) -> GridFunction<T> {
    let plus = side(PLUS);
    let minus = side(MINUS);
    GridFunction::from_halves(plus, minus)
}

/// `e^{i x} - 1` without cancellation for small `x`.
fn expm1_i(x: f64) -> Complex64 {
    let s = (0.5 * x).sin();
    Complex64::new(-2.0 * s * s, x.sin())
}

/// `int_0^beta (e^{i psi} - 1) dbeta'` for `psi ~ psi_b (beta'/beta)^p`,
/// to third order in `psi_b`.
fn corner_offset(beta: f64, psi: f64, p: f64) -> Complex64 {
    let i1 = Complex64::new(0.0, psi / (p + 1.0));
    let i2 = -psi * psi / (2.0 * (2.0 * p + 1.0));
    let i3 = Complex64::new(0.0, -psi * psi * psi / (6.0 * (3.0 * p + 1.0)));
    (i1 + i2 + i3) * beta
}

/// Reconstructs the profile from the intermediate quantities of `T[g]`.
pub fn reconstruct_profile(
    grid: &Grid,
    state: &SystemState,
    params: &Parameters,
    normalization: Normalization,
) -> Result<WaveProfile> {
    let n = grid.half_len();
    let xs = grid.positive();
    let beta = state.hinv.clone();
    let increasing = beta.plus.windows(2).all(|w| w[0] < w[1]) && beta.plus[0] > 0.0;
    let decreasing = beta.minus.windows(2).all(|w| w[0] > w[1]) && beta.minus[0] < 0.0;
    if !increasing || !decreasing {
        return Err(Error::Inversion("h^-1 is not strictly monotone on the grid".into()));
    }
    let kappa = state.kappa;
    let nu = params.nu();
    let mu = params.mu();
    let phi = params.phi();
    let b_at_zero = match normalization {
        Normalization::Symmetric => -0.5 * phi,
        Normalization::Asymptotic => state.f_at_zero,
    };
    let theta0 = [b_at_zero + phi, b_at_zero];
    let sign = [1.0, -1.0];

    let from_zero = integrate_from_zero(grid, &state.density)?;
    let psi = from_zero.map(|v| kappa * v);
    let b = psi.map(|v| b_at_zero + v);
    let b_to_limit = integrate_from_infinity(grid, &state.density)?.map(|v| kappa * v);

    let hp = halves(&state.hinv_prime);
    let q = halves(&state.density);
    let bt = halves(&beta);
    let b_prime = from_sides(|k| q[k].iter().zip(hp[k]).map(|(d, h)| kappa * d / h).collect());
    let a = from_sides(|k| {
        (0..n)
            .map(|j| kappa * bt[k][j] / (sign[k] * xs[j] * hp[k][j] * hp[k][j]))
            .collect()
    });
    // d beta / ds = x (h^-1)'(x) with x signed
    let dbeta_ds = from_sides(|k| (0..n).map(|j| sign[k] * xs[j] * hp[k][j]).collect());
    let d1 = UniformDerivative::new(1);
    let h = grid.log_step();
    let bp = halves(&b_prime);
    let b_second = from_sides(|k| {
        let lnb: Vec<f64> = bp[k].iter().map(|v| v.ln()).collect();
        let slope = d1.apply(&lnb, h);
        (0..n)
            .map(|j| bp[k][j] * slope[j] / dbeta_ds.values_half(k)[j])
            .collect()
    });

    let ps = halves(&psi);
    let zeta_prime = from_sides(|k| {
        ps[k]
            .iter()
            .map(|p| Complex64::from_polar(1.0, theta0[k] + p))
            .collect()
    });
    let mut integrand = from_sides(|k| {
        (0..n)
            .map(|j| expm1_i(ps[k][j]) * hp[k][j])
            .collect::<Vec<Complex64>>()
    });
    integrand.zero_exponent = Some(-nu);
    integrand.tail_exponent = Some(1.0 - mu);
    let p_inner = 1.0 / nu - 2.0;
    let closure = |k: usize| corner_offset(bt[k][0], ps[k][0], p_inner);
    let y = integrate_from_zero_complex(grid, &integrand, (closure(MINUS), closure(PLUS)));
    let ys = halves(&y);
    let rot = theta0.map(|t| Complex64::from_polar(1.0, t));
    let zeta = from_sides(|k| (0..n).map(|j| rot[k] * (bt[k][j] + ys[k][j])).collect());
    let w = from_sides(|k| {
        (0..n)
            .map(|j| rot[k] * (ys[k][j] - expm1_i(ps[k][j]) * bt[k][j]))
            .collect()
    });
    let av = halves(&a);
    let zp = halves(&zeta_prime);
    let u = from_sides(|k| (0..n).map(|j| Complex64::i() * av[k][j] * zp[k][j]).collect());

    let log_beta = [PLUS, MINUS].map(|k| bt[k].iter().map(|v| v.abs().ln()).collect());
    let log_a = [PLUS, MINUS].map(|k| av[k].iter().map(|v| v.ln()).collect());
    Ok(WaveProfile {
        grid: grid.clone(),
        params: *params,
        normalization,
        kappa,
        beta,
        b,
        psi,
        b_prime,
        b_second,
        b_to_limit,
        zeta,
        zeta_prime,
        a,
        w,
        u,
        phi,
        b_at_zero,
        y,
        dbeta_ds,
        log_beta,
        log_a,
        interp: grid.interpolator(),
    })
}

trait HalfAccess<T> {
    fn values_half(&self, k: usize) -> &[T];
}

impl<T> HalfAccess<T> for GridFunction<T> {
    fn values_half(&self, k: usize) -> &[T] {
        if k == PLUS {
            &self.plus
        } else {
            &self.minus
        }
    }
}

impl WaveProfile {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Tangent angles just left and right of the crest, `(theta(0-), theta(0+))`.
    pub fn tangent_limits(&self) -> (f64, f64) {
        (self.b_at_zero, self.b_at_zero + self.phi)
    }

    /// `(b(-inf), b(+inf))` from the profile's own angle and tail closures.
    pub fn limiting_angles(&self) -> (f64, f64) {
        let n = self.grid.half_len() - 1;
        (
            self.b.minus[n] - self.b_to_limit.minus[n],
            self.b.plus[n] + self.b_to_limit.plus[n],
        )
    }

    /// `b(+inf) - b(-inf)`.
    pub fn total_turning(&self) -> f64 {
        let (lo, hi) = self.limiting_angles();
        hi - lo
    }

    /// Angle between the two branches leaving the crest, measured from the
    /// innermost chords `zeta(beta_0)` on each side.
    pub fn corner_angle(&self) -> f64 {
        let r = self.zeta.plus[0];
        let l = self.zeta.minus[0];
        let c = (r * l.conj()).re / (r.norm() * l.norm());
        c.clamp(-1.0, 1.0).acos()
    }

    /// Largest `| |zeta'| - 1 |` over the nodes.
    pub fn unit_speed_defect(&self) -> f64 {
        self.zeta_prime
            .values()
            .iter()
            .fold(0.0f64, |m, z| m.max((z.norm() - 1.0).abs()))
    }

    /// Largest excess of a chord over its arclength,
    /// `max(|zeta(beta_{j+1}) - zeta(beta_j)| - |beta_{j+1} - beta_j|, 0)`,
    /// relative to the arclength; also across the crest.
    pub fn chord_excess(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut check = |z1: Complex64, z0: Complex64, b1: f64, b0: f64| {
            let arc = (b1 - b0).abs();
            worst = worst.max(((z1 - z0).norm() - arc) / arc);
        };
        for k in [PLUS, MINUS] {
            let z = self.zeta.values_half(k);
            let b = self.beta.values_half(k);
            for j in 1..z.len() {
                check(z[j], z[j - 1], b[j], b[j - 1]);
            }
        }
        check(self.zeta.plus[0], self.zeta.minus[0], self.beta.plus[0], self.beta.minus[0]);
        worst.max(0.0)
    }

    /// `max_j |zeta(-beta_j) + conj(zeta(beta_j))|`, zero for a crest
    /// symmetric about the vertical axis. Only meaningful when the nodes pair
    /// up, i.e. `h^-1` is odd.
    pub fn reflection_defect(&self) -> f64 {
        self.zeta
            .plus
            .iter()
            .zip(&self.zeta.minus)
            .fold(0.0f64, |m, (p, q)| m.max((q + p.conj()).norm()))
    }

    /// `max_j |beta_j^+ + beta_j^-|`.
    pub fn beta_asymmetry(&self) -> f64 {
        self.beta
            .plus
            .iter()
            .zip(&self.beta.minus)
            .fold(0.0f64, |m, (p, q)| m.max((p + q).abs()))
    }

    /// Sup distance between `U = i a zeta'` and `-beta W'(beta)` with `W'`
    /// from finite differences.
    pub fn acceleration_consistency(&self) -> f64 {
        let d1 = UniformDerivative::new(1);
        let h = self.grid.log_step();
        let mut worst: f64 = 0.0;
        for k in [PLUS, MINUS] {
            let dw = d1.apply(self.w.values_half(k), h);
            let ds = self.dbeta_ds(k);
            for j in 0..dw.len() {
                let via_w = -self.beta.values_half(k)[j] * dw[j] / ds[j];
                worst = worst.max((via_w - self.u.values_half(k)[j]).norm());
            }
        }
        worst
    }

    /// `sup_j |beta^2 zeta'' - i a zeta'|` with `zeta''` from finite
    /// differences of the stored unit tangent.
    pub fn beta_form_residual(&self) -> f64 {
        let d1 = UniformDerivative::new(1);
        let h = self.grid.log_step();
        let mut worst: f64 = 0.0;
        for k in [PLUS, MINUS] {
            let zp = self.zeta_prime.values_half(k);
            let dz = d1.apply(zp, h);
            let ds = self.dbeta_ds(k);
            for j in 0..dz.len() {
                let b = self.beta.values_half(k)[j];
                let lhs = dz[j] * (b * b / ds[j]);
                let rhs = Complex64::i() * self.a.values_half(k)[j] * zp[j];
                worst = worst.max((lhs - rhs).norm());
            }
        }
        worst
    }

    fn dbeta_ds(&self, k: usize) -> &[f64] {
        self.dbeta_ds.values_half(k)
    }

    /// Profile quantities at `beta`.
    pub fn sample(&self, beta: f64) -> ProfileSample {
        self.sample_near(beta, beta)
    }

    /// Like [`WaveProfile::sample`], but the interpolation window is the one
    /// for `anchor`, so all samples sharing an anchor lie on one smooth
    /// interpolant. Finite differences need that.
    pub fn sample_near(&self, beta: f64, anchor: f64) -> ProfileSample {
        if beta == 0.0 {
            let (l, r) = self.tangent_limits();
            return ProfileSample {
                zeta: Complex64::new(0.0, 0.0),
                zeta_prime: Complex64::from_polar(1.0, 0.5 * (l + r)),
                w: Complex64::new(0.0, 0.0),
                a: 0.0,
            };
        }
        let k = if beta > 0.0 { PLUS } else { MINUS };
        let anchor = if anchor.signum() == beta.signum() { anchor } else { beta };
        let lb = &self.log_beta[k];
        let n = lb.len();
        let target = beta.abs().ln();
        let theta0 = if k == PLUS { self.b_at_zero + self.phi } else { self.b_at_zero };
        let rot = Complex64::from_polar(1.0, theta0);
        if target < lb[0] {
            let p = 1.0 / self.params.nu() - 2.0;
            let r = beta / self.beta.values_half(k)[0];
            let psi = self.psi.values_half(k)[0] * r.powf(p);
            let y = corner_offset(beta, psi, p);
            return ProfileSample {
                zeta: rot * (beta + y),
                zeta_prime: rot * Complex64::from_polar(1.0, psi),
                w: rot * (y - expm1_i(psi) * beta),
                a: self.a.values_half(k)[0] * r.abs().powf(1.0 / self.params.nu() - 1.0),
            };
        }
        if target > lb[n - 1] {
            return self.sample_far(k, beta);
        }
        let s = self.locate(k, target, anchor);
        let s_anchor = self.locate(k, anchor.abs().ln().clamp(lb[0], lb[n - 1]), anchor);
        let ev = |v: &[f64]| self.interp.eval_anchored(v, s, s_anchor);
        let psi = ev(self.psi.values_half(k));
        let y = self.interp.eval_anchored(self.y.values_half(k), s, s_anchor);
        let w = self.interp.eval_anchored(self.w.values_half(k), s, s_anchor);
        ProfileSample {
            zeta: rot * (beta + y),
            zeta_prime: rot * Complex64::from_polar(1.0, psi),
            w,
            a: ev(&self.log_a[k]).exp(),
        }
    }

    /// Solves `ln|beta(s)| = target` on the interpolant of half `k`.
    fn locate(&self, k: usize, target: f64, anchor: f64) -> f64 {
        let lb = &self.log_beta[k];
        let n = lb.len();
        let j = lb.partition_point(|v| *v <= target).clamp(1, n - 1) - 1;
        let s_nodes = self.grid.log_nodes();
        let ja = lb
            .partition_point(|v| *v <= anchor.abs().ln())
            .clamp(1, n - 1)
            - 1;
        let s_anchor = s_nodes[ja] + 0.5 * self.grid.log_step();
        let (mut lo, mut hi) = (s_nodes[j], s_nodes[j + 1]);
        if target == lb[j] {
            return lo;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.interp.eval_anchored(lb, mid, s_anchor) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Beyond the last node: the angle approaches its limit like
    /// `|beta|^{1/mu - 2}` and `a` grows like `|beta|^{1/mu - 1}`.
    fn sample_far(&self, k: usize, beta: f64) -> ProfileSample {
        let n = self.grid.half_len() - 1;
        let mu = self.params.mu();
        let q = 1.0 / mu - 2.0;
        let bn = self.beta.values_half(k)[n];
        let r = beta / bn;
        let d = self.b_to_limit.values_half(k)[n];
        let (lo, hi) = self.limiting_angles();
        let (theta_inf, sigma) = if k == PLUS { (hi + self.phi, -1.0) } else { (lo, 1.0) };
        let rot = Complex64::from_polar(1.0, theta_inf);
        let grow = if (q + 1.0).abs() < 1e-12 {
            r.ln()
        } else {
            (r.powf(q + 1.0) - 1.0) / (q + 1.0)
        };
        let zeta = self.zeta.values_half(k)[n]
            + rot * bn * Complex64::new(r - 1.0, sigma * d * grow);
        let zeta_prime = Complex64::from_polar(1.0, theta_inf + sigma * d * r.powf(q));
        ProfileSample {
            zeta,
            zeta_prime,
            w: zeta - zeta_prime * beta,
            a: self.a.values_half(k)[n] * r.powf(1.0 / mu - 1.0),
        }
    }

    /// Nodes of the positive half with `lo <= beta <= hi`.
    fn window(&self, lo: f64, hi: f64) -> Result<core::ops::Range<usize>> {
        let b = &self.beta.plus;
        let n = b.len();
        if b[0] > lo || b[n - 1] < hi {
            return Err(Error::Window(alloc::format!(
                "profile covers beta in [{:.3e}, {:.3e}], need [{lo:.0e}, {hi:.0e}]",
                b[0],
                b[n - 1]
            )));
        }
        let start = b.partition_point(|v| *v < lo);
        let end = b.partition_point(|v| *v <= hi);
        Ok(start..end)
    }
}

/// Space-time wave `Z(alpha, t) = t zeta(alpha / t)`.
#[derive(Debug, Clone)]
pub struct SelfSimilarWave {
    pub profile: WaveProfile,
}

/// Fields of the wave at one point of space-time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub z: Complex64,
    /// `Z_t(alpha, t) = W(alpha / t)`.
    pub velocity: Complex64,
    /// `A(alpha, t) = a(alpha / t) / t`.
    pub a: f64,
}

impl SelfSimilarWave {
    pub fn new(profile: WaveProfile) -> Self {
        Self { profile }
    }

    pub fn evaluate(&self, alpha: f64, t: f64) -> Result<SpacetimePoint> {
        self.evaluate_near(alpha, t, alpha / t)
    }

    fn evaluate_near(&self, alpha: f64, t: f64, anchor: f64) -> Result<SpacetimePoint> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(alloc::format!("time must be positive, got {t}")));
        }
        let s = self.profile.sample_near(alpha / t, anchor);
        Ok(SpacetimePoint {
            z: s.zeta * t,
            velocity: s.w,
            a: s.a / t,
        })
    }

    /// `|sigma zeta' t^-2 b''| / |t^-1 U|`, the size of a surface-tension term
    /// relative to the acceleration, at the grid node `j` of the positive half.
    pub fn tension_ratio_at(&self, j: usize, sigma: f64, t: f64) -> f64 {
        let p = &self.profile;
        sigma * p.b_second.plus[j].abs() / (t * p.a.plus[j])
    }
}

/// `(Z, W, A)` at `(alpha, t)`.
pub fn evaluate_spacetime(wave: &SelfSimilarWave, alpha: f64, t: f64) -> Result<(Complex64, Complex64, f64)> {
    let p = wave.evaluate(alpha, t)?;
    Ok((p.z, p.velocity, p.a))
}

/// Outcome of [`check_pde_residual`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeResidual {
    pub step: f64,
    /// `sup |Z_tt - i A Z_alpha| / sup |Z_tt|` at `step`.
    pub relative: f64,
    /// Order of the finite differences estimated from the step ladder
    /// `4 step0, 2 step0, step0, step0 / 2` with `step0` below.
    pub observed_order: f64,
    pub ladder_step: f64,
    /// `sup |beta^2 zeta'' - i a zeta'|` on the nodes.
    pub beta_form: f64,
}

/// Default sample set: `t` in `{1/2, 1, 2}` and `beta = alpha / t` in
/// `+-{0.05, 0.2, 1, 5, 20}`.
pub fn default_pde_samples() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        for b in [0.05, 0.2, 1.0, 5.0, 20.0] {
            out.push((b * t, t));
            out.push((-b * t, t));
        }
    }
    out
}

/// Checks `Z_tt = i A Z_alpha` by centred differences of the reconstructed
/// wave at the sample points `(alpha, t)`.
pub fn check_pde_residual(wave: &SelfSimilarWave, samples: &[(f64, f64)], step: f64) -> Result<PdeResidual> {
    let ladder_step = 2e-3;
    let defect = |alpha: f64, t: f64, d: f64| -> Result<(Complex64, Complex64)> {
        let anchor = alpha / t;
        let at = |a: f64, tt: f64| wave.evaluate_near(a, tt, anchor);
        let c = at(alpha, t)?;
        let ztt = (at(alpha, t + d)?.z - c.z * 2.0 + at(alpha, t - d)?.z) / (d * d);
        let za = (at(alpha + d, t)?.z - at(alpha - d, t)?.z) / (2.0 * d);
        Ok((ztt, ztt - Complex64::i() * c.a * za))
    };
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    let mut diffs = [0.0f64; 3];
    for &(alpha, t) in samples {
        if alpha.abs() < 8.0 * ladder_step || t < 8.0 * ladder_step {
            return Err(Error::Domain(alloc::format!(
                "sample ({alpha}, {t}) is too close to the crest or to t = 0"
            )));
        }
        let (ztt, r) = defect(alpha, t, step)?;
        num = num.max(r.norm());
        den = den.max(ztt.norm());
        let ladder: Vec<Complex64> = [4.0, 2.0, 1.0, 0.5]
            .iter()
            .map(|m| defect(alpha, t, m * ladder_step).map(|v| v.1))
            .collect::<Result<_>>()?;
        for k in 0..3 {
            diffs[k] = diffs[k].max((ladder[k] - ladder[k + 1]).norm());
        }
    }
    let observed_order = 0.5 * ((diffs[0] / diffs[1]).log2() + (diffs[1] / diffs[2]).log2());
    Ok(PdeResidual {
        step,
        relative: num / den,
        observed_order,
        ladder_step,
        beta_form: wave.profile.beta_form_residual(),
    })
}

/// A fitted log-log slope next to its asymptotic prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub quantity: String,
    pub window: (f64, f64),
    pub fitted: f64,
    pub predicted: f64,
    /// The prediction is only an upper bound on the size of the quantity, so
    /// only one direction of deviation counts.
    pub one_sided: bool,
}

impl ExponentFit {
    /// Error relative to `max(|predicted|, 1)`: a vanishing exponent is
    /// compared in absolute terms.
    pub fn relative_error(&self) -> f64 {
        (self.fitted - self.predicted).abs() / self.predicted.abs().max(1.0)
    }

    /// Whether the fit agrees with the prediction within `tol` (relative).
    /// One-sided fits towards the origin may be steeper, fits towards infinity
    /// may decay faster.
    pub fn agrees(&self, tol: f64) -> bool {
        if !self.one_sided {
            return self.relative_error() <= tol;
        }
        let slack = tol * self.predicted.abs().max(1.0);
        if self.window.1 <= 1.0 {
            self.fitted >= self.predicted - slack
        } else {
            self.fitted <= self.predicted + slack
        }
    }
}

pub const INNER_WINDOW: (f64, f64) = (1e-3, 1e-1);
pub const OUTER_WINDOW: (f64, f64) = (1e1, 1e3);

/// Log-log slopes of `b'`, `|b''|` and `x = h(beta)` over the inner and
/// outer windows of the positive half.
pub fn asymptotic_exponents(profile: &WaveProfile) -> Result<Vec<ExponentFit>> {
    let mut out = exponents_in_window(profile, INNER_WINDOW)?;
    out.extend(exponents_in_window(profile, OUTER_WINDOW)?);
    Ok(out)
}

/// The three slopes over one window of `beta > 0`. Windows ending below 1 are
/// compared with the crest exponents, the others with the far-field ones.
pub fn exponents_in_window(profile: &WaveProfile, window: (f64, f64)) -> Result<Vec<ExponentFit>> {
    let inner = window.1 <= 1.0;
    let inv = if inner { 1.0 / profile.params.nu() } else { 1.0 / profile.params.mu() };
    let range = profile.window(window.0, window.1)?;
    let b = &profile.beta.plus[range.clone()];
    let fit = |name: &str, v: &[f64], predicted: f64, one_sided: bool| -> Result<ExponentFit> {
        let f = log_log_fit(b, v).ok_or_else(|| Error::Window(alloc::format!("too few points for {name}")))?;
        Ok(ExponentFit {
            quantity: name.into(),
            window,
            fitted: f.slope,
            predicted,
            one_sided,
        })
    };
    let side = if inner { "inner" } else { "outer" };
    Ok(alloc::vec![
        fit(&alloc::format!("b' {side}"), &profile.b_prime.plus[range.clone()], inv - 3.0, false)?,
        fit(&alloc::format!("|b''| {side}"), &profile.b_second.plus[range.clone()], inv - 4.0, true)?,
        fit(&alloc::format!("h {side}"), &profile.grid.positive()[range], inv, false)?,
    ])
}

/// Growth class of the velocity as `beta -> inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityRegime {
    /// `mu < 1`: `|W| ~ beta^{1/mu - 1}`.
    Growing,
    /// `mu = 1`: `W ~ -i c ln beta`.
    Logarithmic,
    /// `mu > 1`: `W` stays bounded.
    Bounded,
}

impl VelocityRegime {
    pub fn of(params: &Parameters) -> Self {
        let mu = params.mu();
        if (mu - 1.0).abs() < 1e-9 {
            Self::Logarithmic
        } else if mu < 1.0 {
            Self::Growing
        } else {
            Self::Bounded
        }
    }
}

/// Far-field behaviour of the velocity and of the tangent angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityReport {
    pub regime: VelocityRegime,
    /// Direction `-i e^{i (mu - 1) pi / 2}`, rotated by the normalization
    /// offset when the angle is not normalized symmetrically.
    pub predicted_direction: (f64, f64),
    /// Direction of `W(beta_2) - W(beta_1)` over the last decade of the window.
    pub observed_direction: (f64, f64),
    pub direction_error_deg: f64,
    /// `Growing`: exponent of `W - W(1) ~ A beta^p + B` along the predicted
    /// direction.
    pub growth_exponent: Option<f64>,
    pub predicted_growth: Option<f64>,
    /// `Logarithmic`: slope of `Im W` against `ln beta` (negative).
    pub log_slope: Option<f64>,
    /// `Logarithmic`: relative change of `sup |Re W|` when the window end doubles.
    /// `Bounded`: relative change of `sup |W|` when the window end doubles.
    pub doubling_drift: Option<f64>,
    /// Log-log slope of `b(inf) - b(beta)`.
    pub b_decay_exponent: f64,
    pub predicted_b_decay: f64,
}

/// Exponent `p` and coefficients of the least-squares fit `y = A x^p + B`.
fn power_with_offset(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let misfit = |p: f64| -> Option<(f64, f64, f64)> {
        let col: Vec<f64> = xs.iter().map(|x| x.powf(p)).collect();
        let ones = alloc::vec![1.0; xs.len()];
        let c = least_squares(&[col.clone(), ones], ys)?;
        let rss = col
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = c[0] * x + c[1] - y;
                r * r
            })
            .sum();
        Some((rss, c[0], c[1]))
    };
    let mut best = (f64::INFINITY, 0.0);
    let mut p = 0.01;
    while p <= 3.0 {
        if let Some((r, _, _)) = misfit(p) {
            if r < best.0 {
                best = (r, p);
            }
        }
        p += 0.01;
    }
    // golden-section refinement around the coarse minimum
    let (mut lo, mut hi) = (best.1 - 0.01, best.1 + 0.01);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if misfit(a)?.0 < misfit(b)?.0 {
            hi = b;
        } else {
            lo = a;
        }
    }
    let p = 0.5 * (lo + hi);
    let (_, a, b) = misfit(p)?;
    Some((p, a, b))
}

fn sample_w(profile: &WaveProfile, range: core::ops::Range<usize>) -> (Vec<f64>, Vec<Complex64>) {
    (profile.beta.plus[range.clone()].to_vec(), profile.w.plus[range].to_vec())
}

/// Velocity trichotomy and angle decay on `beta in [10, 1000]`.
pub fn velocity_asymptotics(profile: &WaveProfile) -> Result<VelocityReport> {
    let mu = profile.params.mu();
    let nu = profile.params.nu();
    let regime = VelocityRegime::of(&profile.params);
    let (lo, hi) = OUTER_WINDOW;
    let range = profile.window(lo, hi)?;
    let wide = profile.window(lo, 2.0 * hi)?;
    let offset = profile.b_at_zero - 0.5 * (1.0 - nu) * PI;
    let predicted = -Complex64::i() * Complex64::from_polar(1.0, 0.5 * (mu - 1.0) * PI + offset);
    let w_at = |beta: f64| profile.sample(beta).w;
    let inc = w_at(hi) - w_at(hi / 10.0);
    let observed = inc / inc.norm();
    let direction_error_deg = (observed * predicted.conj()).arg().abs().to_degrees();

    let (betas, ws) = sample_w(profile, range.clone());
    let w1 = w_at(1.0);
    let mut report = VelocityReport {
        regime,
        predicted_direction: (predicted.re, predicted.im),
        observed_direction: (observed.re, observed.im),
        direction_error_deg,
        growth_exponent: None,
        predicted_growth: None,
        log_slope: None,
        doubling_drift: None,
        b_decay_exponent: 0.0,
        predicted_b_decay: 1.0 / mu - 2.0,
    };
    let sup = |v: &[Complex64], f: &dyn Fn(Complex64) -> f64| v.iter().fold(0.0f64, |m, z| m.max(f(*z)));
    let (_, ws_wide) = sample_w(profile, wide);
    match regime {
        VelocityRegime::Growing => {
            let along: Vec<f64> = ws.iter().map(|w| ((w - w1) * predicted.conj()).re).collect();
            let (p, _, _) = power_with_offset(&betas, &along)
                .ok_or_else(|| Error::NumericalFailure("velocity growth fit failed".into()))?;
            report.growth_exponent = Some(p);
            report.predicted_growth = Some(1.0 / mu - 1.0);
        }
        VelocityRegime::Logarithmic => {
            let rot = predicted.conj() * -Complex64::i();
            let lb: Vec<f64> = betas.iter().map(|b| b.ln()).collect();
            let im: Vec<f64> = ws.iter().map(|w| (w * rot).im).collect();
            let f = line_fit(&lb, &im).ok_or_else(|| Error::NumericalFailure("log fit failed".into()))?;
            report.log_slope = Some(f.slope);
            let re = |z: Complex64| (z * rot).re.abs();
            let a = sup(&ws, &re);
            let b = sup(&ws_wide, &re);
            report.doubling_drift = Some((b - a).abs() / a);
        }
        VelocityRegime::Bounded => {
            let a = sup(&ws, &|z: Complex64| z.norm());
            let b = sup(&ws_wide, &|z: Complex64| z.norm());
            report.doubling_drift = Some((b - a).abs() / a);
        }
    }
    let decay = log_log_fit(&betas, &profile.b_to_limit.plus[range])
        .ok_or_else(|| Error::NumericalFailure("angle decay fit failed".into()))?;
    report.b_decay_exponent = decay.slope;
    Ok(report)
}

/// Where surface tension stops being negligible, for a set of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    pub sigma: f64,
    /// `(t, alpha_c)`: beyond `alpha_c` the tension term is smaller than the
    /// acceleration.
    pub crossings: Vec<(f64, f64)>,
    /// Slope of `ln alpha_c` against `ln t`.
    pub fitted_exponent: f64,
    pub predicted_exponent: f64,
    /// Ratio at `alpha = 10 alpha_c` for the smallest `t`.
    pub ratio_far: f64,
}

/// Locates `alpha_c(t)` on the positive half, where the ratio of the tension
/// term to the acceleration falls through 1 for the last time, and fits
/// `alpha_c ~ t^p`.
pub fn surface_tension_diagnostic(wave: &SelfSimilarWave, sigma: f64, times: &[f64]) -> Result<CrossoverReport> {
    if !(sigma > 0.0) {
        return Err(Error::Domain("surface tension coefficient must be positive".into()));
    }
    if times.len() < 2 || times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("need at least two positive times".into()));
    }
    let p = &wave.profile;
    let n = p.grid.half_len();
    let mut crossings = Vec::new();
    for &t in times {
        let ratio = |j: usize| wave.tension_ratio_at(j, sigma, t);
        let j = (0..n - 1)
            .rev()
            .find(|&j| ratio(j) >= 1.0 && ratio(j + 1) < 1.0)
            .ok_or_else(|| Error::Window(alloc::format!("no tension crossover for t = {t}")))?;
        if j + 1 == n - 1 {
            return Err(Error::Window(alloc::format!("tension crossover for t = {t} at the grid edge")));
        }
        let (l0, l1) = (p.beta.plus[j].ln(), p.beta.plus[j + 1].ln());
        let (r0, r1) = (ratio(j).ln(), ratio(j + 1).ln());
        let lb = l0 - r0 * (l1 - l0) / (r1 - r0);
        crossings.push((t, t * lb.exp()));
    }
    let lt: Vec<f64> = crossings.iter().map(|c| c.0.ln()).collect();
    let la: Vec<f64> = crossings.iter().map(|c| c.1.ln()).collect();
    let fit = line_fit(&lt, &la).ok_or_else(|| Error::NumericalFailure("crossover fit failed".into()))?;
    let (t_small, a_small) = crossings
        .iter()
        .copied()
        .fold((f64::INFINITY, 0.0), |m, c| if c.0 < m.0 { c } else { m });
    let far_beta = 10.0 * a_small / t_small;
    let j = p.beta.plus.partition_point(|b| *b < far_beta).min(n - 1);
    Ok(CrossoverReport {
        sigma,
        crossings,
        fitted_exponent: fit.slope,
        predicted_exponent: 2.0 / 3.0,
        ratio_far: wave.tension_ratio_at(j, sigma, t_small),
    })
}

/// Deviation of `x (conj W o h^-1)'(x) (zeta o h^-1)'(x)` from `i kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImaginaryIdentity {
    /// `sup |E - i kappa| / kappa`.
    pub relative_deviation: f64,
    /// `sup |Re E| / kappa`.
    pub real_part: f64,
}

/// Evaluates the boundary identity with both x-derivatives taken by finite
/// differences of the geometric `W` and `zeta`; `kappa` only enters as the
/// reference value.
pub fn check_pure_imaginary_identity(state: &SystemState, profile: &WaveProfile) -> ImaginaryIdentity {
    let d1 = UniformDerivative::new(1);
    let h = profile.grid.log_step();
    let kappa = state.kappa;
    let mut dev: f64 = 0.0;
    let mut re: f64 = 0.0;
    for k in [PLUS, MINUS] {
        let sign = if k == PLUS { 1.0 } else { -1.0 };
        let wbar: Vec<Complex64> = profile.w.values_half(k).iter().map(|w| w.conj()).collect();
        let dw = d1.apply(&wbar, h);
        let dz = d1.apply(profile.zeta.values_half(k), h);
        for (j, x) in profile.grid.positive().iter().enumerate() {
            // d/dx = (1/x) d/ds, so x * (d/dx)(d/dx) = (d/ds)(d/ds) / x
            let e = dw[j] * dz[j] / (sign * x);
            dev = dev.max((e - Complex64::new(0.0, kappa)).norm() / kappa);
            re = re.max(e.re.abs() / kappa);
        }
    }
    ImaginaryIdentity {
        relative_deviation: dev,
        real_part: re,
    }
}

/// Similarity exponents `s` of `Z(alpha, t) = lambda^-1 Z(lambda alpha, lambda^s t)`
/// admitted by the water-wave equations with the given forces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SimilarityLaw {
    Any,
    Only(f64),
    None,
}

pub fn similarity_law_s(gravity: bool, tension: bool) -> SimilarityLaw {
    match (gravity, tension) {
        (false, false) => SimilarityLaw::Any,
        (true, false) => SimilarityLaw::Only(0.5),
        (false, true) => SimilarityLaw::Only(1.5),
        (true, true) => SimilarityLaw::None,
    }
}
