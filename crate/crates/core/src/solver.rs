//! Fixed-point iteration for `g = T[g]`.
//!
//! Each continuation stage solves `g = lambda T[g]` by damped Picard steps,
//! optionally accelerated by Anderson (secant) mixing, and every iterate is
//! projected back onto the cone of densities whose `G` is even and
//! non-decreasing on `[0, inf)`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::grid::{Grid, GridFunction};
use crate::interp::UniformDerivative;
use crate::system::{big_g_to_g, dilate, estimate_x0, g_to_big_g, Parameters, System, SystemState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Acceleration {
    Off,
    /// Anderson mixing over the last `depth` residual differences.
    SecantMixing { depth: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Picard damping `theta` in `(0, 1]`.
    pub damping: f64,
    /// Target for `|g - T[g]|_inf` at `lambda = 1`.
    pub tol_residual: f64,
    /// Target for intermediate continuation stages.
    pub stage_tol: f64,
    /// Iteration cap per stage.
    pub max_iters: usize,
    /// Increasing, ending at 1. Empty means `{lambda0, (lambda0 + 1)/2, 1}`.
    pub continuation_lambdas: Vec<f64>,
    pub acceleration: Acceleration,
    /// Scale `x0` imposed at `lambda = 1`, where `T` commutes with dilations and
    /// its fixed points form a one-parameter family. `None` leaves it free.
    pub pin_scale: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol_residual: 1e-8,
            stage_tol: 1e-4,
            max_iters: 400,
            continuation_lambdas: Vec::new(),
            acceleration: Acceleration::SecantMixing { depth: 3 },
            pin_scale: Some(1.0),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Parameter(alloc::format!(
                "damping {} outside (0, 1]",
                self.damping
            )));
        }
        if !(self.tol_residual > 0.0) || !(self.stage_tol > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if let Some(x0) = self.pin_scale {
            if !(x0 > 0.0 && x0.is_finite()) {
                return Err(Error::Parameter("pinned scale must be positive".into()));
            }
        }
        if let Acceleration::SecantMixing { depth } = self.acceleration {
            if depth == 0 {
                return Err(Error::Parameter("secant mixing depth must be >= 1".into()));
            }
        }
        let l = &self.continuation_lambdas;
        if !l.is_empty() {
            let sorted = l.windows(2).all(|w| w[0] < w[1]);
            if !sorted || l[0] <= 0.0 || *l.last().unwrap() != 1.0 {
                return Err(Error::Parameter(
                    "continuation lambdas must increase within (0, 1] and end at 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// The continuation sequence actually used for `params`.
    pub fn lambdas(&self, params: &Parameters) -> Vec<f64> {
        if !self.continuation_lambdas.is_empty() {
            return self.continuation_lambdas.clone();
        }
        let l0 = params.lambda0();
        if l0 >= 1.0 {
            alloc::vec![1.0]
        } else {
            alloc::vec![l0, 0.5 * (l0 + 1.0), 1.0]
        }
    }
}

/// Per-stage summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// With a pinned scale: `ln c` where the final iterate satisfies
    /// `T[g](x) = g(c x)` up to the dilation shift. Zero at a fixed point.
    pub scale_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub g: GridFunction,
    pub system: SystemState,
    /// `|g - lambda T[g]|_inf` per iteration, all stages concatenated.
    pub history: Vec<f64>,
    /// `|g|_inf` per iteration.
    pub g_sup_history: Vec<f64>,
    pub stages: Vec<StageReport>,
    /// Largest change any projection made to an iterate.
    pub max_projection_correction: f64,
    /// `scale_drift` of the last stage.
    pub scale_drift: Option<f64>,
}

/// Pool-adjacent-violators: the non-decreasing sequence closest to `v` in
/// the least-squares sense.
pub fn isotonic_regression(v: &[f64]) -> Vec<f64> {
    let mut means: Vec<f64> = Vec::with_capacity(v.len());
    let mut counts: Vec<usize> = Vec::with_capacity(v.len());
    for &x in v {
        means.push(x);
        counts.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let (m2, c2) = (means.pop().unwrap(), counts.pop().unwrap());
            let (m1, c1) = (means.pop().unwrap(), counts.pop().unwrap());
            let c = c1 + c2;
            means.push((m1 * c1 as f64 + m2 * c2 as f64) / c as f64);
            counts.push(c);
        }
    }
    means
        .iter()
        .zip(&counts)
        .flat_map(|(&m, &c)| core::iter::repeat_n(m, c))
        .collect()
}

/// Projection onto the cone: `G` is replaced by the isotonic regression of its
/// even part on `[0, inf)`.
pub fn project_x1(grid: &Grid, g: &GridFunction, params: &Parameters) -> GridFunction {
    let big_g = g_to_big_g(grid, g, params);
    let even: Vec<f64> = big_g
        .plus
        .iter()
        .zip(&big_g.minus)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let mono = isotonic_regression(&even);
    let projected = GridFunction::from_halves(mono.clone(), mono);
    big_g_to_g(grid, &projected, params)
}

/// `sup |x g'(x)|`, differentiating in `ln|x|` with the seven-point stencil.
pub fn check_xgprime_bounded(grid: &Grid, g: &GridFunction) -> f64 {
    let d = UniformDerivative::new(1);
    let h = grid.log_step();
    let a = d.apply(&g.plus, h);
    let b = d.apply(&g.minus, h);
    a.iter().chain(&b).fold(0.0, |m, v| m.max(v.abs()))
}

/// `sup |g'(x)|` over the nodes, from the same log-variable differences.
pub fn sup_gprime(grid: &Grid, g: &GridFunction) -> f64 {
    let d = UniformDerivative::new(1);
    let h = grid.log_step();
    let xs = grid.positive();
    let a = d.apply(&g.plus, h);
    let b = d.apply(&g.minus, h);
    a.iter()
        .chain(&b)
        .zip(xs.iter().chain(xs))
        .fold(0.0, |m, (v, x)| m.max((v / x).abs()))
}

/// Anderson mixing on the fixed-point map `q(g)`, keeping differences of
/// iterates and residuals.
struct Mixer {
    depth: usize,
    prev: Option<(Vec<f64>, Vec<f64>)>,
    dg: VecDeque<Vec<f64>>,
    dr: VecDeque<Vec<f64>>,
}

impl Mixer {
    fn new(depth: usize) -> Self {
        Self {
            depth,
            prev: None,
            dg: VecDeque::new(),
            dr: VecDeque::new(),
        }
    }

    fn reset(&mut self) {
        self.prev = None;
        self.dg.clear();
        self.dr.clear();
    }

    /// Given the iterate `x` and its image `qx`, returns the next iterate.
    fn step(&mut self, x: &[f64], qx: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = qx.iter().zip(x).map(|(a, b)| a - b).collect();
        if let Some((px, pr)) = self.prev.take() {
            self.dg.push_back(x.iter().zip(&px).map(|(a, b)| a - b).collect());
            self.dr.push_back(r.iter().zip(&pr).map(|(a, b)| a - b).collect());
            if self.dg.len() > self.depth {
                self.dg.pop_front();
                self.dr.pop_front();
            }
        }
        self.prev = Some((x.to_vec(), r.clone()));
        let cols: Vec<Vec<f64>> = self.dr.iter().cloned().collect();
        let gamma = match least_squares(&cols, &r) {
            Some(c) if !cols.is_empty() => c,
            _ => return qx.to_vec(),
        };
        let mut out = qx.to_vec();
        for (gk, (dg, dr)) in gamma.iter().zip(self.dg.iter().zip(&self.dr)) {
            for (o, (a, b)) in out.iter_mut().zip(dg.iter().zip(dr)) {
                *o -= gk * (a + b);
            }
        }
        out
    }
}

fn flatten(g: &GridFunction) -> Vec<f64> {
    g.plus.iter().chain(&g.minus).copied().collect()
}

fn unflatten(v: &[f64], n: usize) -> GridFunction {
    GridFunction::from_halves(v[..n].to_vec(), v[n..].to_vec())
}

/// Solves `g = T[g]` starting from `g = 0`.
pub fn solve_fixed_point(params: &Parameters, grid: &Grid, opts: &SolverOptions) -> Result<SolveReport> {
    let system = System::new(grid.clone(), *params);
    solve_with_system(&system, GridFunction::zeros(grid), opts)
}

/// Solves from a given starting density (projected first).
pub fn solve_with_system(system: &System, start: GridFunction, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    let grid = system.grid();
    let params = system.params();
    let mut run = StageRun {
        g: project_x1(grid, &start, params),
        state: system.apply(&project_x1(grid, &start, params))?,
        history: Vec::new(),
        g_sup_history: Vec::new(),
        max_corr: 0.0,
    };
    let lambdas = opts.lambdas(params);
    let mut stages = Vec::new();
    for (stage_idx, &lambda) in lambdas.iter().enumerate() {
        let last = stage_idx + 1 == lambdas.len();
        let tol = if last { opts.tol_residual } else { opts.stage_tol.max(opts.tol_residual) };
        stages.push(run.stage(system, lambda, tol, opts)?);
    }
    let final_residual = run.state.residual_sup;
    let scale_drift = stages.last().and_then(|s| s.scale_drift);
    Ok(SolveReport {
        converged: final_residual <= opts.tol_residual,
        iterations: stages.iter().map(|s| s.iterations).sum(),
        final_residual,
        g: run.g,
        system: run.state,
        history: run.history,
        g_sup_history: run.g_sup_history,
        stages,
        max_projection_correction: run.max_corr,
        scale_drift,
    })
}

/// Solves `g = lambda T[g]` for a single `lambda`, starting from `start`.
/// Returns the best iterate found and its stage summary.
pub fn solve_stage(
    system: &System,
    start: GridFunction,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<(GridFunction, SystemState, StageReport)> {
    opts.validate()?;
    let g = project_x1(system.grid(), &start, system.params());
    let mut run = StageRun {
        state: system.apply(&g)?,
        g,
        history: Vec::new(),
        g_sup_history: Vec::new(),
        max_corr: 0.0,
    };
    let report = run.stage(system, lambda, opts.tol_residual, opts)?;
    Ok((run.g, run.state, report))
}

struct StageRun {
    g: GridFunction,
    state: SystemState,
    history: Vec<f64>,
    g_sup_history: Vec<f64>,
    max_corr: f64,
}

impl StageRun {
    fn stage(&mut self, system: &System, lambda: f64, tol: f64, opts: &SolverOptions) -> Result<StageReport> {
        let grid = system.grid();
        let params = system.params();
        let n = grid.half_len();
        let theta = opts.damping;
        let pin = opts.pin_scale.filter(|_| lambda == 1.0);
        let mut mixer = match opts.acceleration {
            Acceleration::Off => None,
            Acceleration::SecantMixing { depth } => Some(Mixer::new(depth)),
        };
        if let Some(want) = pin {
            let x0 = estimate_x0(grid, &self.state.big_f, params)?;
            self.g = dilate(grid, &self.g, params, x0 / want);
            self.state = system.apply(&self.g)?;
        }
        // the map iterated is g -> image(g); without pinning image = lambda T[g],
        // with pinning it is T[g] dilated back to the pinned scale
        let image_of = |state: &SystemState| -> Result<(GridFunction, Option<f64>)> {
            match pin {
                None => Ok((state.tg.map(|v| lambda * v), None)),
                Some(want) => {
                    let x0 = estimate_x0(grid, &state.big_f, params)?;
                    let next = system.apply(&state.tg)?;
                    let x0_image = estimate_x0(grid, &next.big_f, params)?;
                    let image = dilate(grid, &state.tg, params, x0_image / want);
                    Ok((image, Some((x0 / x0_image).ln())))
                }
            }
        };
        let mut iters = 0;
        let (mut image, mut drift) = image_of(&self.state)?;
        let mut merit = self.g.sup_distance(&image);
        let mut best = (merit, self.g.clone(), self.state.clone(), image.clone(), drift);
        // with pinning the iteration settles on T[g] = g up to a dilation; it
        // is run until that state is resolved well below the target residual
        let merit_tol = if pin.is_some() { 0.01 * tol } else { tol };
        while merit > merit_tol && iters < opts.max_iters {
            let target = self.g.combine(1.0 - theta, &image, theta);
            let picard = project_x1(grid, &target, params);
            let next = match mixer.as_mut() {
                Some(m) => {
                    let mixed = unflatten(&m.step(&flatten(&self.g), &flatten(&picard)), n);
                    let projected = project_x1(grid, &mixed, params);
                    self.max_corr = self.max_corr.max(projected.sup_distance(&mixed));
                    projected
                }
                None => {
                    self.max_corr = self.max_corr.max(picard.sup_distance(&target));
                    picard
                }
            };
            if !next.is_finite() {
                return Err(Error::NumericalFailure("iterate became non-finite".into()));
            }
            self.g = next;
            self.state = system.apply(&self.g)?;
            (image, drift) = image_of(&self.state)?;
            merit = self.g.sup_distance(&image);
            if !merit.is_finite() {
                return Err(Error::NumericalFailure("residual became non-finite".into()));
            }
            self.history.push(stage_residual(&self.g, &self.state.tg, lambda));
            self.g_sup_history.push(self.g.sup_norm());
            iters += 1;
            if merit < best.0 {
                best = (merit, self.g.clone(), self.state.clone(), image.clone(), drift);
            } else if mixer.is_some() && merit > 10.0 * best.0 {
                // mixing went astray: restart from the best iterate
                if let Some(m) = mixer.as_mut() {
                    m.reset();
                }
                merit = best.0;
                self.g = best.1.clone();
                self.state = best.2.clone();
                image = best.3.clone();
                drift = best.4;
            }
        }
        if merit > best.0 {
            self.g = best.1;
            self.state = best.2;
            drift = best.4;
        }
        let residual = stage_residual(&self.g, &self.state.tg, lambda);
        Ok(StageReport {
            lambda,
            iterations: iters,
            residual,
            converged: residual <= tol,
            scale_drift: drift,
        })
    }
}

/// Which exponent `solve_admissible` adjusts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FreeExponent {
    Mu,
    Nu,
}

/// Outcome of `solve_admissible`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleSolve {
    /// Parameters of the last solve, the admissible pair when converged.
    pub params: Parameters,
    pub report: SolveReport,
    /// `(free exponent, scale drift)` for every solve made.
    pub evaluations: Vec<(f64, f64)>,
}

/// For a fixed point of `T` the pinned iteration must end with zero scale
/// drift. Away from isolated exponent pairs it does not, so this adjusts one
/// exponent (starting from `params`) by a safeguarded secant search on the
/// drift until the pinned solve converges.
pub fn solve_admissible(
    params: &Parameters,
    free: FreeExponent,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<AdmissibleSolve> {
    const MAX_SOLVES: usize = 40;
    let opts = SolverOptions {
        continuation_lambdas: alloc::vec![1.0],
        pin_scale: opts.pin_scale.or(Some(1.0)),
        ..opts.clone()
    };
    opts.validate()?;
    let (lo, hi) = match free {
        FreeExponent::Mu => (0.5, 2.0),
        FreeExponent::Nu => (0.0, 0.5),
    };
    let margin = 1e-3;
    let with = |v: f64| match free {
        FreeExponent::Mu => Parameters::new(v, params.nu()),
        FreeExponent::Nu => Parameters::new(params.mu(), v),
    };
    let mut start = GridFunction::zeros(grid);
    let mut evaluations = Vec::new();
    let mut eval = |v: f64, start: &mut GridFunction| -> Result<(Parameters, SolveReport, f64)> {
        let p = with(v)?;
        let report = solve_with_system(&System::new(grid.clone(), p), start.clone(), &opts)?;
        let drift = report
            .scale_drift
            .ok_or_else(|| Error::InconsistentState("pinned solve reported no drift".into()))?;
        *start = report.g.clone();
        evaluations.push((v, drift));
        Ok((p, report, drift))
    };
    let mut v0 = match free {
        FreeExponent::Mu => params.mu(),
        FreeExponent::Nu => params.nu(),
    };
    let (mut p, mut report, mut d0) = eval(v0, &mut start)?;
    // the drift increases with either exponent
    let mut v1 = (v0 - 0.05 * d0.signum()).clamp(lo + margin, hi - margin);
    let mut bracket: Option<((f64, f64), (f64, f64))> = None;
    for _ in 0..MAX_SOLVES {
        if report.converged {
            break;
        }
        let (p1, r1, d1) = eval(v1, &mut start)?;
        (p, report) = (p1, r1);
        if report.converged {
            break;
        }
        if d1.signum() != d0.signum() {
            bracket = Some(((v0, d0), (v1, d1)));
        } else if let Some(((a, da), (b, db))) = bracket {
            // keep the side that still brackets the root
            bracket = Some(if d1.signum() == da.signum() { ((v1, d1), (b, db)) } else { ((a, da), (v1, d1)) });
        }
        let mut next = if d1 != d0 { v1 - d1 * (v1 - v0) / (d1 - d0) } else { v1 };
        match bracket {
            Some(((a, _), (b, _))) => {
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                if !(next > a && next < b) {
                    next = 0.5 * (a + b);
                }
            }
            None => {
                // unbracketed: cap the step so a poor slope cannot leave the window
                let step = (next - v1).clamp(-0.2, 0.2);
                next = (v1 + step).clamp(lo + margin, hi - margin);
            }
        }
        if next == v1 {
            break;
        }
        (v0, d0, v1) = (v1, d1, next);
    }
    Ok(AdmissibleSolve {
        params: p,
        report,
        evaluations,
    })
}

fn stage_residual(g: &GridFunction, tg: &GridFunction, lambda: f64) -> f64 {
    g.plus
        .iter()
        .zip(&tg.plus)
        .chain(g.minus.iter().zip(&tg.minus))
        .fold(0.0, |m, (a, b)| m.max((a - lambda * b).abs()))
}
