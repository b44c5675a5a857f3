//! The four subcommands. Each returns its exit status; messages go to the
//! writer passed in so tests can capture them.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use selfsim_core::profile::{asymptotic_exponents, surface_tension_diagnostic};
use selfsim_core::solver::{solve_admissible, solve_fixed_point};
use selfsim_core::system::find_x0;
use selfsim_core::verify::Outcome;
use selfsim_core::{reconstruct_profile, Normalization, SelfSimilarWave, VerificationReport};

use crate::archive::{report_fingerprint, SolutionArchive};
use crate::config::RunConfig;
use crate::error::{CliError, ExitStatus, Result};
use crate::export;

pub const ARCHIVE_NAME: &str = "solution.json";

/// Times for the surface-tension crossover table: three decades.
pub const TENSION_TIMES: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    std::fs::write(path, contents).map_err(CliError::io(path))
}

/// Solves and verifies without touching the filesystem.
pub fn solve(config: &RunConfig) -> Result<SolutionArchive> {
    config.validate()?;
    let params = config.params()?;
    let grid = config.grid_spec()?.build()?;
    let opts = config.solver_options()?;
    // inputs are validated above, so a solver error is a breakdown of the iteration
    let broke = |e: selfsim_core::Error| CliError::NotConverged(format!("solver broke down: {e}"));
    let (params, report) = match config.select {
        Some(free) => {
            let s = solve_admissible(&params, free, &grid, &opts).map_err(broke)?;
            (s.params, s.report)
        }
        None => (params, solve_fixed_point(&params, &grid, &opts).map_err(broke)?),
    };
    SolutionArchive::from_solve(config, params, &grid, &report)
}

pub fn cmd_solve(config: &RunConfig, log: &mut dyn Write) -> Result<ExitStatus> {
    let a = solve(config)?;
    let path = config.out.join(ARCHIVE_NAME);
    a.save(&path)?;
    let _ = writeln!(
        log,
        "(mu, nu) = ({}, {}): residual {:.3e} after {} iterations, kappa {}",
        a.mu, a.nu, a.residual, a.iterations, a.kappa
    );
    if let Some(d) = a.scale_drift {
        let _ = writeln!(log, "scale drift ln c = {d:+.6e}");
    }
    let _ = writeln!(log, "verification {}", a.summary);
    let _ = writeln!(log, "wrote {}", path.display());
    if a.converged {
        Ok(ExitStatus::Success)
    } else {
        let _ = writeln!(
            log,
            "not converged: residual {:.3e} > tol {:.1e}{}",
            a.residual,
            config.tol,
            if a.scale_drift.is_some_and(|d| d.abs() > 1e-6) && config.select.is_none() {
                "; the iteration settled on a dilated copy of its input, try --select mu or --select nu"
            } else {
                ""
            }
        );
        Ok(ExitStatus::NotConverged)
    }
}

pub fn print_report(r: &VerificationReport, log: &mut dyn Write) {
    for c in &r.checks {
        let tag = match &c.outcome {
            Outcome::Pass => "PASS".to_string(),
            Outcome::Fail => "FAIL".to_string(),
            Outcome::Skipped(why) => format!("SKIP ({why})"),
        };
        let _ = writeln!(
            log,
            "{tag:5} {:28} measured {:>13.6e}  target {:>13.6e}  {}{}",
            c.name,
            c.measured,
            c.target,
            c.statement,
            if c.detail.is_empty() { String::new() } else { format!(" [{}]", c.detail) }
        );
    }
    let _ = writeln!(log, "{}", r.summary());
}

/// Reruns every check on an archive. Writes `verification.json` into `out`
/// when given.
pub fn cmd_verify(archive: &Path, out: Option<&Path>, log: &mut dyn Write) -> Result<ExitStatus> {
    let loaded = SolutionArchive::load(archive)?;
    let report = loaded.verify()?;
    print_report(&report, log);
    let same = report_fingerprint(&report) == report_fingerprint(&loaded.archive.verification);
    let _ = writeln!(
        log,
        "stored verification {}",
        if same { "reproduced exactly" } else { "differs from this run" }
    );
    if let Some(dir) = out {
        let path = dir.join("verification.json");
        write_file(&path, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
        let _ = writeln!(log, "wrote {}", path.display());
    }
    Ok(if report.all_passed() {
        ExitStatus::Success
    } else {
        ExitStatus::VerificationFailed
    })
}

/// Options of the `profile` subcommand.
#[derive(Debug, Clone)]
pub struct ProfileRequest {
    pub archive: PathBuf,
    pub out: PathBuf,
    pub times: Vec<f64>,
    pub sigma: Option<f64>,
    pub normalization: Option<Normalization>,
}

/// File name of the `Z(alpha, t)` table for the `k`-th time.
pub fn spacetime_name(k: usize, t: f64) -> String {
    format!("z_{k}_t{t}.csv")
}

pub fn cmd_profile(req: &ProfileRequest, log: &mut dyn Write) -> Result<ExitStatus> {
    let loaded = SolutionArchive::load(&req.archive)?;
    if !loaded.archive.converged {
        return Err(CliError::NotConverged(format!(
            "{} holds an unconverged solve (residual {:.3e})",
            req.archive.display(),
            loaded.archive.residual
        )));
    }
    if let Some(t) = req.times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(CliError::Usage(format!("--t values must be positive, got {t}")));
    }
    let norm = req.normalization.unwrap_or(loaded.archive.config.normalization);
    let state = loaded.state()?;
    let profile = reconstruct_profile(&loaded.grid, &state, &loaded.params, norm)?;
    let out = &req.out;
    write_file(&out.join("profile.csv"), &export::profile_csv(&profile))?;
    write_file(&out.join("profile.svg"), &export::profile_svg(&profile))?;
    let wave = SelfSimilarWave::new(profile);
    for (k, &t) in req.times.iter().enumerate() {
        write_file(&out.join(spacetime_name(k, t)), &export::spacetime_csv(&wave, t)?)?;
    }
    if let Some(sigma) = req.sigma {
        let r = surface_tension_diagnostic(&wave, sigma, &TENSION_TIMES)?;
        write_file(&out.join("tension.csv"), &export::tension_csv(&r))?;
        let _ = writeln!(
            log,
            "surface tension crossover: alpha_c ~ t^{:.4} (expected {:.4})",
            r.fitted_exponent, r.predicted_exponent
        );
    }
    let _ = writeln!(log, "wrote profile exports to {}", out.display());
    Ok(ExitStatus::Success)
}

/// One line of the scan table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub requested: (f64, f64),
    pub solved: (f64, f64),
    pub converged: bool,
    pub kappa: f64,
    pub g_sup: f64,
    pub x0: f64,
    pub scale_drift: Option<f64>,
    pub residual: f64,
    /// Largest relative error among the exponent fits; `None` when not converged.
    pub exponent_error: Option<f64>,
    pub archive: PathBuf,
    pub error: Option<String>,
}

pub const SCAN_COLUMNS: &str =
    "mu,nu,solved_mu,solved_nu,status,kappa,g_sup,x0,scale_drift,residual,max_exponent_error,archive";

impl ScanRow {
    fn failed(requested: (f64, f64), archive: PathBuf, e: &CliError) -> Self {
        Self {
            requested,
            solved: (f64::NAN, f64::NAN),
            converged: false,
            kappa: f64::NAN,
            g_sup: f64::NAN,
            x0: f64::NAN,
            scale_drift: None,
            residual: f64::NAN,
            exponent_error: None,
            archive,
            error: Some(e.to_string()),
        }
    }

    fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let status = match (&self.error, self.converged) {
            (Some(e), _) => format!("error: {}", e.replace([',', '\n'], ";")),
            (None, true) => "converged".into(),
            (None, false) => "not converged".into(),
        };
        format!(
            "{},{},{},{},{status},{},{},{},{},{},{},{}",
            self.requested.0,
            self.requested.1,
            self.solved.0,
            self.solved.1,
            self.kappa,
            self.g_sup,
            self.x0,
            opt(self.scale_drift),
            self.residual,
            opt(self.exponent_error),
            self.archive.display()
        )
    }
}

fn scan_pair(base: &RunConfig, mu: f64, nu: f64) -> ScanRow {
    let dir = base.out.join("scan").join(format!("mu{mu}_nu{nu}"));
    let archive = dir.join(ARCHIVE_NAME);
    let config = RunConfig {
        mu,
        nu,
        out: dir,
        ..base.clone()
    };
    let run = || -> Result<ScanRow> {
        let a = solve(&config)?;
        a.save(&archive)?;
        let loaded = a.clone().rebuild(&archive)?;
        let state = loaded.state()?;
        let x0 = find_x0(&loaded.grid, &state.big_f, &loaded.params).unwrap_or(f64::NAN);
        let exponent_error = if a.converged {
            reconstruct_profile(&loaded.grid, &state, &loaded.params, config.normalization)
                .and_then(|p| asymptotic_exponents(&p))
                .ok()
                .map(|fits| fits.iter().fold(0.0f64, |m, f| m.max(f.relative_error())))
        } else {
            None
        };
        Ok(ScanRow {
            requested: (mu, nu),
            solved: (a.mu, a.nu),
            converged: a.converged,
            kappa: a.kappa,
            g_sup: loaded.g.sup_norm(),
            x0,
            scale_drift: a.scale_drift,
            residual: a.residual,
            exponent_error,
            archive: archive.clone(),
            error: None,
        })
    };
    run().unwrap_or_else(|e| ScanRow::failed((mu, nu), archive.clone(), &e))
}

/// Solves every pair concurrently; failures are recorded, not fatal.
pub fn scan(base: &RunConfig, mus: &[f64], nus: &[f64]) -> Result<Vec<ScanRow>> {
    let pairs: Vec<(f64, f64)> = mus.iter().flat_map(|&m| nus.iter().map(move |&n| (m, n))).collect();
    for &(mu, nu) in &pairs {
        RunConfig { mu, nu, ..base.clone() }.validate()?;
    }
    Ok(pairs.par_iter().map(|&(mu, nu)| scan_pair(base, mu, nu)).collect())
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut s = format!("{SCAN_COLUMNS}\n");
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

pub fn cmd_scan(base: &RunConfig, mus: &[f64], nus: &[f64], log: &mut dyn Write) -> Result<ExitStatus> {
    let rows = scan(base, mus, nus)?;
    let table = scan_csv(&rows);
    let path = base.out.join("scan.csv");
    write_file(&path, &table)?;
    let _ = write!(log, "{table}");
    let _ = writeln!(log, "wrote {}", path.display());
    Ok(if rows.iter().all(|r| r.converged) {
        ExitStatus::Success
    } else {
        ExitStatus::NotConverged
    })
}
