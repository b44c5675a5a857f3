//! Solution archives: one JSON document per solve.
//!
//! Floats are written by `serde_json` in the shortest form that parses back
//! to the same binary64 value, so save -> load -> save is the identity.

use std::path::Path;

use serde::{Deserialize, Serialize};

use selfsim_core::verify::{verify_solution, VerifyOptions};
use selfsim_core::{Grid, GridFunction, GridSpec, Parameters, SolveReport, SystemState, VerificationReport};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const FORMAT: &str = "selfsim-solution";
pub const VERSION: u32 = 1;

/// Bound on `|g - T[g]|_inf` used by the stored verification.
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionArchive {
    pub format: String,
    pub version: u32,
    pub config: RunConfig,
    /// The pair actually solved; differs from the config under `select`.
    pub mu: f64,
    pub nu: f64,
    pub grid: GridSpec,
    /// Positive half of the mesh; the negative half mirrors it.
    pub nodes: Vec<f64>,
    pub g_plus: Vec<f64>,
    pub g_minus: Vec<f64>,
    pub kappa: f64,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `ln c` for a pinned solve that ended on `T[g] = g` dilated by `c`.
    pub scale_drift: Option<f64>,
    pub verification: VerificationReport,
    pub summary: String,
}

/// An archive with its mesh and density rebuilt.
pub struct Loaded {
    pub archive: SolutionArchive,
    pub params: Parameters,
    pub grid: Grid,
    pub g: GridFunction,
}

impl SolutionArchive {
    pub fn from_solve(config: &RunConfig, params: Parameters, grid: &Grid, report: &SolveReport) -> Result<Self> {
        let verification = run_verification(config, grid, &report.g, &params)?;
        Ok(Self {
            format: FORMAT.into(),
            version: VERSION,
            config: config.clone(),
            mu: params.mu(),
            nu: params.nu(),
            grid: grid.spec(),
            nodes: grid.positive().to_vec(),
            g_plus: report.g.plus.clone(),
            g_minus: report.g.minus.clone(),
            kappa: report.system.kappa,
            residual: report.final_residual,
            converged: report.converged,
            iterations: report.iterations,
            scale_drift: report.scale_drift,
            summary: verification.summary(),
            verification,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("archive serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        }
        std::fs::write(path, self.to_json()).map_err(CliError::io(path))
    }

    /// Checks the format tag and version before decoding anything else.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::format(path, format!("not JSON: {e}")))?;
        match value.get("format").and_then(|v| v.as_str()) {
            Some(FORMAT) => {}
            other => {
                return Err(CliError::format(
                    path,
                    format!("not a solution archive (format tag {other:?}, expected {FORMAT:?})"),
                ))
            }
        }
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(VERSION) => {}
            other => {
                return Err(CliError::format(
                    path,
                    format!("archive version {other:?} is not supported (expected {VERSION})"),
                ))
            }
        }
        serde_json::from_value(value).map_err(|e| CliError::format(path, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Loaded> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text, path)?.rebuild(path)
    }

    /// Rebuilds the mesh and checks that it reproduces the stored nodes.
    pub fn rebuild(self, path: &Path) -> Result<Loaded> {
        let params = Parameters::new(self.mu, self.nu).map_err(|e| CliError::format(path, e.to_string()))?;
        let grid = self.grid.build().map_err(|e| CliError::format(path, e.to_string()))?;
        if grid.positive() != self.nodes.as_slice() {
            return Err(CliError::format(path, "stored nodes do not match the stored grid spec"));
        }
        let n = grid.half_len();
        if self.g_plus.len() != n || self.g_minus.len() != n {
            return Err(CliError::format(
                path,
                format!("density has {}/{} values, mesh has {n}", self.g_plus.len(), self.g_minus.len()),
            ));
        }
        let g = GridFunction::from_halves(self.g_plus.clone(), self.g_minus.clone());
        Ok(Loaded {
            archive: self,
            params,
            grid,
            g,
        })
    }
}

impl Loaded {
    pub fn state(&self) -> Result<SystemState> {
        Ok(selfsim_core::apply_t(&self.grid, &self.g, &self.params)?)
    }

    pub fn verify(&self) -> Result<VerificationReport> {
        run_verification(&self.archive.config, &self.grid, &self.g, &self.params)
    }
}

fn run_verification(config: &RunConfig, grid: &Grid, g: &GridFunction, params: &Parameters) -> Result<VerificationReport> {
    let opts = VerifyOptions {
        residual_tol: RESIDUAL_TOL,
        normalization: config.normalization,
        skip_lipschitz: false,
    };
    Ok(verify_solution(grid, g, params, &opts)?)
}

/// Serialized form of a report, for bit-level comparison (NaN compares
/// unequal to itself, its text does not).
pub fn report_fingerprint(r: &VerificationReport) -> String {
    serde_json::to_string(r).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use selfsim_core::solver::{solve_admissible, FreeExponent, SolverOptions};

    fn small() -> (RunConfig, SolutionArchive) {
        let config = RunConfig {
            mu: 0.87,
            nu: 0.25,
            ppd: 16,
            select: Some(FreeExponent::Mu),
            ..RunConfig::default()
        };
        let params = config.params().unwrap();
        let grid = config.grid_spec().unwrap().build().unwrap();
        let sol = solve_admissible(&params, FreeExponent::Mu, &grid, &SolverOptions::default()).unwrap();
        let a = SolutionArchive::from_solve(&config, sol.params, &grid, &sol.report).unwrap();
        (config, a)
    }

    #[test]
    fn save_load_save_is_idempotent_and_verification_reproduces() {
        let (_, a) = small();
        let text = a.to_json();
        let path = Path::new("mem.json");
        let loaded = SolutionArchive::parse(&text, path).unwrap().rebuild(path).unwrap();
        assert_eq!(loaded.archive.to_json(), text);
        let again = loaded.verify().unwrap();
        assert_eq!(report_fingerprint(&again), report_fingerprint(&a.verification));
        assert_eq!(again.summary(), a.summary);
    }

    #[test]
    fn version_mismatch_is_a_format_error() {
        let (_, a) = small();
        let mut v: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        v["version"] = serde_json::json!(VERSION + 1);
        let err = SolutionArchive::parse(&v.to_string(), Path::new("x.json")).err().unwrap();
        assert!(matches!(err, CliError::Format { .. }));
        assert!(err.to_string().contains("version"), "{err}");
        v["version"] = serde_json::json!(VERSION);
        v["format"] = serde_json::json!("something-else");
        assert!(matches!(
            SolutionArchive::parse(&v.to_string(), Path::new("x.json")),
            Err(CliError::Format { .. })
        ));
    }

    #[test]
    fn truncated_density_is_rejected() {
        let (_, mut a) = small();
        a.g_plus.pop();
        assert!(matches!(a.rebuild(Path::new("x.json")), Err(CliError::Format { .. })));
    }

    #[test]
    fn zeroed_density_fails_the_residual_check() {
        let (_, mut a) = small();
        a.g_plus.iter_mut().chain(a.g_minus.iter_mut()).for_each(|v| *v = 0.0);
        let loaded = a.rebuild(Path::new("x.json")).unwrap();
        let r = loaded.verify().unwrap();
        assert!(!r.get("residual").unwrap().passed());
        assert!(!r.all_passed());
    }
}
