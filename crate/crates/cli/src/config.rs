//! Run configuration: a JSON file with the same keys as the flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use selfsim_core::solver::{FreeExponent, SolverOptions};
use selfsim_core::{GridSpec, Normalization, Parameters};

use crate::error::{CliError, Result};

/// Everything a run depends on. Nothing is random, so equal configs give
/// equal outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mu: f64,
    pub nu: f64,
    /// Mesh bounds; `None` takes the span recommended for `(mu, nu)`.
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub ppd: usize,
    pub tol: f64,
    pub damping: f64,
    pub max_iters: usize,
    pub normalization: Normalization,
    /// Move `(mu, nu)` onto the curve where fixed points exist by adjusting
    /// this exponent.
    pub select: Option<FreeExponent>,
    pub out: PathBuf,
    pub sigma: Option<f64>,
    pub t: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverOptions::default();
        Self {
            mu: 1.0,
            nu: 0.25,
            x_min: None,
            x_max: None,
            ppd: GridSpec::default().points_per_decade,
            tol: solver.tol_residual,
            damping: solver.damping,
            max_iters: solver.max_iters,
            normalization: Normalization::Symmetric,
            select: None,
            out: PathBuf::from("out"),
            sigma: None,
            t: vec![0.5, 1.0, 2.0],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Rejects `(mu, nu)` outside the window `1/2 < mu <= 2`, `0 < nu < 1/2`.
    pub fn params(&self) -> Result<Parameters> {
        Parameters::new(self.mu, self.nu).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let rec = self.params()?.recommended_grid();
        let spec = GridSpec {
            x_min: self.x_min.unwrap_or(rec.x_min),
            x_max: self.x_max.unwrap_or(rec.x_max),
            points_per_decade: self.ppd,
        };
        spec.build().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }

    pub fn solver_options(&self) -> Result<SolverOptions> {
        let opts = SolverOptions {
            damping: self.damping,
            tol_residual: self.tol,
            max_iters: self.max_iters,
            ..SolverOptions::default()
        };
        opts.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(opts)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid_spec()?;
        self.solver_options()?;
        if let Some(s) = self.sigma {
            if !s.is_finite() || s <= 0.0 {
                return Err(CliError::Usage(format!("--sigma must be positive, got {s}")));
            }
        }
        if let Some(t) = self.t.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(CliError::Usage(format!("--t values must be positive, got {t}")));
        }
        Ok(())
    }
}
