use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use selfsim::commands::{self, ProfileRequest};
use selfsim::config::RunConfig;
use selfsim::error::{ExitStatus, Result};
use selfsim_core::solver::FreeExponent;
use selfsim_core::Normalization;

/// Self-similar corner-crest water waves: solve, verify, export, scan.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for (mu, nu) and write OUT/solution.json.
    Solve(RunArgs),
    /// Rerun every check on an archive.
    Verify {
        archive: PathBuf,
        /// Also write OUT/verification.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export profile tables, Z(alpha, t) tables and an SVG from an archive.
    Profile {
        archive: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Times for the Z(alpha, t) tables (repeatable).
        #[arg(long = "t", num_args = 1)]
        t: Vec<f64>,
        /// Surface tension coefficient; adds the crossover table.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, value_parser = parse_normalization)]
        normalization: Option<Normalization>,
    },
    /// Solve every pair of MUS x NUS concurrently and tabulate.
    Scan {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [0.75, 1.0, 1.5])]
        mus: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.25, 0.4])]
        nus: Vec<f64>,
    },
}

/// Run settings. Flags override the config file, which overrides defaults.
#[derive(Args, Clone)]
struct RunArgs {
    /// JSON file with the same keys as these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<f64>,
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    /// Mesh points per decade.
    #[arg(long)]
    ppd: Option<usize>,
    /// Residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, value_parser = parse_normalization)]
    normalization: Option<Normalization>,
    /// Adjust this exponent onto the curve where fixed points exist.
    #[arg(long, value_parser = parse_free)]
    select: Option<FreeExponent>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "t", num_args = 1)]
    t: Vec<f64>,
}

fn parse_normalization(s: &str) -> std::result::Result<Normalization, String> {
    s.parse().map_err(|e: selfsim_core::Error| e.to_string())
}

fn parse_free(s: &str) -> std::result::Result<FreeExponent, String> {
    match s {
        "mu" => Ok(FreeExponent::Mu),
        "nu" => Ok(FreeExponent::Nu),
        other => Err(format!("expected mu or nu, got '{other}'")),
    }
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {$(if let Some(v) = self.$f.clone() { c.$f = v; })*};
        }
        take!(mu, nu, ppd, tol, damping, max_iters, normalization, out);
        if self.x_min.is_some() {
            c.x_min = self.x_min;
        }
        if self.x_max.is_some() {
            c.x_max = self.x_max;
        }
        if self.select.is_some() {
            c.select = self.select;
        }
        if self.sigma.is_some() {
            c.sigma = self.sigma;
        }
        if !self.t.is_empty() {
            c.t = self.t.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<ExitStatus> {
    let mut log = std::io::stdout();
    match cli.command {
        Command::Solve(args) => commands::cmd_solve(&args.resolve()?, &mut log),
        Command::Verify { archive, out } => commands::cmd_verify(&archive, out.as_deref(), &mut log),
        Command::Profile {
            archive,
            out,
            t,
            sigma,
            normalization,
        } => {
            let times = if t.is_empty() { RunConfig::default().t } else { t };
            commands::cmd_profile(
                &ProfileRequest {
                    archive,
                    out,
                    times,
                    sigma,
                    normalization,
                },
                &mut log,
            )
        }
        Command::Scan { run, mus, nus } => commands::cmd_scan(&run.resolve()?, &mus, &nus, &mut log),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ExitStatus::Usage.code() as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(s) => ExitCode::from(s.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status().code() as u8)
        }
    }
}
