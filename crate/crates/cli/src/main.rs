//! `needlets`: build and verify lattices, cubatures, Parseval frames and Besov
//! norm comparisons from the command line.
//!
//! Exit codes: 0 when every check passes, 1 on a domain error or a failed
//! check, 2 on a usage error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use needlet_core::besov::Family;
use needlet_core::manifold::ManifoldKind;

use config::Exponent;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(needlet_core::Error),
    Io(String),
}

impl From<needlet_core::Error> for CliError {
    fn from(e: needlet_core::Error) -> Self {
        CliError::Domain(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "needlets", version, about = "Band-limited Parseval frames on the circle, torus and sphere")]
pub struct Cli {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $NEEDLETS_OUT_DIR, else the current directory).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Multiplies every default upper tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Also print JSON reports to stdout.
    #[arg(long, global = true)]
    pub print: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Manifold constants.
    #[command(subcommand)]
    Manifold(ManifoldCmd),
    /// Metric lattices.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Positive-weight cubature.
    #[command(subcommand)]
    Cubature(CubatureCmd),
    /// Parseval frames.
    #[command(subcommand)]
    Frame(FrameCmd),
    /// Besov quasi-norms.
    #[command(subcommand)]
    Besov(BesovCmd),
}

#[derive(Subcommand, Debug)]
pub enum ManifoldCmd {
    Info(InfoArgs),
}

#[derive(Subcommand, Debug)]
pub enum LatticeCmd {
    Build(LatticeArgs),
}

#[derive(Subcommand, Debug)]
pub enum CubatureCmd {
    Build(CubatureArgs),
}

#[derive(Subcommand, Debug)]
pub enum FrameCmd {
    /// Build a frame and run every check.
    Build(FrameBuildArgs),
    /// Re-run the checks on a saved archive.
    Verify(FrameVerifyArgs),
    /// Frame coefficients of a function, as CSV `j,k,value`.
    Analyze(AnalyzeArgs),
    /// Function from frame coefficients.
    Synthesize(SynthesizeArgs),
    /// Kernel localization constants across levels.
    Localization(LocalizationArgs),
}

#[derive(Subcommand, Debug)]
pub enum BesovCmd {
    /// Compare the three quasi-norms over function families and scales.
    Compare(CompareArgs),
    /// Estimate smoothness from frame coefficients.
    Estimate(EstimateArgs),
}

#[derive(Args, Debug)]
pub struct InfoArgs {
    #[arg(long)]
    pub manifold: Option<ManifoldKind>,
    /// Report the eigenvalue count up to this bound.
    #[arg(long)]
    pub omega: Option<f64>,
}

#[derive(Args, Debug)]
pub struct LatticeArgs {
    #[arg(long)]
    pub manifold: Option<ManifoldKind>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct CubatureArgs {
    #[arg(long)]
    pub manifold: Option<ManifoldKind>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// Lattice radius; searched automatically when absent.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct FrameBuildArgs {
    #[arg(long)]
    pub manifold: Option<ManifoldKind>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub jmax: Option<i32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random functions for the Parseval and reconstruction checks.
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
}

#[derive(Args, Debug)]
pub struct FrameVerifyArgs {
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub archive: PathBuf,
    /// Function record `{manifold, omega, coeffs}`.
    #[arg(long)]
    pub function: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub archive: PathBuf,
    /// CSV with header `j,k,value`.
    #[arg(long)]
    pub coefficients: PathBuf,
}

#[derive(Args, Debug)]
pub struct LocalizationArgs {
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2])]
    pub levels: Vec<i32>,
    #[arg(long = "n", value_delimiter = ',', default_values_t = [1, 2, 3])]
    pub exponents: Vec<u32>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub manifold: Option<ManifoldKind>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub jmax: Option<i32>,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<Exponent>>,
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<Exponent>>,
    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<Family>>,
    /// Scales J of the family members (default 1..=min(5, J_max)).
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<u32>>,
    /// Any of sequence, approx, lp.
    #[arg(long, value_delimiter = ',', default_values_t = ["sequence".to_string(), "approx".to_string(), "lp".to_string()])]
    pub norms: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Frame archive; built from --manifold/--a/--jmax when absent.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    #[arg(long)]
    pub manifold: Option<ManifoldKind>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub jmax: Option<i32>,
    /// Function record; a planted-decay function is used when absent.
    #[arg(long)]
    pub function: Option<PathBuf>,
    /// Planted smoothness of the generated function.
    #[arg(long, default_value_t = 1.0)]
    pub alpha0: f64,
    #[arg(long, default_value = "2")]
    pub p: Exponent,
    /// Lowest and highest level of the fit, e.g. `2,6`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub levels: Option<Vec<i32>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("needlets: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                _ => 1,
            })
        }
    }
}
