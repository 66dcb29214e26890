//! Run configuration: an optional JSON file merged under command-line flags.

use std::path::{Path, PathBuf};

use needlet_core::besov::exponent;
use needlet_core::manifold::ManifoldKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Exponent written as a number or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exponent(#[serde(with = "exponent")] pub f64);

impl std::str::FromStr for Exponent {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        exponent::parse(s).map(Exponent)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: Option<ManifoldKind>,
    pub a: Option<f64>,
    pub omega: Option<f64>,
    pub jmax: Option<i32>,
    pub rho: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    pub p: Option<Vec<Exponent>>,
    pub q: Option<Vec<Exponent>>,
    pub seed: Option<u64>,
    /// Multiplies every default upper tolerance.
    pub tol: Option<f64>,
    pub out_dir: Option<PathBuf>,
    /// Echo reports to stdout.
    pub print: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// `flag`, else the config value, else a usage error naming `--name`.
pub fn required<T: Clone>(flag: Option<T>, config: &Option<T>, name: &str) -> Result<T, CliError> {
    flag.or_else(|| config.clone()).ok_or_else(|| CliError::Usage(format!("missing required --{name}")))
}

pub fn or_default<T: Clone>(flag: Option<T>, config: &Option<T>, default: T) -> T {
    flag.or_else(|| config.clone()).unwrap_or(default)
}

/// Checks that a merged value is positive and finite.
pub fn positive(v: f64, name: &str) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be a positive number, got {v}")))
    }
}
