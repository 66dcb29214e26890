//! Output directory resolution, deterministic writers and input digests.

use std::path::{Path, PathBuf};

use needlet_core::report::{format_float, to_json};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NEEDLETS_OUT_DIR";

pub struct Output {
    dir: PathBuf,
    print: bool,
}

impl Output {
    pub fn new(flag: Option<PathBuf>, config: Option<PathBuf>, print: bool) -> Result<Self, CliError> {
        let dir = flag
            .or(config)
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Output { dir, print })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = to_json(value)?;
        if self.print {
            print!("{text}");
        }
        self.write(name, text.as_bytes())
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.write(name, &bytes)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Float cell for CSV output.
pub fn cell(v: f64) -> String {
    format_float(v)
}

pub fn read_input(path: &Path) -> Result<(String, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let digest = Sha256::digest(text.as_bytes());
    let hex = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok((text, hex))
}
