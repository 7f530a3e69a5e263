//! Output directories, tables and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub use fiscal_tiebout_rdd::report::fmt_f64 as num;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Everything needed to reproduce a run; contains no wall-clock data.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    /// `SOURCE_DATE_EPOCH` when set, so the manifest stays reproducible.
    pub source_date_epoch: Option<i64>,
    pub outputs: Vec<OutputFile>,
}

/// Collects the files written by one command.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.retain(|f| f.file != name);
        self.files.push(OutputFile { file: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    /// Writes a CSV table with the given header.
    pub fn table(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.write(name, &bytes)
    }

    pub fn finish(mut self, command: &str, config: &[u8], seed: u64) -> Result<RunManifest> {
        let epoch = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok());
        self.files.sort_by(|a, b| a.file.cmp(&b.file));
        let manifest = RunManifest {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256: sha256_hex(config),
            seed,
            source_date_epoch: epoch,
            outputs: self.files.clone(),
        };
        let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        json.push('\n');
        let path = self.path("manifest.json");
        std::fs::write(&path, json).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(manifest)
    }
}

/// Formats an optional number, leaving the cell empty when absent.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn list(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}
