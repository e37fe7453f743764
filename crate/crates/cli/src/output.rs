//! Output directory writer and run manifest.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nlts_core::io::{to_json_pretty, CsvTable};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const MANIFEST_SCHEMA: &str = "nlts-lab-manifest v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Wall-clock fields; the only part of a manifest that changes between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub parallel: bool,
    pub subcommand: String,
    pub config: ExperimentConfig,
    pub files: Vec<FileEntry>,
    pub summary: serde_json::Value,
    pub timing: Timing,
}

/// Collects every file written for one run, in write order.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileEntry>,
    started: Instant,
    started_unix_ms: u128,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
            started_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if name == MANIFEST_NAME || self.files.iter().any(|f| f.path == name) {
            return Err(CliError::internal(format!("output {name} written twice")));
        }
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, t: &CsvTable) -> Result<(), CliError> {
        self.write(name, t.render().as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<(), CliError> {
        self.write(name, to_json_pretty(v)?.as_bytes())
    }

    /// Record an already written file (e.g. one produced by a core writer).
    pub fn adopt(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn finish(
        self,
        subcommand: &str,
        config: &ExperimentConfig,
        summary: serde_json::Value,
    ) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            schema: MANIFEST_SCHEMA.into(),
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: nlts_core::VERSION.into(),
            parallel: cfg!(feature = "parallel"),
            subcommand: subcommand.into(),
            config: config.echo(),
            files: self.files,
            summary,
            timing: Timing {
                started_unix_ms: self.started_unix_ms,
                wall_seconds: self.started.elapsed().as_secs_f64(),
            },
        };
        let path = self.dir.join(MANIFEST_NAME);
        std::fs::write(&path, to_json_pretty(&manifest)?).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
