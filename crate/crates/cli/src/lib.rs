//! `nlts-lab`: seeded experiment runner over the `nlts-core` kernels.
//!
//! Every subcommand reads an [`ExperimentConfig`], writes CSV/JSON data files
//! into the output directory and finishes with `manifest.json`, which lists
//! each file with its SHA-256, echoes the resolved config and records wall time.
//! Data files depend only on the config, so reruns are byte-identical.

use std::fmt;
use std::path::Path;

use clap::{Parser, Subcommand};
use nlts_core::LabError;
use serde::Serialize;

pub mod commands;
pub mod config;
pub mod output;

pub use config::{instance_seed, ExperimentConfig, Overrides};
pub use output::{Manifest, MANIFEST_NAME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Validation,
    Resource,
    Internal,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Io => 1,
            ErrorKind::Validation => 2,
            ErrorKind::Resource => 3,
            ErrorKind::Internal => 4,
        }
    }
}

/// Machine-readable failure; printed to stderr as one JSON line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            exit_code: kind.exit_code(),
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Validation, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Internal, message)
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(ErrorKind::Io, format!("{}: {e}", path.display()))
    }

    pub fn record(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        let kind = match &e {
            LabError::Parameter(_) | LabError::Domain(_) | LabError::Parse(_) | LabError::Json(_) => {
                ErrorKind::Validation
            }
            LabError::Resource { .. } => ErrorKind::Resource,
            LabError::Contract(_) => ErrorKind::Internal,
            LabError::Io(_) => ErrorKind::Io,
        };
        CliError::new(kind, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "nlts-lab", version, about = "Seeded experiments on random K-SAT landscapes, CAT Hamiltonians and p-spin models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate random K-SAT formulas (DIMACS + JSON sidecar).
    Gen,
    /// Enumerate assignments violating at most r clauses; emit sets and distance histograms.
    Enumerate,
    /// Test the overlap gap property on each enumerated set.
    Ogp,
    /// Cluster enumerated sets that have the overlap gap property.
    Cluster,
    /// Build the CAT Hamiltonian, its ground state and measurement distribution.
    Hamiltonian,
    /// p-spin models on random regular hypergraphs: ground states and near-ground sets.
    Pspin,
    /// Scan the parameter regime for feasible tuples.
    TheoryScan,
    /// Evaluate the circuit depth lower bound.
    DepthBound,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Enumerate => "enumerate",
            Command::Ogp => "ogp",
            Command::Cluster => "cluster",
            Command::Hamiltonian => "hamiltonian",
            Command::Pspin => "pspin",
            Command::TheoryScan => "theory-scan",
            Command::DepthBound => "depth-bound",
        }
    }
}

/// Run one subcommand with an already resolved config.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Manifest, CliError> {
    let out = cfg
        .run
        .out
        .clone()
        .ok_or_else(|| CliError::validation("an output directory is required (--out)"))?;
    let workers = cfg.run.workers;
    nlts_core::par::with_workers(workers, || commands::dispatch(command, cfg, &out))
}

/// Parse `args` (program name first), resolve the config and run.
pub fn run_from_args<I, T>(args: I) -> Result<Manifest, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::validation(e.to_string()))?;
    let cfg = ExperimentConfig::resolve(&cli.overrides)?;
    run(cli.command, &cfg)
}
