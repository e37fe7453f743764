//! Experiment configuration: a TOML file with `[run]`, `[model]`, `[analysis]`
//! and `[caps]` sections, overridden by environment variables (caps only) and
//! command-line flags, in that order.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use nlts_core::landscape::EnumerationConfig;
use nlts_core::theory::LogBase;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub model: ModelSection,
    pub analysis: AnalysisSection,
    pub caps: Caps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Master seed; instance `i` uses [`instance_seed`]`(seed, i)`.
    pub seed: Option<u64>,
    /// Explicit per-instance seeds; takes precedence over `seed`.
    pub seeds: Option<Vec<u64>>,
    pub instances: usize,
    /// `None` uses every available core.
    pub workers: Option<usize>,
    /// DIMACS file to analyse instead of generating formulas.
    pub input: Option<PathBuf>,
    /// Not echoed in manifests.
    pub out: Option<PathBuf>,
    /// Also dump the ground state amplitudes (`hamiltonian`).
    pub dump_state: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: None,
            seeds: None,
            instances: 1,
            workers: None,
            input: None,
            out: None,
            dump_state: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub p: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub r: usize,
    pub eps: Option<f64>,
    pub lambda: Option<f64>,
    pub nu1: Option<f64>,
    pub nu2: Option<f64>,
    pub gamma: Option<f64>,
    /// Energy slack for the p-spin near-ground set.
    pub slack: Option<i64>,
    /// Clause widths for `theory-scan`.
    pub ks: Option<Vec<u32>>,
    pub distance: Option<f64>,
    pub n_bits: Option<f64>,
    pub mu: Option<f64>,
    pub log_base: Base,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            r: 0,
            eps: None,
            lambda: None,
            nu1: None,
            nu2: None,
            gamma: None,
            slack: None,
            ks: None,
            distance: None,
            n_bits: None,
            mu: None,
            log_base: Base::Two,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    #[default]
    Two,
    Natural,
}

impl From<Base> for LogBase {
    fn from(b: Base) -> Self {
        match b {
            Base::Two => LogBase::Two,
            Base::Natural => LogBase::Natural,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Largest `n` for `2^n` sweeps (K-SAT and p-spin).
    pub max_n: usize,
    pub qubit_cap: usize,
    /// Largest set handed to the pair kernels.
    pub max_pairs: usize,
    /// Cap on `choose(n, excluded) * 2^n` for eps-restricted enumeration.
    pub eps_budget: u128,
    /// Cap on the subsets searched for the coverage deficit.
    pub eta_budget: u128,
}

/// Default cap on sets handed to the quadratic pair kernels.
pub const DEFAULT_MAX_PAIRS: usize = 1 << 16;

impl Default for Caps {
    fn default() -> Self {
        let e = EnumerationConfig::default();
        Caps {
            max_n: e.max_n,
            qubit_cap: nlts_core::hamiltonian::DEFAULT_QUBIT_CAP,
            max_pairs: DEFAULT_MAX_PAIRS,
            eps_budget: e.eps_budget,
            eta_budget: nlts_core::ksat::DEFAULT_ETA_BUDGET,
        }
    }
}

impl Caps {
    pub fn enumeration(&self) -> EnumerationConfig {
        EnumerationConfig {
            max_n: self.max_n,
            max_pairs_set: self.max_pairs,
            eps_budget: self.eps_budget,
            ..EnumerationConfig::default()
        }
    }
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed; per-instance seeds are derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Explicit per-instance seeds (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Number of instances drawn from the master seed.
    #[arg(long, global = true)]
    pub instances: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Read formulas from a DIMACS or JSON file instead of generating.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Also write the full ground state vector.
    #[arg(long, global = true)]
    pub dump_state: bool,

    /// Number of variables or spins.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of clauses.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Clause density; sets m when m is absent.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Clause width.
    #[arg(long, short, global = true)]
    pub k: Option<usize>,
    /// Hypergraph degree.
    #[arg(long, short, global = true)]
    pub d: Option<usize>,
    /// Hyperedge size.
    #[arg(long, short, global = true)]
    pub p: Option<usize>,

    /// Violated clauses allowed.
    #[arg(long, short, global = true)]
    pub r: Option<usize>,
    /// Fraction of variables that may be left out of the constraint check.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Fix the lambda grid of theory-scan to one value.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Near distance, as a fraction of n.
    #[arg(long, global = true)]
    pub nu1: Option<f64>,
    /// Far distance, as a fraction of n.
    #[arg(long, global = true)]
    pub nu2: Option<f64>,
    /// Deformation parameter; also fixes the gamma grid of theory-scan.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Energy slack above the ground energy for near-ground sets.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub slack: Option<i64>,
    /// Clause widths scanned by theory-scan (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    pub ks: Option<Vec<u32>>,
    /// Distance d of depth-bound.
    #[arg(long, global = true)]
    pub distance: Option<f64>,
    /// Number of bits for depth-bound.
    #[arg(long, global = true)]
    pub n_bits: Option<f64>,
    /// Success-probability parameter of depth-bound, in (0, 1).
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Logarithm base of depth-bound.
    #[arg(long, global = true, value_enum)]
    pub log_base: Option<Base>,

    /// Largest n for exhaustive sweeps.
    #[arg(long, global = true, env = "NLTS_MAX_N")]
    pub max_n: Option<usize>,
    /// Largest qubit count for state vectors.
    #[arg(long, global = true, env = "NLTS_QUBIT_CAP")]
    pub qubit_cap: Option<usize>,
    /// Largest set passed to the pairwise distance kernels.
    #[arg(long, global = true, env = "NLTS_MAX_PAIRS")]
    pub max_pairs: Option<usize>,
    /// Work cap for the eps union over left-out variable sets.
    #[arg(long, global = true, env = "NLTS_EPS_BUDGET")]
    pub eps_budget: Option<u128>,
    /// Work cap for the search over clauses left uncovered by a variable subset.
    #[arg(long, global = true, env = "NLTS_ETA_BUDGET")]
    pub eta_budget: Option<u128>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))
    }

    /// Read the config file named by `o` (if any) and apply the overrides.
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let mut c = match &o.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
                Self::from_toml(&text)?
            }
            None => ExperimentConfig::default(),
        };
        c.apply(o);
        c.validate()?;
        Ok(c)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let run = &mut self.run;
        set_opt(&mut run.out, o.out.clone());
        set_opt(&mut run.seed, o.seed);
        set_opt(&mut run.seeds, o.seeds.clone());
        set(&mut run.instances, o.instances);
        set_opt(&mut run.workers, o.workers);
        set_opt(&mut run.input, o.input.clone());
        run.dump_state |= o.dump_state;

        let m = &mut self.model;
        set_opt(&mut m.n, o.n);
        set_opt(&mut m.m, o.m);
        set_opt(&mut m.alpha, o.alpha);
        set_opt(&mut m.k, o.k);
        set_opt(&mut m.d, o.d);
        set_opt(&mut m.p, o.p);

        let a = &mut self.analysis;
        set(&mut a.r, o.r);
        set_opt(&mut a.eps, o.eps);
        set_opt(&mut a.lambda, o.lambda);
        set_opt(&mut a.nu1, o.nu1);
        set_opt(&mut a.nu2, o.nu2);
        set_opt(&mut a.gamma, o.gamma);
        set_opt(&mut a.slack, o.slack);
        set_opt(&mut a.ks, o.ks.clone());
        set_opt(&mut a.distance, o.distance);
        set_opt(&mut a.n_bits, o.n_bits);
        set_opt(&mut a.mu, o.mu);
        set(&mut a.log_base, o.log_base);

        let caps = &mut self.caps;
        set(&mut caps.max_n, o.max_n);
        set(&mut caps.qubit_cap, o.qubit_cap);
        set(&mut caps.max_pairs, o.max_pairs);
        set(&mut caps.eps_budget, o.eps_budget);
        set(&mut caps.eta_budget, o.eta_budget);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.caps;
        if c.max_n == 0 || c.qubit_cap == 0 || c.max_pairs == 0 || c.eps_budget == 0 || c.eta_budget == 0 {
            return Err(CliError::validation("all caps must be positive"));
        }
        if c.max_n > 64 {
            return Err(CliError::validation("max_n cannot exceed 64"));
        }
        if self.run.instances == 0 {
            return Err(CliError::validation("instances must be at least 1"));
        }
        if self.run.workers == Some(0) {
            return Err(CliError::validation("workers must be at least 1"));
        }
        if self.run.seeds.as_ref().is_some_and(Vec::is_empty) {
            return Err(CliError::validation("seeds list is empty"));
        }
        if self.model.m.is_some() && self.model.alpha.is_some() {
            return Err(CliError::validation("give either m or alpha, not both"));
        }
        Ok(())
    }

    /// Per-instance seeds: the explicit list, or `instances` seeds split from the master seed.
    pub fn instance_seeds(&self) -> Result<Vec<u64>, CliError> {
        if let Some(s) = &self.run.seeds {
            return Ok(s.clone());
        }
        let master = self
            .run
            .seed
            .ok_or_else(|| CliError::validation("a seed or seed list is required"))?;
        Ok((0..self.run.instances as u64).map(|i| instance_seed(master, i)).collect())
    }

    /// The config as recorded in the manifest (output directory dropped).
    pub fn echo(&self) -> Self {
        let mut c = self.clone();
        c.run.out = None;
        c
    }
}

/// First 8 bytes (little-endian) of `sha256(master_le || index_le)`.
pub fn instance_seed(master: u64, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

pub fn required<T: Copy>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::validation(format!("missing parameter {name}")))
}
