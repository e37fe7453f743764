//! Desk-scale laboratory for combinatorial NLTS constructions built from random
//! constraint satisfaction problems.
//!
//! * [`ksat`]: random K-SAT formulas and clause/variable incidence.
//! * [`landscape`]: exhaustive near-solution enumeration, overlap histograms,
//!   overlap-gap detection and clustering.
//! * [`hamiltonian`]: the CAT / `Q(gamma)` Hamiltonian on one qubit per clause slot,
//!   applied matrix-free to dense state vectors.
//! * [`theory`]: closed-form exponents and bounds, and regime scans.
//! * [`pspin`]: p-spin Ising models on random regular hypergraphs.
//! * [`io`]: file formats (DIMACS + sidecar, CSV, JSON, state dumps).
//!
//! Data-parallel kernels run on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise; output is identical either way.

pub mod combin;
pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod ksat;
pub mod landscape;
pub mod par;
pub mod pspin;
pub mod theory;

pub use error::{LabError, Result};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
