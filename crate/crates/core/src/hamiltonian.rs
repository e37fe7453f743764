//! The CAT / `Q(gamma)` Hamiltonian on one qubit per constraint slot.
//!
//! Every constraint `j` of arity `a_j` owns qubits `offset_j .. offset_j + a_j`
//! (the slot `(j, k)` is qubit `offset_j + k`, bit `offset_j + k` of a basis
//! index). A variable's fiber `D(i)` is the set of slots it occupies. The
//! constraint forbids a set of local patterns over its own slots: one pattern
//! for a K-SAT clause, none for a tautology, `2^(p-1)` for a quantized p-spin
//! hyperedge.
//!
//! `H_i = Q_i^{-1} (I - |CAT(i)><CAT(i)|) Q_i^{-1}` where `Q_i` multiplies a basis
//! amplitude by `gamma` for each violated constraint containing `i`. All
//! operators are applied matrix-free: the `Q` factors are diagonal and the
//! projector only couples the all-zero and all-one patterns of one fiber.
//!
//! Variables that occupy no slot have an empty fiber; their CAT factor is the
//! trivial one-dimensional state and their `H_i` is zero.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_budget, param, LabError, Result};
use crate::ksat::{max_uncovered_clauses, Formula, VarSet};
use crate::par;

/// Default cap on the total qubit count (`2^20` amplitudes, 16 MiB).
pub const DEFAULT_QUBIT_CAP: usize = 20;

/// Amplitudes processed per parallel work unit.
const CHUNK: usize = 1 << 12;

/// Energy and normalization tolerance.
pub const ENERGY_TOL: f64 = 1e-10;

/// Tolerance on the norm accepted by [`measurement_distribution`].
pub const NORM_TOL: f64 = 1e-12;

/// One constraint: the variables in its slots and the local slot patterns it forbids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalConstraint {
    pub vars: Vec<u32>,
    /// Forbidden patterns over the slots, bit `k` = slot `k`. Sorted.
    pub forbidden: Vec<u64>,
}

/// A classical constraint system ready to be quantized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSystem {
    pub n_vars: usize,
    pub constraints: Vec<LocalConstraint>,
}

impl ConstraintSystem {
    pub fn new(n_vars: usize, constraints: Vec<LocalConstraint>) -> Result<Self> {
        for (j, c) in constraints.iter().enumerate() {
            if c.vars.is_empty() || c.vars.len() > 63 {
                return param(format!("constraint {j} has arity {}", c.vars.len()));
            }
            if let Some(v) = c.vars.iter().find(|&&v| v as usize >= n_vars) {
                return param(format!("constraint {j} mentions variable {v} >= {n_vars}"));
            }
            if c.forbidden.iter().any(|&p| p >> c.vars.len() != 0) {
                return param(format!("constraint {j} has a pattern wider than its arity"));
            }
        }
        let mut constraints = constraints;
        for c in &mut constraints {
            c.forbidden.sort_unstable();
            c.forbidden.dedup();
        }
        Ok(ConstraintSystem {
            n_vars,
            constraints,
        })
    }

    /// Widest constraint.
    pub fn max_arity(&self) -> usize {
        self.constraints.iter().map(|c| c.vars.len()).max().unwrap_or(0)
    }

    /// Number of constraints violated by a full assignment (bit `i` = `x_i`).
    pub fn violations(&self, x: u64) -> usize {
        self.constraints
            .iter()
            .filter(|c| {
                let local = c
                    .vars
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (k, &v)| acc | (((x >> v) & 1) << k));
                c.forbidden.binary_search(&local).is_ok()
            })
            .count()
    }

    /// `max over |S| = n - excluded of (#constraints - |C(S)|)`, with the witness.
    pub fn max_uncovered(&self, excluded: usize) -> Result<(usize, Vec<usize>)> {
        let n = self.n_vars;
        if n > 64 {
            return param("coverage search needs n <= 64");
        }
        let masks: Vec<u64> = self
            .constraints
            .iter()
            .map(|c| c.vars.iter().fold(0u64, |a, &v| a | (1 << v)))
            .collect();
        let mut best: Option<(usize, Vec<usize>)> = None;
        crate::combin::for_each_combination(n, excluded, |t| {
            let tm = t.iter().fold(0u64, |a, &i| a | (1 << i));
            let touched = masks.iter().filter(|&&m| m & tm != 0).count();
            if best.as_ref().is_none_or(|(b, _)| touched > *b) {
                best = Some((touched, t.to_vec()));
            }
        });
        best.ok_or_else(|| LabError::Parameter(format!("cannot exclude {excluded} of {n} variables")))
    }
}

impl From<&Formula> for ConstraintSystem {
    fn from(f: &Formula) -> Self {
        ConstraintSystem {
            n_vars: f.n(),
            constraints: f
                .clauses()
                .iter()
                .map(|c| LocalConstraint {
                    vars: c.literals().iter().map(|l| l.var).collect(),
                    forbidden: c.violating_pattern().into_iter().collect(),
                })
                .collect(),
        }
    }
}

/// Constraint table in global qubit coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct PlacedConstraint {
    offset: u32,
    width_mask: u64,
    forbidden: Vec<u64>,
}

impl PlacedConstraint {
    #[inline(always)]
    fn violated_by(&self, z: u64) -> bool {
        let local = (z >> self.offset) & self.width_mask;
        self.forbidden.contains(&local)
    }
}

/// Qubit indexing `(j, k) -> offset_j + k`, variable fibers and incidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitLayout {
    n_vars: usize,
    qubits: usize,
    offsets: Vec<usize>,
    arities: Vec<usize>,
    fibers: Vec<Vec<usize>>,
    fiber_masks: Vec<u64>,
    incidence: Vec<Vec<usize>>,
    placed: Vec<PlacedConstraint>,
    system: ConstraintSystem,
}

/// Layout for a K-SAT formula, one qubit per clause slot.
pub fn build_layout(f: &Formula, qubit_cap: usize) -> Result<QubitLayout> {
    build_layout_from_system(&ConstraintSystem::from(f), qubit_cap)
}

pub fn build_layout_from_system(sys: &ConstraintSystem, qubit_cap: usize) -> Result<QubitLayout> {
    let qubits: usize = sys.constraints.iter().map(|c| c.vars.len()).sum();
    check_budget("qubits", qubits as u128, qubit_cap.min(40) as u128)?;
    let mut offsets = Vec::with_capacity(sys.constraints.len());
    let mut arities = Vec::with_capacity(sys.constraints.len());
    let mut fibers = vec![Vec::new(); sys.n_vars];
    let mut incidence = vec![Vec::new(); sys.n_vars];
    let mut placed = Vec::with_capacity(sys.constraints.len());
    let mut off = 0usize;
    for (j, c) in sys.constraints.iter().enumerate() {
        offsets.push(off);
        arities.push(c.vars.len());
        for (k, &v) in c.vars.iter().enumerate() {
            fibers[v as usize].push(off + k);
            let inc: &mut Vec<usize> = &mut incidence[v as usize];
            if inc.last() != Some(&j) {
                inc.push(j);
            }
        }
        placed.push(PlacedConstraint {
            offset: off as u32,
            width_mask: (1u64 << c.vars.len()) - 1,
            forbidden: c.forbidden.clone(),
        });
        off += c.vars.len();
    }
    let fiber_masks = fibers
        .iter()
        .map(|f| f.iter().fold(0u64, |a, &q| a | (1 << q)))
        .collect();
    Ok(QubitLayout {
        n_vars: sys.n_vars,
        qubits,
        offsets,
        arities,
        fibers,
        fiber_masks,
        incidence,
        placed,
        system: sys.clone(),
    })
}

impl QubitLayout {
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn constraints(&self) -> usize {
        self.offsets.len()
    }

    pub fn system(&self) -> &ConstraintSystem {
        &self.system
    }

    /// Global qubit of slot `(j, k)`.
    pub fn qubit(&self, j: usize, k: usize) -> usize {
        assert!(k < self.arities[j], "slot {k} out of range for constraint {j}");
        self.offsets[j] + k
    }

    /// `D(i)`, ascending.
    pub fn fiber(&self, i: usize) -> &[usize] {
        &self.fibers[i]
    }

    pub fn fiber_mask(&self, i: usize) -> u64 {
        self.fiber_masks[i]
    }

    /// Constraints mentioning variable `i`, ascending.
    pub fn incidence(&self, i: usize) -> &[usize] {
        &self.incidence[i]
    }

    /// Variables that occupy at least one slot.
    pub fn active_vars(&self) -> Vec<usize> {
        (0..self.n_vars).filter(|&i| !self.fibers[i].is_empty()).collect()
    }

    /// Qubits acted on by `H_i`: the fiber plus every slot of an incident constraint.
    pub fn support(&self, i: usize) -> Vec<usize> {
        let mut qs: Vec<usize> = self.incidence[i]
            .iter()
            .flat_map(|&j| self.offsets[j]..self.offsets[j] + self.arities[j])
            .chain(self.fibers[i].iter().copied())
            .collect();
        qs.sort_unstable();
        qs.dedup();
        qs
    }

    /// Number of constraints in `j_set` violated by basis string `z`.
    pub fn violations_in(&self, z: u64, j_set: &[usize]) -> usize {
        j_set.iter().filter(|&&j| self.placed[j].violated_by(z)).count()
    }

    /// Number of constraints violated by basis string `z`.
    pub fn violations(&self, z: u64) -> usize {
        self.placed.iter().filter(|c| c.violated_by(z)).count()
    }

    /// Broadcast an assignment (bit `i` = `x_i`) onto every slot.
    pub fn embed(&self, x: u64) -> u64 {
        (0..self.n_vars)
            .filter(|&i| (x >> i) & 1 == 1)
            .fold(0u64, |z, i| z | self.fiber_masks[i])
    }

    /// Read each variable from the first qubit of its fiber (empty fibers read 0).
    pub fn project(&self, z: u64) -> u64 {
        (0..self.n_vars)
            .filter(|&i| self.fibers[i].first().is_some_and(|&q| (z >> q) & 1 == 1))
            .fold(0u64, |x, i| x | (1 << i))
    }

    /// Whether `z` is constant on every fiber of `vars`.
    pub fn consistent_on(&self, z: u64, vars: impl IntoIterator<Item = usize>) -> bool {
        vars.into_iter().all(|i| {
            let f = z & self.fiber_masks[i];
            f == 0 || f == self.fiber_masks[i]
        })
    }

    pub fn is_fiber_consistent(&self, z: u64) -> bool {
        self.consistent_on(z, 0..self.n_vars)
    }

    /// All fiber-consistent strings, ordered by the active-variable assignment.
    pub fn consistent_strings(&self) -> Vec<u64> {
        let active = self.active_vars();
        (0..1u64 << active.len())
            .map(|bits| {
                active
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| (bits >> b) & 1 == 1)
                    .fold(0u64, |z, (_, &i)| z | self.fiber_masks[i])
            })
            .collect()
    }

    /// Short content hash identifying the layout in state dumps.
    pub fn layout_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.qubits as u64).to_le_bytes());
        for (j, c) in self.system.constraints.iter().enumerate() {
            h.update((self.offsets[j] as u64).to_le_bytes());
            for &v in &c.vars {
                h.update(v.to_le_bytes());
            }
            h.update([0xff]);
            for &p in &c.forbidden {
                h.update(p.to_le_bytes());
            }
            h.update([0xfe]);
        }
        hex::encode(&h.finalize()[..8])
    }
}

/// Dense amplitudes over the `2^qubits` computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(qubits: usize) -> Self {
        StateVector {
            qubits,
            amps: vec![Complex64::new(0.0, 0.0); 1 << qubits],
        }
    }

    pub fn basis(qubits: usize, z: u64) -> Self {
        let mut s = Self::zeros(qubits);
        s.amps[z as usize] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn from_amplitudes(qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << qubits {
            return param(format!(
                "{} amplitudes for {qubits} qubits",
                amps.len()
            ));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return param("state vector has non-finite entries");
        }
        Ok(StateVector { qubits, amps })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn amplitude(&self, z: u64) -> Complex64 {
        self.amps[z as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        // Chunk partials summed in index order keep the result independent of the worker count.
        par::map_range(self.amps.len().div_ceil(CHUNK), |c| {
            self.amps[c * CHUNK..((c + 1) * CHUNK).min(self.amps.len())]
                .iter()
                .map(|a| a.norm_sqr())
                .sum::<f64>()
        })
        .iter()
        .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(LabError::Contract("cannot normalize a zero vector".into()));
        }
        let inv = 1.0 / n;
        for a in &mut self.amps {
            *a *= inv;
        }
        Ok(self)
    }

    pub fn scale(&mut self, c: Complex64) {
        for a in &mut self.amps {
            *a *= c;
        }
    }

    pub fn axpy(&mut self, c: Complex64, other: &StateVector) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_state(layout: &QubitLayout, psi: &StateVector) -> Result<()> {
    if psi.qubits != layout.qubits {
        return param(format!(
            "state has {} qubits, layout has {}",
            psi.qubits, layout.qubits
        ));
    }
    Ok(())
}

/// `|CAT> = ⊗_i (|0..0> + |1..1>)/√2` over the fibers.
pub fn cat_state(layout: &QubitLayout) -> StateVector {
    let strings = layout.consistent_strings();
    let amp = FRAC_1_SQRT_2.powi(layout.active_vars().len() as i32);
    let mut s = StateVector::zeros(layout.qubits);
    for z in strings {
        s.amps[z as usize] = Complex64::new(amp, 0.0);
    }
    s
}

/// Whether `Q` is applied or inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QSign {
    Forward,
    Inverse,
}

impl QSign {
    pub fn exponent(self) -> i32 {
        match self {
            QSign::Forward => 1,
            QSign::Inverse => -1,
        }
    }
}

/// Largest `|J| * ln(1/gamma)` accepted for `gamma < 0.1`; keeps `gamma^±|J|`
/// well inside double range.
const MAX_LOG_SCALE: f64 = 345.0;

fn gamma_powers(gamma: f64, sign: QSign, count: usize) -> Result<Vec<f64>> {
    if !gamma.is_finite() || !(0.0..=1.0).contains(&gamma) {
        return param(format!("gamma must lie in (0, 1], got {gamma}"));
    }
    if gamma == 0.0 && sign == QSign::Inverse {
        return param("Q(0) is not invertible");
    }
    if gamma > 0.0 && gamma < 0.1 && count as f64 * (1.0 / gamma).ln() > MAX_LOG_SCALE {
        return param(format!(
            "gamma = {gamma} over {count} constraints under/overflows double precision"
        ));
    }
    let base = match sign {
        QSign::Forward => gamma,
        QSign::Inverse => 1.0 / gamma,
    };
    Ok((0..=count as i32).map(|k| base.powi(k)).collect())
}

/// In-place diagonal `Q_J(gamma)^{±1}`: amplitude `z` scaled by `gamma^(±v_J(z))`.
pub fn apply_q_gamma_in_place(
    layout: &QubitLayout,
    psi: &mut StateVector,
    gamma: f64,
    sign: QSign,
    j_set: &[usize],
) -> Result<()> {
    check_state(layout, psi)?;
    if let Some(&j) = j_set.iter().find(|&&j| j >= layout.constraints()) {
        return param(format!("constraint index {j} out of range"));
    }
    let pow = gamma_powers(gamma, sign, j_set.len())?;
    let placed: Vec<&PlacedConstraint> = j_set.iter().map(|&j| &layout.placed[j]).collect();
    par::for_each_chunk_mut(&mut psi.amps, CHUNK, |start, chunk| {
        for (off, a) in chunk.iter_mut().enumerate() {
            let z = (start + off) as u64;
            let v = placed.iter().filter(|c| c.violated_by(z)).count();
            if v != 0 {
                *a *= pow[v];
            }
        }
    });
    Ok(())
}

pub fn apply_q_gamma(
    layout: &QubitLayout,
    psi: &StateVector,
    gamma: f64,
    sign: QSign,
    j_set: &[usize],
) -> Result<StateVector> {
    let mut out = psi.clone();
    apply_q_gamma_in_place(layout, &mut out, gamma, sign, j_set)?;
    Ok(out)
}

/// `Q(gamma)^{±1}` over every constraint.
pub fn apply_q_full(layout: &QubitLayout, psi: &StateVector, gamma: f64, sign: QSign) -> Result<StateVector> {
    let all: Vec<usize> = (0..layout.constraints()).collect();
    apply_q_gamma(layout, psi, gamma, sign, &all)
}

/// `(I - |CAT(i)><CAT(i)|)` on fiber `D(i)`; zero for an empty fiber.
pub fn apply_cat_complement(layout: &QubitLayout, psi: &StateVector, i: usize) -> Result<StateVector> {
    check_state(layout, psi)?;
    if i >= layout.n_vars {
        return param(format!("variable {i} out of range"));
    }
    let fm = layout.fiber_masks[i];
    if fm == 0 {
        return Ok(StateVector::zeros(layout.qubits));
    }
    let src = &psi.amps;
    let mut out = StateVector::zeros(layout.qubits);
    par::for_each_chunk_mut(&mut out.amps, CHUNK, |start, chunk| {
        for (off, a) in chunk.iter_mut().enumerate() {
            let z = (start + off) as u64;
            let f = z & fm;
            *a = if f == 0 {
                (src[z as usize] - src[(z | fm) as usize]) * 0.5
            } else if f == fm {
                (src[z as usize] - src[(z & !fm) as usize]) * 0.5
            } else {
                src[z as usize]
            };
        }
    });
    Ok(out)
}

/// `H_i psi`.
pub fn apply_h_i(layout: &QubitLayout, psi: &StateVector, i: usize, gamma: f64) -> Result<StateVector> {
    if i >= layout.n_vars {
        return param(format!("variable {i} out of range"));
    }
    let inc = &layout.incidence[i];
    let mut t = apply_q_gamma(layout, psi, gamma, QSign::Inverse, inc)?;
    t = apply_cat_complement(layout, &t, i)?;
    apply_q_gamma_in_place(layout, &mut t, gamma, QSign::Inverse, inc)?;
    Ok(t)
}

/// `<psi|H_i|psi>` (real by hermiticity).
pub fn expectation_h_i(layout: &QubitLayout, psi: &StateVector, i: usize, gamma: f64) -> Result<f64> {
    Ok(psi.inner(&apply_h_i(layout, psi, i, gamma)?).re)
}

/// `sum_i <psi|H_i|psi>` together with the per-term values.
pub fn energy(layout: &QubitLayout, psi: &StateVector, gamma: f64) -> Result<(f64, Vec<f64>)> {
    let terms = (0..layout.n_vars)
        .map(|i| expectation_h_i(layout, psi, i, gamma))
        .collect::<Result<Vec<_>>>()?;
    Ok((terms.iter().sum(), terms))
}

/// Normalized `Q(gamma)|CAT>`.
pub fn ground_state(layout: &QubitLayout, gamma: f64) -> Result<StateVector> {
    apply_q_full(layout, &cat_state(layout), gamma, QSign::Forward)?.normalized()
}

/// `|<z|psi>|^2` for every basis string.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub qubits: usize,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn prob(&self, z: u64) -> f64 {
        self.probs[z as usize]
    }

    /// Nonzero entries in index order.
    pub fn support(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(z, &p)| (z as u64, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

pub fn measurement_distribution(psi: &StateVector) -> Result<Distribution> {
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(LabError::Contract(format!(
            "state norm^2 is {norm}, expected 1 within {NORM_TOL}"
        )));
    }
    Ok(Distribution {
        qubits: psi.qubits,
        probs: psi.amps.iter().map(|a| a.norm_sqr()).collect(),
    })
}

/// One tensor factor `(|σ> ± |σ̄>)/√2` on a fiber.
///
/// Bit `t` of `pattern` is the value on the `t`-th qubit of the fiber
/// (ascending qubit order). The lexicographically smaller representative is
/// kept, so bit 0 is always clear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalFactor {
    pub pattern: u64,
    pub minus: bool,
}

impl LocalFactor {
    pub const CAT: LocalFactor = LocalFactor {
        pattern: 0,
        minus: false,
    };

    pub fn is_cat(self) -> bool {
        self == Self::CAT
    }

    fn validate(self, fiber_len: usize) -> Result<()> {
        if fiber_len == 0 {
            if !self.is_cat() {
                return param("an empty fiber only carries the trivial factor");
            }
            return Ok(());
        }
        if self.pattern & 1 != 0 {
            return param("pattern must be the lexicographically smaller representative (bit 0 clear)");
        }
        if fiber_len < 64 && self.pattern >> fiber_len != 0 {
            return param("pattern wider than the fiber");
        }
        Ok(())
    }
}

/// An element of the product basis built from per-fiber `(|σ> ± |σ̄>)/√2` states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisElement {
    pub factors: Vec<LocalFactor>,
}

impl BasisElement {
    pub fn cat(n_vars: usize) -> Self {
        BasisElement {
            factors: vec![LocalFactor::CAT; n_vars],
        }
    }
}

fn scatter(pattern: u64, fiber: &[usize]) -> u64 {
    fiber
        .iter()
        .enumerate()
        .filter(|(t, _)| (pattern >> t) & 1 == 1)
        .fold(0u64, |z, (_, &q)| z | (1 << q))
}

fn gather(z: u64, fiber: &[usize]) -> u64 {
    fiber
        .iter()
        .enumerate()
        .filter(|(_, &q)| (z >> q) & 1 == 1)
        .fold(0u64, |p, (t, _)| p | (1 << t))
}

/// Basis elements are numbered by `2^qubits` indices: on each fiber the first
/// qubit carries the sign and the fiber carries `σ` (plus) or `σ̄` (minus).
pub fn basis_index(layout: &QubitLayout, w: &BasisElement) -> Result<u64> {
    if w.factors.len() != layout.n_vars {
        return param("basis element must carry one factor per variable");
    }
    let mut z = 0u64;
    for (i, f) in w.factors.iter().enumerate() {
        let fiber = &layout.fibers[i];
        f.validate(fiber.len())?;
        let local = if f.minus {
            scatter(!f.pattern, fiber)
        } else {
            scatter(f.pattern, fiber)
        };
        z |= local;
    }
    Ok(z)
}

/// Inverse of [`basis_index`].
pub fn basis_element(layout: &QubitLayout, index: u64) -> BasisElement {
    let factors = (0..layout.n_vars)
        .map(|i| {
            let fiber = &layout.fibers[i];
            if fiber.is_empty() {
                return LocalFactor::CAT;
            }
            let local = gather(index, fiber);
            let mask = if fiber.len() == 64 { u64::MAX } else { (1u64 << fiber.len()) - 1 };
            if local & 1 == 1 {
                LocalFactor {
                    pattern: !local & mask,
                    minus: true,
                }
            } else {
                LocalFactor {
                    pattern: local,
                    minus: false,
                }
            }
        })
        .collect();
    BasisElement { factors }
}

/// `|w> = (1/√2)^n Σ_{z ∈ B(w)} (-1)^{R(w,z)} |z>`.
pub fn basis_element_vector(layout: &QubitLayout, w: &BasisElement) -> Result<StateVector> {
    basis_index(layout, w)?;
    let active = layout.active_vars();
    let amp = FRAC_1_SQRT_2.powi(active.len() as i32);
    let mut s = StateVector::zeros(layout.qubits);
    for choice in 0..1u64 << active.len() {
        let mut z = 0u64;
        let mut minus_count = 0u32;
        for (b, &i) in active.iter().enumerate() {
            let f = w.factors[i];
            let fiber = &layout.fibers[i];
            if (choice >> b) & 1 == 1 {
                z |= scatter(!f.pattern, fiber);
                if f.minus {
                    minus_count += 1;
                }
            } else {
                z |= scatter(f.pattern, fiber);
            }
        }
        let sign = if minus_count % 2 == 1 { -amp } else { amp };
        s.amps[z as usize] = Complex64::new(sign, 0.0);
    }
    Ok(s)
}

/// Coefficients `<w|psi>` for every basis element, indexed by [`basis_index`].
pub fn expand_in_basis(layout: &QubitLayout, psi: &StateVector) -> Result<Vec<Complex64>> {
    check_state(layout, psi)?;
    let mut cur = psi.amps.clone();
    let mut next = vec![Complex64::new(0.0, 0.0); cur.len()];
    for i in layout.active_vars() {
        let fm = layout.fiber_masks[i];
        let lead = 1u64 << layout.fibers[i][0];
        let src = &cur;
        par::for_each_chunk_mut(&mut next, CHUNK, |start, chunk| {
            for (off, a) in chunk.iter_mut().enumerate() {
                let z = (start + off) as u64;
                let partner = src[(z ^ fm) as usize];
                let here = src[z as usize];
                *a = if z & lead == 0 {
                    (here + partner) * FRAC_1_SQRT_2
                } else {
                    (partner - here) * FRAC_1_SQRT_2
                };
            }
        });
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Whether basis index `index` has the CAT factor on every variable of `s`.
pub fn in_w_of(layout: &QubitLayout, index: u64, s: &VarSet) -> bool {
    s.iter().all(|i| index & layout.fiber_masks[i] == 0)
}

/// `log2 |W(S)|`: the slot count outside `S`.
pub fn w_size_log2(layout: &QubitLayout, s: &VarSet) -> usize {
    (0..layout.n_vars)
        .filter(|&i| !s.contains(i))
        .map(|i| layout.fibers[i].len())
        .sum()
}

/// Normalized `Q(gamma) Σ_t c_t |w_t>`, each `w_t` carrying CAT factors on `S`.
///
/// Each term lists `(variable, factor)` pairs for variables outside `S`;
/// unlisted variables keep the CAT factor. The result is checked to be
/// annihilated by every `H_i`, `i ∈ S`.
pub fn near_ground_superposition(
    layout: &QubitLayout,
    gamma: f64,
    s: &VarSet,
    terms: &[(Vec<(usize, LocalFactor)>, Complex64)],
) -> Result<StateVector> {
    if s.universe() != layout.n_vars {
        return param("variable subset universe does not match the layout");
    }
    if terms.is_empty() {
        return param("need at least one basis term");
    }
    let mut phi = StateVector::zeros(layout.qubits);
    for (choice, coef) in terms {
        let mut w = BasisElement::cat(layout.n_vars);
        for &(i, f) in choice {
            if i >= layout.n_vars {
                return param(format!("variable {i} out of range"));
            }
            if s.contains(i) {
                return param(format!("variable {i} lies in S and must keep its CAT factor"));
            }
            w.factors[i] = f;
        }
        phi.axpy(*coef, &basis_element_vector(layout, &w)?);
    }
    let psi = apply_q_full(layout, &phi, gamma, QSign::Forward)?.normalized()?;
    for i in s.iter() {
        let e = expectation_h_i(layout, &psi, i, gamma)?;
        if e.abs() > ENERGY_TOL {
            return Err(LabError::Contract(format!(
                "H_{i} expectation {e:e} on a constructed near-ground state"
            )));
        }
    }
    Ok(psi)
}

/// Normalized `Q(gamma)|w>` for a single basis element.
pub fn near_ground_state(
    layout: &QubitLayout,
    gamma: f64,
    s: &VarSet,
    choice: &[(usize, LocalFactor)],
) -> Result<StateVector> {
    near_ground_superposition(layout, gamma, s, &[(choice.to_vec(), Complex64::new(1.0, 0.0))])
}

/// Per-violation-level maxima reported by [`check_probability_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub r: usize,
    pub strings: u64,
    pub max_prob: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityBoundReport {
    /// `eta * n`, the coverage deficit count.
    pub uncovered: usize,
    pub eta: f64,
    /// `log2 |W(S)|` and its ceiling `K eta n`.
    pub w_log2: usize,
    pub w_log2_bound: f64,
    pub s_bar: u64,
    pub s_bar0: u64,
    pub checked: u64,
    pub violations: u64,
    /// Largest `|<psi|z>|^2 / bound` over checked strings.
    pub max_ratio: f64,
    pub sandwich_violations: u64,
    /// Nonzero amplitudes outside `S̄`.
    pub outside_nonzero: u64,
    pub vacuous: bool,
    pub levels: Vec<LevelSummary>,
}

impl ProbabilityBoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
            && self.sandwich_violations == 0
            && self.outside_nonzero == 0
            && (self.w_log2 as f64) <= self.w_log2_bound + 1e-9
    }
}

const REL_TOL: f64 = 1e-12;

/// Check `|<psi|z>|^2 <= gamma^{2r} (2/gamma)^{3K eta n} / |S̄(0)|` on every
/// `z ∈ S̄(r)`, along with `gamma^{r + eta n}|<phi|z>| <= |<psi|z>| <= gamma^r |<phi|z>|`
/// for `phi = Q^{-1} psi`.
///
/// `uncovered` is `eta * n`: the maximum number of constraints touching the
/// complement of any set of size `|S|`.
pub fn check_probability_bound(
    layout: &QubitLayout,
    gamma: f64,
    s: &VarSet,
    psi: &StateVector,
    uncovered: usize,
) -> Result<ProbabilityBoundReport> {
    check_state(layout, psi)?;
    if s.universe() != layout.n_vars {
        return param("variable subset universe does not match the layout");
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return param(format!("gamma must lie in (0, 1], got {gamma}"));
    }
    let n = layout.n_vars;
    let k = layout.system.max_arity() as f64;
    let eta = uncovered as f64 / n as f64;
    let phi = apply_q_full(layout, psi, gamma, QSign::Inverse)?;

    let in_s: Vec<usize> = s.iter().collect();
    let cs: Vec<usize> = layout
        .system
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.vars.iter().all(|&v| s.contains(v as usize)))
        .map(|(j, _)| j)
        .collect();

    // First pass: level of every string in S̄.
    let dim = layout.dim();
    let levels: Vec<Option<usize>> = par::map_range(dim, |z| {
        let z = z as u64;
        layout
            .consistent_on(z, in_s.iter().copied())
            .then(|| layout.violations_in(z, &cs))
    });
    let s_bar = levels.iter().filter(|l| l.is_some()).count() as u64;
    let s_bar0 = levels.iter().filter(|l| **l == Some(0)).count() as u64;
    let max_level = levels.iter().flatten().copied().max().unwrap_or(0);

    let w_log2 = w_size_log2(layout, s);
    let w_log2_bound = k * uncovered as f64;
    let mut report = ProbabilityBoundReport {
        uncovered,
        eta,
        w_log2,
        w_log2_bound,
        s_bar,
        s_bar0,
        checked: 0,
        violations: 0,
        max_ratio: 0.0,
        sandwich_violations: 0,
        outside_nonzero: 0,
        vacuous: s_bar0 == 0,
        levels: (0..=max_level)
            .map(|r| LevelSummary {
                r,
                strings: 0,
                max_prob: 0.0,
                bound: f64::INFINITY,
            })
            .collect(),
    };
    // log of (2/gamma)^{3 K eta n} / |S̄(0)|
    let log_base = 3.0 * k * uncovered as f64 * (2.0 / gamma).ln() - (s_bar0.max(1) as f64).ln();
    for r in 0..=max_level {
        report.levels[r].bound = if report.vacuous {
            f64::INFINITY
        } else {
            (2.0 * r as f64 * gamma.ln() + log_base).exp()
        };
    }
    for (z, level) in levels.iter().enumerate() {
        let a_psi = psi.amps[z].norm();
        let Some(r) = *level else {
            if a_psi != 0.0 {
                report.outside_nonzero += 1;
            }
            continue;
        };
        report.checked += 1;
        let p = a_psi * a_psi;
        let lvl = &mut report.levels[r];
        lvl.strings += 1;
        lvl.max_prob = lvl.max_prob.max(p);
        if !report.vacuous {
            let ratio = p / lvl.bound;
            report.max_ratio = report.max_ratio.max(ratio);
            if ratio > 1.0 + REL_TOL {
                report.violations += 1;
            }
        }
        let a_phi = phi.amps[z].norm();
        let upper = gamma.powi(r as i32) * a_phi;
        let lower = gamma.powi((r + uncovered) as i32) * a_phi;
        let slack = REL_TOL * a_phi.max(f64::MIN_POSITIVE);
        if a_psi > upper + slack || a_psi < lower - slack {
            report.sandwich_violations += 1;
        }
    }
    Ok(report)
}

/// [`check_probability_bound`] with `eta` from exhaustive search over the formula.
pub fn check_probability_bound_for_formula(
    f: &Formula,
    layout: &QubitLayout,
    gamma: f64,
    s: &VarSet,
    psi: &StateVector,
    eta_budget: u128,
) -> Result<ProbabilityBoundReport> {
    let deficit = max_uncovered_clauses(f, f.n() - s.len(), eta_budget)?;
    check_probability_bound(layout, gamma, s, psi, deficit.max_uncovered)
}
