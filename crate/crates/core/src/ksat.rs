//! Random K-SAT formulas: generation, evaluation and clause/variable incidence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combin::{binomial, ceil_frac, for_each_combination_from};
use crate::error::{check_budget, param, LabError, Result};
use crate::par;

/// Widest clause whose falsifying pattern still fits a `u64`.
pub const MAX_CLAUSE_WIDTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: u32,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: u32) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: u32) -> Self {
        Literal { var, negated: true }
    }

    /// Value of the variable that makes this literal false.
    pub fn falsifying_value(self) -> bool {
        self.negated
    }

    pub fn eval(self, value: bool) -> bool {
        value != self.negated
    }
}

/// An ordered disjunction of literals.
///
/// The falsifying pattern is precomputed: bit `k` is the value of slot `k`
/// that falsifies literal `k`. Clauses that mention a variable with both
/// signs are tautologies and carry no pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
    violating: Option<u64>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Result<Self> {
        if literals.is_empty() {
            return param("clause must contain at least one literal");
        }
        if literals.len() > MAX_CLAUSE_WIDTH {
            return param(format!(
                "clause width {} exceeds {MAX_CLAUSE_WIDTH}",
                literals.len()
            ));
        }
        let tautology = literals.iter().any(|a| {
            literals
                .iter()
                .any(|b| a.var == b.var && a.negated != b.negated)
        });
        let violating = if tautology {
            None
        } else {
            Some(
                literals
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (k, l)| acc | ((l.falsifying_value() as u64) << k)),
            )
        };
        Ok(Clause {
            literals,
            violating,
        })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn width(&self) -> usize {
        self.literals.len()
    }

    pub fn is_tautology(&self) -> bool {
        self.violating.is_none()
    }

    /// Falsifying local pattern over the clause slots (bit `k` = slot `k`).
    pub fn violating_pattern(&self) -> Option<u64> {
        self.violating
    }

    /// True when some variable occupies more than one slot.
    pub fn has_repeated_variable(&self) -> bool {
        let mut vars: Vec<u32> = self.literals.iter().map(|l| l.var).collect();
        vars.sort_unstable();
        vars.windows(2).any(|w| w[0] == w[1])
    }

    /// Distinct variables, ascending.
    pub fn variables(&self) -> Vec<u32> {
        let mut vars: Vec<u32> = self.literals.iter().map(|l| l.var).collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    /// Boolean evaluation under a full assignment.
    pub fn eval(&self, a: &Assignment) -> bool {
        self.literals.iter().any(|l| l.eval(a.get(l.var as usize)))
    }

    /// Evaluate with slot values given directly (bit `k` = value at slot `k`).
    pub fn eval_slots(&self, slots: u64) -> bool {
        self.literals
            .iter()
            .enumerate()
            .any(|(k, l)| l.eval((slots >> k) & 1 == 1))
    }

    /// Word-level form for formulas with at most 64 variables.
    pub fn packed(&self) -> Option<PackedClause> {
        self.violating?;
        let mut mask = 0u64;
        let mut pattern = 0u64;
        for l in &self.literals {
            if l.var >= 64 {
                return None;
            }
            mask |= 1 << l.var;
            if l.negated {
                pattern |= 1 << l.var;
            }
        }
        Some(PackedClause { mask, pattern })
    }
}

/// `(mask, pattern)` pair: an assignment word `x` violates the clause iff
/// `x & mask == pattern`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackedClause {
    pub mask: u64,
    pub pattern: u64,
}

impl PackedClause {
    #[inline(always)]
    pub fn violated_by(self, x: u64) -> bool {
        x & self.mask == self.pattern
    }
}

/// Falsifying assignment of a clause's slots, `None` for tautologies.
pub fn violating_assignment(c: &Clause) -> Option<u64> {
    c.violating_pattern()
}

/// A full assignment packed into 64-bit words, bit `i` = `x_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    n: usize,
    words: Vec<u64>,
}

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut a = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            a.set(i, b);
        }
        a
    }

    /// Low `n` bits of `x`; `n` must be at most 64.
    pub fn from_word(n: usize, x: u64) -> Self {
        assert!(n <= 64, "from_word needs n <= 64");
        let mut a = Self::zeros(n);
        if n > 0 {
            let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            a.words[0] = x & mask;
        }
        a
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        let bit = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// The single word when `n <= 64`.
    pub fn as_word(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.words.first().copied().unwrap_or(0))
    }
}

/// Subset of `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarSet {
    n: usize,
    words: Vec<u64>,
}

impl VarSet {
    pub fn empty(n: usize) -> Self {
        VarSet {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    pub fn from_indices(n: usize, idx: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = Self::empty(n);
        for i in idx {
            if i >= n {
                return param(format!("variable index {i} out of range for n = {n}"));
            }
            s.insert(i);
        }
        Ok(s)
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n && (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn complement(&self) -> Self {
        let mut s = Self::full(self.n);
        for i in self.iter() {
            s.remove(i);
        }
        s
    }

    pub fn intersection(&self, other: &Self) -> Self {
        VarSet {
            n: self.n.min(other.n),
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.contains(i))
    }

    /// Bit mask form when the universe fits a word.
    pub fn as_mask(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.words.first().copied().unwrap_or(0))
    }
}

/// Clause density parameters: `m = round(alpha * 2^K * ln 2 * n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityParams {
    pub alpha: f64,
    pub k: usize,
    pub n: usize,
}

impl DensityParams {
    pub fn new(alpha: f64, k: usize, n: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return param(format!("alpha must lie in (0, 1], got {alpha}"));
        }
        if k == 0 || k > MAX_CLAUSE_WIDTH {
            return param(format!("clause width K must lie in [1, {MAX_CLAUSE_WIDTH}]"));
        }
        Ok(DensityParams { alpha, k, n })
    }

    pub fn clause_count(&self) -> usize {
        clause_count(self.alpha, self.k, self.n)
    }
}

/// `round(alpha * 2^K * ln 2 * n)`.
pub fn clause_count(alpha: f64, k: usize, n: usize) -> usize {
    (alpha * 2f64.powi(k as i32) * std::f64::consts::LN_2 * n as f64).round() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formula {
    n: usize,
    k: usize,
    clauses: Vec<Clause>,
    seed: u64,
    alpha: Option<f64>,
}

impl Formula {
    /// Build a formula from explicit clauses, all of width `k`.
    pub fn new(n: usize, k: usize, clauses: Vec<Clause>, seed: u64) -> Result<Self> {
        if n == 0 {
            return param("formula needs at least one variable");
        }
        if k == 0 || k > MAX_CLAUSE_WIDTH {
            return param(format!("clause width K must lie in [1, {MAX_CLAUSE_WIDTH}]"));
        }
        for (j, c) in clauses.iter().enumerate() {
            if c.width() != k {
                return param(format!("clause {j} has width {}, expected {k}", c.width()));
            }
            if let Some(l) = c.literals().iter().find(|l| l.var as usize >= n) {
                return param(format!("clause {j} mentions x{} but n = {n}", l.var));
            }
        }
        Ok(Formula {
            n,
            k,
            clauses,
            seed,
            alpha: None,
        })
    }

    /// Convenience constructor from signed 1-based DIMACS-style literals.
    pub fn from_signed(n: usize, k: usize, clauses: &[&[i64]]) -> Result<Self> {
        let clauses = clauses
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&v| {
                        if v == 0 {
                            param("literal 0 is not a variable")
                        } else {
                            Ok(Literal {
                                var: (v.unsigned_abs() - 1) as u32,
                                negated: v < 0,
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()
                    .and_then(Clause::new)
            })
            .collect::<Result<Vec<_>>>()?;
        Formula::new(n, k, clauses, 0)
    }

    pub fn with_alpha(mut self, alpha: Option<f64>) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn tautology_count(&self) -> usize {
        self.clauses.iter().filter(|c| c.is_tautology()).count()
    }

    /// Number of clauses in which some variable repeats.
    pub fn repeated_variable_count(&self) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.has_repeated_variable())
            .count()
    }

    /// Packed clause table for `n <= 64`; tautologies are dropped.
    pub fn packed(&self) -> Option<Vec<PackedClause>> {
        (self.n <= 64).then(|| self.clauses.iter().filter_map(Clause::packed).collect())
    }

    /// Variable mask of clause `j` (requires `n <= 64`).
    pub fn clause_var_mask(&self, j: usize) -> u64 {
        self.clauses[j]
            .literals()
            .iter()
            .fold(0u64, |acc, l| acc | (1 << l.var))
    }
}

/// Sample `m` clauses uniformly from the `(2n)^K` ordered clauses, with replacement.
pub fn generate_formula(n: usize, m: usize, k: usize, seed: u64) -> Result<Formula> {
    if n == 0 {
        return param("n must be at least 1");
    }
    if k == 0 || k > MAX_CLAUSE_WIDTH {
        return param(format!("K must lie in [1, {MAX_CLAUSE_WIDTH}]"));
    }
    if n > u32::MAX as usize {
        return param("n does not fit 32-bit variable indices");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses = (0..m)
        .map(|_| {
            let lits = (0..k)
                .map(|_| Literal {
                    var: rng.random_range(0..n as u32),
                    negated: rng.random::<bool>(),
                })
                .collect();
            Clause::new(lits)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Formula {
        n,
        k,
        clauses,
        seed,
        alpha: None,
    })
}

/// Generate at density `alpha * 2^K * ln 2`.
pub fn generate_at_density(p: DensityParams, seed: u64) -> Result<Formula> {
    Ok(generate_formula(p.n, p.clause_count(), p.k, seed)?.with_alpha(Some(p.alpha)))
}

/// Number of clauses whose variables read their falsifying pattern.
pub fn count_violations(f: &Formula, a: &Assignment) -> Result<usize> {
    if a.len() != f.n {
        return param(format!(
            "assignment has {} bits, formula has n = {}",
            a.len(),
            f.n
        ));
    }
    if let (Some(x), Some(table)) = (a.as_word(), f.packed()) {
        return Ok(table.iter().filter(|c| c.violated_by(x)).count());
    }
    Ok(f.clauses
        .iter()
        .filter(|c| {
            !c.is_tautology()
                && c.literals()
                    .iter()
                    .all(|l| a.get(l.var as usize) == l.falsifying_value())
        })
        .count())
}

/// Indices of clauses whose variables all lie in `s`.
pub fn clauses_within(f: &Formula, s: &VarSet) -> Vec<usize> {
    f.clauses
        .iter()
        .enumerate()
        .filter(|(_, c)| c.literals().iter().all(|l| s.contains(l.var as usize)))
        .map(|(j, _)| j)
        .collect()
}

/// Indices of clauses mentioning variable `i`.
pub fn clauses_containing(f: &Formula, i: usize) -> Result<Vec<usize>> {
    if i >= f.n {
        return param(format!("variable {i} out of range for n = {}", f.n));
    }
    Ok(f.clauses
        .iter()
        .enumerate()
        .filter(|(_, c)| c.literals().iter().any(|l| l.var as usize == i))
        .map(|(j, _)| j)
        .collect())
}

/// Worst excluded set for the coverage deficit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageDeficit {
    /// Number of excluded variables, `n - |S|`.
    pub excluded: usize,
    /// `max_S (m - |C(S)|)`.
    pub max_uncovered: usize,
    /// Lexicographically first excluded set attaining the maximum.
    pub witness: Vec<usize>,
}

impl CoverageDeficit {
    pub fn eta(&self, n: usize) -> f64 {
        self.max_uncovered as f64 / n as f64
    }
}

/// Default cap on the number of excluded sets `eta_exact` will visit.
pub const DEFAULT_ETA_BUDGET: u128 = 50_000_000;

/// `max over |S| = n - excluded of (m - |C(S)|)` by exhaustive enumeration of
/// excluded sets.
pub fn max_uncovered_clauses(f: &Formula, excluded: usize, budget: u128) -> Result<CoverageDeficit> {
    let n = f.n;
    if excluded > n {
        return param(format!("cannot exclude {excluded} of {n} variables"));
    }
    check_budget(
        "excluded-set enumeration",
        binomial(n as u64, excluded as u64),
        budget,
    )?;
    if excluded == 0 || f.m() == 0 {
        return Ok(CoverageDeficit {
            excluded,
            max_uncovered: 0,
            witness: (0..excluded).collect(),
        });
    }
    let clause_vars: Vec<Vec<u32>> = f.clauses.iter().map(Clause::variables).collect();
    let masks: Option<Vec<u64>> = (n <= 64).then(|| (0..f.m()).map(|j| f.clause_var_mask(j)).collect());

    // Split the search on the smallest excluded index; each branch is independent.
    let best = par::map_range(n - excluded + 1, |first| {
        let mut best: Option<(usize, Vec<usize>)> = None;
        let mut prefix = vec![first];
        let mut visit = |t: &[usize]| {
            let touched = match &masks {
                Some(masks) => {
                    let tm = t.iter().fold(0u64, |acc, &i| acc | (1 << i));
                    masks.iter().filter(|&&cm| cm & tm != 0).count()
                }
                None => clause_vars
                    .iter()
                    .filter(|vars| vars.iter().any(|v| t.binary_search(&(*v as usize)).is_ok()))
                    .count(),
            };
            if best.as_ref().is_none_or(|(b, _)| touched > *b) {
                best = Some((touched, t.to_vec()));
            }
        };
        for_each_combination_from(n, excluded - 1, first + 1, &mut prefix, &mut visit);
        best
    });
    let (max_uncovered, witness) = best
        .into_iter()
        .flatten()
        .fold(None::<(usize, Vec<usize>)>, |acc, cand| match acc {
            Some(a) if a.0 >= cand.0 => Some(a),
            _ => Some(cand),
        })
        .ok_or_else(|| LabError::Contract("no excluded set visited".into()))?;
    Ok(CoverageDeficit {
        excluded,
        max_uncovered,
        witness,
    })
}

/// Coverage deficit `eta` for `|S| = n - ceil(eps * n)`.
pub fn eta_exact(f: &Formula, eps: f64, budget: u128) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return param(format!("eps must lie in [0, 1), got {eps}"));
    }
    let excluded = ceil_frac(eps, f.n);
    Ok(max_uncovered_clauses(f, excluded, budget)?.eta(f.n))
}
