//! p-spin Ising model on random d-regular p-uniform hypergraphs.
//!
//! Spins map to bits as `+1 -> 0`, `-1 -> 1`, so the product of the spins on a
//! hyperedge is `(-1)^parity`. A hyperedge with coupling `J_e` raises the
//! energy exactly on the local patterns whose product equals `J_e`; those are
//! the patterns forbidden by the quantized Hamiltonian.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_budget, param, LabError, Result};
use crate::hamiltonian::{build_layout_from_system, ConstraintSystem, LocalConstraint, QubitLayout};
use crate::landscape::SolutionSet;
use crate::par;

/// Whole-sample rejection attempts before giving up.
pub const MAX_PAIRING_ATTEMPTS: usize = 10_000;

/// Largest `n` accepted by the brute-force searches.
pub const MAX_BRUTE_FORCE_N: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularHypergraph {
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub seed: u64,
    /// `n d / p` hyperedges, each a sorted list of `p` distinct nodes.
    pub edges: Vec<Vec<u32>>,
}

impl RegularHypergraph {
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            for &v in e {
                deg[v as usize] += 1;
            }
        }
        deg
    }

    /// Check regularity, uniformity and simplicity.
    pub fn validate(&self) -> Result<()> {
        if self.edges.len() * self.p != self.n * self.d {
            return param("edge count does not match n d / p");
        }
        for (t, e) in self.edges.iter().enumerate() {
            if e.len() != self.p {
                return param(format!("hyperedge {t} has {} nodes", e.len()));
            }
            if e.iter().any(|&v| v as usize >= self.n) {
                return param(format!("hyperedge {t} names a node outside the graph"));
            }
            if e.windows(2).any(|w| w[0] >= w[1]) {
                return param(format!("hyperedge {t} is not a sorted set of distinct nodes"));
            }
        }
        if self.degrees().iter().any(|&g| g != self.d) {
            return param("hypergraph is not regular");
        }
        Ok(())
    }

    fn edge_masks(&self) -> Vec<u64> {
        self.edges
            .iter()
            .map(|e| e.iter().fold(0u64, |a, &v| a | (1 << v)))
            .collect()
    }
}

/// Configuration-model pairing of `n d` stubs into groups of `p`, resampled
/// whole until no group repeats a node. Repeated hyperedges are kept.
pub fn generate_regular_hypergraph(n: usize, d: usize, p: usize, seed: u64) -> Result<RegularHypergraph> {
    pair_stubs(n, d, p, seed, false)
}

/// Like [`generate_regular_hypergraph`] but also resamples while any hyperedge
/// repeats.
pub fn generate_simple_regular_hypergraph(n: usize, d: usize, p: usize, seed: u64) -> Result<RegularHypergraph> {
    pair_stubs(n, d, p, seed, true)
}

fn pair_stubs(n: usize, d: usize, p: usize, seed: u64, simple: bool) -> Result<RegularHypergraph> {
    if p < 2 {
        return param("uniformity p must be at least 2");
    }
    if n == 0 || d == 0 {
        return param("n and d must be positive");
    }
    if !(n * d).is_multiple_of(p) {
        return param(format!("n d = {} is not divisible by p = {p}", n * d));
    }
    if p > n {
        return param(format!("p = {p} exceeds n = {n}"));
    }
    if n > u32::MAX as usize {
        return param("n does not fit 32-bit node indices");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    for _ in 0..MAX_PAIRING_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut edges: Vec<Vec<u32>> = stubs
            .chunks(p)
            .map(|c| {
                let mut e = c.to_vec();
                e.sort_unstable();
                e
            })
            .collect();
        if edges.iter().any(|e| e.windows(2).any(|w| w[0] == w[1])) {
            continue;
        }
        if simple {
            let mut sorted = edges.clone();
            sorted.sort();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                continue;
            }
        }
        edges.shrink_to_fit();
        return Ok(RegularHypergraph { n, d, p, seed, edges });
    }
    Err(LabError::Resource {
        what: "pairing attempts",
        required: MAX_PAIRING_ATTEMPTS as u128 + 1,
        budget: MAX_PAIRING_ATTEMPTS as u128,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingVector {
    pub j: Vec<i8>,
    pub seed: u64,
}

/// I.i.d. uniform `±1` couplings.
pub fn generate_couplings(m: usize, seed: u64) -> CouplingVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CouplingVector {
        j: (0..m).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
        seed,
    }
}

impl CouplingVector {
    pub fn new(j: Vec<i8>, seed: u64) -> Result<Self> {
        if j.iter().any(|&v| v != 1 && v != -1) {
            return param("couplings must be +1 or -1");
        }
        Ok(CouplingVector { j, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfig {
    pub sigma: Vec<i8>,
}

impl SpinConfig {
    pub fn new(sigma: Vec<i8>) -> Result<Self> {
        if sigma.iter().any(|&v| v != 1 && v != -1) {
            return param("spins must be +1 or -1");
        }
        Ok(SpinConfig { sigma })
    }

    /// Bit `i` set iff `sigma_i = -1`.
    pub fn from_bits(n: usize, x: u64) -> Self {
        SpinConfig {
            sigma: (0..n).map(|i| if (x >> i) & 1 == 1 { -1 } else { 1 }).collect(),
        }
    }

    pub fn to_bits(&self) -> Option<u64> {
        (self.sigma.len() <= 64).then(|| {
            self.sigma
                .iter()
                .enumerate()
                .filter(|(_, &s)| s == -1)
                .fold(0u64, |x, (i, _)| x | (1 << i))
        })
    }
}

fn check_dims(g: &RegularHypergraph, j: &CouplingVector) -> Result<()> {
    if j.j.len() != g.m() {
        return param(format!("{} couplings for {} hyperedges", j.j.len(), g.m()));
    }
    Ok(())
}

/// `H(sigma) = sum_e J_e prod_{i in e} sigma_i`.
pub fn energy(g: &RegularHypergraph, j: &CouplingVector, sigma: &SpinConfig) -> Result<i64> {
    check_dims(g, j)?;
    if sigma.sigma.len() != g.n {
        return param(format!("{} spins for {} nodes", sigma.sigma.len(), g.n));
    }
    Ok(g.edges
        .iter()
        .zip(&j.j)
        .map(|(e, &je)| je as i64 * e.iter().map(|&v| sigma.sigma[v as usize] as i64).product::<i64>())
        .sum())
}

/// Energy of a packed configuration using precomputed hyperedge masks.
#[inline]
fn energy_packed(masks: &[u64], j: &[i8], x: u64) -> i64 {
    masks
        .iter()
        .zip(j)
        .map(|(&m, &je)| if (x & m).count_ones() & 1 == 0 { je as i64 } else { -(je as i64) })
        .sum()
}

/// Energy of the packed configuration `x` (bit `i` set iff `sigma_i = -1`).
pub fn energy_bits(g: &RegularHypergraph, j: &CouplingVector, x: u64) -> Result<i64> {
    check_dims(g, j)?;
    if g.n > 64 {
        return param("packed energies need n <= 64");
    }
    Ok(energy_packed(&g.edge_masks(), &j.j, x))
}

const BLOCK_BITS: usize = 14;

fn check_brute(n: usize) -> Result<()> {
    check_budget("brute-force spins", n as u128, MAX_BRUTE_FORCE_N as u128)
}

/// Global minimizer and its energy; ties go to the smallest packed index.
///
/// For even `p` the spin-flip symmetry lets the search fix the last spin to `+1`.
pub fn ground_state_bruteforce(g: &RegularHypergraph, j: &CouplingVector) -> Result<(SpinConfig, i64)> {
    check_dims(g, j)?;
    check_brute(g.n)?;
    let masks = g.edge_masks();
    let bits = if g.p.is_multiple_of(2) { g.n - 1 } else { g.n };
    let block = BLOCK_BITS.min(bits);
    let blocks = 1usize << (bits - block);
    let best = par::fold_range(
        blocks,
        || (i64::MAX, u64::MAX),
        |acc, b| {
            let base = (b as u64) << block;
            (base..base + (1u64 << block)).fold(acc, |acc, x| {
                let e = energy_packed(&masks, &j.j, x);
                if (e, x) < acc {
                    (e, x)
                } else {
                    acc
                }
            })
        },
        |a, b| a.min(b),
    );
    Ok((SpinConfig::from_bits(g.n, best.1), best.0))
}

/// All configurations with `H <= min + slack`, as bit words.
pub fn near_ground_set(g: &RegularHypergraph, j: &CouplingVector, slack: i64) -> Result<SolutionSet> {
    if slack < 0 {
        return param("slack must be nonnegative");
    }
    let (_, min) = ground_state_bruteforce(g, j)?;
    let masks = g.edge_masks();
    let cutoff = min + slack;
    let block = BLOCK_BITS.min(g.n);
    let blocks = 1usize << (g.n - block);
    let members = par::map_range(blocks, |b| {
        let base = (b as u64) << block;
        (base..base + (1u64 << block))
            .filter(|&x| energy_packed(&masks, &j.j, x) <= cutoff)
            .collect::<Vec<_>>()
    })
    .concat();
    Ok(SolutionSet::from_members(g.n, slack as usize, members))
}

/// Local bit patterns (bit `k` = `k`-th node of the edge) whose spin product equals `sign`.
pub fn patterns_with_product(p: usize, sign: i8) -> Vec<u64> {
    let want_parity = if sign == 1 { 0 } else { 1 };
    (0..1u64 << p).filter(|x| x.count_ones() % 2 == want_parity).collect()
}

/// Generalized clauses: each hyperedge forbids its energy-raising patterns.
pub fn constraint_system(g: &RegularHypergraph, j: &CouplingVector) -> Result<ConstraintSystem> {
    check_dims(g, j)?;
    ConstraintSystem::new(
        g.n,
        g.edges
            .iter()
            .zip(&j.j)
            .map(|(e, &je)| LocalConstraint {
                vars: e.clone(),
                forbidden: patterns_with_product(g.p, je),
            })
            .collect(),
    )
}

/// Qubit layout of the quantized instance (`n d` qubits).
pub fn quantize(g: &RegularHypergraph, j: &CouplingVector, qubit_cap: usize) -> Result<QubitLayout> {
    build_layout_from_system(&constraint_system(g, j)?, qubit_cap)
}
