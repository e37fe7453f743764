//! Independent oracles shared by the property and acceptance suites.
//!
//! Nothing here goes through the library's packed tables or qubit layout; the
//! slot model is rebuilt from the raw clauses and hyperedges.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nlts_core::ksat::Formula;
use nlts_core::pspin::{CouplingVector, RegularHypergraph};

/// Constraints as `(variables per slot, forbidden local patterns)`.
#[derive(Debug, Clone)]
pub struct SlotModel {
    pub n: usize,
    pub cons: Vec<(Vec<u32>, Vec<u64>)>,
}

pub fn clause_violated_by(lits: &[(u32, bool)], x: u64) -> bool {
    // Tautologies have no falsifying assignment; the all-false test handles that.
    lits.iter().all(|&(v, neg)| ((x >> v) & 1 == 1) == neg)
}

fn literal_pairs(f: &Formula, j: usize) -> Vec<(u32, bool)> {
    f.clauses()[j]
        .literals()
        .iter()
        .map(|l| (l.var, l.negated))
        .collect()
}

/// Clauses violated by the assignment `x`.
pub fn violations(f: &Formula, x: u64) -> usize {
    (0..f.m())
        .filter(|&j| clause_violated_by(&literal_pairs(f, j), x))
        .count()
}

impl SlotModel {
    pub fn from_formula(f: &Formula) -> Self {
        let cons = (0..f.m())
            .map(|j| {
                let lits = literal_pairs(f, j);
                let tautology = lits
                    .iter()
                    .any(|&(v, s)| lits.iter().any(|&(w, t)| v == w && s != t));
                let pattern = lits
                    .iter()
                    .enumerate()
                    .fold(0u64, |p, (k, &(_, neg))| p | ((neg as u64) << k));
                let forbidden = if tautology { vec![] } else { vec![pattern] };
                (lits.iter().map(|l| l.0).collect(), forbidden)
            })
            .collect();
        SlotModel { n: f.n(), cons }
    }

    pub fn from_pspin(g: &RegularHypergraph, j: &CouplingVector) -> Self {
        let cons = g
            .edges
            .iter()
            .zip(&j.j)
            .map(|(e, &je)| {
                let raising = (0..1u64 << e.len())
                    .filter(|x| {
                        let product = if x.count_ones() % 2 == 0 { 1 } else { -1 };
                        je as i32 * product == 1
                    })
                    .collect();
                (e.clone(), raising)
            })
            .collect();
        SlotModel { n: g.n, cons }
    }

    pub fn qubits(&self) -> usize {
        self.cons.iter().map(|c| c.0.len()).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::new();
        let mut o = 0;
        for c in &self.cons {
            off.push(o);
            o += c.0.len();
        }
        off
    }

    pub fn fiber_mask(&self, i: usize) -> u64 {
        let off = self.offsets();
        let mut m = 0;
        for (j, c) in self.cons.iter().enumerate() {
            for (k, &v) in c.0.iter().enumerate() {
                if v as usize == i {
                    m |= 1 << (off[j] + k);
                }
            }
        }
        m
    }

    pub fn incident(&self, i: usize) -> Vec<usize> {
        (0..self.cons.len())
            .filter(|&j| self.cons[j].0.contains(&(i as u32)))
            .collect()
    }

    pub fn local(&self, z: u64, j: usize) -> u64 {
        let off = self.offsets()[j];
        (z >> off) & ((1u64 << self.cons[j].0.len()) - 1)
    }

    pub fn violated(&self, z: u64, j: usize) -> bool {
        self.cons[j].1.contains(&self.local(z, j))
    }

    /// Violations of an assignment through its slot copy.
    pub fn assignment_violations(&self, x: u64) -> usize {
        let z = self.slot_string(x);
        (0..self.cons.len()).filter(|&j| self.violated(z, j)).count()
    }

    /// Copy every variable onto its slots.
    pub fn slot_string(&self, x: u64) -> u64 {
        let off = self.offsets();
        let mut z = 0;
        for (j, c) in self.cons.iter().enumerate() {
            for (k, &v) in c.0.iter().enumerate() {
                z |= ((x >> v) & 1) << (off[j] + k);
            }
        }
        z
    }

    /// `gamma^{2 viol(z)} / Z` on slot copies of assignments, 0 elsewhere.
    pub fn ground_distribution(&self, gamma: f64) -> Vec<f64> {
        let dim = 1usize << self.qubits();
        let mut w = vec![0.0; dim];
        for x in 0..1u64 << self.n {
            let z = self.slot_string(x) as usize;
            w[z] = gamma.powi(2 * self.assignment_violations(x) as i32);
        }
        let total: f64 = w.iter().sum();
        w.iter().map(|v| v / total).collect()
    }

    /// Dense `Q_i^{-1} (I - |CAT(i)><CAT(i)|) Q_i^{-1}`.
    pub fn dense_h(&self, i: usize, gamma: f64) -> DMatrix<f64> {
        let q = self.qubits();
        let dim = 1usize << q;
        let fm = self.fiber_mask(i);
        let inc = self.incident(i);
        let qinv: Vec<f64> = (0..dim as u64)
            .map(|z| {
                let v = inc.iter().filter(|&&j| self.violated(z, j)).count();
                gamma.powi(-(v as i32))
            })
            .collect();
        let is_const = |z: u64| z & fm == 0 || z & fm == fm;
        DMatrix::from_fn(dim, dim, |a, b| {
            let (za, zb) = (a as u64, b as u64);
            let ident = if a == b { 1.0 } else { 0.0 };
            let proj = if fm == 0 {
                ident
            } else if (za ^ zb) & !fm == 0 && is_const(za) && is_const(zb) {
                0.5
            } else {
                0.0
            };
            qinv[a] * (ident - proj) * qinv[b]
        })
    }
}

pub fn to_dvector(v: &[num_complex::Complex64]) -> (DVector<f64>, DVector<f64>) {
    (
        DVector::from_iterator(v.len(), v.iter().map(|a| a.re)),
        DVector::from_iterator(v.len(), v.iter().map(|a| a.im)),
    )
}

/// Components under `d <= near` by repeated squaring of the boolean adjacency relation.
pub fn closure_components(xs: &[u64], near: u32) -> Vec<Vec<u64>> {
    let len = xs.len();
    let words = len.div_ceil(64);
    let mut reach: Vec<Vec<u64>> = (0..len)
        .map(|a| {
            let mut row = vec![0u64; words];
            for b in 0..len {
                if (xs[a] ^ xs[b]).count_ones() <= near {
                    row[b / 64] |= 1 << (b % 64);
                }
            }
            row
        })
        .collect();
    loop {
        let next: Vec<Vec<u64>> = (0..len)
            .map(|a| {
                let mut row = reach[a].clone();
                for c in 0..len {
                    if reach[a][c / 64] >> (c % 64) & 1 == 1 {
                        for (w, r) in row.iter_mut().zip(&reach[c]) {
                            *w |= r;
                        }
                    }
                }
                row
            })
            .collect();
        if next == reach {
            break;
        }
        reach = next;
    }
    let mut seen = vec![false; len];
    let mut out = Vec::new();
    for a in 0..len {
        if seen[a] {
            continue;
        }
        let members: Vec<usize> = (0..len).filter(|&b| reach[a][b / 64] >> (b % 64) & 1 == 1).collect();
        for &b in &members {
            seen[b] = true;
        }
        let mut comp: Vec<u64> = members.iter().map(|&b| xs[b]).collect();
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort();
    out
}

/// Deterministic 64-bit mixer used to derive test instances from an index.
pub fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
