//! Exhaustive enumeration of near-satisfying assignments, overlap histograms,
//! overlap-gap detection and the induced clustering.
//!
//! Assignments are `u64` words with bit `i` holding `x_i`, so every kernel here
//! is limited to `n <= 64`; the enumeration cap keeps it far below that.

use serde::{Deserialize, Serialize};

use crate::combin::{binomial, ceil_frac, floor_frac, for_each_combination};
use crate::error::{check_budget, param, LabError, Result};
use crate::ksat::{clauses_within, Formula, PackedClause, VarSet};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationConfig {
    /// Largest `n` accepted by the `2^n` sweeps.
    pub max_n: usize,
    /// Assignments per work unit are `2^block_bits`.
    pub block_bits: u32,
    /// Largest set handed to the `O(|A|^2)` pair kernels.
    pub max_pairs_set: usize,
    /// Cap on `choose(n, excluded) * 2^n` for the union over restrictions.
    pub eps_budget: u128,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        EnumerationConfig {
            max_n: 30,
            block_bits: 16,
            max_pairs_set: 1 << 20,
            eps_budget: 1 << 36,
        }
    }
}

/// Assignments violating at most `r` clauses of `C(S)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub n: usize,
    pub r: usize,
    /// Sorted, duplicate-free.
    pub members: Vec<u64>,
    /// Variables of the restriction; `None` means all of `[n]`.
    pub restriction: Option<Vec<usize>>,
}

impl SolutionSet {
    /// Wrap an arbitrary member list (sorted and deduplicated here).
    pub fn from_members(n: usize, r: usize, mut members: Vec<u64>) -> Self {
        members.sort_unstable();
        members.dedup();
        SolutionSet {
            n,
            r,
            members,
            restriction: None,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn is_subset(&self, other: &SolutionSet) -> bool {
        self.members.iter().all(|&x| other.contains(x))
    }
}

fn check_n(n: usize, cfg: &EnumerationConfig) -> Result<()> {
    check_budget("enumeration variables", n as u128, cfg.max_n.min(63) as u128)
}

/// Packed clauses of `C(S)` (all clauses when `s` is `None`).
fn restricted_table(f: &Formula, s: Option<&VarSet>) -> Vec<PackedClause> {
    let idx: Vec<usize> = match s {
        Some(s) => clauses_within(f, s),
        None => (0..f.m()).collect(),
    };
    idx.into_iter()
        .filter_map(|j| f.clauses()[j].packed())
        .collect()
}

/// Sweep `{0,1}^n` in independent blocks, keeping words with at most `r` violations.
fn sweep(n: usize, r: usize, table: &[PackedClause], block_bits: u32) -> Vec<u64> {
    let total: u64 = 1 << n;
    let block_bits = block_bits.min(n as u32);
    let block_len: u64 = 1 << block_bits;
    let blocks = (total / block_len) as usize;
    let low_mask = block_len - 1;

    // Clauses living entirely in the block-fixed high bits are checked once per block.
    let (high, low): (Vec<PackedClause>, Vec<PackedClause>) =
        table.iter().partition(|c| c.mask & low_mask == 0);

    let per_block = par::map_range(blocks, |b| {
        let base = (b as u64) << block_bits;
        let fixed = high.iter().filter(|c| c.violated_by(base)).count();
        if fixed > r {
            return Vec::new();
        }
        let budget = r - fixed;
        let mut out = Vec::new();
        for x in base..base + block_len {
            let mut v = 0usize;
            let mut ok = true;
            for c in &low {
                if c.violated_by(x) {
                    v += 1;
                    if v > budget {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                out.push(x);
            }
        }
        out
    });
    per_block.concat()
}

/// Every assignment in `{0,1}^n` violating at most `r` clauses of `C(S)`.
pub fn enumerate_sat(
    f: &Formula,
    r: usize,
    s: Option<&VarSet>,
    cfg: &EnumerationConfig,
) -> Result<SolutionSet> {
    let n = f.n();
    check_n(n, cfg)?;
    if let Some(s) = s {
        if s.universe() != n {
            return param("restriction universe does not match formula n");
        }
    }
    let table = restricted_table(f, s);
    let members = sweep(n, r, &table, cfg.block_bits);
    Ok(SolutionSet {
        n,
        r,
        members,
        restriction: s.map(|s| s.iter().collect()),
    })
}

/// Union of `enumerate_sat(f, r, S)` over all `S` with `|S| = n - ceil(eps * n)`.
pub fn enumerate_sat_eps(
    f: &Formula,
    eps: f64,
    r: usize,
    cfg: &EnumerationConfig,
) -> Result<SolutionSet> {
    if !(0.0..1.0).contains(&eps) {
        return param(format!("eps must lie in [0, 1), got {eps}"));
    }
    let n = f.n();
    let excluded = ceil_frac(eps, n);
    enumerate_sat_excluding(f, excluded, r, cfg)
}

/// Union over all restrictions that drop exactly `excluded` variables.
pub fn enumerate_sat_excluding(
    f: &Formula,
    excluded: usize,
    r: usize,
    cfg: &EnumerationConfig,
) -> Result<SolutionSet> {
    let n = f.n();
    check_n(n, cfg)?;
    if excluded > n {
        return param(format!("cannot exclude {excluded} of {n} variables"));
    }
    let subsets = binomial(n as u64, excluded as u64);
    check_budget(
        "restricted enumeration",
        subsets.saturating_mul(1u128 << n),
        cfg.eps_budget,
    )?;
    if excluded == 0 {
        return enumerate_sat(f, r, None, cfg);
    }
    let mut seen = vec![0u64; (1usize << n).div_ceil(64)];
    let mut tables: Vec<Vec<PackedClause>> = Vec::new();
    for_each_combination(n, excluded, |t| {
        let mut s = VarSet::full(n);
        for &i in t {
            s.remove(i);
        }
        tables.push(restricted_table(f, Some(&s)));
    });
    // Identical clause tables give identical sets.
    tables.sort_by(|a, b| {
        a.iter()
            .map(|c| (c.mask, c.pattern))
            .cmp(b.iter().map(|c| (c.mask, c.pattern)))
    });
    tables.dedup();
    for table in &tables {
        for x in sweep(n, r, table, cfg.block_bits) {
            seen[(x / 64) as usize] |= 1 << (x % 64);
        }
    }
    let members = seen
        .iter()
        .enumerate()
        .flat_map(|(w, &word)| {
            (0..64)
                .filter(move |b| (word >> b) & 1 == 1)
                .map(move |b| (w as u64) * 64 + b)
        })
        .collect();
    Ok(SolutionSet {
        n,
        r,
        members,
        restriction: None,
    })
}

/// Unordered pair counts by Hamming distance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapHistogram {
    pub n: usize,
    /// `counts[d]` for `d` in `0..=n`.
    pub counts: Vec<u64>,
}

impl OverlapHistogram {
    pub fn total_pairs(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts indexed by overlap `t = n - d`.
    pub fn by_overlap(&self) -> Vec<u64> {
        self.counts.iter().rev().copied().collect()
    }
}

fn check_pairs(len: usize, cfg: &EnumerationConfig) -> Result<()> {
    check_budget("pairwise set size", len as u128, cfg.max_pairs_set as u128)
}

pub fn overlap_histogram(a: &SolutionSet, cfg: &EnumerationConfig) -> Result<OverlapHistogram> {
    check_pairs(a.len(), cfg)?;
    Ok(OverlapHistogram {
        n: a.n,
        counts: pair_histogram(a.n, &a.members),
    })
}

/// The pair-counting kernel on bare words.
pub fn pair_histogram(n: usize, xs: &[u64]) -> Vec<u64> {
    let len = xs.len();
    par::fold_range(
        len,
        || vec![0u64; n + 1],
        |mut acc, i| {
            let xi = xs[i];
            for &xj in &xs[i + 1..] {
                acc[(xi ^ xj).count_ones() as usize] += 1;
            }
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    )
}

/// Integer distance thresholds `floor(nu1 n)` and `ceil(nu2 n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapThresholds {
    pub near: u32,
    pub far: u32,
}

impl GapThresholds {
    pub fn new(n: usize, nu1: f64, nu2: f64) -> Result<Self> {
        if !(nu1 > 0.0 && nu1 < nu2 && nu2.is_finite()) {
            return param(format!(
                "overlap gap interval must satisfy 0 < nu1 < nu2, got ({nu1}, {nu2})"
            ));
        }
        Ok(GapThresholds {
            near: floor_frac(nu1, n) as u32,
            far: ceil_frac(nu2, n) as u32,
        })
    }

    /// Distance strictly inside the forbidden band.
    pub fn forbidden(&self, d: u32) -> bool {
        d > self.near && d < self.far
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairWitness {
    pub x: u64,
    pub y: u64,
    pub distance: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OgpReport {
    pub holds: bool,
    pub thresholds: GapThresholds,
    /// First offending pair in member order.
    pub witness: Option<PairWitness>,
}

/// Whether no pair of members has normalized distance strictly inside `(nu1, nu2)`.
pub fn detect_ogp(a: &SolutionSet, nu1: f64, nu2: f64, cfg: &EnumerationConfig) -> Result<OgpReport> {
    let th = GapThresholds::new(a.n, nu1, nu2)?;
    check_pairs(a.len(), cfg)?;
    let xs = &a.members;
    let witness = par::find_first(xs.len(), |i| {
        let xi = xs[i];
        xs[i + 1..].iter().find_map(|&xj| {
            let d = (xi ^ xj).count_ones();
            th.forbidden(d).then_some(PairWitness {
                x: xi,
                y: xj,
                distance: d,
            })
        })
    });
    Ok(OgpReport {
        holds: witness.is_none(),
        thresholds: th,
        witness,
    })
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub n: usize,
    pub nu1: f64,
    pub nu2: f64,
    /// Each cluster sorted; clusters ordered by their smallest member.
    pub clusters: Vec<Vec<u64>>,
    pub max_intra: u32,
    /// `None` with fewer than two clusters.
    pub min_inter: Option<u32>,
}

impl ClusterPartition {
    pub fn total(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }
}

/// The unique `(nu1, nu2)`-clustering of a set with the overlap gap property.
pub fn cluster(a: &SolutionSet, nu1: f64, nu2: f64, cfg: &EnumerationConfig) -> Result<ClusterPartition> {
    if nu1 >= nu2 / 2.0 {
        return param(format!("clustering needs nu1 < nu2 / 2, got ({nu1}, {nu2})"));
    }
    let ogp = detect_ogp(a, nu1, nu2, cfg)?;
    if let Some(w) = ogp.witness {
        return Err(LabError::Contract(format!(
            "overlap gap fails: {:#b} and {:#b} at distance {}",
            w.x, w.y, w.distance
        )));
    }
    let th = ogp.thresholds;
    let xs = &a.members;

    // Under the gap the near relation is an equivalence, so linking every member
    // to one later neighbour already connects each class.
    let links = par::map_range(xs.len(), |i| {
        let xi = xs[i];
        xs[i + 1..]
            .iter()
            .position(|&xj| (xi ^ xj).count_ones() <= th.near)
            .map(|off| i + 1 + off)
    });
    let mut uf = UnionFind::new(xs.len());
    for (i, j) in links.iter().enumerate() {
        if let Some(j) = j {
            uf.union(i, *j);
        }
    }
    let mut label = vec![usize::MAX; xs.len()];
    let mut clusters: Vec<Vec<u64>> = Vec::new();
    let mut root_label = std::collections::HashMap::new();
    for i in 0..xs.len() {
        let root = uf.find(i);
        let l = *root_label.entry(root).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        label[i] = l;
        clusters[l].push(xs[i]);
    }
    // Canonical form regardless of input order.
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort_unstable_by_key(|c| c[0]);

    let (max_intra, min_inter) = certificates(xs, &label);
    if max_intra > th.near || min_inter.is_some_and(|d| d < th.far) {
        return Err(LabError::Contract(format!(
            "cluster certificates fail: max intra {max_intra}, min inter {min_inter:?}, thresholds {th:?}"
        )));
    }
    Ok(ClusterPartition {
        n: a.n,
        nu1,
        nu2,
        clusters,
        max_intra,
        min_inter,
    })
}

/// Max intra-cluster and min inter-cluster distance for labelled words.
pub fn certificates(xs: &[u64], label: &[usize]) -> (u32, Option<u32>) {
    par::fold_range(
        xs.len(),
        || (0u32, None::<u32>),
        |(mut intra, mut inter), i| {
            for j in i + 1..xs.len() {
                let d = (xs[i] ^ xs[j]).count_ones();
                if label[i] == label[j] {
                    intra = intra.max(d);
                } else {
                    inter = Some(inter.map_or(d, |v: u32| v.min(d)));
                }
            }
            (intra, inter)
        },
        |a, b| {
            let inter = match (a.1, b.1) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            };
            (a.0.max(b.0), inter)
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub clusters: usize,
    pub total: usize,
    pub max_size: usize,
    pub max_fraction: f64,
    /// `max_size <= exp(c1 n)`.
    pub max_size_within_c1: bool,
    /// `total >= exp(c2 n)`.
    pub total_at_least_c2: bool,
}

pub fn cluster_stats(p: &ClusterPartition, c1: f64, c2: f64) -> ClusterStats {
    let total = p.total();
    let max_size = p.clusters.iter().map(Vec::len).max().unwrap_or(0);
    let n = p.n as f64;
    ClusterStats {
        clusters: p.clusters.len(),
        total,
        max_size,
        max_fraction: if total == 0 {
            0.0
        } else {
            max_size as f64 / total as f64
        },
        max_size_within_c1: (max_size as f64).ln() <= c1 * n || max_size == 0,
        total_at_least_c2: total > 0 && (total as f64).ln() >= c2 * n,
    }
}
