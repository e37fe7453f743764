//! Closed-form exponents, bounds and parameter-regime scans.
//!
//! Everything is in nats unless a function says otherwise.

use std::f64::consts::{E, LN_2};

use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Result};
use crate::par;

/// A value together with whether its defining hypothesis held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flagged {
    pub value: f64,
    pub in_regime: bool,
}

/// `H(x) = -x ln x - (1-x) ln(1-x)`, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("entropy argument {x} outside [0, 1]"));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.ln() };
    Ok(term(x) + term(1.0 - x))
}

/// `C(alpha, s, K) = ln2 + H(s) - 2 ln2 alpha + ln2 alpha s^K`.
pub fn rate_exponent(alpha: f64, s: f64, k: u32) -> Result<f64> {
    let h = binary_entropy(s)?;
    // Grouped so that s = 1 gives ln2 (1 - alpha) bit for bit.
    Ok(LN_2 * ((1.0 - alpha) - alpha * (1.0 - s.powi(k as i32))) + h)
}

/// Pair exponent `ln2 + H(s) + alpha 2^K ln2 ln(1 - (2/2^K - 2^-K s^K))`.
pub fn z2_exponent(alpha: f64, s: f64, k: u32) -> Result<f64> {
    let h = binary_entropy(s)?;
    let two_k = 2f64.powi(k as i32);
    let x = 2.0 / two_k - s.powi(k as i32) / two_k;
    if x >= 1.0 {
        return domain(format!("inner logarithm argument {} is not positive", 1.0 - x));
    }
    Ok(LN_2 + h + alpha * two_k * LN_2 * (-x).ln_1p())
}

/// `beta < 2^K ln2 - ((K+1) ln2 + 3)/2` and `K >= 3`.
pub fn sat_count_regime(beta: f64, k: u32) -> bool {
    k >= 3 && beta < 2f64.powi(k as i32) * LN_2 - ((k as f64 + 1.0) * LN_2 + 3.0) / 2.0
}

/// Lower bound on `(1/n) ln |SAT|` at clause density `beta = m/n`.
pub fn sat_count_lower_bound(beta: f64, k: u32) -> Result<Flagged> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return param(format!("density {beta} must be finite and nonnegative"));
    }
    if k == 0 {
        return param("clause width must be positive");
    }
    let kf = k as f64;
    let p = |e: f64| 2f64.powf(e);
    let inner = 1.0 - p(1.0 - kf) + p(-2.0 * kf)
        - kf * p(-kf) * (1.0 - p(-kf)) * (p(1.0 - kf) + 3.0 * kf * p(-2.0 * kf));
    if inner <= 0.0 {
        return domain(format!("logarithm argument {inner} is not positive at K = {k}"));
    }
    Ok(Flagged {
        value: LN_2 + 0.5 * beta * inner.ln(),
        in_regime: sat_count_regime(beta, k),
    })
}

/// `2^K (1 - (1-eps)^K)`, the expected uncovered-clause fraction.
fn coverage_loss(eps: f64, k: u32) -> f64 {
    -2f64.powi(k as i32) * (k as f64 * (-eps).ln_1p()).exp_m1()
}

/// Per-variable log of the union bound `eps ln(e/eps) - (eta - 2^K(1-(1-eps)^K))^2 / 2^(K+1)`.
///
/// In regime when `eta` exceeds the coverage loss; a negative in-regime value
/// certifies the deficit event at exponential rate.
pub fn azuma_tail(eta: f64, eps: f64, k: u32) -> Result<Flagged> {
    if !(0.0..1.0).contains(&eps) {
        return param(format!("eps = {eps} outside [0, 1)"));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return param(format!("eta = {eta} must be finite and nonnegative"));
    }
    let loss = coverage_loss(eps, k);
    let entropy = if eps == 0.0 { 0.0 } else { eps * (E / eps).ln() };
    Ok(Flagged {
        value: entropy - (eta - loss).powi(2) / 2f64.powi(k as i32 + 1),
        in_regime: eta > loss,
    })
}

/// `g0(eps) = 2 eps ln(e / (2 eps))`.
pub fn g0(eps: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&eps) {
        return param(format!("eps = {eps} outside [0, 1/2]"));
    }
    Ok(if eps == 0.0 { 0.0 } else { 2.0 * eps * (E / (2.0 * eps)).ln() })
}

/// Base of the outer logarithm in [`depth_lower_bound`]; the inner `ln(1/mu)` is natural.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    Two,
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthBound {
    pub value: f64,
    pub vacuous: bool,
    pub base: LogBase,
}

/// `T >= (1/3) log(d^2 / (400 n ln(1/mu)))`.
pub fn depth_lower_bound(d: f64, n_bits: f64, mu: f64, base: LogBase) -> Result<DepthBound> {
    if !(mu > 0.0 && mu < 1.0) {
        return domain(format!("mu = {mu} outside (0, 1)"));
    }
    if !(d >= 0.0 && d.is_finite()) {
        return param(format!("distance {d} must be finite and nonnegative"));
    }
    if !(n_bits >= 1.0 && n_bits.is_finite()) {
        return param(format!("bit count {n_bits} must be at least 1"));
    }
    let arg = d * d / (400.0 * n_bits * (1.0 / mu).ln());
    let log = match base {
        LogBase::Two => arg.log2(),
        LogBase::Natural => arg.ln(),
    };
    let value = log / 3.0;
    Ok(DepthBound {
        value,
        vacuous: value <= 0.0,
        base,
    })
}

/// One point of the parameter space used by the clustering and probability arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub alpha: f64,
    pub k: u32,
    pub eps: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub eta: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub delta: f64,
}

impl RegimeParams {
    /// Largest admissible `delta`: `(1/7) ln2 (1 - alpha)`.
    pub fn delta_max(alpha: f64) -> f64 {
        LN_2 * (1.0 - alpha) / 7.0
    }

    pub fn c1(&self) -> f64 {
        0.5 * LN_2 * (1.0 - self.alpha) + 2.0 * self.delta
    }

    pub fn c2(&self) -> f64 {
        LN_2 * (1.0 - self.alpha) - self.delta
    }
}

/// Each constraint as a flag with its two sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    fn lt(lhs: f64, rhs: f64) -> Self {
        Inequality {
            lhs,
            rhs,
            holds: lhs < rhs,
        }
    }

    fn le(lhs: f64, rhs: f64) -> Self {
        Inequality {
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub c1: f64,
    pub c2: f64,
    /// `delta <= (1/7) ln2 (1 - alpha)`.
    pub delta_ok: Inequality,
    /// `gamma^(2 lambda) < 1/8`.
    pub gamma_lambda: Inequality,
    /// `(2/gamma)^(4 K eta) <= 2^((c2 - c1)/2)`.
    pub params1: Inequality,
    /// `gamma^(2 lambda - 3 K eta) < 1/8`.
    pub params2: Inequality,
    /// `4 K eta < 1`.
    pub params3: Inequality,
}

impl ConsistencyReport {
    pub fn all_hold(&self) -> bool {
        self.delta_ok.holds
            && self.gamma_lambda.holds
            && self.params1.holds
            && self.params2.holds
            && self.params3.holds
    }
}

pub fn check_parameter_consistency(p: &RegimeParams) -> ConsistencyReport {
    let (c1, c2) = (p.c1(), p.c2());
    let kf = p.k as f64;
    ConsistencyReport {
        c1,
        c2,
        delta_ok: Inequality::le(p.delta, RegimeParams::delta_max(p.alpha)),
        gamma_lambda: Inequality::lt(p.gamma.powf(2.0 * p.lambda), 0.125),
        params1: Inequality::le(
            (2.0 / p.gamma).powf(4.0 * kf * p.eta),
            2f64.powf((c2 - c1) / 2.0),
        ),
        params2: Inequality::lt(p.gamma.powf(2.0 * p.lambda - 3.0 * kf * p.eta), 0.125),
        params3: Inequality::lt(4.0 * kf * p.eta, 1.0),
    }
}

/// Grid maximum of `C(alpha, s, K)` over `s ∈ [lo, hi]` with the given step (endpoints included).
pub fn max_rate_on(alpha: f64, k: u32, lo: f64, hi: f64, step: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi || step <= 0.0 {
        return param(format!("bad window [{lo}, {hi}] with step {step}"));
    }
    let steps = ((hi - lo) / step).floor() as usize;
    let mut best = rate_exponent(alpha, hi, k)?;
    for t in 0..=steps {
        best = best.max(rate_exponent(alpha, lo + t as f64 * step, k)?);
    }
    Ok(best)
}

/// Grids searched by [`scan_regime`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrids {
    /// Linear step for the overlap window `s`.
    pub s_step: f64,
    pub nu2: Vec<f64>,
    /// `nu1` values as fractions of `nu2 / 2`.
    pub nu1_fraction: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `delta` values as fractions of the admissible maximum.
    pub delta_fraction: Vec<f64>,
    /// Candidate `eta`, tried largest first.
    pub eta: Vec<f64>,
    /// Candidate `eps`, tried largest first.
    pub eps: Vec<f64>,
    /// Required sup of the rate exponent on the window.
    pub rate_ceiling: f64,
}

impl Default for ScanGrids {
    fn default() -> Self {
        ScanGrids {
            s_step: 0.005,
            nu2: (1..50).map(|t| t as f64 / 100.0).collect(),
            nu1_fraction: vec![0.25, 0.5, 0.75],
            gamma: (1..=8).map(|t| 2f64.powi(-t)).collect(),
            lambda: vec![0.05, 0.1, 0.25, 0.5],
            delta_fraction: vec![1.0, 0.5, 0.25],
            eta: (1..=15).map(|t| 10f64.powi(-t)).collect(),
            eps: (1..=60).map(|t| 10f64.powi(-t)).collect(),
            rate_ceiling: -LN_2 / 20.0,
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub params: RegimeParams,
    pub sup_rate: f64,
    pub rate_ok: bool,
    pub consistency: ConsistencyReport,
    pub azuma: Flagged,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    pub fn feasible(&self) -> Vec<RegimeParams> {
        self.rows.iter().filter(|r| r.feasible).map(|r| r.params).collect()
    }
}

/// Search the grid for parameter tuples meeting the rate, consistency and
/// coverage conditions. `eta` and `eps` are taken as the largest grid values
/// that work; when none does the smallest is reported with its failing flags.
pub fn scan_regime(alpha: f64, ks: &[u32], grids: &ScanGrids) -> Result<ScanResult> {
    if !(alpha > 0.7 && alpha < 1.0) {
        return param(format!("alpha = {alpha} outside (0.7, 1)"));
    }
    if ks.iter().any(|&k| k == 0 || k > 1000) {
        return param("clause widths must lie in 1..=1000");
    }
    let mut windows = Vec::new();
    for &k in ks {
        for &nu2 in &grids.nu2 {
            for &f in &grids.nu1_fraction {
                let nu1 = f * nu2 / 2.0;
                if nu1 > 0.0 && nu1 < nu2 / 2.0 && nu2 < 1.0 {
                    windows.push((k, nu1, nu2));
                }
            }
        }
    }
    let sups = par::map_range(windows.len(), |w| {
        let (k, nu1, nu2) = windows[w];
        max_rate_on(alpha, k, 1.0 - nu2, 1.0 - nu1, grids.s_step)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::new();
    for (w, &sup) in sups.iter().enumerate() {
        for &gamma in &grids.gamma {
            for &lambda in &grids.lambda {
                for &df in &grids.delta_fraction {
                    points.push((w, sup, gamma, lambda, df * RegimeParams::delta_max(alpha)));
                }
            }
        }
    }
    let rows = par::map_range(points.len(), |t| {
        let (w, sup, gamma, lambda, delta) = points[t];
        let (k, nu1, nu2) = windows[w];
        let mut params = RegimeParams {
            alpha,
            k,
            eps: 0.0,
            lambda,
            gamma,
            eta: *grids.eta.last().unwrap_or(&0.0),
            nu1,
            nu2,
            delta,
        };
        if let Some(&eta) = grids.eta.iter().find(|&&eta| {
            check_parameter_consistency(&RegimeParams { eta, ..params }).all_hold()
        }) {
            params.eta = eta;
        }
        let tail = |eps| azuma_tail(params.eta, eps, k).expect("grid eps in range");
        params.eps = grids
            .eps
            .iter()
            .copied()
            .find(|&eps| {
                let a = tail(eps);
                a.in_regime && a.value < 0.0
            })
            .or(grids.eps.last().copied())
            .unwrap_or(0.0);
        let consistency = check_parameter_consistency(&params);
        let azuma = tail(params.eps);
        let rate_ok = sup <= grids.rate_ceiling;
        ScanRow {
            params,
            sup_rate: sup,
            rate_ok,
            consistency,
            azuma,
            feasible: rate_ok && consistency.all_hold() && azuma.in_regime && azuma.value < 0.0,
        }
    });
    Ok(ScanResult { rows })
}
