//! Small combinatorial helpers shared by the enumeration kernels.

/// Exact binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Calls `f` with every `k`-subset of `start..n` (ascending index lists, lexicographic order)
/// that extends `prefix`.
pub fn for_each_combination_from<F: FnMut(&[usize])>(
    n: usize,
    k: usize,
    start: usize,
    prefix: &mut Vec<usize>,
    f: &mut F,
) {
    if k == 0 {
        f(prefix);
        return;
    }
    if start + k > n {
        return;
    }
    for i in start..=(n - k) {
        prefix.push(i);
        for_each_combination_from(n, k - 1, i + 1, prefix, f);
        prefix.pop();
    }
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    let mut prefix = Vec::with_capacity(k);
    for_each_combination_from(n, k, 0, &mut prefix, &mut f);
}

/// `ceil(x * n)` with a tolerance so that e.g. `0.7 * 10` maps to 7, not 8.
pub fn ceil_frac(x: f64, n: usize) -> usize {
    let v = x * n as f64;
    (v - 1e-9).ceil().max(0.0) as usize
}

/// `floor(x * n)` with the matching tolerance.
pub fn floor_frac(x: f64, n: usize) -> usize {
    let v = x * n as f64;
    (v + 1e-9).floor().max(0.0) as usize
}
