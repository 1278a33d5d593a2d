//! Exact distribution of a sum of independent binomial counts.

/// Binomial(n, q) pmf on 0..=n.
///
/// Built by the ratio recurrence outward from the mode and normalized, so the
/// result sums to one up to rounding and never overflows.
pub fn binomial_pmf(n: usize, q: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    if n == 0 || q <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if q >= 1.0 {
        pmf[n] = 1.0;
        return pmf;
    }
    let odds = q / (1.0 - q);
    let mode = (((n + 1) as f64) * q).floor().min(n as f64) as usize;
    pmf[mode] = 1.0;
    for k in mode..n {
        let next = pmf[k] * odds * (n - k) as f64 / (k + 1) as f64;
        if next == 0.0 {
            break;
        }
        pmf[k + 1] = next;
    }
    for k in (1..=mode).rev() {
        let prev = pmf[k] * k as f64 / ((n - k + 1) as f64 * odds);
        if prev == 0.0 {
            break;
        }
        pmf[k - 1] = prev;
    }
    let total = sorted_sum(&pmf);
    pmf.iter_mut().for_each(|p| *p /= total);
    pmf
}

/// Sum of nonnegative terms, smallest first.
pub(crate) fn sorted_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum()
}

/// Direct convolution of two pmfs.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
