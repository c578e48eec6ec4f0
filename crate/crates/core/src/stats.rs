//! Bootstrap intervals, the exact sign test and correlation coefficients.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math;
use crate::rng;

/// 1-based ranks with ties sharing the mean of their positions.
pub fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Linear-interpolated percentile (`q` in `[0, 1]`) of an ascending slice.
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = math::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile bootstrap interval for the mean at confidence `level` (e.g. `0.95`).
/// Returns `None` for an empty sample.
pub fn bootstrap_ci(samples: &[f64], resamples: usize, level: f64, seed: u64) -> Option<(f64, f64)> {
    if samples.is_empty() || resamples == 0 {
        return None;
    }
    let n = samples.len();
    let mut r = rng::rng(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| samples[r.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Some((percentile_sorted(&means, tail), percentile_sorted(&means, 1.0 - tail)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignTest {
    pub n_plus: u64,
    pub n_minus: u64,
    pub p_value: f64,
    /// No discordant pairs; `p_value` is 1 by convention.
    pub degenerate: bool,
}

fn ln_choose(n: u64, k: u64) -> f64 {
    math::ln_gamma(n as f64 + 1.0) - math::ln_gamma(k as f64 + 1.0) - math::ln_gamma((n - k) as f64 + 1.0)
}

/// Two-sided exact binomial test at `p = 1/2` over `n_plus + n_minus` discordant pairs.
pub fn exact_sign_test(n_plus: u64, n_minus: u64) -> SignTest {
    let n = n_plus + n_minus;
    if n == 0 {
        return SignTest { n_plus, n_minus, p_value: 1.0, degenerate: true };
    }
    let k = n_plus.min(n_minus);
    let ln_half_n = n as f64 * math::ln(0.5);
    // log-sum-exp over the lower tail
    let terms: Vec<f64> = (0..=k).map(|i| ln_choose(n, i) + ln_half_n).collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = top + math::ln(terms.iter().map(|t| math::exp(t - top)).sum::<f64>());
    let p = (math::exp(tail + math::ln(2.0))).min(1.0);
    SignTest { n_plus, n_minus, p_value: p, degenerate: false }
}

/// Pearson product-moment correlation; `None` for mismatched, too short or constant input.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = math::mean(x);
    let my = math::mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / math::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() {
        return None;
    }
    pearson(&midranks(x), &midranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Correlations {
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
}

/// Both coefficients; requires at least three paired values.
pub fn correlations(x: &[f64], y: &[f64]) -> Correlations {
    if x.len() != y.len() || x.len() < 3 {
        return Correlations { pearson: None, spearman: None };
    }
    Correlations { pearson: pearson(x, y), spearman: spearman(x, y) }
}
