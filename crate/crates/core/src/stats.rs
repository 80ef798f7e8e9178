//! Summary statistics for benchmark results.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of non-zero differences for which the exact null
/// distribution is used.
pub const EXACT_MAX_PAIRS: usize = 25;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Exact,
    Normal,
    /// Every difference was zero.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs left after dropping zero differences.
    pub n_used: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: PValueMethod,
}

impl WilcoxonResult {
    pub fn significant(&self) -> bool {
        self.p_value < SIGNIFICANCE_LEVEL
    }
}

/// Midranks of `values` (1-based), doubled so ties stay integral.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && values[idx[end + 1]] == values[idx[start]] {
            end += 1;
        }
        // positions start+1 ..= end+1 share rank (start + end + 2) / 2
        let doubled = (start + end + 2) as u64;
        for &k in &idx[start..=end] {
            ranks[k] = doubled;
        }
        start = end + 1;
    }
    ranks
}

/// Number of sign assignments whose doubled positive-rank sum is `s`, for every `s`.
fn signed_rank_counts(doubled_ranks: &[u64]) -> Vec<f64> {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0.0; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0.0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    counts
}

/// Paired two-sided Wilcoxon signed-rank test on `x - y`.
///
/// Zero differences are dropped and tied absolute differences get midranks.
/// Up to [`EXACT_MAX_PAIRS`] remaining pairs the p-value comes from the exact
/// permutation distribution of the (tied) ranks; above that from the normal
/// approximation with tie-corrected variance and no continuity correction.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::usage(format!(
            "paired samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::usage("Wilcoxon test needs at least one pair"));
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| d.is_nan()) {
        return Err(Error::usage("Wilcoxon test on NaN values"));
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            n_used: 0,
            p_value: 1.0,
            method: PValueMethod::Degenerate,
        });
    }

    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_midranks(&abs);
    let plus2: u64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let total2: u64 = ranks.iter().sum();
    let minus2 = total2 - plus2;
    let stat2 = plus2.min(minus2);
    let (w_plus, w_minus, statistic) = (plus2 as f64 / 2.0, minus2 as f64 / 2.0, stat2 as f64 / 2.0);

    let (p_value, method) = if n <= EXACT_MAX_PAIRS {
        let counts = signed_rank_counts(&ranks);
        let tail: f64 = counts[..=stat2 as usize].iter().sum();
        let p = 2.0 * tail / 2f64.powi(n as i32);
        (p.min(1.0), PValueMethod::Exact)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut tie_term = 0.0;
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        for group in sorted.chunk_by(|a, b| a == b) {
            let t = group.len() as f64;
            tie_term += t * t * t - t;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = (statistic - mean) / var.sqrt();
            let normal = Normal::standard();
            (2.0 * normal.cdf(z)).min(1.0)
        };
        (p, PValueMethod::Normal)
    };

    Ok(WilcoxonResult {
        statistic,
        w_plus,
        w_minus,
        n_used: n,
        p_value,
        method,
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Relative gap `(aov - reference) / reference`, as a percentage.
pub fn gap_percent(aov: f64, reference: f64) -> f64 {
    (aov - reference) / reference * 100.0
}
