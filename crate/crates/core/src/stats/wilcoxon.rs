use statrs::distribution::{ContinuousCDF, Normal};

use super::{Method, StatsError, TestResult};

/// Largest effective sample size handled by exact enumeration.
pub const EXACT_MAX_N: usize = 20;

/// Signed ranks of the nonzero paired differences.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedRanks {
    /// Average ranks of |d|, in input order of the nonzero differences.
    pub ranks: Vec<f64>,
    /// Whether each difference was positive.
    pub positive: Vec<bool>,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Sizes of tied groups among |d| (only groups larger than one).
    pub tie_groups: Vec<usize>,
}

impl SignedRanks {
    pub fn n(&self) -> usize {
        self.ranks.len()
    }
}

/// Drops zero differences and assigns average ranks to |d|.
pub fn signed_ranks(diffs: &[f64]) -> Result<SignedRanks, StatsError> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(StatsError::NoNonzeroDifferences);
    }
    let n = nonzero.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nonzero[a].abs().total_cmp(&nonzero[b].abs()));

    let mut ranks = vec![0.0; n];
    let mut tie_groups = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && nonzero[order[j]].abs() == nonzero[order[i]].abs() {
            j += 1;
        }
        // positions i..j share the average of ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        if j - i > 1 {
            tie_groups.push(j - i);
        }
        i = j;
    }

    let positive: Vec<bool> = nonzero.iter().map(|&d| d > 0.0).collect();
    let w_plus: f64 = ranks.iter().zip(&positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let w_minus: f64 = ranks.iter().zip(&positive).filter(|(_, &p)| !p).map(|(r, _)| r).sum();

    let total = (n * (n + 1)) as f64 / 2.0;
    assert!(
        (w_plus + w_minus - total).abs() < 1e-9,
        "rank sums {w_plus} + {w_minus} != {total}"
    );

    Ok(SignedRanks { ranks, positive, w_plus, w_minus, tie_groups })
}

/// Two-sided Wilcoxon signed-rank test on paired samples `(a, b)`, using
/// `d = a - b`.
///
/// Zero differences are dropped. With at most [`EXACT_MAX_N`] nonzero
/// differences the p-value is exact: the null distribution of W⁺ over all 2ⁿ
/// sign assignments is counted (average ranks are doubled so ties stay
/// integral). Larger samples use the normal approximation with tie and
/// continuity corrections.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<TestResult, StatsError> {
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    wilcoxon_from_differences(&diffs)
}

pub fn wilcoxon_from_differences(diffs: &[f64]) -> Result<TestResult, StatsError> {
    let sr = signed_ranks(diffs)?;
    let n = sr.n();
    let w = sr.w_plus.min(sr.w_minus);

    if n <= EXACT_MAX_N {
        Ok(TestResult {
            statistic: w,
            p_value: exact_p(&sr),
            method: Method::ExactEnumeration,
            n_effective: n,
            z: None,
            df: None,
        })
    } else {
        let (z, p) = normal_approx(&sr);
        Ok(TestResult {
            statistic: w,
            p_value: p,
            method: Method::NormalApproximation,
            n_effective: n,
            z: Some(z),
            df: None,
        })
    }
}

/// Exact two-sided p-value: `min(1, 2 · P(W⁺ ≤ min(W⁺, W⁻)))`.
pub fn exact_p(sr: &SignedRanks) -> f64 {
    let doubled: Vec<usize> = sr.ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    // counts[s] = number of sign patterns whose doubled W⁺ equals s
    let mut counts = vec![0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0.0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let observed = (sr.w_plus.min(sr.w_minus) * 2.0).round() as usize;
    let tail: f64 = counts[..=observed].iter().sum();
    let total = 2f64.powi(sr.n() as i32);
    (2.0 * tail / total).min(1.0)
}

/// Normal approximation with tie correction on the variance and a 0.5
/// continuity correction. Returns `(z, p)` with `z ≤ 0`.
pub fn normal_approx(sr: &SignedRanks) -> (f64, f64) {
    let n = sr.n() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let tie_adj: f64 = sr
        .tie_groups
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_adj / 48.0;
    let w = sr.w_plus.min(sr.w_minus);
    let dev = ((mean - w) - 0.5).max(0.0);
    let z = -dev / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * normal.cdf(z)).min(1.0);
    (z, p)
}
