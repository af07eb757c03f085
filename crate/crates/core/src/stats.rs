//! Paired significance tests for before/after distance comparisons.
//!
//! Both tests are two-sided against the null of no systematic change.
//! The Wilcoxon test drops exactly-zero differences, uses midranks for
//! tied magnitudes, enumerates the full sign distribution up to 20
//! non-zero differences, and switches to the tie- and
//! continuity-corrected normal approximation above that.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{GapError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignificanceTest {
    PairedT,
    Wilcoxon,
}

/// Two-sided p-value for paired observations. The statistic is computed
/// on `after - before`.
pub fn significance_test(
    before: &[f64],
    after: &[f64],
    test: SignificanceTest,
) -> Result<f64> {
    if before.len() != after.len() {
        return Err(GapError::PairCountMismatch { left: before.len(), right: after.len() });
    }
    let diffs: Vec<f64> = after.iter().zip(before).map(|(a, b)| a - b).collect();
    match test {
        SignificanceTest::PairedT => paired_t_p(&diffs),
        SignificanceTest::Wilcoxon => wilcoxon_p(&diffs),
    }
}

/// Two-sided one-sample t-test on the differences.
pub fn paired_t_p(diffs: &[f64]) -> Result<f64> {
    let n = diffs.len();
    if n < 2 {
        return Err(GapError::TooFewSamples { min: 2, got: n });
    }
    if diffs.iter().all(|&d| d == 0.0) {
        return Ok(1.0);
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        return Err(GapError::ZeroVariance);
    }
    let t = mean / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).expect("valid dof");
    Ok((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

/// Midranks of the absolute differences (ties share their average rank).
/// Returns the ranks aligned with `diffs` and the tie-group sizes.
fn midranks(diffs: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0.0; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0; // mean of 1-based ranks i+1..=j+1
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        tie_sizes.push(j - i + 1);
        i = j + 1;
    }
    (ranks, tie_sizes)
}

fn nonzero(diffs: &[f64]) -> Vec<f64> {
    diffs.iter().copied().filter(|&d| d != 0.0).collect()
}

/// Two-sided Wilcoxon signed-rank p-value; exact enumeration for up to
/// 20 non-zero differences, normal approximation beyond.
pub fn wilcoxon_p(diffs: &[f64]) -> Result<f64> {
    let nz = nonzero(diffs);
    if nz.is_empty() {
        return Ok(1.0);
    }
    if nz.len() <= 20 {
        wilcoxon_exact_p(diffs)
    } else {
        wilcoxon_approx_p(diffs)
    }
}

/// Exact branch: enumerate every sign assignment of the non-zero
/// differences and compare the positive-rank sum against the observed.
pub fn wilcoxon_exact_p(diffs: &[f64]) -> Result<f64> {
    let nz = nonzero(diffs);
    let n = nz.len();
    if n == 0 {
        return Ok(1.0);
    }
    if n > 24 {
        return Err(GapError::InvalidParameter {
            name: "n",
            reason: format!("exact enumeration limited to 24 non-zero differences, got {n}"),
        });
    }
    let (ranks, _) = midranks(&nz);
    let w_obs: f64 = nz
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();

    let total = 1u64 << n;
    let mut count_le = 0u64;
    let mut count_ge = 0u64;
    let eps = 1e-9;
    for mask in 0..total {
        let mut w = 0.0;
        for (bit, r) in ranks.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                w += r;
            }
        }
        if w <= w_obs + eps {
            count_le += 1;
        }
        if w >= w_obs - eps {
            count_ge += 1;
        }
    }
    let tail = count_le.min(count_ge) as f64 / total as f64;
    Ok((2.0 * tail).min(1.0))
}

/// Normal-approximation branch with tie and continuity corrections.
pub fn wilcoxon_approx_p(diffs: &[f64]) -> Result<f64> {
    let nz = nonzero(diffs);
    let n = nz.len();
    if n < 6 {
        return Err(GapError::TooFewSamples { min: 6, got: n });
    }
    let (ranks, tie_sizes) = midranks(&nz);
    let w: f64 = nz
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    if var <= 0.0 {
        return Ok(1.0);
    }
    let centered = w - mean;
    let corrected = centered - 0.5 * centered.signum();
    let z = corrected / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok((2.0 * (1.0 - normal.cdf(z.abs()))).clamp(0.0, 1.0))
}
