//! Evaluation metrics over coupled runs.
//!
//! Every comparison is made on the same [`RewardMatrix`] per run: the policy's
//! per-prompt maxima against the maxima of the first `N` (or `B`) entries of
//! the same rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BudgetConfig, RewardMatrix, RunRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Batch win rate against uniform `B`, ties weighted ½.
    pub bwr: f64,
    /// Batch win-tie rate against uniform `N` for `N = 1..=est_cap`.
    pub bwtr_curve: Vec<f64>,
    /// Expected survival time, `Σ_N bwtr_curve[N]`.
    pub est: f64,
    /// Per-prompt win-tie rate against uniform `B`.
    pub wtr: f64,
    /// Mean of the policy's totals.
    pub mean_total: f64,
    pub runs: usize,
}

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    if left == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// `(#{policy > baseline} + ½·#{policy = baseline}) / R` over paired runs.
pub fn batch_win_rate(policy_totals: &[f64], baseline_totals: &[f64]) -> Result<f64> {
    check_lengths(policy_totals.len(), baseline_totals.len())?;
    let score: f64 = policy_totals
        .iter()
        .zip(baseline_totals)
        .map(|(p, b)| {
            if p > b {
                1.0
            } else if p == b {
                0.5
            } else {
                0.0
            }
        })
        .sum();
    Ok(score / policy_totals.len() as f64)
}

fn check_budget(n: usize, matrices: &[RewardMatrix]) -> Result<()> {
    let width = matrices.iter().map(RewardMatrix::width).min().unwrap_or(0);
    if n == 0 || n > width {
        return Err(Error::InvalidComparisonBudget { n, width });
    }
    Ok(())
}

/// Fraction of runs where the policy's total is at least the uniform-`N`
/// total on the same rows (ties count fully).
pub fn bwtr(records: &[RunRecord], matrices: &[RewardMatrix], n: usize) -> Result<f64> {
    check_lengths(records.len(), matrices.len())?;
    check_budget(n, matrices)?;
    let wins = records
        .iter()
        .zip(matrices)
        .filter(|(r, m)| r.total >= m.uniform_total(n))
        .count();
    Ok(wins as f64 / records.len() as f64)
}

/// `bwtr(N)` for `N = 1..=cap`.
pub fn bwtr_curve(records: &[RunRecord], matrices: &[RewardMatrix], cap: usize) -> Result<Vec<f64>> {
    check_lengths(records.len(), matrices.len())?;
    check_budget(cap, matrices)?;
    (1..=cap).map(|n| bwtr(records, matrices, n)).collect()
}

/// Survival time truncated at `cap`: `Σ_{N=1..cap} bwtr(N)`.
pub fn expected_survival_time(records: &[RunRecord], matrices: &[RewardMatrix], cap: usize) -> Result<f64> {
    Ok(bwtr_curve(records, matrices, cap)?.iter().sum())
}

/// Average over runs and prompts of `[max of A_i draws ≥ max of B draws]`.
pub fn per_prompt_wtr(records: &[RunRecord], matrices: &[RewardMatrix], per_prompt_budget: usize) -> Result<f64> {
    check_lengths(records.len(), matrices.len())?;
    check_budget(per_prompt_budget, matrices)?;
    let mut wins = 0usize;
    let mut total = 0usize;
    for (r, m) in records.iter().zip(matrices) {
        check_lengths(r.per_prompt_max.len(), m.prompts())?;
        for (i, &best) in r.per_prompt_max.iter().enumerate() {
            if best >= m.prefix_max(i, per_prompt_budget) {
                wins += 1;
            }
            total += 1;
        }
    }
    Ok(wins as f64 / total as f64)
}

/// All metrics of one policy against the uniform baseline on one batch.
pub fn evaluate(
    policy: &[RunRecord],
    baseline: &[RunRecord],
    matrices: &[RewardMatrix],
    config: &BudgetConfig,
) -> Result<MetricReport> {
    check_lengths(policy.len(), baseline.len())?;
    let policy_totals: Vec<f64> = policy.iter().map(|r| r.total).collect();
    let baseline_totals: Vec<f64> = baseline.iter().map(|r| r.total).collect();
    let bwr = batch_win_rate(&policy_totals, &baseline_totals)?;
    let bwtr_curve = bwtr_curve(policy, matrices, config.est_cap)?;
    let est = bwtr_curve.iter().sum();
    let wtr = per_prompt_wtr(policy, matrices, config.per_prompt_budget)?;
    Ok(MetricReport {
        bwr,
        bwtr_curve,
        est,
        wtr,
        mean_total: policy_totals.iter().sum::<f64>() / policy_totals.len() as f64,
        runs: policy.len(),
    })
}

/// Moment coefficient of skewness `m3 / m2^(3/2)`, central moments with
/// denominator `n`.
pub fn skewness(samples: &[f64]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::DegenerateVariance(format!(
            "skewness needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (m2, m3) = samples.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = x - mean;
        (a + d * d, b + d * d * d)
    });
    let (m2, m3) = (m2 / n, m3 / n);
    if !(m2 > 0.0) {
        return Err(Error::DegenerateVariance("zero variance".into()));
    }
    Ok(m3 / m2.powf(1.5))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Linear interpolation between order statistics (Hyndman–Fan type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartile_summary(values: &[f64]) -> Result<Quartiles> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Quartiles {
        median: quantile(&sorted, 0.5),
        q1: quantile(&sorted, 0.25),
        q3: quantile(&sorted, 0.75),
    })
}
