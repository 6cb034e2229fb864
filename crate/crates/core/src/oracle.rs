//! Exact expected cumulative reward for small discrete instances, and a
//! Monte Carlo check of any policy against them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::SyntheticDistribution;
use crate::error::{Error, Result};
use crate::policies::PolicySpec;
use crate::rng::{tag, StreamKey};
use crate::sources::{materialize_matrix, RewardSource};
use crate::types::{BudgetConfig, RunRecord};

/// `Σ_i E[max of B draws from dist_i]`.
pub fn exact_uniform_value(dists: &[SyntheticDistribution], per_prompt_budget: usize) -> Result<f64> {
    dists
        .iter()
        .map(|d| d.exact_expected_max(d.support_min()?, per_prompt_budget))
        .sum()
}

/// One exploration outcome of the two-prompt Bernoulli rule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoStageBranch {
    /// Whether each prompt saw a success during exploration.
    pub explored_success: [bool; 2],
    pub probability: f64,
    /// Total queries per prompt, exploration included.
    pub allocation: [usize; 2],
    /// Expected total conditioned on this branch.
    pub value: f64,
}

fn bernoulli_pair(dists: &[SyntheticDistribution]) -> Result<[f64; 2]> {
    match dists {
        [SyntheticDistribution::Bernoulli { p: p1 }, SyntheticDistribution::Bernoulli { p: p2 }] => {
            Ok([*p1, *p2])
        }
        _ => Err(Error::UnsupportedInstance(
            "the two-stage oracle needs exactly two Bernoulli prompts".into(),
        )),
    }
}

fn success_within(p: f64, n: usize) -> f64 {
    1.0 - (1.0 - p).powi(n as i32)
}

/// Branches of the explore-then-commit rule: explore `d` per prompt, then give
/// all `2B − 2d` remaining queries to a prompt that has not yet succeeded, or
/// split them evenly when neither or both have.
pub fn two_stage_branches(
    dists: &[SyntheticDistribution],
    per_prompt_budget: usize,
    exploration: usize,
) -> Result<Vec<TwoStageBranch>> {
    let p = bernoulli_pair(dists)?;
    for d in dists {
        d.validate()?;
    }
    if exploration > per_prompt_budget {
        return Err(Error::InvalidConfig("d exceeds B".into()));
    }
    let (b, d) = (per_prompt_budget, exploration);
    let remaining = 2 * (b - d);
    let explore = [success_within(p[0], d), success_within(p[1], d)];
    let mut branches = Vec::with_capacity(4);
    for s0 in [true, false] {
        for s1 in [true, false] {
            let probability = (if s0 { explore[0] } else { 1.0 - explore[0] })
                * (if s1 { explore[1] } else { 1.0 - explore[1] });
            let (allocation, value) = match (s0, s1) {
                (true, true) => ([b, b], 2.0),
                (true, false) => ([d, d + remaining], 1.0 + success_within(p[1], remaining)),
                (false, true) => ([d + remaining, d], success_within(p[0], remaining) + 1.0),
                (false, false) => (
                    [b, b],
                    success_within(p[0], b - d) + success_within(p[1], b - d),
                ),
            };
            branches.push(TwoStageBranch {
                explored_success: [s0, s1],
                probability,
                allocation,
                value,
            });
        }
    }
    Ok(branches)
}

/// Exact expected total of the two-stage Bernoulli rule.
pub fn exact_two_stage_value(
    dists: &[SyntheticDistribution],
    per_prompt_budget: usize,
    exploration: usize,
) -> Result<f64> {
    Ok(two_stage_branches(dists, per_prompt_budget, exploration)?
        .iter()
        .map(|br| br.probability * br.value)
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub runs: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(MeanEstimate {
            mean,
            standard_error: (var / n).sqrt(),
            runs: xs.len(),
        })
    }

    /// `|mean − target|` in standard errors; 0 when both are exact.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.standard_error
        }
    }
}

/// Mean and standard error of a policy's total over `runs` independent
/// synthetic runs. Run `r` uses `root(seed).run_stream(0, r, ·)`.
pub fn simulate_policy_value(
    policy: PolicySpec,
    dists: &[SyntheticDistribution],
    config: &BudgetConfig,
    runs: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    let totals = simulate_policy_totals(policy, dists, config, runs, seed)?;
    MeanEstimate::from_samples(&totals)
}

/// Per-run totals behind [`simulate_policy_value`].
pub fn simulate_policy_totals(
    policy: PolicySpec,
    dists: &[SyntheticDistribution],
    config: &BudgetConfig,
    runs: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let config = config.clone().validate()?;
    if dists.len() != config.batch_size {
        return Err(Error::LengthMismatch {
            left: dists.len(),
            right: config.batch_size,
        });
    }
    for d in dists {
        d.validate()?;
    }
    let source = RewardSource::Synthetic(dists.to_vec());
    let width = config.matrix_width();
    let root = StreamKey::root(seed);
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let matrix = materialize_matrix(&source, width, root.run_stream(0, r as u64, tag::MATRIX))?;
            let outcome = policy.allocate(&matrix, &config, root.run_stream(0, r as u64, tag::POLICY))?;
            Ok(RunRecord::from_matrix(policy.label(), outcome.allocation, &matrix)?.total)
        })
        .collect()
}

/// Bernoulli instance as read by the `oracle` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleInstance {
    pub probabilities: Vec<f64>,
    pub per_prompt_budget: usize,
    pub exploration_budgets: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub per_prompt_budget: usize,
    pub exploration_budget: usize,
    pub uniform: f64,
    pub two_stage: f64,
    pub gap: f64,
}

pub fn evaluate_instance(instance: &OracleInstance) -> Result<Vec<OracleRow>> {
    let dists: Vec<SyntheticDistribution> = instance
        .probabilities
        .iter()
        .map(|&p| SyntheticDistribution::Bernoulli { p })
        .collect();
    let uniform = exact_uniform_value(&dists, instance.per_prompt_budget)?;
    instance
        .exploration_budgets
        .iter()
        .map(|&d| {
            let two_stage = exact_two_stage_value(&dists, instance.per_prompt_budget, d)?;
            Ok(OracleRow {
                per_prompt_budget: instance.per_prompt_budget,
                exploration_budget: d,
                uniform,
                two_stage,
                gap: two_stage - uniform,
            })
        })
        .collect()
}
