//! Allocation policies: the uniform baseline, greedy allocation on gain
//! vectors, the two-stage adaptive policy and the standard-deviation
//! proportional baseline.
//!
//! All policies read exploration rewards as prefixes of the run's
//! [`RewardMatrix`], so they stay coupled to the uniform baseline.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{sample_std, DensityEstimate, EstimatorKind};
use crate::gain::mc_gain_vector;
use crate::rng::StreamKey;
use crate::types::{Allocation, BudgetConfig, GainVector, RewardMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Adabon,
    Uniform,
    Varbon,
}

/// A policy as named in experiment configs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicySpec {
    pub name: PolicyKind,
    #[serde(default)]
    pub estimator: EstimatorKind,
}

impl PolicySpec {
    pub const UNIFORM: PolicySpec = PolicySpec {
        name: PolicyKind::Uniform,
        estimator: EstimatorKind::Kde,
    };

    pub fn adabon(estimator: EstimatorKind) -> Self {
        PolicySpec {
            name: PolicyKind::Adabon,
            estimator,
        }
    }

    pub fn varbon() -> Self {
        PolicySpec {
            name: PolicyKind::Varbon,
            estimator: EstimatorKind::Kde,
        }
    }

    /// Report label, e.g. `adabon-kde`.
    pub fn label(&self) -> String {
        match self.name {
            PolicyKind::Adabon => format!("adabon-{}", self.estimator),
            PolicyKind::Uniform => "uniform".into(),
            PolicyKind::Varbon => "varbon".into(),
        }
    }

    /// Runs the policy on one matrix. `key` seeds any internal randomness.
    pub fn allocate(
        &self,
        matrix: &RewardMatrix,
        config: &BudgetConfig,
        key: StreamKey,
    ) -> Result<PolicyOutcome> {
        match self.name {
            PolicyKind::Uniform => uniform_policy(config),
            PolicyKind::Adabon => adabon_policy(matrix, config, self.estimator, key),
            PolicyKind::Varbon => varbon_policy(matrix, config),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutcome {
    pub allocation: Allocation,
    /// Exploration draws per prompt (`d` for adaptive policies, 0 for uniform).
    pub exploration_used: Vec<usize>,
    pub gain_vectors: Option<Vec<GainVector>>,
}

#[derive(Debug, PartialEq)]
struct Candidate {
    marginal: f64,
    current: f64,
    granted: usize,
    prompt: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Largest marginal first; ties go to the lowest current value, then the
    // fewest increments so far, then the lowest prompt index.
    fn cmp(&self, other: &Self) -> Ordering {
        self.marginal
            .total_cmp(&other.marginal)
            .then_with(|| other.current.total_cmp(&self.current))
            .then_with(|| other.granted.cmp(&self.granted))
            .then_with(|| other.prompt.cmp(&self.prompt))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn candidate(vector: &GainVector, prompt: usize, granted: usize) -> Candidate {
    Candidate {
        marginal: vector.marginal(granted),
        current: vector.values()[granted],
        granted,
        prompt,
    }
}

/// Hands out `budget` unit increments one at a time, each to the prompt with
/// the largest current marginal gain `V_{i,a_i+1} − V_{i,a_i}`.
///
/// Optimal for monotone concave vectors; a heuristic otherwise. Returns the
/// increments per prompt, summing to exactly `budget`.
pub fn greedy_allocate(vectors: &[GainVector], budget: usize) -> Result<Vec<usize>> {
    if let Some((prompt, v)) = vectors
        .iter()
        .enumerate()
        .find(|(_, v)| v.horizon() < budget)
    {
        return Err(Error::HorizonTooShort {
            prompt,
            horizon: v.horizon(),
            budget,
        });
    }
    let mut counts = vec![0usize; vectors.len()];
    if budget == 0 {
        return Ok(counts);
    }
    let mut heap: BinaryHeap<Candidate> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| candidate(v, i, 0))
        .collect();
    for _ in 0..budget {
        let top = heap.pop().expect("horizon covers the budget");
        let i = top.prompt;
        counts[i] += 1;
        if counts[i] < vectors[i].horizon() {
            heap.push(candidate(&vectors[i], i, counts[i]));
        }
    }
    Ok(counts)
}

/// `B` queries for every prompt, no exploration.
pub fn uniform_policy(config: &BudgetConfig) -> Result<PolicyOutcome> {
    let allocation = Allocation::for_config(
        vec![config.per_prompt_budget; config.batch_size],
        config,
    )?;
    Ok(PolicyOutcome {
        allocation,
        exploration_used: vec![0; config.batch_size],
        gain_vectors: None,
    })
}

fn check_adaptive_shape(matrix: &RewardMatrix, config: &BudgetConfig) -> Result<()> {
    if matrix.prompts() != config.batch_size {
        return Err(Error::LengthMismatch {
            left: matrix.prompts(),
            right: config.batch_size,
        });
    }
    matrix.ensure_width(config.exploration_budget + config.remaining_budget())
}

fn finish_adaptive(
    config: &BudgetConfig,
    increments: Vec<usize>,
    gain_vectors: Option<Vec<GainVector>>,
) -> Result<PolicyOutcome> {
    let d = config.exploration_budget;
    let counts = increments.into_iter().map(|a| a + d).collect();
    Ok(PolicyOutcome {
        allocation: Allocation::for_config(counts, config)?,
        exploration_used: vec![d; config.batch_size],
        gain_vectors,
    })
}

/// Two-stage adaptive Best-of-N.
///
/// Explores `d` draws per prompt (the first `d` entries of each row), fits an
/// estimate per prompt, builds Monte Carlo gain vectors of horizon
/// `(B − d)·K` from `m` replicates, and greedily spends the remaining
/// `(B − d)·K` queries. Prompt `i` uses the stream `key.child(i)`.
pub fn adabon_policy(
    matrix: &RewardMatrix,
    config: &BudgetConfig,
    estimator: EstimatorKind,
    key: StreamKey,
) -> Result<PolicyOutcome> {
    let config = config.clone().validate()?;
    check_adaptive_shape(matrix, &config)?;
    let d = config.exploration_budget;
    let remaining = config.remaining_budget();
    let vectors = (0..config.batch_size)
        .map(|i| {
            let observed = &matrix.row(i)[..d];
            let estimate = DensityEstimate::fit(observed, estimator)?;
            let mut rng = key.child(i as u64).stream();
            mc_gain_vector(observed, &estimate, remaining, config.mc_samples, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let increments = greedy_allocate(&vectors, remaining)?;
    finish_adaptive(&config, increments, Some(vectors))
}

/// Splits `total` in proportion to `weights` by largest remainder; ties on
/// the remainder go to the lower index. Equal split when all weights are 0.
pub fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let k = weights.len();
    if k == 0 {
        return Vec::new();
    }
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = if sum > 0.0 {
        weights.iter().map(|w| w / sum * total as f64).collect()
    } else {
        vec![total as f64 / k as f64; k]
    };
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Spends the remaining budget in proportion to each prompt's exploration
/// standard deviation (denominator `d − 1`).
pub fn varbon_policy(matrix: &RewardMatrix, config: &BudgetConfig) -> Result<PolicyOutcome> {
    let config = config.clone().validate()?;
    check_adaptive_shape(matrix, &config)?;
    let d = config.exploration_budget;
    let sigmas: Vec<f64> = (0..config.batch_size)
        .map(|i| sample_std(&matrix.row(i)[..d]))
        .collect();
    let increments = apportion(&sigmas, config.remaining_budget());
    finish_adaptive(&config, increments, None)
}
