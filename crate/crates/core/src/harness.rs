//! Experiment orchestration: batch construction, the run loop and sweeps.
//!
//! Every run of every batch materializes one reward matrix of width
//! `max(est_cap, d + (B − d)·K)`; the uniform baseline and all configured
//! policies read prefixes of it. Randomness comes from streams keyed by
//! `(root seed, batch, run, purpose)` (see [`crate::rng`]), so results do not
//! depend on scheduling or thread count.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{MixtureComponent, SyntheticDistribution};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricReport};
use crate::policies::{PolicyKind, PolicySpec};
use crate::rng::{tag, StreamKey};
use crate::sources::{materialize_matrix, PromptUniverse, RewardSourceSpec, SyntheticPrompt};
use crate::types::{BudgetConfig, RewardMatrix, RunRecord};

/// One experiment as read from a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub config: BudgetConfig,
    pub source: RewardSourceSpec,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicySpec>,
    #[serde(default = "default_batches")]
    pub n_batches: usize,
    /// Explicit batches of prompt ids; replaces random batch construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

fn default_policies() -> Vec<PolicySpec> {
    vec![PolicySpec::adabon(Default::default())]
}

fn default_batches() -> usize {
    50
}

/// A one-dimensional sweep. Budget sweeps keep `d/B` and `est_cap/B` fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum Sweep {
    BatchSize(Vec<usize>),
    Budget(Vec<usize>),
    ExplorationFraction(Vec<f64>),
}

impl Sweep {
    pub fn axis(&self) -> &'static str {
        match self {
            Sweep::BatchSize(_) => "batch_size",
            Sweep::Budget(_) => "budget",
            Sweep::ExplorationFraction(_) => "exploration_fraction",
        }
    }

    fn len(&self) -> usize {
        match self {
            Sweep::BatchSize(v) | Sweep::Budget(v) => v.len(),
            Sweep::ExplorationFraction(v) => v.len(),
        }
    }

    fn point(&self, idx: usize, base: &BudgetConfig) -> Result<(f64, BudgetConfig)> {
        let mut config = base.clone();
        let value = match self {
            Sweep::BatchSize(v) => {
                config.batch_size = v[idx];
                v[idx] as f64
            }
            Sweep::Budget(v) => {
                let b = v[idx];
                let scale = b as f64 / base.per_prompt_budget as f64;
                config.per_prompt_budget = b;
                config.exploration_budget =
                    ((base.exploration_budget as f64 * scale).round() as usize).clamp(1, b.max(1));
                config.est_cap = ((base.est_cap as f64 * scale).round() as usize).max(b);
                b as f64
            }
            Sweep::ExplorationFraction(v) => {
                let f = v[idx];
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "exploration fraction {f} outside (0, 1)"
                    )));
                }
                let b = base.per_prompt_budget;
                config.exploration_budget = ((f * b as f64).round() as usize).clamp(1, b);
                f
            }
        };
        Ok((value, config.validate()?))
    }
}

/// `n_batches` batches of `batch_size` distinct indices into `0..universe`,
/// each drawn uniformly without replacement. Batch `b` uses
/// `key.run_stream(b, 0, BATCHES)`; batches may share prompts.
pub fn build_batch_indices(
    universe: usize,
    batch_size: usize,
    n_batches: usize,
    key: StreamKey,
) -> Result<Vec<Vec<usize>>> {
    if batch_size > universe {
        return Err(Error::UniverseTooSmall {
            available: universe,
            required: batch_size,
        });
    }
    Ok((0..n_batches)
        .map(|b| {
            crate::sources::sample_indices(universe, batch_size, key.run_stream(b as u64, 0, tag::BATCHES))
        })
        .collect())
}

/// Batches of prompt ids, deterministic in `seed`.
pub fn build_batches(
    universe: &[String],
    batch_size: usize,
    n_batches: usize,
    seed: u64,
) -> Result<Vec<Vec<String>>> {
    Ok(build_batch_indices(universe.len(), batch_size, n_batches, StreamKey::root(seed))?
        .into_iter()
        .map(|batch| batch.into_iter().map(|i| universe[i].clone()).collect())
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyBatchResult {
    pub policy: String,
    pub report: MetricReport,
    pub records: Vec<RunRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchResult {
    pub batch: usize,
    pub prompts: Vec<String>,
    pub baseline: Vec<RunRecord>,
    pub policies: Vec<PolicyBatchResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    /// Sweep axis name, `none` without a sweep.
    pub axis: String,
    pub value: Option<f64>,
    pub config: BudgetConfig,
    pub batches: Vec<BatchResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub points: Vec<SweepPoint>,
}

/// Runs the experiment; relative paths in the spec resolve against `base_dir`.
pub fn run_experiment(spec: &ExperimentSpec, base_dir: &Path) -> Result<ExperimentResult> {
    let base = spec.config.clone().validate()?;
    if spec.policies.is_empty() {
        return Err(Error::InvalidConfig("no policies configured".into()));
    }
    let universe = PromptUniverse::load(&spec.source, base_dir)?;
    let root = StreamKey::root(base.seed);

    let mut settings = Vec::new();
    match &spec.sweep {
        None => settings.push(("none".to_string(), None, base.clone(), root)),
        Some(sweep) => {
            for idx in 0..sweep.len() {
                let (value, config) = sweep.point(idx, &base)?;
                let key = root.child(tag::SWEEP).child(idx as u64);
                settings.push((sweep.axis().to_string(), Some(value), config, key));
            }
        }
    }

    let mut points = Vec::with_capacity(settings.len());
    for (axis, value, config, key) in settings {
        universe.check_width(config.matrix_width())?;
        let batches = match &spec.batches {
            Some(explicit) => explicit
                .iter()
                .map(|ids| {
                    if ids.len() != config.batch_size {
                        return Err(Error::InvalidConfig(format!(
                            "explicit batch of {} prompts, K = {}",
                            ids.len(),
                            config.batch_size
                        )));
                    }
                    ids.iter().map(|id| universe.index_of(id)).collect()
                })
                .collect::<Result<Vec<Vec<usize>>>>()?,
            None => build_batch_indices(universe.len(), config.batch_size, spec.n_batches, key)?,
        };
        let results = batches
            .par_iter()
            .enumerate()
            .map(|(b, indices)| run_batch(&universe, indices, b, &config, &spec.policies, key))
            .collect::<Result<Vec<_>>>()?;
        points.push(SweepPoint {
            axis,
            value,
            config,
            batches: results,
        });
    }
    Ok(ExperimentResult { points })
}

struct RunOutput {
    matrix: RewardMatrix,
    baseline: RunRecord,
    policies: Vec<RunRecord>,
}

fn run_batch(
    universe: &PromptUniverse,
    indices: &[usize],
    batch: usize,
    config: &BudgetConfig,
    policies: &[PolicySpec],
    key: StreamKey,
) -> Result<BatchResult> {
    let source = universe.source_for(indices);
    let width = config.matrix_width();
    let runs = (0..config.runs)
        .into_par_iter()
        .map(|r| {
            let (b, r) = (batch as u64, r as u64);
            let matrix = materialize_matrix(&source, width, key.run_stream(b, r, tag::MATRIX))?;
            let baseline = PolicySpec::UNIFORM.allocate(&matrix, config, key)?;
            let baseline = RunRecord::from_matrix("uniform", baseline.allocation, &matrix)?;
            let records = policies
                .iter()
                .enumerate()
                .map(|(p, policy)| {
                    if policy.name == PolicyKind::Uniform {
                        return Ok(baseline.clone());
                    }
                    let stream = key.run_stream(b, r, tag::POLICY + p as u64);
                    let outcome = policy.allocate(&matrix, config, stream)?;
                    RunRecord::from_matrix(policy.label(), outcome.allocation, &matrix)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RunOutput {
                matrix,
                baseline,
                policies: records,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut matrices = Vec::with_capacity(runs.len());
    let mut baseline = Vec::with_capacity(runs.len());
    let mut per_policy: Vec<Vec<RunRecord>> = vec![Vec::with_capacity(runs.len()); policies.len()];
    for run in runs {
        matrices.push(run.matrix);
        baseline.push(run.baseline);
        for (slot, rec) in per_policy.iter_mut().zip(run.policies) {
            slot.push(rec);
        }
    }
    let policies = policies
        .iter()
        .zip(per_policy)
        .map(|(policy, records)| {
            Ok(PolicyBatchResult {
                policy: policy.label(),
                report: evaluate(&records, &baseline, &matrices, config)?,
                records,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchResult {
        batch,
        prompts: indices.iter().map(|&i| universe.ids()[i].clone()).collect(),
        baseline,
        policies,
    })
}

/// Synthetic benchmark where adaptivity pays: one prompt in five (at least
/// one per batch) is a high-variance two-component Gaussian mixture, the rest
/// are near-point masses (97% of the mass on one value, 3% slightly above).
/// Parameters are drawn per batch from `seed`. Returns the source spec and the
/// explicit batches.
pub fn mixed_variance_benchmark(
    n_batches: usize,
    batch_size: usize,
    seed: u64,
) -> (RewardSourceSpec, Vec<Vec<String>>) {
    let root = StreamKey::root(seed);
    let mut prompts = Vec::new();
    let mut batches = Vec::with_capacity(n_batches);
    for b in 0..n_batches {
        let mut rng = root.run_stream(b as u64, 0, tag::BATCHES).stream();
        let mut batch = Vec::with_capacity(batch_size);
        let mixtures = ((batch_size + 2) / 5).max(1).min(batch_size);
        let mut slots: Vec<usize> = (0..batch_size).collect();
        for i in 0..mixtures {
            let j = i + rng.below(batch_size - i);
            slots.swap(i, j);
        }
        for slot in 0..batch_size {
            let (id, distribution) = if slots[..mixtures].contains(&slot) {
                let mean = 2.0 * rng.next_f64() - 1.0;
                let gap = 1.5 + 1.5 * rng.next_f64();
                (
                    format!("b{b}-mixture{slot}"),
                    SyntheticDistribution::GaussianMixture {
                        components: vec![
                            MixtureComponent { weight: 0.7, mean, std: 1.0 },
                            MixtureComponent { weight: 0.3, mean: mean + gap, std: 0.5 },
                        ],
                    },
                )
            } else {
                let value = 2.0 * rng.next_f64() - 1.0;
                (
                    format!("b{b}-flat{slot}"),
                    SyntheticDistribution::Discrete {
                        values: vec![value, value + 0.05],
                        probabilities: vec![0.97, 0.03],
                    },
                )
            };
            batch.push(id.clone());
            prompts.push(SyntheticPrompt {
                id: Some(id),
                distribution,
            });
        }
        batches.push(batch);
    }
    (RewardSourceSpec::Synthetic { prompts }, batches)
}
