//! Adaptive Best-of-N allocation.
//!
//! A batch of `K` prompts shares a budget of `B·K` reward-model queries. The
//! two-stage policy spends `d` queries per prompt exploring, fits a density
//! estimate to each prompt's rewards, estimates by Monte Carlo how much the
//! expected best reward grows with every further query, and hands out the
//! remaining `(B − d)·K` queries greedily by marginal gain.
//!
//! The crate also carries the uniform and standard-deviation baselines, exact
//! oracles for Bernoulli instances, coupled win-rate and survival-time
//! metrics, reward sources (synthetic, replayed, remote) and an experiment
//! harness with deterministic, thread-count independent seeding.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod gain;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod policies;
pub mod report;
pub mod rng;
pub mod sources;
pub mod types;

pub use distributions::{MixtureComponent, SyntheticDistribution};
pub use error::{Error, Result};
pub use estimators::{scott_bandwidth, DensityEstimate, EstimatorKind};
pub use gain::{exact_gain_vector, mc_gain_vector};
pub use harness::{build_batches, run_experiment, ExperimentResult, ExperimentSpec, Sweep};
pub use metrics::{
    batch_win_rate, bwtr, expected_survival_time, per_prompt_wtr, quartile_summary, skewness, MetricReport,
};
pub use oracle::{exact_two_stage_value, exact_uniform_value, simulate_policy_value};
pub use policies::{
    adabon_policy, greedy_allocate, uniform_policy, varbon_policy, PolicyKind, PolicyOutcome, PolicySpec,
};
pub use rng::{RandomStream, StreamKey};
pub use sources::{load_reward_log, materialize_matrix, RewardSource, RewardSourceSpec};
pub use types::{Allocation, BudgetConfig, GainOrigin, GainVector, RewardMatrix, RunRecord};
