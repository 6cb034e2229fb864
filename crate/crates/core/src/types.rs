//! Domain types shared by every module: budget configuration, allocations,
//! reward matrices, gain vectors and per-run records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Budget and run parameters for one experiment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBudgetConfig")]
pub struct BudgetConfig {
    /// Per-prompt budget `B` (queries).
    pub per_prompt_budget: usize,
    /// Prompts per batch `K`.
    pub batch_size: usize,
    /// Exploration queries per prompt `d`.
    pub exploration_budget: usize,
    /// Monte Carlo replicates `m` per gain vector.
    pub mc_samples: usize,
    /// Largest comparison budget `N` in the survival-time sum.
    pub est_cap: usize,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudgetConfig {
    per_prompt_budget: usize,
    batch_size: usize,
    exploration_budget: usize,
    #[serde(default = "default_mc_samples")]
    mc_samples: usize,
    est_cap: Option<usize>,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default)]
    seed: u64,
}

fn default_mc_samples() -> usize {
    1024
}

fn default_runs() -> usize {
    100
}

impl TryFrom<RawBudgetConfig> for BudgetConfig {
    type Error = Error;

    fn try_from(raw: RawBudgetConfig) -> Result<Self> {
        BudgetConfig {
            per_prompt_budget: raw.per_prompt_budget,
            batch_size: raw.batch_size,
            exploration_budget: raw.exploration_budget,
            mc_samples: raw.mc_samples,
            est_cap: raw.est_cap.unwrap_or(2 * raw.per_prompt_budget),
            runs: raw.runs,
            seed: raw.seed,
        }
        .validate()
    }
}

impl BudgetConfig {
    /// Config with `m = 1024`, `est_cap = 2B`, 100 runs and seed 0.
    pub fn new(per_prompt_budget: usize, batch_size: usize, exploration_budget: usize) -> Self {
        BudgetConfig {
            per_prompt_budget,
            batch_size,
            exploration_budget,
            mc_samples: default_mc_samples(),
            est_cap: 2 * per_prompt_budget,
            runs: default_runs(),
            seed: 0,
        }
    }

    pub fn with_mc_samples(mut self, m: usize) -> Self {
        self.mc_samples = m;
        self
    }

    pub fn with_est_cap(mut self, cap: usize) -> Self {
        self.est_cap = cap;
        self
    }

    pub fn with_runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Returns the config unchanged when every invariant holds, otherwise the
    /// first violated one.
    pub fn validate(self) -> Result<Self> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.per_prompt_budget == 0 {
            return fail("B must be positive");
        }
        if self.batch_size == 0 {
            return fail("K must be positive");
        }
        if self.exploration_budget == 0 {
            return fail("d must be positive");
        }
        if self.exploration_budget > self.per_prompt_budget {
            return fail("d exceeds B");
        }
        if self.mc_samples == 0 {
            return fail("m must be positive");
        }
        if self.est_cap < self.per_prompt_budget {
            return fail("est_cap is below B");
        }
        if self.runs == 0 {
            return fail("runs must be positive");
        }
        Ok(self)
    }

    /// Total budget `B·K`.
    pub fn total_budget(&self) -> usize {
        self.per_prompt_budget * self.batch_size
    }

    /// Budget left after exploration, `(B − d)·K`.
    pub fn remaining_budget(&self) -> usize {
        (self.per_prompt_budget - self.exploration_budget) * self.batch_size
    }

    /// Draws needed per prompt so that every allocation and every survival
    /// comparison is a prefix of one row: `max(est_cap, d + (B − d)·K)`.
    pub fn matrix_width(&self) -> usize {
        self.est_cap
            .max(self.exploration_budget + self.remaining_budget())
    }
}

/// Queries per prompt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    counts: Vec<usize>,
}

impl Allocation {
    /// Checks that there are `batch_size` counts summing to at most
    /// `per_prompt_budget · batch_size`.
    pub fn new(counts: Vec<usize>, batch_size: usize, per_prompt_budget: usize) -> Result<Self> {
        if counts.len() != batch_size {
            return Err(Error::InvalidAllocation(format!(
                "{} counts for {} prompts",
                counts.len(),
                batch_size
            )));
        }
        let total: usize = counts.iter().sum();
        if total > per_prompt_budget * batch_size {
            return Err(Error::InvalidAllocation(format!(
                "total {} exceeds budget {}",
                total,
                per_prompt_budget * batch_size
            )));
        }
        Ok(Allocation { counts })
    }

    pub fn for_config(counts: Vec<usize>, config: &BudgetConfig) -> Result<Self> {
        Self::new(counts, config.batch_size, config.per_prompt_budget)
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Realized rewards for one run: `K` rows of `W` draws each.
///
/// Every policy and every comparison budget reads prefixes of the same rows.
/// Running prefix maxima are cached at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardMatrix {
    width: usize,
    values: Vec<f64>,
    prefix_max: Vec<f64>,
}

impl RewardMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || width == 0 {
            return Err(Error::InvalidMatrix("matrix must have at least one row and one column".into()));
        }
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(Error::InvalidMatrix(format!(
                "row {i} has {} entries, expected {width}",
                row.len()
            )));
        }
        if rows.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::InvalidMatrix("NaN reward".into()));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        let mut prefix_max = Vec::with_capacity(values.len());
        for row in values.chunks(width) {
            let mut best = f64::NEG_INFINITY;
            for &v in row {
                best = best.max(v);
                prefix_max.push(best);
            }
        }
        Ok(RewardMatrix {
            width,
            values,
            prefix_max,
        })
    }

    pub fn prompts(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, prompt: usize) -> &[f64] {
        &self.values[prompt * self.width..(prompt + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.width)
    }

    /// Max of the first `n` entries of a row; `-inf` for `n = 0`.
    pub fn prefix_max(&self, prompt: usize, n: usize) -> f64 {
        assert!(n <= self.width, "prefix {n} exceeds width {}", self.width);
        if n == 0 {
            f64::NEG_INFINITY
        } else {
            self.prefix_max[prompt * self.width + n - 1]
        }
    }

    /// `Σ_i max(row_i[..n])`, summed in prompt order.
    pub fn uniform_total(&self, n: usize) -> f64 {
        (0..self.prompts()).map(|i| self.prefix_max(i, n)).sum()
    }

    pub fn ensure_width(&self, required: usize) -> Result<()> {
        if self.width < required {
            Err(Error::WidthTooSmall {
                width: self.width,
                required,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainOrigin {
    Exact,
    MonteCarlo,
}

/// Expected best reward after `j = 0..=J` further draws, floored at the best
/// reward already observed (`values[0]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainVector {
    values: Vec<f64>,
    origin: GainOrigin,
}

impl GainVector {
    pub fn new(values: Vec<f64>, origin: GainOrigin) -> Self {
        assert!(!values.is_empty(), "gain vector needs V_0");
        GainVector { values, origin }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin(&self) -> GainOrigin {
        self.origin
    }

    /// Largest `j` with a value.
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    /// `V_{j+1} − V_j`.
    pub fn marginal(&self, j: usize) -> f64 {
        self.values[j + 1] - self.values[j]
    }

    /// Monotone non-decreasing with non-increasing differences, up to `tol`.
    pub fn is_monotone_concave(&self, tol: f64) -> bool {
        let v = &self.values;
        let monotone = v.windows(2).all(|w| w[1] >= w[0] - tol);
        let concave = v
            .windows(3)
            .all(|w| (w[2] - w[1]) <= (w[1] - w[0]) + tol);
        monotone && concave
    }
}

/// Outcome of one policy on one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy_name: String,
    pub allocation: Allocation,
    pub per_prompt_max: Vec<f64>,
    pub total: f64,
}

impl RunRecord {
    pub fn from_matrix(
        policy_name: impl Into<String>,
        allocation: Allocation,
        matrix: &RewardMatrix,
    ) -> Result<Self> {
        if allocation.len() != matrix.prompts() {
            return Err(Error::LengthMismatch {
                left: allocation.len(),
                right: matrix.prompts(),
            });
        }
        let needed = allocation.counts().iter().copied().max().unwrap_or(0);
        matrix.ensure_width(needed)?;
        let per_prompt_max: Vec<f64> = allocation
            .counts()
            .iter()
            .enumerate()
            .map(|(i, &n)| matrix.prefix_max(i, n))
            .collect();
        let total = per_prompt_max.iter().sum();
        Ok(RunRecord {
            policy_name: policy_name.into(),
            allocation,
            per_prompt_max,
            total,
        })
    }
}
