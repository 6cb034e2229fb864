//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line to stderr
//! (bypassing libtest capture) and then asserts.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use adabon::distributions::SyntheticDistribution;
use adabon::estimators::{scott_bandwidth, DensityEstimate, EstimatorKind};
use adabon::gain::{exact_gain_vector, mc_gain_vector};
use adabon::harness::{mixed_variance_benchmark, run_experiment, ExperimentSpec};
use adabon::oracle::{evaluate_instance, OracleInstance};
use adabon::policies::{greedy_allocate, PolicySpec};
use adabon::rng::RandomStream;
use adabon::types::{BudgetConfig, GainOrigin, GainVector};

fn report(id: u32, name: &str, ok: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let timely = elapsed <= limit;
    let verdict = if ok && timely { "PASS" } else { "FAIL" };
    let line = format!(
        "acceptance {id:>2} {verdict} {name}: {detail} [{:.2}s, limit {}s]\n",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(timely, "criterion {id} over time: {:.2}s", elapsed.as_secs_f64());
}

fn coin_pair(budget: usize) -> OracleInstance {
    OracleInstance {
        probabilities: vec![0.95, 0.05],
        per_prompt_budget: budget,
        exploration_budgets: vec![10],
    }
}

#[test]
fn c01_oracle_small_budget() {
    let start = Instant::now();
    let row = evaluate_instance(&coin_pair(25)).unwrap().remove(0);
    let ok = (row.uniform - 1.72).abs() <= 0.01 && (row.two_stage - 1.87).abs() <= 0.01;
    let detail = format!("uniform {:.4}, two-stage {:.4}", row.uniform, row.two_stage);
    report(1, "oracle B=25 d=10", ok, start.elapsed(), Duration::from_secs(1), &detail);
}

#[test]
fn c02_oracle_large_budget() {
    let start = Instant::now();
    let row = evaluate_instance(&coin_pair(50)).unwrap().remove(0);
    let ok = (row.uniform - 1.92).abs() <= 0.01 && (row.two_stage - 1.98).abs() <= 0.02;
    let detail = format!("uniform {:.4}, two-stage {:.6} (exact)", row.uniform, row.two_stage);
    report(2, "oracle B=50 d=10", ok, start.elapsed(), Duration::from_secs(1), &detail);
}

fn random_discrete(rng: &mut RandomStream) -> SyntheticDistribution {
    let n = 1 + rng.below(10);
    let mut values: Vec<f64> = (0..n).map(|_| 10.0 * rng.next_f64() - 5.0).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let weights: Vec<f64> = values.iter().map(|_| rng.next_f64() + 1e-3).collect();
    let sum: f64 = weights.iter().sum();
    SyntheticDistribution::Discrete {
        values,
        probabilities: weights.iter().map(|w| w / sum).collect(),
    }
}

#[test]
fn c03_exact_gain_is_monotone_concave() {
    let start = Instant::now();
    let mut rng = RandomStream::from_seed(303);
    let mut failures = 0;
    for _ in 0..200 {
        let dist = random_discrete(&mut rng);
        let floor = 12.0 * rng.next_f64() - 6.0;
        let g = exact_gain_vector(&dist, floor, 20).unwrap();
        if !g.is_monotone_concave(1e-12) {
            failures += 1;
        }
    }
    let detail = format!("{failures} of 200 distributions violate the shape");
    report(3, "exact gain shape", failures == 0, start.elapsed(), Duration::from_secs(5), &detail);
}

/// Monotone concave vector with dyadic increments so every sum is exact.
fn random_concave(rng: &mut RandomStream, horizon: usize) -> GainVector {
    let mut steps: Vec<f64> = (0..horizon).map(|_| rng.below(65) as f64 / 64.0).collect();
    steps.sort_by(|a, b| b.total_cmp(a));
    let mut values = vec![rng.below(33) as f64 / 32.0];
    for s in steps {
        values.push(values.last().unwrap() + s);
    }
    GainVector::new(values, GainOrigin::Exact)
}

fn objective(vectors: &[GainVector], counts: &[usize]) -> f64 {
    vectors.iter().zip(counts).map(|(v, &a)| v.values()[a]).sum()
}

fn enumerate_best(vectors: &[GainVector], budget: usize) -> f64 {
    fn go(vectors: &[GainVector], left: usize, counts: &mut Vec<usize>, best: &mut f64) {
        if counts.len() + 1 == vectors.len() {
            counts.push(left);
            *best = best.max(objective(vectors, counts));
            counts.pop();
            return;
        }
        for a in 0..=left {
            counts.push(a);
            go(vectors, left - a, counts, best);
            counts.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    go(vectors, budget, &mut Vec::new(), &mut best);
    best
}

#[test]
fn c04_greedy_matches_enumeration() {
    let start = Instant::now();
    let mut rng = RandomStream::from_seed(404);
    let mut mismatches = 0;
    for _ in 0..500 {
        let k = 1 + rng.below(3);
        let budget = rng.below(9);
        let vectors: Vec<GainVector> = (0..k).map(|_| random_concave(&mut rng, budget)).collect();
        let counts = greedy_allocate(&vectors, budget).unwrap();
        if objective(&vectors, &counts) != enumerate_best(&vectors, budget) {
            mismatches += 1;
        }
    }
    let detail = format!("{mismatches} of 500 instances differ from the optimum");
    report(4, "greedy optimality", mismatches == 0, start.elapsed(), Duration::from_secs(5), &detail);
}

#[test]
fn c05_monte_carlo_gain_accuracy() {
    let start = Instant::now();
    let coin = DensityEstimate::fit(&[0.0, 1.0], EstimatorKind::Empirical).unwrap();
    let mut within = 0;
    for seed in 0..100 {
        let mut rng = RandomStream::from_seed(seed);
        let g = mc_gain_vector(&[0.0], &coin, 10, 4096, &mut rng).unwrap();
        let ok = (1..=10).all(|j| (g.values()[j] - (1.0 - 0.5f64.powi(j as i32))).abs() <= 0.04);
        within += ok as usize;
    }
    let detail = format!("{within} of 100 seeds within 0.04");
    report(5, "Monte Carlo gain accuracy", within >= 99, start.elapsed(), Duration::from_secs(10), &detail);
}

#[test]
fn c06_uniform_against_itself() {
    let start = Instant::now();
    let (source, batches) = mixed_variance_benchmark(10, 5, 6);
    let config = BudgetConfig::new(40, 5, 30).with_runs(50).with_seed(6);
    let budget = config.per_prompt_budget;
    let spec = ExperimentSpec {
        config,
        source,
        policies: vec![PolicySpec::UNIFORM],
        n_batches: batches.len(),
        batches: Some(batches),
        sweep: None,
    };
    let result = run_experiment(&spec, Path::new(".")).unwrap();
    let mut bad = Vec::new();
    for batch in &result.points[0].batches {
        let r = &batch.policies[0].report;
        if r.bwr != 0.5 {
            bad.push(format!("batch {} BWR {}", batch.batch, r.bwr));
        }
        if r.bwtr_curve[..budget].iter().any(|&x| x != 1.0) {
            bad.push(format!("batch {} BWTR below 1 for N <= B", batch.batch));
        }
        if r.est < budget as f64 {
            bad.push(format!("batch {} EST {}", batch.batch, r.est));
        }
    }
    let detail = if bad.is_empty() {
        "BWR 0.5, BWTR 1 and EST >= B on all 10 batches".to_string()
    } else {
        bad.join("; ")
    };
    report(6, "metric identities", bad.is_empty(), start.elapsed(), Duration::from_secs(10), &detail);
}

/// Mean BWR of AdaBoN over the mixed-variance benchmark, and the share of
/// batches with BWR above one half.
fn benchmark_bwr(k: usize) -> (f64, f64) {
    let (source, batches) = mixed_variance_benchmark(50, k, 2024);
    let config = BudgetConfig::new(120, k, 90)
        .with_mc_samples(1024)
        .with_runs(100)
        .with_seed(2024);
    let spec = ExperimentSpec {
        config,
        source,
        policies: vec![PolicySpec::adabon(EstimatorKind::Kde)],
        n_batches: batches.len(),
        batches: Some(batches),
        sweep: None,
    };
    let result = run_experiment(&spec, Path::new(".")).unwrap();
    let bwrs: Vec<f64> = result.points[0]
        .batches
        .iter()
        .map(|b| b.policies[0].report.bwr)
        .collect();
    let mean = bwrs.iter().sum::<f64>() / bwrs.len() as f64;
    let above = bwrs.iter().filter(|&&x| x > 0.5).count() as f64 / bwrs.len() as f64;
    (mean, above)
}

#[test]
fn c07_adaptivity_gap_on_mixed_batches() {
    let start = Instant::now();
    let (mean, above) = benchmark_bwr(5);
    let ok = mean > 0.55 && above > 0.75;
    let detail = format!("mean BWR {mean:.4}, {:.0}% of batches above 0.5", 100.0 * above);
    report(7, "adaptivity gap K=5", ok, start.elapsed(), Duration::from_secs(600), &detail);
}

#[test]
fn c08_batch_size_scaling() {
    let start = Instant::now();
    let (small, _) = benchmark_bwr(3);
    let (large, _) = benchmark_bwr(20);
    let ok = large - small >= 0.02;
    let detail = format!("mean BWR K=3 {small:.4}, K=20 {large:.4}");
    report(8, "batch size scaling", ok, start.elapsed(), Duration::from_secs(1800), &detail);
}

#[test]
fn c09_kde_moment_identity() {
    let start = Instant::now();
    let data = [0.0, 10.0];
    let h = scott_bandwidth(&data).unwrap();
    let kde = DensityEstimate::fit(&data, EstimatorKind::Kde).unwrap();
    let n = 100_000;
    let xs = kde.sample(n, &mut RandomStream::from_seed(909));
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let target = 25.0 + h * h;
    let ok = (mean - 5.0).abs() <= 0.1 && (var / target - 1.0).abs() <= 0.02;
    let detail = format!("mean {mean:.4}, variance {var:.3} vs {target:.3} (h = {h:.4})");
    report(9, "KDE moment identity", ok, start.elapsed(), Duration::from_secs(1), &detail);
}

const SMALL_EXPERIMENT: &str = r#"{
  "config": {"per_prompt_budget": 16, "batch_size": 3, "exploration_budget": 8,
             "mc_samples": 256, "runs": 20, "seed": 77},
  "source": {"kind": "synthetic", "prompts": [
    {"distribution": {"family": "gaussian", "mean": 0.0, "std": 1.0}},
    {"distribution": {"family": "bernoulli", "p": 0.3}},
    {"distribution": {"family": "gaussian_mixture", "components": [
      {"weight": 0.6, "mean": -1.0, "std": 0.5}, {"weight": 0.4, "mean": 1.5, "std": 0.3}]}},
    {"distribution": {"family": "point_mass", "value": 0.25}},
    {"distribution": {"family": "shifted_negated_exponential", "rate": 2.0, "shift": 1.0}}
  ]},
  "policies": [{"name": "adabon", "estimator": "kde"}, {"name": "varbon"}, {"name": "uniform"}],
  "n_batches": 6
}"#;

fn simulate(config: &Path, out: &Path, threads: &str) {
    let status = Command::new(env!("CARGO_BIN_EXE_adabon"))
        .args(["simulate", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("ADABON_THREADS", threads)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn c10_simulate_is_deterministic_across_thread_counts() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("experiment.json");
    std::fs::write(&config, SMALL_EXPERIMENT).unwrap();
    let (a, b) = (dir.path().join("one"), dir.path().join("four"));
    simulate(&config, &a, "1");
    simulate(&config, &b, "4");
    let mut differing = Vec::new();
    for file in ["raw.jsonl", "runs.jsonl"] {
        let left = std::fs::read(a.join(file)).unwrap();
        let right = std::fs::read(b.join(file)).unwrap();
        if left.is_empty() || left != right {
            differing.push(file);
        }
    }
    let detail = if differing.is_empty() {
        "raw.jsonl and runs.jsonl identical with 1 and 4 threads".to_string()
    } else {
        format!("differ: {}", differing.join(", "))
    };
    report(10, "determinism", differing.is_empty(), start.elapsed(), Duration::from_secs(60), &detail);
}
