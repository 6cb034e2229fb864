//! Gain vectors: expected best reward after `j` further draws, floored at the
//! best exploration reward.

use crate::distributions::SyntheticDistribution;
use crate::error::{Error, Result};
use crate::estimators::DensityEstimate;
use crate::rng::RandomStream;
use crate::types::{GainOrigin, GainVector};

/// Monte Carlo estimate of `V_j = E[max(observed, Z_1..Z_j)]`, `Z ~ estimate`,
/// for `j = 0..=horizon`.
///
/// Each of the `m` replicates draws `horizon` values once and contributes its
/// running maximum to every `j`, so the cost is `O(m · horizon)`.
pub fn mc_gain_vector(
    observed: &[f64],
    estimate: &DensityEstimate,
    horizon: usize,
    m: usize,
    rng: &mut RandomStream,
) -> Result<GainVector> {
    if observed.is_empty() {
        return Err(Error::EmptySample);
    }
    if m == 0 {
        return Err(Error::InvalidConfig("m must be positive".into()));
    }
    let floor = observed.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // Draws cannot exceed the floor: the vector is flat.
    if estimate.support_max().is_some_and(|top| top <= floor) {
        return Ok(GainVector::new(vec![floor; horizon + 1], GainOrigin::MonteCarlo));
    }

    let mut sums = vec![0.0; horizon];
    for _ in 0..m {
        let mut running = floor;
        for slot in sums.iter_mut() {
            let z = estimate.sample_one(rng);
            if z > running {
                running = z;
            }
            *slot += running;
        }
    }
    let scale = m as f64;
    let mut values = Vec::with_capacity(horizon + 1);
    values.push(floor);
    values.extend(sums.into_iter().map(|s| s / scale));
    Ok(GainVector::new(values, GainOrigin::MonteCarlo))
}

/// Exact gain vector of a discrete distribution: `values[j] = E[max(c, X_1..X_j)]`.
pub fn exact_gain_vector(
    dist: &SyntheticDistribution,
    floor: f64,
    horizon: usize,
) -> Result<GainVector> {
    let values = (0..=horizon)
        .map(|j| dist.exact_expected_max(floor, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(GainVector::new(values, GainOrigin::Exact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;

    fn bern(p: f64) -> SyntheticDistribution {
        SyntheticDistribution::Bernoulli { p }
    }

    #[test]
    fn exact_examples() {
        let g = exact_gain_vector(&bern(0.5), 0.0, 3).unwrap();
        assert_eq!(g.values(), &[0.0, 0.5, 0.75, 0.875]);
        assert_eq!(g.origin(), GainOrigin::Exact);
        let g = exact_gain_vector(&bern(0.05), 1.0, 10).unwrap();
        assert!(g.values().iter().all(|&v| v == 1.0));
        let g = exact_gain_vector(&bern(0.95), 0.0, 2).unwrap();
        assert!((g.values()[1] - 0.95).abs() < 1e-15);
        assert!((g.values()[2] - 0.9975).abs() < 1e-15);
        let gauss = SyntheticDistribution::Gaussian { mean: 0.0, std: 1.0 };
        assert!(exact_gain_vector(&gauss, 0.0, 2).is_err());
    }

    #[test]
    fn floor_dominates_point_mass() {
        let mut rng = RandomStream::from_seed(1);
        let est = DensityEstimate::fit(&[2.0], EstimatorKind::Empirical).unwrap();
        let g = mc_gain_vector(&[1.0, 3.0], &est, 5, 17, &mut rng).unwrap();
        assert_eq!(g.values(), &[3.0; 6]);
    }

    #[test]
    fn point_mass_above_floor_saturates() {
        let mut rng = RandomStream::from_seed(1);
        let est = DensityEstimate::fit(&[5.0, 5.0], EstimatorKind::Kde).unwrap();
        let g = mc_gain_vector(&[3.0], &est, 4, 8, &mut rng).unwrap();
        assert_eq!(g.values(), &[3.0, 5.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn fair_coin_empirical() {
        let mut rng = RandomStream::from_seed(8);
        let est = DensityEstimate::fit(&[0.0, 1.0], EstimatorKind::Empirical).unwrap();
        let g = mc_gain_vector(&[0.0], &est, 3, 4096, &mut rng).unwrap();
        for (j, v) in g.values().iter().enumerate() {
            let exact = 1.0 - 0.5f64.powi(j as i32);
            assert!((v - exact).abs() <= 0.04, "j={j}: {v}");
        }
    }

    #[test]
    fn mc_is_monotone_for_every_seed() {
        let est = DensityEstimate::fit(&[0.0, 0.3, 2.0, -1.0], EstimatorKind::Kde).unwrap();
        for seed in 0..20 {
            let mut rng = RandomStream::from_seed(seed);
            let g = mc_gain_vector(&[0.5], &est, 30, 64, &mut rng).unwrap();
            assert!(g.values().windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn mc_converges_on_bernoulli() {
        let coin = [0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let est = DensityEstimate::fit(&coin, EstimatorKind::Empirical).unwrap();
        let exact = exact_gain_vector(&bern(0.25), 0.0, 12).unwrap();
        for m in [1024usize, 4096] {
            let mut within = 0;
            for seed in 0..100 {
                let mut rng = RandomStream::from_seed(seed);
                let g = mc_gain_vector(&[0.0], &est, 12, m, &mut rng).unwrap();
                let err = g
                    .values()
                    .iter()
                    .zip(exact.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if err <= 5.0 / (m as f64).sqrt() {
                    within += 1;
                }
            }
            assert!(within >= 99, "m={m}: {within}/100");
        }
    }

    #[test]
    fn variance_scales_inversely_with_m() {
        let est = DensityEstimate::fit(&[0.0, 1.0], EstimatorKind::Empirical).unwrap();
        let spread = |m: usize| {
            let vals: Vec<f64> = (0..400)
                .map(|seed| {
                    let mut rng = RandomStream::from_seed(1000 + seed);
                    mc_gain_vector(&[0.0], &est, 1, m, &mut rng).unwrap().values()[1]
                })
                .collect();
            let mu = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (vals.len() - 1) as f64
        };
        let ratio = spread(256) / spread(1024);
        // Variance ratio of 4, sampled from 400 replicates per side.
        assert!((2.8..5.6).contains(&ratio), "{ratio}");
    }
}
