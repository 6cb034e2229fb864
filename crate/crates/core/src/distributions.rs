//! Synthetic reward distributions.
//!
//! Each family can be sampled; the discrete ones (Bernoulli, point mass,
//! finite support) also expose an exact expected maximum, which the oracle
//! and the concavity checks rely on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

const PROB_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SyntheticDistribution {
    Bernoulli {
        p: f64,
    },
    PointMass {
        value: f64,
    },
    /// Finite support `values` (strictly increasing) with `probabilities`.
    Discrete {
        values: Vec<f64>,
        probabilities: Vec<f64>,
    },
    Gaussian {
        mean: f64,
        std: f64,
    },
    /// Component weights are normalized by their sum.
    GaussianMixture {
        components: Vec<MixtureComponent>,
    },
    /// `shift − E` with `E ~ Exponential(rate)`; skewness −2.
    ShiftedNegatedExponential {
        rate: f64,
        shift: f64,
    },
}

impl SyntheticDistribution {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match self {
            Self::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("bernoulli p={p} outside [0, 1]"));
                }
            }
            Self::PointMass { value } => {
                if !value.is_finite() {
                    return bad("point mass value must be finite".into());
                }
            }
            Self::Discrete {
                values,
                probabilities,
            } => {
                if values.is_empty() || values.len() != probabilities.len() {
                    return bad(format!(
                        "{} support values with {} probabilities",
                        values.len(),
                        probabilities.len()
                    ));
                }
                if values.windows(2).any(|w| !(w[0] < w[1])) {
                    return bad("support must be strictly increasing".into());
                }
                if probabilities.iter().any(|&q| !(q >= 0.0)) {
                    return bad("negative probability".into());
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > PROB_TOL {
                    return bad(format!("probabilities sum to {total}"));
                }
            }
            Self::Gaussian { mean, std } => {
                if !mean.is_finite() || !(*std > 0.0) {
                    return bad(format!("gaussian needs finite mean and std > 0, got {std}"));
                }
            }
            Self::GaussianMixture { components } => {
                if components.is_empty() {
                    return bad("mixture without components".into());
                }
                for c in components {
                    if !(c.weight > 0.0) || !(c.std > 0.0) || !c.mean.is_finite() {
                        return bad("mixture components need weight > 0 and std > 0".into());
                    }
                }
            }
            Self::ShiftedNegatedExponential { rate, shift } => {
                if !(*rate > 0.0) || !shift.is_finite() {
                    return bad("negated exponential needs rate > 0".into());
                }
            }
        }
        Ok(())
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Bernoulli { .. } => "bernoulli",
            Self::PointMass { .. } => "point_mass",
            Self::Discrete { .. } => "discrete",
            Self::Gaussian { .. } => "gaussian",
            Self::GaussianMixture { .. } => "gaussian_mixture",
            Self::ShiftedNegatedExponential { .. } => "shifted_negated_exponential",
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.atoms().is_some()
    }

    /// Support points and probabilities of the discrete families.
    pub fn atoms(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::Bernoulli { p } => Some((vec![0.0, 1.0], vec![1.0 - p, *p])),
            Self::PointMass { value } => Some((vec![*value], vec![1.0])),
            Self::Discrete {
                values,
                probabilities,
            } => Some((values.clone(), probabilities.clone())),
            _ => None,
        }
    }

    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        match self {
            Self::Bernoulli { p } => {
                if rng.bernoulli(*p) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::PointMass { value } => *value,
            Self::Discrete {
                values,
                probabilities,
            } => {
                let u = rng.next_f64();
                let mut acc = 0.0;
                for (v, q) in values.iter().zip(probabilities) {
                    acc += q;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated support")
            }
            Self::Gaussian { mean, std } => mean + std * rng.normal(),
            Self::GaussianMixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                let u = rng.next_f64() * total;
                let mut acc = 0.0;
                let mut chosen = components.last().expect("validated mixture");
                for c in components {
                    acc += c.weight;
                    if u < acc {
                        chosen = c;
                        break;
                    }
                }
                chosen.mean + chosen.std * rng.normal()
            }
            Self::ShiftedNegatedExponential { rate, shift } => shift - rng.exponential() / rate,
        }
    }

    /// `n` independent draws.
    pub fn draw(&self, n: usize, rng: &mut RandomStream) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Gaussian { mean, .. } => *mean,
            Self::GaussianMixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                components.iter().map(|c| c.weight * c.mean).sum::<f64>() / total
            }
            Self::ShiftedNegatedExponential { rate, shift } => shift - 1.0 / rate,
            _ => {
                let (v, q) = self.atoms().expect("discrete");
                v.iter().zip(&q).map(|(v, q)| v * q).sum()
            }
        }
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        match self {
            Self::Gaussian { std, .. } => std * std,
            Self::GaussianMixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                components
                    .iter()
                    .map(|c| c.weight * (c.std * c.std + (c.mean - mu).powi(2)))
                    .sum::<f64>()
                    / total
            }
            Self::ShiftedNegatedExponential { rate, .. } => 1.0 / (rate * rate),
            _ => {
                let (v, q) = self.atoms().expect("discrete");
                v.iter().zip(&q).map(|(v, q)| q * (v - mu).powi(2)).sum()
            }
        }
    }

    /// `P(X ≤ x)` for the discrete families.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let (values, probs) = self.discrete_atoms("cdf")?;
        Ok(values
            .iter()
            .zip(&probs)
            .take_while(|(v, _)| **v <= x)
            .map(|(_, q)| q)
            .sum::<f64>()
            .min(1.0))
    }

    fn discrete_atoms(&self, op: &'static str) -> Result<(Vec<f64>, Vec<f64>)> {
        self.atoms().ok_or(Error::UnsupportedFamily {
            op,
            family: self.family_name(),
        })
    }

    /// `E[max(c, X_1, …, X_n)]` for iid `X_i` from a discrete family.
    ///
    /// Telescopes over the support above `c`:
    /// `c·F(c)^n + Σ_{v_k > c} v_k·(F(v_k)^n − F(max(v_{k−1}, c))^n)`.
    pub fn exact_expected_max(&self, floor: f64, n: usize) -> Result<f64> {
        let (values, probs) = self.discrete_atoms("exact_expected_max")?;
        if n == 0 {
            return Ok(floor);
        }
        let exponent = i32::try_from(n).unwrap_or(i32::MAX);
        let mut cumulative = 0.0;
        let mut k = 0;
        while k < values.len() && values[k] <= floor {
            cumulative += probs[k];
            k += 1;
        }
        let mut prev_pow = cumulative.min(1.0).powi(exponent);
        let mut result = floor * prev_pow;
        for (idx, (v, q)) in values.iter().zip(&probs).enumerate().skip(k) {
            cumulative += q;
            let f = if idx + 1 == values.len() {
                1.0
            } else {
                cumulative.min(1.0)
            };
            let pow = f.powi(exponent);
            result += v * (pow - prev_pow);
            prev_pow = pow;
        }
        Ok(result)
    }

    /// Smallest support point of a discrete family.
    pub fn support_min(&self) -> Result<f64> {
        let (values, _) = self.discrete_atoms("support_min")?;
        Ok(values[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bern(p: f64) -> SyntheticDistribution {
        SyntheticDistribution::Bernoulli { p }
    }

    #[test]
    fn degenerate_draws() {
        let mut rng = RandomStream::from_seed(1);
        assert_eq!(
            SyntheticDistribution::PointMass { value: 2.0 }.draw(3, &mut rng),
            vec![2.0; 3]
        );
        assert_eq!(bern(1.0).draw(5, &mut rng), vec![1.0; 5]);
        assert!(bern(0.3).draw(0, &mut rng).is_empty());
    }

    #[test]
    fn bernoulli_sample_mean() {
        let mut rng = RandomStream::from_seed(2);
        let n = 100_000;
        let mean = bern(0.5).draw(n, &mut rng).iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn expected_max_examples() {
        assert!((bern(0.5).exact_expected_max(0.0, 2).unwrap() - 0.75).abs() < 1e-15);
        let d = SyntheticDistribution::Discrete {
            values: vec![1.0, 4.0, 10.0],
            probabilities: vec![0.2, 0.5, 0.3],
        };
        assert_eq!(d.exact_expected_max(10.0, 7).unwrap(), 10.0);
        assert_eq!(d.exact_expected_max(12.0, 7).unwrap(), 12.0);
        let closed = 1.0 - 0.05f64.powi(25);
        assert!((bern(0.95).exact_expected_max(0.0, 25).unwrap() - closed).abs() < 1e-12);
        assert_eq!(bern(0.2).exact_expected_max(-3.0, 0).unwrap(), -3.0);
    }

    #[test]
    fn expected_max_matches_enumeration() {
        // Brute force over all 3^3 outcome triples.
        let values = [-1.0, 0.5, 2.0];
        let probs = [0.3, 0.45, 0.25];
        let d = SyntheticDistribution::Discrete {
            values: values.to_vec(),
            probabilities: probs.to_vec(),
        };
        for floor in [-5.0, 0.0, 0.7, 3.0] {
            let mut brute = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        let m = values[a].max(values[b]).max(values[c]).max(floor);
                        brute += probs[a] * probs[b] * probs[c] * m;
                    }
                }
            }
            let exact = d.exact_expected_max(floor, 3).unwrap();
            assert!((exact - brute).abs() < 1e-14, "floor {floor}: {exact} vs {brute}");
        }
    }

    #[test]
    fn expected_max_limit() {
        let v = bern(0.5).exact_expected_max(0.0, 10_000).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn continuous_families_unsupported() {
        let g = SyntheticDistribution::Gaussian { mean: 0.0, std: 1.0 };
        assert!(matches!(
            g.exact_expected_max(0.0, 3),
            Err(Error::UnsupportedFamily { .. })
        ));
    }

    #[test]
    fn validation() {
        assert!(bern(1.2).validate().is_err());
        assert!(SyntheticDistribution::Gaussian { mean: 0.0, std: 0.0 }.validate().is_err());
        assert!(SyntheticDistribution::Discrete {
            values: vec![1.0, 1.0],
            probabilities: vec![0.5, 0.5]
        }
        .validate()
        .is_err());
        assert!(SyntheticDistribution::Discrete {
            values: vec![1.0, 2.0],
            probabilities: vec![0.5, 0.4]
        }
        .validate()
        .is_err());
        assert!(SyntheticDistribution::GaussianMixture {
            components: vec![MixtureComponent { weight: -1.0, mean: 0.0, std: 1.0 }]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn sample_means_within_five_standard_errors() {
        let families = [bern(0.3),
            SyntheticDistribution::PointMass { value: -1.5 },
            SyntheticDistribution::Discrete {
                values: vec![-2.0, 0.0, 3.0],
                probabilities: vec![0.25, 0.5, 0.25],
            },
            SyntheticDistribution::Gaussian { mean: 1.0, std: 2.0 },
            SyntheticDistribution::GaussianMixture {
                components: vec![
                    MixtureComponent { weight: 3.0, mean: 0.0, std: 1.0 },
                    MixtureComponent { weight: 1.0, mean: 4.0, std: 0.5 },
                ],
            },
            SyntheticDistribution::ShiftedNegatedExponential { rate: 2.0, shift: 1.0 }];
        let n = 100_000;
        for (i, d) in families.iter().enumerate() {
            d.validate().unwrap();
            let mut rng = RandomStream::from_seed(100 + i as u64);
            let xs = d.draw(n, &mut rng);
            let mean = xs.iter().sum::<f64>() / n as f64;
            let se = (d.variance() / n as f64).sqrt();
            assert!(
                (mean - d.mean()).abs() <= 5.0 * se + 1e-12,
                "{}: {mean} vs {}",
                d.family_name(),
                d.mean()
            );
        }
    }

    #[test]
    fn negated_exponential_is_left_skewed() {
        let d = SyntheticDistribution::ShiftedNegatedExponential { rate: 1.0, shift: 0.0 };
        let mut rng = RandomStream::from_seed(5);
        let xs = d.draw(200_000, &mut rng);
        let skew = crate::metrics::skewness(&xs).unwrap();
        assert!((skew + 2.0).abs() < 0.1, "{skew}");
    }

    fn discrete_strategy() -> impl Strategy<Value = SyntheticDistribution> {
        (1usize..=10)
            .prop_flat_map(|s| {
                (
                    proptest::collection::vec(-10.0f64..10.0, s),
                    proptest::collection::vec(0.01f64..1.0, s),
                )
            })
            .prop_filter_map("distinct support", |(mut values, weights)| {
                values.sort_by(f64::total_cmp);
                values.dedup();
                let total: f64 = weights[..values.len()].iter().sum();
                let probabilities = weights[..values.len()].iter().map(|w| w / total).collect();
                let d = SyntheticDistribution::Discrete {
                    values,
                    probabilities,
                };
                d.validate().ok().map(|_| d)
            })
    }

    proptest! {
        #[test]
        fn expected_max_monotone_and_concave(d in discrete_strategy(), floor in -12.0f64..12.0) {
            let v: Vec<f64> = (0..=20).map(|n| d.exact_expected_max(floor, n).unwrap()).collect();
            for w in v.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12);
            }
            for w in v.windows(3) {
                prop_assert!(w[2] - w[1] <= w[1] - w[0] + 1e-12);
            }
        }
    }
}
