//! Sampleable estimates of a prompt's reward distribution, fit on its
//! exploration rewards.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[default]
    #[serde(rename = "kde")]
    Kde,
    #[serde(rename = "empirical")]
    Empirical,
    #[serde(rename = "gaussian_mle")]
    GaussianMle,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Kde => "kde",
            EstimatorKind::Empirical => "empirical",
            EstimatorKind::GaussianMle => "gaussian_mle",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kde" => Ok(EstimatorKind::Kde),
            "empirical" => Ok(EstimatorKind::Empirical),
            "gaussian_mle" => Ok(EstimatorKind::GaussianMle),
            other => Err(Error::UnknownName {
                kind: "estimator",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EstimateKind {
    Empirical,
    GaussianKde { bandwidth: f64 },
    GaussianMle { mean: f64, std: f64 },
}

/// A fitted estimate together with the samples it was fit on.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    kind: EstimateKind,
    samples: Vec<f64>,
}

fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

fn sum_sq_dev(samples: &[f64]) -> f64 {
    let mu = mean(samples);
    samples.iter().map(|x| (x - mu) * (x - mu)).sum()
}

/// Sample standard deviation with denominator `d − 1`; zero for one sample.
pub fn sample_std(samples: &[f64]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    (sum_sq_dev(samples) / (samples.len() - 1) as f64).sqrt()
}

/// Scott's rule, `h = σ̂ · d^(−1/5)`.
pub fn scott_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let d = samples.len() as f64;
    Ok(sample_std(samples) * d.powf(-0.2))
}

impl DensityEstimate {
    pub fn fit(samples: &[f64], kind: EstimatorKind) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        let kind = match kind {
            EstimatorKind::Empirical => EstimateKind::Empirical,
            EstimatorKind::Kde => EstimateKind::GaussianKde {
                bandwidth: scott_bandwidth(samples)?,
            },
            EstimatorKind::GaussianMle => EstimateKind::GaussianMle {
                mean: mean(samples),
                std: (sum_sq_dev(samples) / samples.len() as f64).sqrt(),
            },
        };
        Ok(DensityEstimate {
            kind,
            samples: samples.to_vec(),
        })
    }

    /// A KDE with an explicit bandwidth instead of Scott's rule.
    pub fn kde_with_bandwidth(samples: &[f64], bandwidth: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if !(bandwidth >= 0.0) {
            return Err(Error::InvalidDistribution(format!("bandwidth {bandwidth}")));
        }
        Ok(DensityEstimate {
            kind: EstimateKind::GaussianKde { bandwidth },
            samples: samples.to_vec(),
        })
    }

    pub fn kind(&self) -> &EstimateKind {
        &self.kind
    }

    pub fn source_samples(&self) -> &[f64] {
        &self.samples
    }

    /// One draw: a uniformly chosen stored sample, plus `N(0, h²)` noise for
    /// the KDE.
    #[inline]
    pub fn sample_one(&self, rng: &mut RandomStream) -> f64 {
        match self.kind {
            EstimateKind::Empirical => self.samples[rng.below(self.samples.len())],
            EstimateKind::GaussianKde { bandwidth } => {
                let base = self.samples[rng.below(self.samples.len())];
                if bandwidth == 0.0 {
                    base
                } else {
                    base + bandwidth * rng.normal()
                }
            }
            EstimateKind::GaussianMle { mean, std } => {
                if std == 0.0 {
                    mean
                } else {
                    mean + std * rng.normal()
                }
            }
        }
    }

    pub fn sample(&self, n: usize, rng: &mut RandomStream) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// Upper end of the support when it is bounded (empirical, zero-width
    /// KDE, zero-variance Gaussian).
    pub fn support_max(&self) -> Option<f64> {
        let top = || self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match self.kind {
            EstimateKind::Empirical => Some(top()),
            EstimateKind::GaussianKde { bandwidth: 0.0 } => Some(top()),
            EstimateKind::GaussianMle { mean, std: 0.0 } => Some(mean),
            _ => None,
        }
    }
}
