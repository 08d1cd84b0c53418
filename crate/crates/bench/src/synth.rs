//! Synthetic reward populations with an exactly known target.
//!
//! Each arm draws raw values from a chosen distribution, then rescales them
//! so the full population has standard deviation exactly `sigma` and mean
//! exactly `ln p(i) / N`. Summed log factors then equal the target's log
//! weights, so a Gumbel-perturbed argmax is a fresh draw from the target.

use finite_bandits::{Error, MatrixPopulation, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardDist {
    Normal,
    Uniform,
    /// Log-normal with log-space mean 0 and standard deviation 2; heavy
    /// tailed enough to stress range-based bounds.
    LogNormal,
}

impl RewardDist {
    pub const ALL: [RewardDist; 3] = [RewardDist::Normal, RewardDist::Uniform, RewardDist::LogNormal];

    pub fn name(&self) -> &'static str {
        match self {
            RewardDist::Normal => "normal",
            RewardDist::Uniform => "uniform",
            RewardDist::LogNormal => "lognormal",
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RewardDist::Normal => rng.sample(StandardNormal),
            RewardDist::Uniform => rng.random::<f64>(),
            RewardDist::LogNormal => {
                LogNormal::new(0.0, 2.0).expect("valid log-normal parameters").sample(rng)
            }
        }
    }
}

impl std::str::FromStr for RewardDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(RewardDist::Normal),
            "uniform" => Ok(RewardDist::Uniform),
            "lognormal" => Ok(RewardDist::LogNormal),
            other => Err(Error::InvalidArgument(format!(
                "unknown reward distribution {other:?} (expected normal, uniform, or lognormal)"
            ))),
        }
    }
}

impl std::fmt::Display for RewardDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub arms: usize,
    pub population: usize,
    pub dist: RewardDist,
    /// Target probabilities; must sum to 1.
    pub target: Vec<f64>,
    /// Exact population standard deviation of every arm.
    pub sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.arms == 0 || self.population == 0 {
            return Err(Error::InvalidArgument("need at least one arm and one reward".into()));
        }
        if self.target.len() != self.arms {
            return Err(Error::Shape(format!(
                "target has {} entries for {} arms",
                self.target.len(),
                self.arms
            )));
        }
        if self.target.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument(
                "target probabilities must be positive and finite".into(),
            ));
        }
        let sum: f64 = self.target.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "target probabilities sum to {sum}, expected 1"
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "reward standard deviation must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Softmax of logits spaced linearly from 0 to 2: the default target.
pub fn default_target(arms: usize) -> Vec<f64> {
    let logits: Vec<f64> = if arms == 1 {
        vec![0.0]
    } else {
        (0..arms).map(|i| 2.0 * i as f64 / (arms - 1) as f64).collect()
    };
    let z: f64 = logits.iter().map(|l| l.exp()).sum();
    logits.iter().map(|l| l.exp() / z).collect()
}

/// The generated population plus the log weights it encodes.
#[derive(Debug)]
pub struct SyntheticPopulation {
    pub population: MatrixPopulation,
    /// `ln p(i)` per arm; exact argmax of `logits[i] + gumbel[i]` is the
    /// reference winner for a perturbation.
    pub logits: Vec<f64>,
}

/// Generates the population. Each arm draws from its own RNG stream, so
/// `(seed, arm)` pins its rewards regardless of arm order.
pub fn synth_gen(spec: &SyntheticSpec) -> Result<SyntheticPopulation> {
    spec.validate()?;
    let n = spec.population;
    let logits: Vec<f64> = spec.target.iter().map(|p| p.ln()).collect();
    let mut rows = Vec::with_capacity(spec.arms);
    for (arm, &logit) in logits.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(arm as u64);
        let raw: Vec<f64> = (0..n).map(|_| spec.dist.sample(&mut rng)).collect();
        rows.push(normalize_row(&raw, logit / n as f64, spec.sigma)?);
    }
    Ok(SyntheticPopulation { population: MatrixPopulation::new(rows)?, logits })
}

/// Affine map onto mean exactly `mean` and biased standard deviation
/// exactly `sigma`.
fn normalize_row(raw: &[f64], mean: f64, sigma: f64) -> Result<Vec<f64>> {
    let n = raw.len() as f64;
    let raw_mean = raw.iter().sum::<f64>() / n;
    let raw_var = raw.iter().map(|x| (x - raw_mean).powi(2)).sum::<f64>() / n;
    if raw_var <= 0.0 || !raw_var.is_finite() {
        return Err(Error::InvalidArgument(
            "raw rewards are degenerate; cannot scale to the requested spread".into(),
        ));
    }
    let a = sigma / raw_var.sqrt();
    let b = mean - a * raw_mean;
    Ok(raw.iter().map(|&x| a * x + b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use finite_bandits::RewardPopulation;

    fn spec(dist: RewardDist) -> SyntheticSpec {
        SyntheticSpec {
            arms: 5,
            population: 4000,
            dist,
            target: default_target(5),
            sigma: 0.3,
            seed: 99,
        }
    }

    #[test]
    fn moments_hit_their_targets_exactly() {
        for dist in RewardDist::ALL {
            let out = synth_gen(&spec(dist)).unwrap();
            let n = 4000f64;
            for arm in 0..5 {
                let mean = out.population.exact_mean(arm);
                assert_relative_eq!(mean, out.logits[arm] / n, max_relative = 1e-9);
                let var = (0..4000)
                    .map(|k| (out.population.reward(arm, k) - mean).powi(2))
                    .sum::<f64>()
                    / n;
                assert_relative_eq!(var.sqrt(), 0.3, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn heavy_tail_survives_in_the_raw_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000usize;
        let raw: Vec<f64> = (0..n).map(|_| RewardDist::LogNormal.sample(&mut rng)).collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        let m2 = raw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let m4 = raw.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        let excess_kurtosis = m4 / (m2 * m2) - 3.0;
        assert!(excess_kurtosis > 50.0, "excess kurtosis {excess_kurtosis}");
    }

    #[test]
    fn default_target_is_a_distribution() {
        let t = default_target(10);
        assert_eq!(t.len(), 10);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        // Two logits 0 and 2 split as softmax.
        let two = default_target(2);
        assert_relative_eq!(two[1] / two[0], 2f64.exp(), max_relative = 1e-12);
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        let mut s = spec(RewardDist::Normal);
        s.sigma = 0.0;
        assert!(synth_gen(&s).is_err());
        let mut s = spec(RewardDist::Normal);
        s.target = vec![0.5; 5];
        assert!(synth_gen(&s).is_err());
        let mut s = spec(RewardDist::Normal);
        s.target.truncate(4);
        assert!(synth_gen(&s).is_err());
    }

    #[test]
    fn generation_is_reproducible() {
        let a = synth_gen(&spec(RewardDist::Uniform)).unwrap();
        let b = synth_gen(&spec(RewardDist::Uniform)).unwrap();
        assert_eq!(a.population.rows(), b.population.rows());
    }
}
