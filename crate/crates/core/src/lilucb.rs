//! UCB-style best-arm identification adjusted for finite reward
//! populations.
//!
//! One reward is pulled per iteration from the arm with the highest
//! confidence bound, each arm sampling its own population without
//! replacement. Exhausted arms report their exact mean as the bound, and
//! the run ends either when one arm has been pulled far more than the rest
//! or when the top arm has seen its whole population, capping total pulls
//! at the summed population sizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index_sampler::IndexSampler;
use crate::population::RewardPopulation;
use crate::stats::ArmStats;

#[derive(Debug, Clone)]
pub struct LilUcbConfig {
    pub delta: f64,
    /// Iterated-logarithm tempering; 0 in the heuristic setting.
    pub epsilon: f64,
    /// Bound inflation factor.
    pub beta: f64,
    /// Stopping dominance factor: finish once some arm holds
    /// `1 + lambda *` (everyone else's pulls).
    pub lambda: f64,
    /// Sub-Gaussian scale of the rewards, typically half the reward range.
    pub scale: f64,
}

impl LilUcbConfig {
    /// The common heuristic parameterization: `epsilon = 0`, `beta = 1/2`,
    /// `lambda = 1 + 10/D`. Tracks best-arm error well in practice but
    /// carries no formal guarantee.
    pub fn heuristic(delta: f64, arms: usize, scale: f64) -> Self {
        Self {
            delta,
            epsilon: 0.0,
            beta: 0.5,
            lambda: 1.0 + 10.0 / arms.max(1) as f64,
            scale,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "failure budget must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.epsilon >= 0.0) || !(self.beta > 0.0) || !(self.lambda > 0.0) {
            return Err(Error::InvalidArgument(
                "epsilon must be nonnegative and beta, lambda positive".into(),
            ));
        }
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scale must be finite and nonnegative, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LilUcbResult {
    pub winner: usize,
    pub samples_per_arm: Vec<usize>,
    pub total_rewards: usize,
}

/// Confidence radius after `t` pulls; the `+2` keeps the iterated
/// logarithm defined from the first pull.
fn radius(config: &LilUcbConfig, t: usize) -> f64 {
    let e = config.epsilon;
    let t = t as f64;
    let inner = (((1.0 + e) * t + 2.0).ln() / config.delta).ln();
    (1.0 + config.beta) * (1.0 + e.sqrt()) * config.scale * (2.0 * (1.0 + e) * inner / t).sqrt()
}

/// Runs the pull loop to a winner. Arms draw from independent RNG streams
/// seeded off `rng`, so a fixed input stream reproduces the pull sequence.
pub fn lil_ucb<P, R>(population: &P, config: &LilUcbConfig, rng: &mut R) -> Result<LilUcbResult>
where
    P: RewardPopulation + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    let d = population.arm_count();
    if d == 0 {
        return Err(Error::InvalidArgument("population has no arms".into()));
    }
    let mut arm_rngs: Vec<ChaCha8Rng> =
        (0..d).map(|_| ChaCha8Rng::seed_from_u64(rng.random())).collect();
    let mut samplers: Vec<IndexSampler> =
        (0..d).map(|arm| IndexSampler::new(population.population_size(arm))).collect();
    let mut stats = vec![ArmStats::new(); d];
    let mut total = 0usize;

    let pull = |arm: usize,
                    stats: &mut [ArmStats],
                    samplers: &mut [IndexSampler],
                    rngs: &mut [ChaCha8Rng]|
     -> Result<()> {
        let ix = samplers[arm].draw(1, &mut rngs[arm])?[0];
        stats[arm].update(&[population.reward(arm, ix)])
    };

    for arm in 0..d {
        pull(arm, &mut stats, &mut samplers, &mut arm_rngs)?;
        total += 1;
    }

    let ucb = |stats: &[ArmStats], i: usize| {
        let t = stats[i].count();
        if t >= population.population_size(i) {
            stats[i].mean()
        } else {
            stats[i].mean() + radius(config, t)
        }
    };
    // Only the pulled arm's index changes per iteration.
    let mut ucb_values: Vec<f64> = (0..d).map(|i| ucb(&stats, i)).collect();

    loop {
        // An arm pulled lambda times more than all others combined wins.
        if let Some(arm) = (0..d).find(|&i| {
            let own = stats[i].count();
            own as f64 >= 1.0 + config.lambda * (total - own) as f64
        }) {
            return Ok(LilUcbResult {
                winner: arm,
                samples_per_arm: stats.iter().map(|s| s.count()).collect(),
                total_rewards: total,
            });
        }

        let best = (0..d)
            .max_by(|&a, &b| ucb_values[a].total_cmp(&ucb_values[b]).then(b.cmp(&a)))
            .unwrap();

        // The top arm being exact settles the race.
        if stats[best].count() >= population.population_size(best) {
            return Ok(LilUcbResult {
                winner: best,
                samples_per_arm: stats.iter().map(|s| s.count()).collect(),
                total_rewards: total,
            });
        }
        pull(best, &mut stats, &mut samplers, &mut arm_rngs)?;
        total += 1;
        ucb_values[best] = ucb(&stats, best);
    }
}
