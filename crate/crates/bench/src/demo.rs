//! Paired exact and subsampled sampling chains on a toy posterior.
//!
//! The model is a discrete parameter with a known target distribution,
//! encoded as synthetic per-datum log likelihood terms. Both chains draw
//! with the same Gumbel stream, so every step has a well-defined reference
//! winner and the subsampled chain's extra error is measured directly.

use finite_bandits::bnormal::solve_b;
use finite_bandits::gumbel::{argmax, exact_argmax, gumbel_vector};
use finite_bandits::racing::{race, BSource, RacingConfig};
use finite_bandits::{BatchSchedule, Error, Result, ShiftedPopulation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::synth::{default_target, synth_gen, RewardDist, SyntheticSpec};

#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub arms: usize,
    pub population: usize,
    pub dist: RewardDist,
    pub sigma: f64,
    pub delta: f64,
    pub m1: usize,
    pub draws: usize,
    pub seed: u64,
    /// Target probabilities; the softmax default when absent.
    pub target: Option<Vec<f64>>,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            arms: 10,
            population: 2000,
            dist: RewardDist::Normal,
            sigma: 0.1,
            delta: 0.05,
            m1: 50,
            draws: 20_000,
            seed: 1,
            target: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoReport {
    pub arms: usize,
    pub population: usize,
    pub distribution: String,
    pub sigma: f64,
    pub delta: f64,
    pub m1: usize,
    pub draws: usize,
    pub seed: u64,
    /// TV distance between the full-scan chain's empirical distribution and
    /// the analytic target.
    pub exact_tv: f64,
    /// Same for the subsampled chain.
    pub sub_tv: f64,
    /// Fraction of draws where the subsampled winner differed from the
    /// exact winner under the same noise.
    pub racing_error_rate: f64,
    pub exact_rewards: u64,
    pub sub_rewards: u64,
    /// Subsampled rewards over full-scan rewards; below 1 means the racer
    /// saved evaluations.
    pub rewards_ratio: f64,
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}

pub fn gibbs_demo(config: &DemoConfig) -> Result<DemoReport> {
    if config.draws == 0 {
        return Err(Error::InvalidArgument("demo needs at least one draw".into()));
    }
    let target = match &config.target {
        Some(t) => t.clone(),
        None => default_target(config.arms),
    };
    let synth = synth_gen(&SyntheticSpec {
        arms: config.arms,
        population: config.population,
        dist: config.dist,
        target: target.clone(),
        sigma: config.sigma,
        seed: config.seed,
    })?;
    let d = config.arms;
    let n = config.population;

    let schedule = BatchSchedule::new(n, config.m1.min(n))?;
    let mut racing = RacingConfig::normal(config.delta);
    racing.m1 = config.m1;
    racing.b_source = BSource::Fixed(solve_b(config.delta / d as f64, &schedule)?);

    let mut gumbel_rng = ChaCha8Rng::seed_from_u64(config.seed);
    gumbel_rng.set_stream(0);
    let mut sub_rng = ChaCha8Rng::seed_from_u64(config.seed);
    sub_rng.set_stream(1);

    let mut exact_counts = vec![0f64; d];
    let mut sub_counts = vec![0f64; d];
    let mut disagreements = 0usize;
    let mut sub_rewards = 0u64;
    for _ in 0..config.draws {
        let gumbels = gumbel_vector(d, &mut gumbel_rng);
        let offsets: Vec<f64> = gumbels.iter().map(|g| g / n as f64).collect();
        let shifted = ShiftedPopulation::new(&synth.population, offsets)?;
        let exact_winner = exact_argmax(&shifted);
        let reference: Vec<f64> =
            synth.logits.iter().zip(&gumbels).map(|(l, g)| l + g).collect();
        debug_assert_eq!(exact_winner, argmax(&reference));
        let raced = race(&shifted, &racing, &mut sub_rng)?;
        exact_counts[exact_winner] += 1.0;
        sub_counts[raced.winner] += 1.0;
        disagreements += (raced.winner != exact_winner) as usize;
        sub_rewards += raced.total_rewards as u64;
    }
    for c in exact_counts.iter_mut().chain(sub_counts.iter_mut()) {
        *c /= config.draws as f64;
    }
    let exact_rewards = (config.draws * d * n) as u64;
    Ok(DemoReport {
        arms: d,
        population: n,
        distribution: config.dist.name().to_string(),
        sigma: config.sigma,
        delta: config.delta,
        m1: config.m1,
        draws: config.draws,
        seed: config.seed,
        exact_tv: tv(&exact_counts, &target),
        sub_tv: tv(&sub_counts, &target),
        racing_error_rate: disagreements as f64 / config.draws as f64,
        exact_rewards,
        sub_rewards,
        rewards_ratio: sub_rewards as f64 / exact_rewards as f64,
    })
}
