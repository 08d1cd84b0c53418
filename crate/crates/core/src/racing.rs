//! Sequential elimination over finite reward populations.
//!
//! All candidate arms are sampled along a doubling batch schedule; after
//! each batch, any arm whose estimated mean sits provably below the current
//! leader's is dropped. The race ends when one arm remains or the
//! populations are exhausted, at which point means are exact and the argmax
//! is returned outright. With per-comparison failure budget `delta / D'`
//! the winner is the true best arm with probability at least `1 - delta`.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::bnormal::{b_simple, solve_b, BNormalTable};
use crate::bounds::{g_ebs, g_normal, g_normal_independent};
use crate::error::{Error, Result};
use crate::index_sampler::IndexSampler;
use crate::population::{range_bound, RewardPopulation};
use crate::schedule::BatchSchedule;
use crate::stats::ArmStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    /// Empirical Bernstein bound for without-replacement draws; needs a
    /// range bound per arm, makes no distributional assumption.
    Ebs,
    /// Gaussian bound calibrated on the running-mean random walk; tighter,
    /// assumes near-normal batch means.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarianceMode {
    /// Per-arm variances, bounds added across the compared pair.
    Marginal,
    /// Variance of per-index reward differences against the leader; arms
    /// must share indices, so populations must be equally sized.
    Pairwise,
    /// Per-arm index draws with possibly unequal population sizes.
    Independent,
}

/// Where the Gaussian bound multiplier comes from.
#[derive(Debug, Clone)]
pub enum BSource {
    /// Solve the crossing-probability equation for this schedule.
    Solved,
    /// Closed-form union-bound quantile; looser, instant.
    Simple,
    /// Caller-supplied constant, e.g. solved once outside a sweep loop.
    Fixed(f64),
    /// Interpolate a precomputed table.
    Table(Arc<BNormalTable>),
}

#[derive(Debug, Clone)]
pub struct RacingConfig {
    /// Total misidentification budget, in (0, 1).
    pub delta: f64,
    pub bound: BoundKind,
    pub variance: VarianceMode,
    /// First batch size; later batches double the cumulative count.
    pub m1: usize,
    pub b_source: BSource,
}

impl RacingConfig {
    pub fn normal(delta: f64) -> Self {
        Self {
            delta,
            bound: BoundKind::Normal,
            variance: VarianceMode::Marginal,
            m1: 50,
            b_source: BSource::Solved,
        }
    }

    pub fn ebs(delta: f64) -> Self {
        Self {
            delta,
            bound: BoundKind::Ebs,
            variance: VarianceMode::Marginal,
            m1: 2,
            b_source: BSource::Solved,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "failure budget must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.m1 == 0 {
            return Err(Error::InvalidArgument("first batch size must be positive".into()));
        }
        if self.bound == BoundKind::Ebs {
            if self.m1 < 2 {
                return Err(Error::Config(
                    "the Bernstein bound needs a variance estimate, so the first batch \
                     must hold at least 2 rewards"
                        .into(),
                ));
            }
            if self.variance == VarianceMode::Independent {
                return Err(Error::Config(
                    "the Bernstein bound is only calibrated for shared-index draws; \
                     use the Normal bound with independent arms"
                        .into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Candidates entering this iteration.
    pub candidates: usize,
    pub leader: usize,
    /// Estimated mean per candidate arm.
    pub means: Vec<(usize, f64)>,
    /// Elimination threshold per non-leader candidate.
    pub thresholds: Vec<(usize, f64)>,
    pub eliminated: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RacingResult {
    pub winner: usize,
    pub samples_per_arm: Vec<usize>,
    /// Iteration at which each arm was dropped; `None` for survivors.
    pub eliminated_at: Vec<Option<usize>>,
    pub total_rewards: usize,
    pub iterations: usize,
    pub trace: Vec<IterationTrace>,
}

fn resolve_b(source: &BSource, delta: f64, schedule: &BatchSchedule) -> Result<f64> {
    match source {
        BSource::Solved => solve_b(delta, schedule),
        BSource::Simple => b_simple(delta, schedule.horizon()),
        BSource::Fixed(b) => {
            if b.is_finite() && *b >= 0.0 {
                Ok(*b)
            } else {
                Err(Error::Config(format!("fixed bound multiplier must be finite and nonnegative, got {b}")))
            }
        }
        BSource::Table(table) => table.lookup(delta, schedule.proportion(1)),
    }
}

fn equal_population<P: RewardPopulation + ?Sized>(pop: &P) -> Result<usize> {
    pop.equal_population_size().ok_or_else(|| {
        Error::Config("marginal and pairwise modes share drawn indices across arms, which requires equal population sizes".into())
    })
}

/// Races all arms of `population` to a single winner under `config`,
/// deriving the batch schedule from `config.m1`.
pub fn race<P, R>(population: &P, config: &RacingConfig, rng: &mut R) -> Result<RacingResult>
where
    P: RewardPopulation + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    if population.arm_count() == 0 {
        return Err(Error::InvalidArgument("population has no arms".into()));
    }
    if config.variance == VarianceMode::Independent {
        return race_independent(population, config, rng);
    }
    let n = equal_population(population)?;
    let schedule = BatchSchedule::new(n, config.m1.min(n))?;
    race_shared(population, config, &schedule, rng)
}

/// `race` with a caller-provided shared schedule (marginal or pairwise
/// mode only; independent mode derives per-arm schedules itself).
pub fn race_with_schedule<P, R>(
    population: &P,
    config: &RacingConfig,
    schedule: &BatchSchedule,
    rng: &mut R,
) -> Result<RacingResult>
where
    P: RewardPopulation + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    if population.arm_count() == 0 {
        return Err(Error::InvalidArgument("population has no arms".into()));
    }
    if config.variance == VarianceMode::Independent {
        return Err(Error::Config(
            "independent mode builds one schedule per arm; call race() instead".into(),
        ));
    }
    let n = equal_population(population)?;
    if schedule.population_size() != n {
        return Err(Error::Shape(format!(
            "schedule covers {} rewards but each arm holds {n}",
            schedule.population_size()
        )));
    }
    race_shared(population, config, schedule, rng)
}

fn race_shared<P, R>(
    pop: &P,
    config: &RacingConfig,
    schedule: &BatchSchedule,
    rng: &mut R,
) -> Result<RacingResult>
where
    P: RewardPopulation + ?Sized,
    R: Rng + ?Sized,
{
    let d = pop.arm_count();
    let n = schedule.population_size();
    let pairwise = config.variance == VarianceMode::Pairwise;

    let mut samples = vec![0usize; d];
    let mut eliminated_at = vec![None; d];
    let mut trace = Vec::new();
    if d == 1 {
        return Ok(RacingResult {
            winner: 0,
            samples_per_arm: samples,
            eliminated_at,
            total_rewards: 0,
            iterations: 0,
            trace,
        });
    }

    let ranges: Vec<f64> = if config.bound == BoundKind::Ebs {
        (0..d).map(|arm| range_bound(pop, arm)).collect::<Result<_>>()?
    } else {
        vec![0.0; d]
    };
    let split = if pairwise { (d - 1) as f64 } else { d as f64 };
    let b = if config.bound == BoundKind::Normal {
        resolve_b(&config.b_source, config.delta / split, schedule)?
    } else {
        0.0
    };

    let mut alive: Vec<usize> = (0..d).collect();
    let mut stats = vec![ArmStats::new(); d];
    let mut pair_stats: HashMap<(usize, usize), ArmStats> = HashMap::new();
    if pairwise {
        for i in 0..d {
            for j in i + 1..d {
                pair_stats.insert((i, j), ArmStats::new());
            }
        }
    }
    let mut sampler = IndexSampler::new(n);
    let mut batch_rewards: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut total = 0usize;

    for t in 1..=schedule.horizon() {
        let batch = schedule.batch_size(t);
        let indices = sampler.draw(batch, rng)?;
        for &arm in &alive {
            let vals: Vec<f64> = indices.iter().map(|&ix| pop.reward(arm, ix)).collect();
            stats[arm].update(&vals)?;
            samples[arm] += batch;
            batch_rewards[arm] = vals;
        }
        total += batch * alive.len();
        if pairwise {
            for (k, &i) in alive.iter().enumerate() {
                for &j in &alive[k + 1..] {
                    pair_stats
                        .get_mut(&(i, j))
                        .unwrap()
                        .update_differences(&batch_rewards[i], &batch_rewards[j])?;
                }
            }
        }

        let leader = alive
            .iter()
            .copied()
            .max_by(|&a, &b| stats[a].mean().total_cmp(&stats[b].mean()).then(b.cmp(&a)))
            .unwrap();
        let means: Vec<(usize, f64)> = alive.iter().map(|&a| (a, stats[a].mean())).collect();

        if t == schedule.horizon() {
            // Populations exhausted: means are exact, the leader wins.
            trace.push(IterationTrace {
                iteration: t,
                candidates: alive.len(),
                leader,
                means,
                thresholds: Vec::new(),
                eliminated: Vec::new(),
            });
            return Ok(RacingResult {
                winner: leader,
                samples_per_arm: samples,
                eliminated_at,
                total_rewards: total,
                iterations: t,
                trace,
            });
        }

        let count = schedule.cumulative(t);
        let horizon = schedule.horizon();
        let mut thresholds = Vec::new();
        let mut dropped = Vec::new();
        for &arm in &alive {
            if arm == leader {
                continue;
            }
            let threshold = match config.variance {
                VarianceMode::Marginal => {
                    let g_arm = |a: usize| match config.bound {
                        BoundKind::Ebs => g_ebs(
                            config.delta / split,
                            count,
                            stats[a].std_dev(),
                            ranges[a],
                            n,
                            horizon,
                        ),
                        BoundKind::Normal => g_normal(count, stats[a].std_dev(), n, b),
                    };
                    g_arm(leader) + g_arm(arm)
                }
                VarianceMode::Pairwise => {
                    let key = (leader.min(arm), leader.max(arm));
                    let sigma = pair_stats[&key].std_dev();
                    match config.bound {
                        BoundKind::Ebs => g_ebs(
                            config.delta / split,
                            count,
                            sigma,
                            ranges[leader] + ranges[arm],
                            n,
                            horizon,
                        ),
                        BoundKind::Normal => g_normal(count, sigma, n, b),
                    }
                }
                VarianceMode::Independent => unreachable!("handled by race_independent"),
            };
            thresholds.push((arm, threshold));
            if stats[leader].mean() - stats[arm].mean() > threshold {
                dropped.push(arm);
            }
        }
        for &arm in &dropped {
            eliminated_at[arm] = Some(t);
        }
        let candidates = alive.len();
        alive.retain(|a| !dropped.contains(a));
        trace.push(IterationTrace {
            iteration: t,
            candidates,
            leader,
            means,
            thresholds,
            eliminated: dropped,
        });

        if alive.len() == 1 {
            return Ok(RacingResult {
                winner: alive[0],
                samples_per_arm: samples,
                eliminated_at,
                total_rewards: total,
                iterations: t,
                trace,
            });
        }
    }
    unreachable!("the final iteration always returns")
}

fn race_independent<P, R>(pop: &P, config: &RacingConfig, rng: &mut R) -> Result<RacingResult>
where
    P: RewardPopulation + ?Sized,
    R: Rng + ?Sized,
{
    let d = pop.arm_count();
    let mut samples = vec![0usize; d];
    let mut eliminated_at = vec![None; d];
    let mut trace = Vec::new();
    if d == 1 {
        return Ok(RacingResult {
            winner: 0,
            samples_per_arm: samples,
            eliminated_at,
            total_rewards: 0,
            iterations: 0,
            trace,
        });
    }

    let schedules: Vec<BatchSchedule> = (0..d)
        .map(|arm| {
            let n = pop.population_size(arm);
            BatchSchedule::new(n, config.m1.min(n))
        })
        .collect::<Result<_>>()?;
    let split = d as f64;
    let multipliers: Vec<f64> = schedules
        .iter()
        .map(|s| resolve_b(&config.b_source, config.delta / split, s))
        .collect::<Result<_>>()?;

    let mut alive: Vec<usize> = (0..d).collect();
    let mut stats = vec![ArmStats::new(); d];
    let mut samplers: Vec<IndexSampler> =
        (0..d).map(|arm| IndexSampler::new(pop.population_size(arm))).collect();
    let mut progress = vec![0usize; d];
    let mut total = 0usize;
    let mut iteration = 0usize;

    loop {
        iteration += 1;
        for &arm in &alive {
            if progress[arm] >= schedules[arm].horizon() {
                continue;
            }
            progress[arm] += 1;
            let batch = schedules[arm].batch_size(progress[arm]);
            let indices = samplers[arm].draw(batch, rng)?;
            let vals: Vec<f64> = indices.iter().map(|&ix| pop.reward(arm, ix)).collect();
            stats[arm].update(&vals)?;
            samples[arm] += batch;
            total += batch;
        }

        let leader = alive
            .iter()
            .copied()
            .max_by(|&a, &b| stats[a].mean().total_cmp(&stats[b].mean()).then(b.cmp(&a)))
            .unwrap();
        let means: Vec<(usize, f64)> = alive.iter().map(|&a| (a, stats[a].mean())).collect();
        let exhausted = |arm: usize| progress[arm] >= schedules[arm].horizon();

        let mut thresholds = Vec::new();
        let mut dropped = Vec::new();
        for &arm in &alive {
            if arm == leader {
                continue;
            }
            let threshold = g_normal_independent(
                samples[leader],
                stats[leader].std_dev(),
                pop.population_size(leader),
                samples[arm],
                stats[arm].std_dev(),
                pop.population_size(arm),
                multipliers[leader].max(multipliers[arm]),
            );
            thresholds.push((arm, threshold));
            if stats[leader].mean() - stats[arm].mean() > threshold {
                dropped.push(arm);
            }
        }
        for &arm in &dropped {
            eliminated_at[arm] = Some(iteration);
        }
        let candidates = alive.len();
        alive.retain(|a| !dropped.contains(a));
        trace.push(IterationTrace {
            iteration,
            candidates,
            leader,
            means,
            thresholds,
            eliminated: dropped,
        });

        if alive.len() == 1 {
            return Ok(RacingResult {
                winner: alive[0],
                samples_per_arm: samples,
                eliminated_at,
                total_rewards: total,
                iterations: iteration,
                trace,
            });
        }
        // Survivors with exhausted populations have exact means; when all
        // are exact, strict ties are unresolvable and the leader wins.
        if alive.iter().all(|&a| exhausted(a)) {
            return Ok(RacingResult {
                winner: leader,
                samples_per_arm: samples,
                eliminated_at,
                total_rewards: total,
                iterations: iteration,
                trace,
            });
        }
    }
}

/// Smallest normalized distance from the best arm's exact mean to any
/// other, the quantity driving the sample-size prediction. Marginal and
/// independent modes normalize by the summed standard deviations, pairwise
/// by the standard deviation of per-index differences. Returns infinity
/// for a single arm or a zero denominator.
pub fn normalized_gap<P>(pop: &P, mode: VarianceMode) -> Result<f64>
where
    P: RewardPopulation + ?Sized,
{
    let d = pop.arm_count();
    if d == 0 {
        return Err(Error::InvalidArgument("population has no arms".into()));
    }
    if d == 1 {
        return Ok(f64::INFINITY);
    }
    let means: Vec<f64> = (0..d).map(|arm| pop.exact_mean(arm)).collect();
    let best = (0..d)
        .max_by(|&a, &b| means[a].total_cmp(&means[b]).then(b.cmp(&a)))
        .unwrap();

    let std_of = |arm: usize| -> f64 {
        let n = pop.population_size(arm);
        let mu = means[arm];
        let ss: f64 = (0..n).map(|ix| (pop.reward(arm, ix) - mu).powi(2)).sum();
        (ss / n as f64).sqrt()
    };
    let diff_std = |a: usize, b: usize| -> f64 {
        let n = pop.population_size(a);
        let mu = means[a] - means[b];
        let ss: f64 = (0..n)
            .map(|ix| (pop.reward(a, ix) - pop.reward(b, ix) - mu).powi(2))
            .sum();
        (ss / n as f64).sqrt()
    };

    if mode == VarianceMode::Pairwise && pop.equal_population_size().is_none() {
        return Err(Error::Config(
            "pairwise gaps difference rewards index by index, which requires equal population sizes".into(),
        ));
    }

    let mut gap = f64::INFINITY;
    for arm in 0..d {
        if arm == best {
            continue;
        }
        let denom = match mode {
            VarianceMode::Pairwise => diff_std(best, arm),
            _ => std_of(best) + std_of(arm),
        };
        let ratio = if denom == 0.0 {
            f64::INFINITY
        } else {
            (means[best] - means[arm]) / denom
        };
        gap = gap.min(ratio);
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{MatrixPopulation, ShiftedPopulation};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn jittered_row(center: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| center + if i % 2 == 0 { 1e-3 } else { -1e-3 }).collect()
    }

    #[test]
    fn separated_arms_stop_after_one_batch() {
        let pop =
            MatrixPopulation::new(vec![jittered_row(0.0, 1000), jittered_row(10.0, 1000)]).unwrap();
        for config in [
            RacingConfig::normal(0.05),
            RacingConfig {
                m1: 50,
                ..RacingConfig::ebs(0.05)
            },
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let result = race(&pop, &config, &mut rng).unwrap();
            assert_eq!(result.winner, 1);
            assert_eq!(result.iterations, 1);
            assert_eq!(result.samples_per_arm, vec![50, 50]);
            assert_eq!(result.total_rewards, 100);
            assert_eq!(result.eliminated_at, vec![Some(1), None]);
            // The recorded threshold confirms one batch suffices.
            let (arm, threshold) = result.trace[0].thresholds[0];
            assert_eq!(arm, 0);
            assert!(10.0 > threshold);
        }
    }

    #[test]
    fn identical_arms_run_to_exhaustion() {
        let row: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        let pop = MatrixPopulation::new(vec![row.clone(), row.clone(), row]).unwrap();
        for variance in [VarianceMode::Marginal, VarianceMode::Pairwise] {
            for base in [RacingConfig::normal(0.05), RacingConfig::ebs(0.05)] {
                let config = RacingConfig {
                    variance,
                    m1: 8,
                    ..base
                };
                let mut rng = ChaCha8Rng::seed_from_u64(2);
                let result = race(&pop, &config, &mut rng).unwrap();
                assert_eq!(result.winner, 0, "ties break to the lowest index");
                assert_eq!(result.samples_per_arm, vec![64, 64, 64]);
                assert_eq!(result.total_rewards, 3 * 64);
                assert!(result.eliminated_at.iter().all(|e| e.is_none()));
            }
        }
    }

    #[test]
    fn common_shift_changes_nothing() {
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|arm| {
                (0..128)
                    .map(|i| 0.3 * arm as f64 + ((arm * 131 + i * 17) as f64 * 0.61).sin())
                    .collect()
            })
            .collect();
        let pop = MatrixPopulation::new(rows).unwrap();
        let shifted = ShiftedPopulation::new(&pop, vec![17.25; 4]).unwrap();
        for config in [
            RacingConfig {
                m1: 16,
                ..RacingConfig::normal(0.1)
            },
            RacingConfig {
                m1: 16,
                ..RacingConfig::ebs(0.1)
            },
        ] {
            let base = race(&pop, &config, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            let moved = race(&shifted, &config, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            assert_eq!(base.winner, moved.winner);
            assert_eq!(base.total_rewards, moved.total_rewards);
            assert_eq!(base.eliminated_at, moved.eliminated_at);
        }
    }

    #[test]
    fn independent_mode_handles_unequal_populations() {
        let pop = MatrixPopulation::new(vec![
            jittered_row(0.0, 40),
            jittered_row(1.0, 60),
            jittered_row(5.0, 100),
        ])
        .unwrap();
        let config = RacingConfig {
            variance: VarianceMode::Independent,
            m1: 8,
            ..RacingConfig::normal(0.05)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let result = race(&pop, &config, &mut rng).unwrap();
        assert_eq!(result.winner, 2);
        assert!(result.total_rewards <= 200);
        assert!(result.eliminated_at[2].is_none());
    }

    #[test]
    fn identical_unequal_arms_exhaust_and_tie_break() {
        let pop = MatrixPopulation::new(vec![vec![1.0; 30], vec![1.0; 50]]).unwrap();
        let config = RacingConfig {
            variance: VarianceMode::Independent,
            m1: 4,
            ..RacingConfig::normal(0.05)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let result = race(&pop, &config, &mut rng).unwrap();
        assert_eq!(result.winner, 0);
        assert_eq!(result.samples_per_arm, vec![30, 50]);
        assert_eq!(result.total_rewards, 80);
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let pop = MatrixPopulation::new(vec![vec![0.0; 8], vec![1.0; 8]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);

        let bad = RacingConfig {
            variance: VarianceMode::Independent,
            ..RacingConfig::ebs(0.05)
        };
        assert!(matches!(race(&pop, &bad, &mut rng), Err(Error::Config(_))));

        let bad = RacingConfig {
            m1: 1,
            ..RacingConfig::ebs(0.05)
        };
        assert!(matches!(race(&pop, &bad, &mut rng), Err(Error::Config(_))));

        let bad = RacingConfig {
            delta: 0.0,
            ..RacingConfig::normal(0.05)
        };
        assert!(matches!(race(&pop, &bad, &mut rng), Err(Error::InvalidArgument(_))));

        let ragged = MatrixPopulation::new(vec![vec![0.0; 8], vec![1.0; 9]]).unwrap();
        let pairwise = RacingConfig {
            variance: VarianceMode::Pairwise,
            m1: 2,
            ..RacingConfig::normal(0.05)
        };
        assert!(matches!(race(&ragged, &pairwise, &mut rng), Err(Error::Config(_))));
    }

    #[test]
    fn ebs_needs_range_bounds() {
        struct NoRanges;
        impl RewardPopulation for NoRanges {
            fn arm_count(&self) -> usize {
                2
            }
            fn population_size(&self, _arm: usize) -> usize {
                8
            }
            fn reward(&self, arm: usize, index: usize) -> f64 {
                arm as f64 + index as f64 * 1e-3
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = race(&NoRanges, &RacingConfig::ebs(0.05), &mut rng).unwrap_err();
        assert!(matches!(err, Error::MissingRangeBound { arm: 0 }));
    }

    #[test]
    fn single_arm_needs_no_samples() {
        let pop = MatrixPopulation::new(vec![vec![3.0; 16]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let result = race(&pop, &RacingConfig::normal(0.05), &mut rng).unwrap();
        assert_eq!(result.winner, 0);
        assert_eq!(result.total_rewards, 0);
    }

    #[test]
    fn explicit_schedule_must_match_population() {
        let pop = MatrixPopulation::new(vec![vec![0.0; 16], vec![1.0; 16]]).unwrap();
        let schedule = BatchSchedule::new(32, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err =
            race_with_schedule(&pop, &RacingConfig::normal(0.05), &schedule, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn gap_examples() {
        let pop = MatrixPopulation::new(vec![vec![0.0; 4], vec![1.0; 4]]).unwrap();
        assert_eq!(normalized_gap(&pop, VarianceMode::Marginal).unwrap(), f64::INFINITY);

        // Means 0 and 1, both standard deviations 1.
        let pop = MatrixPopulation::new(vec![vec![-1.0, 1.0, -1.0, 1.0], vec![0.0, 2.0, 0.0, 2.0]])
            .unwrap();
        let gap = normalized_gap(&pop, VarianceMode::Marginal).unwrap();
        assert!((gap - 0.5).abs() < 1e-12);

        // Identical per-index offsets make the pairwise denominator zero.
        let gap = normalized_gap(&pop, VarianceMode::Pairwise).unwrap();
        assert_eq!(gap, f64::INFINITY);
    }

    #[test]
    fn gap_matches_brute_force_on_random_instance() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|arm| (0..32).map(|i| ((arm * 97 + i * 31) as f64 * 0.713).sin() + 0.1 * arm as f64).collect())
            .collect();
        let pop = MatrixPopulation::new(rows.clone()).unwrap();

        let mean = |r: &[f64]| r.iter().sum::<f64>() / r.len() as f64;
        let std = |r: &[f64]| {
            let m = mean(r);
            (r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / r.len() as f64).sqrt()
        };
        let means: Vec<f64> = rows.iter().map(|r| mean(r)).collect();
        let best = (0..5)
            .max_by(|&a, &b| means[a].partial_cmp(&means[b]).unwrap())
            .unwrap();
        let expected = (0..5)
            .filter(|&i| i != best)
            .map(|i| (means[best] - means[i]) / (std(&rows[best]) + std(&rows[i])))
            .fold(f64::INFINITY, f64::min);

        let gap = normalized_gap(&pop, VarianceMode::Marginal).unwrap();
        assert!((gap - expected).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn race_respects_structural_invariants(
            seed in 0u64..1000,
            d in 1usize..5,
            n in 1usize..33,
            pairwise in proptest::bool::ANY,
        ) {
            let rows: Vec<Vec<f64>> = (0..d)
                .map(|arm| (0..n).map(|i| ((arm * 7 + i * 13 + seed as usize) % 11) as f64).collect())
                .collect();
            let pop = MatrixPopulation::new(rows).unwrap();
            let config = RacingConfig {
                variance: if pairwise { VarianceMode::Pairwise } else { VarianceMode::Marginal },
                m1: 2.min(n),
                b_source: BSource::Simple,
                ..RacingConfig::normal(0.2)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let result = race(&pop, &config, &mut rng).unwrap();
            prop_assert!(result.winner < d);
            prop_assert!(result.eliminated_at[result.winner].is_none());
            prop_assert!(result.total_rewards <= d * n);
            prop_assert!(result.samples_per_arm.iter().all(|&s| s <= n));
        }
    }
}
