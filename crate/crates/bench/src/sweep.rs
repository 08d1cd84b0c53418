//! Misidentification sweeps over algorithms, targets, and budgets.
//!
//! One sweep setting fixes (distribution, sigma, algorithm, delta) and runs
//! independent trials. Every trial perturbs the shared base population with
//! fresh Gumbel noise, lets the algorithm pick a winner, and compares it to
//! the exact perturbed argmax. Gumbel noise depends only on the trial
//! index, so settings are paired across algorithms and budgets.

use std::collections::HashMap;
use std::io::Write;

use finite_bandits::bnormal::solve_b;
use finite_bandits::gumbel::{argmax, gumbel_vector};
use finite_bandits::lilucb::{lil_ucb, LilUcbConfig};
use finite_bandits::racing::{race, BSource, RacingConfig, VarianceMode};
use finite_bandits::{
    BatchSchedule, Error, MatrixPopulation, Result, RewardPopulation, ShiftedPopulation,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::synth::{default_target, synth_gen, RewardDist, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgoKind {
    Exact,
    RacingNormal,
    RacingEbs,
    LilUcb,
}

impl AlgoKind {
    pub const ALL: [AlgoKind; 4] =
        [AlgoKind::Exact, AlgoKind::RacingNormal, AlgoKind::RacingEbs, AlgoKind::LilUcb];

    pub fn name(&self) -> &'static str {
        match self {
            AlgoKind::Exact => "exact",
            AlgoKind::RacingNormal => "racing-normal",
            AlgoKind::RacingEbs => "racing-ebs",
            AlgoKind::LilUcb => "lil-ucb",
        }
    }

    pub fn needs_delta(&self) -> bool {
        *self != AlgoKind::Exact
    }
}

impl std::str::FromStr for AlgoKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(AlgoKind::Exact),
            "racing-normal" => Ok(AlgoKind::RacingNormal),
            "racing-ebs" => Ok(AlgoKind::RacingEbs),
            "lil-ucb" => Ok(AlgoKind::LilUcb),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm {other:?} (expected exact, racing-normal, racing-ebs, \
                 or lil-ucb)"
            ))),
        }
    }
}

impl std::fmt::Display for AlgoKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub arms: usize,
    pub population: usize,
    pub trials: usize,
    pub seed: u64,
    pub dists: Vec<RewardDist>,
    pub sigmas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub algos: Vec<AlgoKind>,
    pub variance: VarianceMode,
    /// First-batch size; defaults per algorithm when absent (50 for the
    /// normal-tail racer, 2 for the range-based one).
    pub m1: Option<usize>,
    /// Target probabilities; the softmax default when absent.
    pub target: Option<Vec<f64>>,
}

/// One aggregated sweep setting. `delta` is 0 for the exact algorithm,
/// which has no budget.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub distribution: String,
    pub sigma: f64,
    pub delta: f64,
    pub trials: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub mean_proportion_sampled: f64,
}

/// Two-sided 95% z quantile used for every Wilson interval.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Wilson score interval for an error count.
pub fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let margin = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (((center - margin) / denom).max(0.0), ((center + margin) / denom).min(1.0))
}

enum TrialAlgo {
    Exact,
    Racing(RacingConfig),
    LilUcb(LilUcbConfig),
}

struct Setting {
    algo: AlgoKind,
    delta: f64,
    runner: TrialAlgo,
}

fn racing_setting(
    kind: AlgoKind,
    delta: f64,
    config: &SweepConfig,
    solve_cache: &mut HashMap<(u64, usize), f64>,
) -> Result<RacingConfig> {
    let d = config.arms;
    let n = config.population;
    let mut racing = match kind {
        AlgoKind::RacingNormal => RacingConfig::normal(delta),
        AlgoKind::RacingEbs => RacingConfig::ebs(delta),
        _ => unreachable!("not a racing algorithm"),
    };
    racing.variance = config.variance;
    if let Some(m1) = config.m1 {
        racing.m1 = m1;
    }
    if kind == AlgoKind::RacingEbs && config.variance == VarianceMode::Independent {
        return Err(Error::Config(
            "range-based racing has no independent-schedule variant".into(),
        ));
    }
    if kind == AlgoKind::RacingNormal {
        // One multiplier per (budget, schedule); solving it inside every
        // trial would dominate the runtime.
        let per_arm_delta = match config.variance {
            VarianceMode::Pairwise => delta / (d.max(2) - 1) as f64,
            _ => delta / d as f64,
        };
        let m1 = racing.m1.min(n);
        let b = match solve_cache.entry((per_arm_delta.to_bits(), m1)) {
            std::collections::hash_map::Entry::Occupied(e) => *e.get(),
            std::collections::hash_map::Entry::Vacant(e) => {
                let schedule = BatchSchedule::new(n, m1)?;
                *e.insert(solve_b(per_arm_delta, &schedule)?)
            }
        };
        racing.b_source = BSource::Fixed(b);
    }
    Ok(racing)
}

fn run_setting(
    base: &MatrixPopulation,
    logits: &[f64],
    setting: &Setting,
    config: &SweepConfig,
) -> Result<(usize, f64)> {
    let d = config.arms;
    let n = config.population;
    let full = (d * n) as f64;
    let outcomes: Vec<Result<(bool, usize)>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut gumbel_rng = ChaCha8Rng::seed_from_u64(config.seed);
            gumbel_rng.set_stream(2 * trial as u64);
            let mut sub_rng = ChaCha8Rng::seed_from_u64(config.seed);
            sub_rng.set_stream(2 * trial as u64 + 1);
            let gumbels = gumbel_vector(d, &mut gumbel_rng);
            let offsets: Vec<f64> = gumbels.iter().map(|g| g / n as f64).collect();
            let shifted = ShiftedPopulation::new(base, offsets)?;
            let reference: Vec<f64> =
                logits.iter().zip(&gumbels).map(|(l, g)| l + g).collect();
            let exact_winner = argmax(&reference);
            let (winner, rewards) = match &setting.runner {
                TrialAlgo::Exact => (finite_bandits::gumbel::exact_argmax(&shifted), d * n),
                TrialAlgo::Racing(cfg) => {
                    let result = race(&shifted, cfg, &mut sub_rng)?;
                    (result.winner, result.total_rewards)
                }
                TrialAlgo::LilUcb(cfg) => {
                    let result = lil_ucb(&shifted, cfg, &mut sub_rng)?;
                    (result.winner, result.total_rewards)
                }
            };
            debug_assert!(rewards <= d * n);
            Ok((winner != exact_winner, rewards))
        })
        .collect();
    let mut errors = 0usize;
    let mut consumed = 0usize;
    for outcome in outcomes {
        let (err, rewards) = outcome?;
        errors += err as usize;
        consumed += rewards;
    }
    Ok((errors, consumed as f64 / (config.trials as f64 * full)))
}

pub fn run_error_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("sweep needs at least one trial".into()));
    }
    if config.algos.is_empty() || config.dists.is_empty() || config.sigmas.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one algorithm, distribution, and sigma".into(),
        ));
    }
    if config.algos.iter().any(|a| a.needs_delta()) && config.deltas.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one delta".into()));
    }
    let target = match &config.target {
        Some(t) => t.clone(),
        None => default_target(config.arms),
    };

    let mut solve_cache = HashMap::new();
    let mut settings = Vec::new();
    for &algo in &config.algos {
        if !algo.needs_delta() {
            settings.push(Setting { algo, delta: 0.0, runner: TrialAlgo::Exact });
            continue;
        }
        for &delta in &config.deltas {
            let runner = match algo {
                AlgoKind::RacingNormal | AlgoKind::RacingEbs => {
                    TrialAlgo::Racing(racing_setting(algo, delta, config, &mut solve_cache)?)
                }
                AlgoKind::LilUcb => {
                    // Scale is filled in per population below.
                    TrialAlgo::LilUcb(LilUcbConfig::heuristic(delta, config.arms, 0.0))
                }
                AlgoKind::Exact => unreachable!(),
            };
            settings.push(Setting { algo, delta, runner });
        }
    }

    let mut rows = Vec::new();
    for &dist in &config.dists {
        for &sigma in &config.sigmas {
            let synth = synth_gen(&SyntheticSpec {
                arms: config.arms,
                population: config.population,
                dist,
                target: target.clone(),
                sigma,
                seed: config.seed,
            })?;
            let scale = (0..config.arms)
                .map(|arm| synth.population.range_bound(arm).unwrap_or(0.0))
                .fold(0.0f64, f64::max)
                / 2.0;
            for setting in &settings {
                let patched;
                let active = match &setting.runner {
                    TrialAlgo::LilUcb(cfg) => {
                        patched = Setting {
                            algo: setting.algo,
                            delta: setting.delta,
                            runner: TrialAlgo::LilUcb(LilUcbConfig { scale, ..cfg.clone() }),
                        };
                        &patched
                    }
                    _ => setting,
                };
                let (errors, proportion) =
                    run_setting(&synth.population, &synth.logits, active, config)?;
                let (wilson_lo, wilson_hi) = wilson_interval(errors, config.trials);
                rows.push(SweepRow {
                    algorithm: setting.algo.name().to_string(),
                    distribution: dist.name().to_string(),
                    sigma,
                    delta: setting.delta,
                    trials: config.trials,
                    errors,
                    error_rate: errors as f64 / config.trials as f64,
                    wilson_lo,
                    wilson_hi,
                    mean_proportion_sampled: proportion,
                });
            }
        }
    }
    Ok(rows)
}

/// Writes rows in the fixed column order with stable float formatting, so
/// equal seeds yield byte-identical files.
pub fn write_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "algorithm",
        "distribution",
        "sigma",
        "delta",
        "trials",
        "errors",
        "error_rate",
        "wilson_lo",
        "wilson_hi",
        "mean_proportion_sampled",
    ])?;
    for row in rows {
        w.write_record([
            row.algorithm.clone(),
            row.distribution.clone(),
            format!("{:e}", row.sigma),
            format!("{}", row.delta),
            row.trials.to_string(),
            row.errors.to_string(),
            format!("{:.6}", row.error_rate),
            format!("{:.6}", row.wilson_lo),
            format!("{:.6}", row.wilson_hi),
            format!("{:.6}", row.mean_proportion_sampled),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tiny_config() -> SweepConfig {
        SweepConfig {
            arms: 4,
            population: 256,
            trials: 60,
            seed: 5,
            dists: vec![RewardDist::Normal],
            sigmas: vec![1e-4],
            deltas: vec![0.1],
            algos: vec![AlgoKind::Exact, AlgoKind::RacingNormal, AlgoKind::LilUcb],
            variance: VarianceMode::Marginal,
            m1: Some(16),
            target: None,
        }
    }

    #[test]
    fn exact_rows_never_err_and_scan_everything() {
        let rows = run_error_sweep(&tiny_config()).unwrap();
        let exact = rows.iter().find(|r| r.algorithm == "exact").unwrap();
        assert_eq!(exact.errors, 0);
        assert_abs_diff_eq!(exact.mean_proportion_sampled, 1.0, epsilon = 1e-12);
        assert_eq!(exact.delta, 0.0);
        for row in &rows {
            assert!(row.mean_proportion_sampled > 0.0 && row.mean_proportion_sampled <= 1.0);
            assert!(row.errors <= row.trials);
            assert!(row.wilson_lo <= row.error_rate && row.error_rate <= row.wilson_hi);
        }
    }

    #[test]
    fn easy_spreads_stop_near_the_first_batch() {
        let rows = run_error_sweep(&tiny_config()).unwrap();
        let racing = rows.iter().find(|r| r.algorithm == "racing-normal").unwrap();
        // First batch is 4 * 16 of 4 * 256 rewards; allow one doubling.
        assert!(
            racing.mean_proportion_sampled <= 2.0 * 16.0 / 256.0,
            "proportion {}",
            racing.mean_proportion_sampled
        );
    }

    #[test]
    fn sweeps_are_deterministic() {
        let a = run_error_sweep(&tiny_config()).unwrap();
        let b = run_error_sweep(&tiny_config()).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        write_csv(&a, &mut buf_a).unwrap();
        write_csv(&b, &mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
    }

    #[test]
    fn wilson_interval_matches_known_values() {
        // 5 errors in 100 trials: interval from the closed form.
        let (lo, hi) = wilson_interval(5, 100);
        assert_abs_diff_eq!(lo, 0.021543679154367962, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 0.11175046923191914, epsilon = 1e-12);
        let (lo, hi) = wilson_interval(0, 50);
        assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-15);
        assert!(hi > 0.0 && hi < 0.1);
    }

    #[test]
    fn rejects_empty_grids() {
        let mut config = tiny_config();
        config.deltas.clear();
        assert!(run_error_sweep(&config).is_err());
        let mut config = tiny_config();
        config.trials = 0;
        assert!(run_error_sweep(&config).is_err());
    }
}
