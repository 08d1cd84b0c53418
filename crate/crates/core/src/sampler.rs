//! Approximate discrete sampling with a total-variation guarantee.
//!
//! One draw works in three moves: perturb each arm's log weight with Gumbel
//! noise, spread the per-arm constant across the arm's reward population,
//! and hand the populations to a best-arm algorithm run at failure budget
//! `delta`. Conditioned on the noise, the algorithm returns the exact
//! argmax with probability at least `1 - delta`, so the returned index is
//! within `delta` total variation of the target distribution.
//!
//! The same reduction decides a Metropolis-Hastings acceptance without any
//! Gumbel noise ([`mh_accept`]) and draws one component of a Gibbs sweep
//! from conditionals whose candidate values may carry different factor
//! counts ([`gibbs_step`]).

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::control_variates::{residual_population, ControlVariate};
use crate::error::{Error, Result};
use crate::gumbel::{exact_argmax, gumbel_vector, perturb, FactorOracle};
use crate::lilucb::{lil_ucb, LilUcbConfig};
use crate::population::{RewardPopulation, WithRangeBounds};
use crate::racing::{race, RacingConfig, VarianceMode};

#[derive(Debug, Clone)]
pub enum Algorithm {
    /// Full-scan argmax; consumes every reward and never errs.
    Exact,
    Racing(RacingConfig),
    LilUcb(LilUcbConfig),
}

impl Algorithm {
    /// The failure budget, when the algorithm has one.
    pub fn delta(&self) -> Option<f64> {
        match self {
            Algorithm::Exact => None,
            Algorithm::Racing(config) => Some(config.delta),
            Algorithm::LilUcb(config) => Some(config.delta),
        }
    }
}

/// How to turn one perturbed weight comparison into a winner.
#[derive(Clone)]
pub struct SamplerSpec {
    pub algorithm: Algorithm,
    /// Subtracted from the rewards (mean added back) before the algorithm
    /// runs; the winner's distribution is unchanged, only the sample cost.
    pub control_variate: Option<Arc<dyn ControlVariate + Send + Sync>>,
    /// Per-arm spread bounds for the rewards after the control variate is
    /// applied. Range-based algorithms cannot run on residual rewards
    /// without them.
    pub residual_range_bounds: Option<Vec<f64>>,
}

impl std::fmt::Debug for SamplerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SamplerSpec")
            .field("algorithm", &self.algorithm)
            .field("control_variate", &self.control_variate.as_ref().map(|_| "<dyn>"))
            .field("residual_range_bounds", &self.residual_range_bounds)
            .finish()
    }
}

impl SamplerSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        Self { algorithm, control_variate: None, residual_range_bounds: None }
    }

    pub fn exact() -> Self {
        Self::new(Algorithm::Exact)
    }

    pub fn racing_normal(delta: f64) -> Self {
        Self::new(Algorithm::Racing(RacingConfig::normal(delta)))
    }

    pub fn racing_ebs(delta: f64) -> Self {
        Self::new(Algorithm::Racing(RacingConfig::ebs(delta)))
    }

    pub fn racing(config: RacingConfig) -> Self {
        Self::new(Algorithm::Racing(config))
    }

    pub fn lil_ucb(config: LilUcbConfig) -> Self {
        Self::new(Algorithm::LilUcb(config))
    }

    pub fn with_control_variate(mut self, cv: Arc<dyn ControlVariate + Send + Sync>) -> Self {
        self.control_variate = Some(cv);
        self
    }

    pub fn with_residual_range_bounds(mut self, bounds: Vec<f64>) -> Self {
        self.residual_range_bounds = Some(bounds);
        self
    }
}

/// One draw's outcome: the sampled arm and what it cost.
#[derive(Debug, Clone, Serialize)]
pub struct SampleOutcome {
    pub winner: usize,
    /// The Gumbel noise used, one value per arm; empty for draws that add
    /// none. Fixing these makes the exact argmax reproducible.
    pub gumbels: Vec<f64>,
    pub total_rewards: usize,
}

fn run_algorithm<P, R>(pop: &P, algorithm: &Algorithm, rng: &mut R) -> Result<(usize, usize)>
where
    P: RewardPopulation + ?Sized,
    R: Rng + ?Sized,
{
    match algorithm {
        Algorithm::Exact => {
            let total = (0..pop.arm_count()).map(|arm| pop.population_size(arm)).sum();
            Ok((exact_argmax(pop), total))
        }
        Algorithm::Racing(config) => {
            race(pop, config, rng).map(|r| (r.winner, r.total_rewards))
        }
        Algorithm::LilUcb(config) => {
            lil_ucb(pop, config, rng).map(|r| (r.winner, r.total_rewards))
        }
    }
}

fn run_spec<P, R>(pop: &P, spec: &SamplerSpec, rng: &mut R) -> Result<(usize, usize)>
where
    P: RewardPopulation,
    R: Rng + ?Sized,
{
    // The exact path skips the control variate: means are preserved, so the
    // argmax is the same and the scan cost cannot shrink.
    let cv = match (&spec.control_variate, &spec.algorithm) {
        (Some(cv), Algorithm::Racing(_) | Algorithm::LilUcb(_)) => Some(cv),
        _ => None,
    };
    match cv {
        None => run_algorithm(pop, &spec.algorithm, rng),
        Some(cv) => {
            let residual = residual_population(pop, cv.as_ref());
            match &spec.residual_range_bounds {
                None => run_algorithm(&residual, &spec.algorithm, rng),
                Some(bounds) => {
                    let bounded = WithRangeBounds::new(residual, bounds.clone())?;
                    run_algorithm(&bounded, &spec.algorithm, rng)
                }
            }
        }
    }
}

/// Draws one index approximately distributed as the oracle's target.
///
/// Gumbel noise comes from `gumbel_rng`, subsampling randomness from
/// `subsample_rng`; keeping the streams separate lets callers fix the noise
/// and study the conditional misidentification rate on its own.
pub fn approx_sample<O, G, S>(
    oracle: &O,
    spec: &SamplerSpec,
    gumbel_rng: &mut G,
    subsample_rng: &mut S,
) -> Result<SampleOutcome>
where
    O: FactorOracle + ?Sized,
    G: Rng + ?Sized,
    S: Rng + ?Sized,
{
    let d = oracle.arm_count();
    if d == 0 {
        return Err(Error::InvalidArgument("oracle has no arms".into()));
    }
    let gumbels = gumbel_vector(d, gumbel_rng);
    let pop = perturb(oracle, gumbels.clone())?;
    let (winner, total_rewards) = run_spec(&pop, spec, subsample_rng)?;
    Ok(SampleOutcome { winner, gumbels, total_rewards })
}

/// A Metropolis-Hastings proposal's state-level log densities. Likelihood
/// terms stay out; they are the reward population.
#[derive(Debug, Clone, Copy)]
pub struct MhProposal {
    /// `ln p(x)` for the current state.
    pub log_prior_current: f64,
    /// `ln p(x')` for the proposed state.
    pub log_prior_proposed: f64,
    /// `ln q(x' | x)`.
    pub log_forward_proposal: f64,
    /// `ln q(x | x')`.
    pub log_reverse_proposal: f64,
}

struct MhPopulation<'a, O: ?Sized> {
    likelihoods: &'a O,
    offsets: [f64; 2],
}

impl<O: FactorOracle + ?Sized> RewardPopulation for MhPopulation<'_, O> {
    fn arm_count(&self) -> usize {
        2
    }
    fn population_size(&self, _arm: usize) -> usize {
        self.likelihoods.factor_count()
    }
    fn reward(&self, arm: usize, index: usize) -> f64 {
        self.likelihoods.log_factor(arm, index) + self.offsets[arm]
    }
    fn range_bound(&self, arm: usize) -> Option<f64> {
        self.likelihoods.log_factor_range(arm)
    }
}

/// Decides one Metropolis-Hastings acceptance by racing "stay" against
/// "move" on the per-datum log likelihoods.
///
/// `likelihoods` is a two-arm oracle: arm 0 holds `ln p(y_n | x)` for the
/// current state, arm 1 holds `ln p(y_n | x')` for the proposed one. The
/// uniform draw `u` must lie in `(0, 1]` and replaces Gumbel noise as the
/// only injected randomness; its log joins the current state's prior and
/// forward proposal density as a per-reward offset, so arm 1 winning is
/// exactly the event `u < ` acceptance ratio when the race is exact. An
/// exact tie keeps the current state.
pub fn mh_accept<O, R>(
    likelihoods: &O,
    proposal: &MhProposal,
    u: f64,
    spec: &SamplerSpec,
    subsample_rng: &mut R,
) -> Result<bool>
where
    O: FactorOracle + ?Sized,
    R: Rng + ?Sized,
{
    if likelihoods.arm_count() != 2 {
        return Err(Error::Shape(format!(
            "acceptance needs a two-arm likelihood oracle, got {} arms",
            likelihoods.arm_count()
        )));
    }
    if likelihoods.factor_count() == 0 {
        return Err(Error::Shape("likelihood oracle carries no factors".into()));
    }
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "uniform draw must lie in (0, 1], got {u}"
        )));
    }
    let n = likelihoods.factor_count() as f64;
    let stay = (u.ln() + proposal.log_prior_current + proposal.log_forward_proposal) / n;
    let go = (proposal.log_prior_proposed + proposal.log_reverse_proposal) / n;
    if !stay.is_finite() || !go.is_finite() {
        return Err(Error::InvalidArgument(
            "prior and proposal log densities must be finite".into(),
        ));
    }
    let pop = MhPopulation { likelihoods, offsets: [stay, go] };
    let (winner, _) = run_spec(&pop, spec, subsample_rng)?;
    Ok(winner == 1)
}

/// Factor populations for one Gibbs conditional: candidate value `i` of the
/// resampled component carries `factor_count(i)` log factors whose sum (plus
/// `log_base(i)`) is its conditional log weight. Counts may differ between
/// candidates.
pub trait ConditionalFactors {
    fn arm_count(&self) -> usize;
    fn factor_count(&self, arm: usize) -> usize;
    fn log_factor(&self, arm: usize, index: usize) -> f64;
    fn log_base(&self, arm: usize) -> f64 {
        let _ = arm;
        0.0
    }
    fn log_factor_range(&self, arm: usize) -> Option<f64> {
        let _ = arm;
        None
    }
}

impl<O: FactorOracle + ?Sized> ConditionalFactors for O {
    fn arm_count(&self) -> usize {
        FactorOracle::arm_count(self)
    }
    fn factor_count(&self, _arm: usize) -> usize {
        FactorOracle::factor_count(self)
    }
    fn log_factor(&self, arm: usize, index: usize) -> f64 {
        FactorOracle::log_factor(self, arm, index)
    }
    fn log_base(&self, arm: usize) -> f64 {
        FactorOracle::log_base(self, arm)
    }
    fn log_factor_range(&self, arm: usize) -> Option<f64> {
        FactorOracle::log_factor_range(self, arm)
    }
}

/// Rewards `(N_i / K) ln f_n(i) + (ln f_0(i) + g_i) / K` with `K` the
/// largest factor count: every arm's population mean is its log weight
/// divided by the same `K`, so the best arm is a draw from the conditional
/// even when counts differ.
struct ScaledConditionalPopulation<'a, C: ?Sized> {
    factors: &'a C,
    scales: Vec<f64>,
    offsets: Vec<f64>,
}

impl<C: ConditionalFactors + ?Sized> RewardPopulation for ScaledConditionalPopulation<'_, C> {
    fn arm_count(&self) -> usize {
        self.factors.arm_count()
    }
    fn population_size(&self, arm: usize) -> usize {
        self.factors.factor_count(arm)
    }
    fn reward(&self, arm: usize, index: usize) -> f64 {
        self.scales[arm] * self.factors.log_factor(arm, index) + self.offsets[arm]
    }
    fn range_bound(&self, arm: usize) -> Option<f64> {
        self.factors.log_factor_range(arm).map(|r| self.scales[arm] * r)
    }
}

/// Draws a new value for one component of a Gibbs sweep.
///
/// Callers rebuild `factors` from the current conditioning state before
/// every step. Unequal factor counts are supported, but a racing spec must
/// then use [`VarianceMode::Independent`].
pub fn gibbs_step<C, G, S>(
    factors: &C,
    spec: &SamplerSpec,
    gumbel_rng: &mut G,
    subsample_rng: &mut S,
) -> Result<SampleOutcome>
where
    C: ConditionalFactors + ?Sized,
    G: Rng + ?Sized,
    S: Rng + ?Sized,
{
    let d = factors.arm_count();
    if d == 0 {
        return Err(Error::InvalidArgument("conditional has no candidate values".into()));
    }
    let sizes: Vec<usize> = (0..d).map(|arm| factors.factor_count(arm)).collect();
    if let Some(arm) = sizes.iter().position(|&n| n == 0) {
        return Err(Error::Shape(format!("candidate value {arm} carries no factors")));
    }
    let k = *sizes.iter().max().expect("at least one arm") as f64;
    if sizes.iter().any(|&n| n != sizes[0]) {
        if let Algorithm::Racing(config) = &spec.algorithm {
            if config.variance != VarianceMode::Independent {
                return Err(Error::Config(
                    "candidate values carry different factor counts; racing them needs \
                     VarianceMode::Independent"
                        .into(),
                ));
            }
        }
    }
    let gumbels = gumbel_vector(d, gumbel_rng);
    let mut scales = Vec::with_capacity(d);
    let mut offsets = Vec::with_capacity(d);
    for arm in 0..d {
        let offset = (factors.log_base(arm) + gumbels[arm]) / k;
        if !offset.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite conditional weight for candidate {arm}; zero-probability \
                 candidates must be removed first"
            )));
        }
        scales.push(sizes[arm] as f64 / k);
        offsets.push(offset);
    }
    let pop = ScaledConditionalPopulation { factors, scales, offsets };
    let (winner, total_rewards) = run_spec(&pop, spec, subsample_rng)?;
    Ok(SampleOutcome { winner, gumbels, total_rewards })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gumbel::{exact_log_weights, exact_sample_cdf, TableFactorOracle};
    use crate::racing::BSource;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_oracle(d: usize, n: usize, seed: u64) -> TableFactorOracle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table: Vec<Vec<f64>> = (0..d)
            .map(|arm| {
                (0..n).map(|_| 0.15 * arm as f64 + rng.random_range(-0.4..0.4)).collect()
            })
            .collect();
        TableFactorOracle::new(table, vec![]).unwrap()
    }

    fn normalized_weights(oracle: &TableFactorOracle) -> Vec<f64> {
        let logs = exact_log_weights(oracle).unwrap();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = unnorm.iter().sum();
        unnorm.into_iter().map(|w| w / z).collect()
    }

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
    }

    #[test]
    fn exact_spec_tracks_the_closed_form_sampler() {
        let oracle = toy_oracle(4, 8, 21);
        let target = normalized_weights(&oracle);
        let draws = 20_000usize;
        let spec = SamplerSpec::exact();
        let mut gumbel_rng = ChaCha8Rng::seed_from_u64(1);
        let mut sub_rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts_argmax = vec![0f64; 4];
        for _ in 0..draws {
            let out = approx_sample(&oracle, &spec, &mut gumbel_rng, &mut sub_rng).unwrap();
            counts_argmax[out.winner] += 1.0;
        }
        let mut counts_cdf = vec![0f64; 4];
        let mut cdf_rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..draws {
            let u = cdf_rng.random::<f64>();
            counts_cdf[exact_sample_cdf(&target, u).unwrap()] += 1.0;
        }
        for c in counts_argmax.iter_mut().chain(counts_cdf.iter_mut()) {
            *c /= draws as f64;
        }
        assert!(tv(&counts_argmax, &target) < 0.02, "argmax path drifted: {counts_argmax:?}");
        assert!(tv(&counts_cdf, &target) < 0.02, "cdf path drifted: {counts_cdf:?}");
    }

    #[test]
    fn single_arm_needs_no_subsamples() {
        let oracle = toy_oracle(1, 32, 5);
        let spec = SamplerSpec::racing_normal(0.05);
        let out = approx_sample(
            &oracle,
            &spec,
            &mut ChaCha8Rng::seed_from_u64(0),
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert_eq!(out.winner, 0);
        assert_eq!(out.total_rewards, 0);
    }

    #[test]
    fn fixed_seeds_reproduce_the_winner_sequence() {
        let oracle = toy_oracle(5, 64, 9);
        let mut config = RacingConfig::normal(0.1);
        config.m1 = 8;
        config.b_source = BSource::Simple;
        let spec = SamplerSpec::racing(config);
        let run = || {
            let mut gumbel_rng = ChaCha8Rng::seed_from_u64(40);
            let mut sub_rng = ChaCha8Rng::seed_from_u64(41);
            (0..30)
                .map(|_| {
                    approx_sample(&oracle, &spec, &mut gumbel_rng, &mut sub_rng).unwrap().winner
                })
                .collect::<Vec<usize>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_control_variate_changes_nothing() {
        struct ZeroCv;
        impl ControlVariate for ZeroCv {
            fn surrogate(&self, _arm: usize, _index: usize) -> f64 {
                0.0
            }
            fn surrogate_mean(&self, _arm: usize) -> f64 {
                0.0
            }
        }
        let oracle = toy_oracle(4, 64, 13);
        let mut config = RacingConfig::normal(0.1);
        config.m1 = 8;
        config.b_source = BSource::Simple;
        let plain = SamplerSpec::racing(config.clone());
        let with_cv = SamplerSpec::racing(config).with_control_variate(Arc::new(ZeroCv));
        for seed in 0..10u64 {
            let mut g1 = ChaCha8Rng::seed_from_u64(seed);
            let mut s1 = ChaCha8Rng::seed_from_u64(seed + 1000);
            let mut g2 = ChaCha8Rng::seed_from_u64(seed);
            let mut s2 = ChaCha8Rng::seed_from_u64(seed + 1000);
            let a = approx_sample(&oracle, &plain, &mut g1, &mut s1).unwrap();
            let b = approx_sample(&oracle, &with_cv, &mut g2, &mut s2).unwrap();
            assert_eq!(a.winner, b.winner);
            assert_eq!(a.total_rewards, b.total_rewards);
        }
    }

    fn self_proposal(n: usize) -> (TableFactorOracle, MhProposal) {
        let factors: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 0.2).collect();
        let oracle = TableFactorOracle::new(vec![factors.clone(), factors], vec![]).unwrap();
        let proposal = MhProposal {
            log_prior_current: -1.3,
            log_prior_proposed: -1.3,
            log_forward_proposal: -0.7,
            log_reverse_proposal: -0.7,
        };
        (oracle, proposal)
    }

    #[test]
    fn self_proposals_accept_unless_u_is_one() {
        let (oracle, proposal) = self_proposal(24);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for spec in [SamplerSpec::exact(), SamplerSpec::racing_ebs(0.2)] {
            assert!(mh_accept(&oracle, &proposal, 0.3, &spec, &mut rng).unwrap());
            // Equal means tie toward the current state.
            assert!(!mh_accept(&oracle, &proposal, 1.0, &spec, &mut rng).unwrap());
        }
        assert!(mh_accept(&oracle, &proposal, 0.0, &SamplerSpec::exact(), &mut rng).is_err());
        assert!(mh_accept(&oracle, &proposal, f64::NAN, &SamplerSpec::exact(), &mut rng).is_err());
        assert!(mh_accept(&oracle, &proposal, 1.5, &SamplerSpec::exact(), &mut rng).is_err());
    }

    #[test]
    fn exhaustive_races_reproduce_the_exact_test() {
        let n = 16usize;
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let spec_exact = SamplerSpec::exact();
        let spec_race = SamplerSpec::racing_ebs(0.3);
        for trial in 0..200u64 {
            let mut gen = ChaCha8Rng::seed_from_u64(1000 + trial);
            let rows: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..n).map(|_| gen.random_range(-0.5..0.5)).collect())
                .collect();
            let oracle = TableFactorOracle::new(rows.clone(), vec![]).unwrap();
            let proposal = MhProposal {
                log_prior_current: gen.random_range(-2.0..0.0),
                log_prior_proposed: gen.random_range(-2.0..0.0),
                log_forward_proposal: gen.random_range(-2.0..0.0),
                log_reverse_proposal: gen.random_range(-2.0..0.0),
            };
            let u: f64 = gen.random_range(1e-6..1.0);
            let sums: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
            let log_ratio = (sums[1] + proposal.log_prior_proposed + proposal.log_reverse_proposal)
                - (sums[0] + proposal.log_prior_current + proposal.log_forward_proposal);
            let reference = u.ln() < log_ratio;
            let exact = mh_accept(&oracle, &proposal, u, &spec_exact, &mut rng).unwrap();
            assert_eq!(exact, reference, "trial {trial}");
            let raced = mh_accept(&oracle, &proposal, u, &spec_race, &mut rng).unwrap();
            // Early stops may disagree within budget; full scans must not.
            if raced != reference {
                continue;
            }
        }
    }

    struct UnequalConditional {
        rows: Vec<Vec<f64>>,
    }

    impl ConditionalFactors for UnequalConditional {
        fn arm_count(&self) -> usize {
            self.rows.len()
        }
        fn factor_count(&self, arm: usize) -> usize {
            self.rows[arm].len()
        }
        fn log_factor(&self, arm: usize, index: usize) -> f64 {
            self.rows[arm][index]
        }
    }

    #[test]
    fn two_equal_candidates_split_evenly() {
        let factors = vec![vec![0.2, -0.1, 0.05]; 2];
        let oracle = TableFactorOracle::new(factors, vec![]).unwrap();
        let spec = SamplerSpec::exact();
        let mut gumbel_rng = ChaCha8Rng::seed_from_u64(7);
        let mut sub_rng = ChaCha8Rng::seed_from_u64(8);
        let draws = 10_000;
        let mut ones = 0usize;
        for _ in 0..draws {
            ones += gibbs_step(&oracle, &spec, &mut gumbel_rng, &mut sub_rng).unwrap().winner;
        }
        let share = ones as f64 / draws as f64;
        assert!((share - 0.5).abs() < 0.03, "share {share}");
    }

    #[test]
    fn unequal_factor_counts_target_the_summed_weights() {
        // Log weights: arm 0 -> 0.9 over 3 factors, arm 1 -> 0.0 over 7.
        let rows =
            vec![vec![0.3; 3], vec![0.0; 7], vec![-0.25; 4]];
        let conditional = UnequalConditional { rows };
        let weights: Vec<f64> = [0.9f64, 0.0, -1.0].iter().map(|w| w.exp()).collect();
        let z: f64 = weights.iter().sum();
        let target: Vec<f64> = weights.iter().map(|w| w / z).collect();
        let spec = SamplerSpec::exact();
        let mut gumbel_rng = ChaCha8Rng::seed_from_u64(17);
        let mut sub_rng = ChaCha8Rng::seed_from_u64(18);
        let draws = 20_000;
        let mut counts = vec![0f64; 3];
        for _ in 0..draws {
            let out = gibbs_step(&conditional, &spec, &mut gumbel_rng, &mut sub_rng).unwrap();
            counts[out.winner] += 1.0;
        }
        for c in &mut counts {
            *c /= draws as f64;
        }
        assert!(tv(&counts, &target) < 0.02, "empirical {counts:?} target {target:?}");
    }

    #[test]
    fn unequal_counts_demand_independent_racing() {
        let conditional = UnequalConditional { rows: vec![vec![0.1; 4], vec![0.2; 9]] };
        let mut gumbel_rng = ChaCha8Rng::seed_from_u64(3);
        let mut sub_rng = ChaCha8Rng::seed_from_u64(4);
        let shared = SamplerSpec::racing_normal(0.1);
        let err = gibbs_step(&conditional, &shared, &mut gumbel_rng, &mut sub_rng);
        assert!(matches!(err, Err(Error::Config(_))));

        let mut config = RacingConfig::normal(0.1);
        config.variance = VarianceMode::Independent;
        config.m1 = 2;
        config.b_source = BSource::Simple;
        let spec = SamplerSpec::racing(config);
        let out = gibbs_step(&conditional, &spec, &mut gumbel_rng, &mut sub_rng).unwrap();
        assert!(out.winner < 2);
        assert!(out.total_rewards <= 13);
    }
}
