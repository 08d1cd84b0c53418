use rand::Rng;

use crate::error::{Error, Result};
use crate::population::RewardPopulation;

/// Quantile function of the standard Gumbel distribution, `-ln(-ln(u))`.
///
/// Finite for `u` strictly inside (0, 1).
pub fn gumbel_quantile(u: f64) -> f64 {
    -(-u.ln()).ln()
}

/// Draws one standard Gumbel variate. Uniform draws that would map to an
/// infinity are rejected and redrawn.
pub fn sample_gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            // u lies in (0, 1): both logs are finite.
            return gumbel_quantile(u);
        }
    }
}

/// One Gumbel draw per arm.
pub fn gumbel_vector<R: Rng + ?Sized>(arm_count: usize, rng: &mut R) -> Vec<f64> {
    (0..arm_count).map(|_| sample_gumbel(rng)).collect()
}

/// Log-domain access to an unnormalized discrete target that factorizes as
/// a base term times `factor_count` per-index terms:
/// `p(arm) ∝ base(arm) * Π_n factor(arm, n)`.
pub trait FactorOracle {
    fn arm_count(&self) -> usize;

    /// Number of per-index factors, shared by every arm.
    fn factor_count(&self) -> usize;

    /// `ln factor_index(arm)`.
    fn log_factor(&self, arm: usize, index: usize) -> f64;

    /// `ln base(arm)`. Defaults to a flat base measure.
    fn log_base(&self, arm: usize) -> f64 {
        let _ = arm;
        0.0
    }

    /// Known bound on `max - min` of one arm's log factors, when available
    /// without scanning. Per-arm constant offsets leave it valid for the
    /// induced reward population.
    fn log_factor_range(&self, arm: usize) -> Option<f64> {
        let _ = arm;
        None
    }
}

impl<O: FactorOracle + ?Sized> FactorOracle for &O {
    fn arm_count(&self) -> usize {
        (**self).arm_count()
    }
    fn factor_count(&self) -> usize {
        (**self).factor_count()
    }
    fn log_factor(&self, arm: usize, index: usize) -> f64 {
        (**self).log_factor(arm, index)
    }
    fn log_base(&self, arm: usize) -> f64 {
        (**self).log_base(arm)
    }
    fn log_factor_range(&self, arm: usize) -> Option<f64> {
        (**self).log_factor_range(arm)
    }
}

/// Materialized factor table, arm-major.
#[derive(Debug, Clone)]
pub struct TableFactorOracle {
    log_factors: Vec<Vec<f64>>,
    log_bases: Vec<f64>,
    ranges: Vec<f64>,
}

impl TableFactorOracle {
    /// `log_factors[arm][index]`; pass an empty `log_bases` for a flat base.
    pub fn new(log_factors: Vec<Vec<f64>>, log_bases: Vec<f64>) -> Result<Self> {
        if log_factors.is_empty() {
            return Err(Error::Shape("oracle needs at least one arm".into()));
        }
        let n = log_factors[0].len();
        if log_factors.iter().any(|row| row.len() != n) {
            return Err(Error::Shape("all arms must carry the same factor count".into()));
        }
        let mut ranges = Vec::with_capacity(log_factors.len());
        for (arm, row) in log_factors.iter().enumerate() {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (index, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteReward { arm, index, value: v });
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
            ranges.push(if n == 0 { 0.0 } else { hi - lo });
        }
        let log_bases = if log_bases.is_empty() {
            vec![0.0; log_factors.len()]
        } else if log_bases.len() == log_factors.len() {
            log_bases
        } else {
            return Err(Error::Shape(format!(
                "got {} base terms for {} arms",
                log_bases.len(),
                log_factors.len()
            )));
        };
        Ok(Self { log_factors, log_bases, ranges })
    }
}

impl FactorOracle for TableFactorOracle {
    fn arm_count(&self) -> usize {
        self.log_factors.len()
    }

    fn factor_count(&self) -> usize {
        self.log_factors[0].len()
    }

    fn log_factor(&self, arm: usize, index: usize) -> f64 {
        self.log_factors[arm][index]
    }

    fn log_base(&self, arm: usize) -> f64 {
        self.log_bases[arm]
    }

    fn log_factor_range(&self, arm: usize) -> Option<f64> {
        Some(self.ranges[arm])
    }
}

/// Reward population induced by a factor oracle and one Gumbel draw per arm:
///
/// `reward(i, n) = ln f_n(i) + (ln f_0(i) + g_i) / N`
///
/// The full-population mean of arm `i` is `(ln p(i) + g_i) / N` (up to the
/// target's normalizer), so the best arm of this population is distributed as
/// a draw from the target.
#[derive(Debug, Clone)]
pub struct PerturbedPopulation<O> {
    oracle: O,
    gumbels: Vec<f64>,
    per_arm_offset: Vec<f64>,
}

/// Attaches Gumbel noise to a factor oracle, yielding the bandit population
/// whose best arm is a sample from the oracle's target.
pub fn perturb<O: FactorOracle>(oracle: O, gumbels: Vec<f64>) -> Result<PerturbedPopulation<O>> {
    let d = oracle.arm_count();
    if gumbels.len() != d {
        return Err(Error::Shape(format!(
            "got {} Gumbel draws for {} arms",
            gumbels.len(),
            d
        )));
    }
    if oracle.factor_count() == 0 {
        return Err(Error::Shape("oracle must carry at least one factor".into()));
    }
    let n = oracle.factor_count() as f64;
    let mut per_arm_offset = Vec::with_capacity(d);
    for (arm, &g) in gumbels.iter().enumerate() {
        let base = oracle.log_base(arm);
        let offset = (base + g) / n;
        if !offset.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite per-arm term at arm {arm} (log base {base}, noise {g}); \
                 zero-probability arms must be removed before perturbing"
            )));
        }
        per_arm_offset.push(offset);
    }
    Ok(PerturbedPopulation {
        oracle,
        gumbels,
        per_arm_offset,
    })
}

impl<O: FactorOracle> PerturbedPopulation<O> {
    pub fn gumbels(&self) -> &[f64] {
        &self.gumbels
    }

    pub fn oracle(&self) -> &O {
        &self.oracle
    }
}

impl<O: FactorOracle> RewardPopulation for PerturbedPopulation<O> {
    fn arm_count(&self) -> usize {
        self.oracle.arm_count()
    }

    fn population_size(&self, _arm: usize) -> usize {
        self.oracle.factor_count()
    }

    fn reward(&self, arm: usize, index: usize) -> f64 {
        self.oracle.log_factor(arm, index) + self.per_arm_offset[arm]
    }

    fn range_bound(&self, arm: usize) -> Option<f64> {
        self.oracle.log_factor_range(arm)
    }
}

/// Unnormalized log weight of every arm, by full scan:
/// `ln p(i) = ln f_0(i) + Σ_n ln f_n(i)`.
pub fn exact_log_weights<O: FactorOracle + ?Sized>(oracle: &O) -> Result<Vec<f64>> {
    let n = oracle.factor_count();
    (0..oracle.arm_count())
        .map(|arm| {
            let mut total = oracle.log_base(arm);
            for index in 0..n {
                let f = oracle.log_factor(arm, index);
                if !f.is_finite() {
                    return Err(Error::NonFiniteReward { arm, index, value: f });
                }
                total += f;
            }
            Ok(total)
        })
        .collect()
}

/// Inverse-CDF draw from unnormalized nonnegative weights: the smallest arm
/// whose cumulative normalized weight reaches `u`.
pub fn exact_sample_cdf(weights: &[f64], u: f64) -> Result<usize> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument("no weights".into()));
    }
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "u must lie in (0, 1], got {u}"
        )));
    }
    let mut total = 0.0f64;
    for (arm, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "weight of arm {arm} must be finite and nonnegative, got {w}"
            )));
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::InvalidArgument("all weights are zero".into()));
    }
    let target = u * total;
    let mut acc = 0.0f64;
    for (arm, &w) in weights.iter().enumerate() {
        acc += w;
        if acc >= target && w > 0.0 {
            return Ok(arm);
        }
    }
    // Rounding can leave acc marginally below target at the end; the last
    // positive-weight arm is the inverse-CDF answer.
    Ok(weights.iter().rposition(|&w| w > 0.0).unwrap())
}

/// Arm with the largest exact full-population mean; ties resolve to the
/// lowest index.
pub fn exact_argmax<P: RewardPopulation + ?Sized>(pop: &P) -> usize {
    let mut best_arm = 0;
    let mut best = f64::NEG_INFINITY;
    for arm in 0..pop.arm_count() {
        let mean = pop.exact_mean(arm);
        if mean > best {
            best = mean;
            best_arm = arm;
        }
    }
    best_arm
}

/// Arm with the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best_arm = 0;
    let mut best = f64::NEG_INFINITY;
    for (arm, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            best_arm = arm;
        }
    }
    best_arm
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quantile_fixed_points() {
        assert_relative_eq!(gumbel_quantile((-1.0f64).exp()), 0.0);
        assert_relative_eq!(
            gumbel_quantile((-std::f64::consts::E).exp()),
            -1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn empirical_mean_near_euler_mascheroni() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 1_000_000;
        let mean: f64 = (0..draws).map(|_| sample_gumbel(&mut rng)).sum::<f64>() / draws as f64;
        assert!(
            (mean - 0.577_215_664_9).abs() < 0.01,
            "Gumbel sample mean {mean} too far from 0.5772"
        );
        // All draws finite by construction; spot-check extreme quantiles too.
        assert!(gumbel_quantile(1e-300).is_finite());
        assert!(gumbel_quantile(1.0 - 1e-16).is_finite());
    }

    #[test]
    fn perturbed_means_recover_log_weights() {
        let oracle = TableFactorOracle::new(
            vec![vec![0.3, -0.2, 0.9, 0.1], vec![-0.5, 0.25, 0.0, 1.5]],
            vec![0.7, -1.2],
        )
        .unwrap();
        let gumbels = vec![0.4, -0.9];
        let pop = perturb(&oracle, gumbels.clone()).unwrap();
        let weights = exact_log_weights(&oracle).unwrap();
        for arm in 0..2 {
            let n = oracle.factor_count() as f64;
            assert_relative_eq!(
                n * pop.exact_mean(arm),
                weights[arm] + gumbels[arm],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn perturb_rejects_zero_probability_arm() {
        let oracle =
            TableFactorOracle::new(vec![vec![0.0], vec![0.0]], vec![0.0, f64::NEG_INFINITY])
                .unwrap();
        assert!(perturb(&oracle, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn cdf_draw_walks_the_cumulative_weights() {
        assert_eq!(exact_sample_cdf(&[1.0, 1.0], 0.3).unwrap(), 0);
        assert_eq!(exact_sample_cdf(&[1.0, 1.0], 0.5).unwrap(), 0);
        assert_eq!(exact_sample_cdf(&[1.0, 1.0], 0.5001).unwrap(), 1);
        assert_eq!(exact_sample_cdf(&[1.0, 1.0], 1.0).unwrap(), 1);
        // Zero-weight arms are never chosen.
        assert_eq!(exact_sample_cdf(&[0.0, 2.0, 0.0], 1.0).unwrap(), 1);
        assert_eq!(exact_sample_cdf(&[0.0, 2.0, 1.0], 0.1).unwrap(), 1);
    }

    #[test]
    fn cdf_draw_rejects_bad_input() {
        assert!(exact_sample_cdf(&[1.0, -0.1], 0.5).is_err());
        assert!(exact_sample_cdf(&[0.0, 0.0], 0.5).is_err());
        assert!(exact_sample_cdf(&[1.0], 0.0).is_err());
        assert!(exact_sample_cdf(&[1.0], 1.1).is_err());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        let pop = crate::population::MatrixPopulation::new(vec![
            vec![2.0, 2.0],
            vec![1.0, 3.0],
            vec![4.0, 1.0],
        ])
        .unwrap();
        // Means: 2.0, 2.0, 2.5.
        assert_eq!(exact_argmax(&pop), 2);
    }
}
