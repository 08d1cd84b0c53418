//! Confidence half-widths for without-replacement mean estimates, and the
//! closed-form sample-size prediction built on the Gaussian bound.

use crate::error::{Error, Result};
use crate::schedule::BatchSchedule;

/// Constant multiplying the range term of the empirical-Bernstein bound,
/// `7/3 + 3/sqrt(2)`.
pub const EBS_KAPPA: f64 = 7.0 / 3.0 + 3.0 / std::f64::consts::SQRT_2;

/// Variance inflation factor for sampling without replacement: with
/// `pi_t = t / n`, equals `1 - pi_{t-1}` up to half the population and
/// `(1 - pi_t)(1 + 1/t)` beyond.
pub fn ebs_rho(t: usize, n: usize) -> f64 {
    debug_assert!(t >= 1 && t <= n);
    let tf = t as f64;
    let nf = n as f64;
    if tf <= nf / 2.0 {
        1.0 - (tf - 1.0) / nf
    } else {
        (1.0 - tf / nf) * (1.0 + 1.0 / tf)
    }
}

/// Empirical-Bernstein half-width for the mean of `t` of `n` rewards drawn
/// without replacement, at the per-iteration failure budget `delta` shared
/// across the schedule's remaining `horizon - 1` tested iterations.
///
/// `sigma_hat` is the biased sample standard deviation and `c` an upper bound
/// on the arm's reward spread. Identically zero once the arm is exhausted.
pub fn g_ebs(delta: f64, t: usize, sigma_hat: f64, c: f64, n: usize, horizon: usize) -> f64 {
    debug_assert!(delta > 0.0 && delta < 1.0);
    if t >= n || horizon <= 1 {
        return 0.0;
    }
    let delta_step = delta / (horizon as f64 - 1.0);
    let log_term = (5.0 / delta_step).ln();
    let tf = t as f64;
    sigma_hat * (2.0 * ebs_rho(t, n) * log_term / tf).sqrt() + EBS_KAPPA * c * log_term / tf
}

/// Gaussian half-width for the mean of `t` of `n` rewards drawn without
/// replacement: `sigma_hat / sqrt(t) * sqrt(1 - (t-1)/(n-1)) * b`.
///
/// The multiplier `b` already encodes the failure probability and schedule
/// (see the `bnormal` module). Identically zero at exhaustion and for `n = 1`.
pub fn g_normal(t: usize, sigma_hat: f64, n: usize, b: f64) -> f64 {
    debug_assert!(t >= 1 && t <= n);
    if n <= 1 || t >= n {
        return 0.0;
    }
    let tf = t as f64;
    let nf = n as f64;
    sigma_hat / tf.sqrt() * (1.0 - (tf - 1.0) / (nf - 1.0)).sqrt() * b
}

/// Gaussian half-width for the gap between two arms sampled independently,
/// each from its own population; combines the per-arm mean variances.
pub fn g_normal_independent(
    t_i: usize,
    sigma_i: f64,
    n_i: usize,
    t_j: usize,
    sigma_j: f64,
    n_j: usize,
    b: f64,
) -> f64 {
    let term = |t: usize, sigma: f64, n: usize| -> f64 {
        if n <= 1 || t >= n {
            return 0.0;
        }
        let tf = t as f64;
        let nf = n as f64;
        sigma * sigma / tf * (1.0 - (tf - 1.0) / (nf - 1.0))
    };
    (term(t_i, sigma_i, n_i) + term(t_j, sigma_j, n_j)).sqrt() * b
}

/// Smallest cumulative count of the doubling schedule `m1, 2*m1, ..., n`
/// that reaches `x`.
pub fn doubling_ceil(x: f64, m1: usize, n: usize) -> usize {
    debug_assert!(m1 >= 1 && m1 <= n);
    let mut c = m1;
    while (c as f64) < x && c < n {
        c = (2 * c).min(n);
    }
    c
}

/// Predicted worst-case total reward count for a race over `d` arms on
/// populations of size `n` with first batch `m1`, given the normalized gap
/// `gap` and the Gaussian bound multiplier `b` (already evaluated at the
/// caller's per-arm failure split).
///
/// An infinite gap collapses to the first batch (`d * m1`); a zero gap to the
/// full scan (`d * n`).
pub fn predicted_sample_bound(gap: f64, n: usize, d: usize, m1: usize, b: f64) -> Result<usize> {
    if !(gap >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gap must be nonnegative, got {gap}"
        )));
    }
    if d == 0 || n == 0 || m1 == 0 || m1 > n || !(b > 0.0) {
        return Err(Error::InvalidArgument(
            "need d >= 1, 1 <= m1 <= n, b > 0".into(),
        ));
    }
    let nf = n as f64;
    let inner = nf / ((nf - 1.0) * gap * gap / (4.0 * b * b) + 1.0);
    Ok(d * doubling_ceil(inner, m1, n))
}

/// Largest `gap` for which the prediction stays at the first batch:
/// `2 b sqrt((n/m1 - 1) / (n - 1))`.
pub fn first_batch_gap_threshold(n: usize, m1: usize, b: f64) -> f64 {
    let nf = n as f64;
    2.0 * b * ((nf / m1 as f64 - 1.0) / (nf - 1.0)).sqrt()
}

/// Gaussian bound half-widths along a whole schedule, mirroring how a race
/// shrinks its intervals; useful for inspecting bound decay.
pub fn g_normal_profile(schedule: &BatchSchedule, sigma_hat: f64, b: f64) -> Vec<f64> {
    (1..=schedule.horizon())
        .map(|t| g_normal(schedule.cumulative(t), sigma_hat, schedule.population_size(), b))
        .collect()
}
