//! Calibration of the Gaussian bound multiplier for without-replacement mean
//! estimates under a doubling batch schedule.
//!
//! As the sample grows along the schedule, the running mean of a
//! without-replacement draw follows a Markov chain with Gaussian transitions
//! (in the large-population normal regime). `bounds::g_normal` scales the
//! standardized estimate by a multiplier `b`; this module computes the
//! probability that the standardized walk ever exceeds `b` strictly before
//! the final iteration (`crossing_prob`), inverts it to hit a target failure
//! budget (`solve_b`), provides the loose union-bound fallback (`b_simple`),
//! and precomputes/interpolates tables of `b` over a grid of budgets and
//! first-batch proportions (`BNormalTable`).

use std::io::{Read, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::schedule::BatchSchedule;

/// One transition of the running-mean walk between consecutive schedule
/// iterations: the conditional law of the mean at iteration `t` given the
/// previous one is `Normal(mu + mean_coef * (prev - mu), noise_var)`, where
/// `mu` is the full-population mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkStep {
    /// Regression coefficient toward the previous running mean.
    pub mean_coef: f64,
    /// Weight of the incoming batch relative to what was already drawn.
    pub weight_coef: f64,
    /// Conditional variance of the transition, per unit population variance.
    pub noise_var: f64,
}

/// Transition parameters into iteration `t` (1-based); iteration 1 regresses
/// on nothing (`mean_coef = 0`), the final iteration has zero noise.
pub fn walk_params(schedule: &BatchSchedule, t: usize) -> WalkStep {
    assert!(
        t >= 1 && t <= schedule.horizon(),
        "iteration {t} outside schedule horizon {}",
        schedule.horizon()
    );
    let pi_prev = if t == 1 { 0.0 } else { schedule.proportion(t - 1) };
    let pi = schedule.proportion(t);
    let mean_coef = pi_prev * (1.0 - pi) / (pi * (1.0 - pi_prev));
    let weight_coef = (pi - pi_prev) / (pi * (1.0 - pi_prev));
    let count = schedule.cumulative(t) as f64;
    let noise_var = weight_coef / count * fpc(count, schedule.population_size() as f64);
    WalkStep {
        mean_coef,
        weight_coef,
        noise_var,
    }
}

/// Marginal variance of the running mean at iteration `t`, per unit
/// population variance: `(1/T)(1 - (T-1)/(N-1))`.
pub fn marginal_variance(schedule: &BatchSchedule, t: usize) -> f64 {
    let count = schedule.cumulative(t) as f64;
    fpc(count, schedule.population_size() as f64) / count
}

fn fpc(t: f64, n: f64) -> f64 {
    if n <= 1.0 {
        0.0
    } else {
        1.0 - (t - 1.0) / (n - 1.0)
    }
}

const GRID_HALF_WIDTH: f64 = 8.0;
const GRID_POINTS: usize = 2001;
/// Kernel taps are kept out to this many standard deviations.
const KERNEL_REACH: f64 = 8.5;

/// Cumulative draw proportions of the tested iterations `1..horizon`, plus
/// the final one; fully determines the standardized walk.
fn pi_sequence_of(schedule: &BatchSchedule) -> Vec<f64> {
    (1..=schedule.horizon()).map(|t| schedule.proportion(t)).collect()
}

/// Proportion sequence of the pure doubling schedule starting at `pi1`.
fn pi_sequence_from(pi1: f64) -> Vec<f64> {
    let mut pis = vec![pi1];
    let mut p = pi1;
    while p < 1.0 {
        p = (2.0 * p).min(1.0);
        pis.push(p);
    }
    pis
}

struct TransitionKernel {
    /// Contraction of the standardized walk, `sqrt(1 - weight_coef)`.
    scale: f64,
    half_width: usize,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_spectrum: Vec<Complex64>,
}

impl TransitionKernel {
    fn new(planner: &mut FftPlanner<f64>, scale: f64, dz: f64) -> Self {
        // In standardized coordinates the walk is z_t = a z_{t-1} + e, with
        // Var(e) = 1 - a^2. Convolving before the contraction keeps source
        // and destination grids aligned; the pre-contraction noise variance
        // is (1 - a^2) / a^2.
        let var = (1.0 - scale * scale) / (scale * scale);
        let half_width = (KERNEL_REACH * var.sqrt() / dz).ceil() as usize;
        let taps = 2 * half_width + 1;
        let fft_len = (GRID_POINTS + taps - 1).next_power_of_two();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);

        let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
        let mut buf = vec![Complex64::default(); fft_len];
        for (d, tap) in buf.iter_mut().enumerate().take(taps) {
            let x = (d as f64 - half_width as f64) * dz;
            *tap = Complex64::new(norm * (-x * x / (2.0 * var)).exp() * dz, 0.0);
        }
        forward.process(&mut buf);
        Self {
            scale,
            half_width,
            fft_len,
            forward,
            inverse,
            kernel_spectrum: buf,
        }
    }

    /// Smooths `masses` with the transition noise, then applies the
    /// contraction by resampling onto the standard grid.
    fn apply(&self, masses: &[f64], dz: f64) -> Vec<f64> {
        let mut buf = vec![Complex64::default(); self.fft_len];
        for (slot, &m) in buf.iter_mut().zip(masses) {
            *slot = Complex64::new(m, 0.0);
        }
        self.forward.process(&mut buf);
        for (slot, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
            *slot *= k;
        }
        self.inverse.process(&mut buf);
        let conv_len = masses.len() + 2 * self.half_width;
        let inv_n = 1.0 / self.fft_len as f64;
        let conv: Vec<f64> = buf[..conv_len].iter().map(|c| c.re * inv_n).collect();

        // conv[j] sits at z = -W + (j - half_width) * dz. The contracted
        // density at grid point z reads the smoothed one at z / scale.
        let mut out = vec![0.0f64; masses.len()];
        for (j, slot) in out.iter_mut().enumerate() {
            let z = -GRID_HALF_WIDTH + j as f64 * dz;
            let x = (z / self.scale + GRID_HALF_WIDTH) / dz + self.half_width as f64;
            *slot = (cubic_interp(&conv, x) / self.scale).max(0.0);
        }
        out
    }
}

/// Catmull-Rom interpolation on a uniform grid, zero outside the data.
fn cubic_interp(values: &[f64], x: f64) -> f64 {
    if !(x > -1.0) || x > values.len() as f64 {
        return 0.0;
    }
    let i = x.floor() as isize;
    let s = x - i as f64;
    let tap = |k: isize| -> f64 {
        if k < 0 || k >= values.len() as isize {
            0.0
        } else {
            values[k as usize]
        }
    };
    let (p0, p1, p2, p3) = (tap(i - 1), tap(i), tap(i + 1), tap(i + 2));
    let s2 = s * s;
    let s3 = s2 * s;
    p0 * (-0.5 * s3 + s2 - 0.5 * s)
        + p1 * (1.5 * s3 - 2.5 * s2 + 1.0)
        + p2 * (-1.5 * s3 + 2.0 * s2 + 0.5 * s)
        + p3 * (0.5 * s3 - 0.5 * s2)
}

/// Sub-threshold density propagator for the standardized walk of one
/// schedule; reusable across bisection iterations because the transition
/// kernels do not depend on the threshold.
struct CrossingModel {
    dz: f64,
    base_masses: Vec<f64>,
    transitions: Vec<TransitionKernel>,
}

impl CrossingModel {
    /// `pis`: cumulative proportions for iterations `1..=horizon`; only the
    /// first `horizon - 1` are tested.
    fn new(pis: &[f64]) -> Self {
        let dz = 2.0 * GRID_HALF_WIDTH / (GRID_POINTS - 1) as f64;
        let tested = pis.len().saturating_sub(1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut base_masses = Vec::with_capacity(GRID_POINTS);
        if tested > 0 {
            for k in 0..GRID_POINTS {
                let z = -GRID_HALF_WIDTH + k as f64 * dz;
                base_masses.push(normal.cdf(z + dz / 2.0) - normal.cdf(z - dz / 2.0));
            }
        }
        let mut planner = FftPlanner::new();
        let mut transitions = Vec::new();
        for t in 1..tested {
            let (prev, cur) = (pis[t - 1], pis[t]);
            let weight = (cur - prev) / (cur * (1.0 - prev));
            let scale = (1.0 - weight).max(0.0).sqrt();
            transitions.push(TransitionKernel::new(&mut planner, scale, dz));
        }
        Self {
            dz,
            base_masses,
            transitions,
        }
    }

    /// Probability that the standardized walk exceeds `b` at some tested
    /// iteration.
    fn crossing(&self, b: f64) -> f64 {
        if self.base_masses.is_empty() {
            return 0.0;
        }
        let mut masses = self.base_masses.clone();
        let mut crossed = truncate_above(&mut masses, self.dz, b);
        for step in &self.transitions {
            masses = step.apply(&masses, self.dz);
            crossed += truncate_above(&mut masses, self.dz, b);
        }
        crossed
    }
}

/// Removes (and returns) the mass lying above `b`, splitting the boundary
/// cell linearly.
fn truncate_above(masses: &mut [f64], dz: f64, b: f64) -> f64 {
    let mut removed = 0.0;
    // First cell whose upper edge -W + k dz + dz/2 can exceed b.
    let start = ((b + GRID_HALF_WIDTH) / dz - 0.5).floor().max(0.0) as usize;
    for (k, mass) in masses.iter_mut().enumerate().skip(start) {
        let lo_edge = -GRID_HALF_WIDTH + k as f64 * dz - dz / 2.0;
        let hi_edge = lo_edge + dz;
        if hi_edge <= b {
            continue;
        }
        if lo_edge >= b {
            removed += *mass;
            *mass = 0.0;
        } else {
            let frac = (hi_edge - b) / dz;
            removed += *mass * frac;
            *mass *= 1.0 - frac;
        }
    }
    removed
}

/// Probability that the standardized running mean exceeds `b` at any
/// iteration strictly before the schedule's last.
pub fn crossing_prob(b: f64, schedule: &BatchSchedule) -> f64 {
    CrossingModel::new(&pi_sequence_of(schedule)).crossing(b)
}

/// Range of failure budgets the precomputed tables cover.
pub const TABLE_DELTA_RANGE: (f64, f64) = (1e-6, 0.49);

fn validate_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "failure budget must lie in (0, 0.5], got {delta}"
        )));
    }
    if delta < TABLE_DELTA_RANGE.0 {
        log::warn!(
            "failure budget {delta} lies below the tabulated range {:?}; \
             solving from scratch, accuracy degrades in the far tail",
            TABLE_DELTA_RANGE
        );
    }
    Ok(())
}

fn solve_from_pis(delta: f64, pis: &[f64]) -> Result<f64> {
    validate_delta(delta)?;
    let tested = pis.len().saturating_sub(1);
    if tested == 0 {
        // Single-batch schedules have no tested iteration: the bound is
        // never consulted before the estimate is exact.
        return Ok(0.0);
    }
    let model = CrossingModel::new(pis);
    let normal = Normal::new(0.0, 1.0).unwrap();
    // One tested iteration already crosses with probability 1 - cdf(b), and
    // the union bound caps the total, so the root is bracketed by the
    // single-test and union-bound quantiles.
    let mut lo = normal.inverse_cdf(1.0 - delta).max(0.0);
    let mut hi = normal.inverse_cdf(1.0 - delta / tested as f64);
    while model.crossing(hi) > delta && hi < GRID_HALF_WIDTH {
        hi += 0.5;
    }
    while lo > 0.0 && model.crossing(lo) < delta {
        lo = (lo - 0.5).max(0.0);
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if model.crossing(mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest multiplier whose crossing probability is at most `delta`, found
/// by bisection to an absolute tolerance of 1e-4.
pub fn solve_b(delta: f64, schedule: &BatchSchedule) -> Result<f64> {
    solve_from_pis(delta, &pi_sequence_of(schedule))
}

/// `solve_b` for the pure doubling schedule whose first batch draws a
/// proportion `pi1` of the population. The multiplier depends on the
/// schedule only through its proportion sequence, so this covers every
/// population size with the same first-batch fraction.
pub fn solve_b_for_pi(delta: f64, pi1: f64) -> Result<f64> {
    if !(pi1 > 0.0 && pi1 <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "first-batch proportion must lie in (0, 1], got {pi1}"
        )));
    }
    solve_from_pis(delta, &pi_sequence_from(pi1))
}

/// Union-bound fallback multiplier: the normal quantile at `delta` split
/// evenly over the tested iterations. Conservative (never below `solve_b`),
/// available in closed form.
pub fn b_simple(delta: f64, horizon: usize) -> Result<f64> {
    validate_delta(delta)?;
    if horizon <= 1 {
        return Ok(0.0);
    }
    let normal = Normal::new(0.0, 1.0).unwrap();
    Ok(normal.inverse_cdf(1.0 - delta / (horizon as f64 - 1.0)))
}

/// Precomputed multipliers on a (failure budget, first-batch proportion)
/// grid, with log-log bilinear interpolation between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BNormalTable {
    deltas: Vec<f64>,
    pis: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl BNormalTable {
    /// Budget grid used for the shipped tables.
    pub fn default_delta_grid() -> Vec<f64> {
        let mut deltas = Vec::new();
        for exp in -6i32..=-3 {
            // 1, 3, 5, 7, 9 at each decade from 1e-6 through 1e-3.
            for lead in [1.0, 3.0, 5.0, 7.0, 9.0] {
                deltas.push(lead * 10f64.powi(exp));
            }
        }
        deltas.extend([1e-2, 3e-2, 5e-2, 7e-2, 9e-2, 0.1]);
        let mut d = 0.13;
        while d < 0.49 + 1e-9 {
            deltas.push(d);
            d += 0.03;
        }
        deltas.iter().map(|d| (d * 1e9).round() / 1e9).collect()
    }

    /// First-batch proportion grid used for the shipped tables.
    pub fn default_pi_grid() -> Vec<f64> {
        vec![5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2]
    }

    /// Solves every cell. Grids must be strictly increasing and in range.
    pub fn compute(deltas: Vec<f64>, pis: Vec<f64>) -> Result<Self> {
        let values = deltas
            .iter()
            .map(|&d| pis.iter().map(|&p| solve_b_for_pi(d, p)).collect::<Result<Vec<f64>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(deltas, pis, values)
    }

    /// Assembles a table from externally solved values (e.g. cells solved in
    /// parallel).
    pub fn from_values(deltas: Vec<f64>, pis: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if deltas.is_empty() || pis.is_empty() {
            return Err(Error::InvalidArgument("table grids must be non-empty".into()));
        }
        if !is_strictly_increasing(&deltas) || !is_strictly_increasing(&pis) {
            return Err(Error::InvalidArgument(
                "table grids must be strictly increasing and positive".into(),
            ));
        }
        if values.len() != deltas.len() || values.iter().any(|row| row.len() != pis.len()) {
            return Err(Error::Shape(format!(
                "table needs {} x {} values",
                deltas.len(),
                pis.len()
            )));
        }
        Ok(Self { deltas, pis, values })
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn pis(&self) -> &[f64] {
        &self.pis
    }

    pub fn value(&self, delta_idx: usize, pi_idx: usize) -> f64 {
        self.values[delta_idx][pi_idx]
    }

    /// Multiplier at `(delta, pi1)`: bilinear in log-log space inside the
    /// grid hull, exact on nodes, solved from scratch outside the hull.
    pub fn lookup(&self, delta: f64, pi1: f64) -> Result<f64> {
        let inside = |grid: &[f64], x: f64| x >= grid[0] && x <= grid[grid.len() - 1];
        if !inside(&self.deltas, delta) || !inside(&self.pis, pi1) {
            log::warn!(
                "query (delta {delta}, pi {pi1}) outside the table hull; solving directly"
            );
            return solve_b_for_pi(delta, pi1);
        }
        let (i, wd) = log_bracket(&self.deltas, delta);
        let (j, wp) = log_bracket(&self.pis, pi1);
        let v00 = self.values[i][j];
        let v01 = self.values[i][j + 1];
        let v10 = self.values[i + 1][j];
        let v11 = self.values[i + 1][j + 1];
        Ok((1.0 - wd) * ((1.0 - wp) * v00 + wp * v01) + wd * ((1.0 - wp) * v10 + wp * v11))
    }

    /// Writes the table as CSV: header row of proportions, then one row per
    /// budget with the multipliers to five decimals.
    pub fn to_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        write!(writer, "delta")?;
        for p in &self.pis {
            write!(writer, ",{p:e}")?;
        }
        writeln!(writer)?;
        for (d, row) in self.deltas.iter().zip(&self.values) {
            write!(writer, "{d:e}")?;
            for v in row {
                write!(writer, ",{v:.5}")?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(reader);
        let mut records = csv_reader.records();
        let header = records
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty table".into()))??;
        let pis = header
            .iter()
            .skip(1)
            .map(parse_cell)
            .collect::<Result<Vec<f64>>>()?;
        let mut deltas = Vec::new();
        let mut values = Vec::new();
        for record in records {
            let record = record?;
            let mut cells = record.iter();
            deltas.push(parse_cell(
                cells.next().ok_or_else(|| Error::InvalidArgument("short row".into()))?,
            )?);
            values.push(cells.map(parse_cell).collect::<Result<Vec<f64>>>()?);
        }
        Self::from_values(deltas, pis, values)
    }
}

fn parse_cell(cell: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|e| Error::InvalidArgument(format!("bad table cell {cell:?}: {e}")))
}

fn is_strictly_increasing(grid: &[f64]) -> bool {
    grid[0] > 0.0 && grid.windows(2).all(|w| w[0] < w[1])
}

/// Bracketing index and log-space interpolation weight of `x` in `grid`.
fn log_bracket(grid: &[f64], x: f64) -> (usize, f64) {
    let i = match grid.iter().position(|&g| g >= x) {
        Some(0) => 0,
        Some(p) => p - 1,
        None => grid.len() - 2,
    };
    let i = i.min(grid.len() - 2);
    if x <= grid[i] {
        return (i, 0.0);
    }
    if x >= grid[i + 1] {
        return (i, 1.0);
    }
    let w = (x.ln() - grid[i].ln()) / (grid[i + 1].ln() - grid[i].ln());
    (i, w)
}
