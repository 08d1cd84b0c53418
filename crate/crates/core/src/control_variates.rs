//! Variance reduction that preserves every arm's full-population mean.
//!
//! A control variate is a surrogate reward with a known exact population
//! mean. Subtracting the surrogate and adding its mean back leaves each
//! arm's mean (and therefore the exact argmax) untouched while shrinking
//! the reward spread the subsampler has to fight. [`TaylorCv`] builds the
//! standard second-order surrogate around a reference point in data space
//! from per-arm gradients and Hessians plus the data's first two moments.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::population::{MatrixPopulation, RewardPopulation};

/// Surrogate reward `h(arm, index)` with an exact per-arm population mean.
///
/// The mean must equal `(1/N) Σ_n h(arm, n)`; a mean computed from analytic
/// rather than population moments shifts every arm mean by the moment error.
pub trait ControlVariate {
    fn surrogate(&self, arm: usize, index: usize) -> f64;
    fn surrogate_mean(&self, arm: usize) -> f64;
}

impl<C: ControlVariate + ?Sized> ControlVariate for &C {
    fn surrogate(&self, arm: usize, index: usize) -> f64 {
        (**self).surrogate(arm, index)
    }
    fn surrogate_mean(&self, arm: usize) -> f64 {
        (**self).surrogate_mean(arm)
    }
}

/// Rewards with a control variate folded in:
/// `reward(i, n) - h(i, n) + mean_h(i)`.
///
/// Reports no range bound of its own; algorithms that need one must be given
/// an explicit bound on the residual spread.
#[derive(Debug, Clone)]
pub struct ResidualPopulation<P, C> {
    base: P,
    cv: C,
}

impl<P: RewardPopulation, C: ControlVariate> RewardPopulation for ResidualPopulation<P, C> {
    fn arm_count(&self) -> usize {
        self.base.arm_count()
    }
    fn population_size(&self, arm: usize) -> usize {
        self.base.population_size(arm)
    }
    fn reward(&self, arm: usize, index: usize) -> f64 {
        self.base.reward(arm, index) - self.cv.surrogate(arm, index) + self.cv.surrogate_mean(arm)
    }
    fn equal_population_size(&self) -> Option<usize> {
        self.base.equal_population_size()
    }
}

/// Wraps `pop` so every reward has the surrogate subtracted and its mean
/// added back. The surrogate must be defined for every `(arm, index)` of
/// `pop`.
pub fn residual_population<P, C>(pop: P, cv: C) -> ResidualPopulation<P, C>
where
    P: RewardPopulation,
    C: ControlVariate,
{
    ResidualPopulation { base: pop, cv }
}

/// Second-order surrogate of a reward that is a smooth function of a
/// data-space point `y`: per arm,
/// `h_i(y) = value_i + gradient_i . (y - reference)
///         + (y - reference)' hessian_i (y - reference) / 2`.
///
/// Its population mean follows from the data's first moment and second
/// central moment alone, so no reward scan is needed.
#[derive(Debug, Clone)]
pub struct TaylorCv {
    reference: DVector<f64>,
    values: Vec<f64>,
    gradients: Vec<DVector<f64>>,
    hessians: Vec<DMatrix<f64>>,
    data_mean: DVector<f64>,
    data_cov: DMatrix<f64>,
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    let scale = m.amax().max(1.0);
    for r in 0..m.nrows() {
        for c in (r + 1)..m.ncols() {
            if (m[(r, c)] - m[(c, r)]).abs() > 1e-9 * scale {
                return Err(Error::Shape(format!("{what} is not symmetric")));
            }
        }
    }
    Ok(())
}

impl TaylorCv {
    /// Builds the surrogate from explicit data moments. `data_cov` is the
    /// central second moment over the same indexing as the rewards.
    pub fn new(
        reference: DVector<f64>,
        values: Vec<f64>,
        gradients: Vec<DVector<f64>>,
        hessians: Vec<DMatrix<f64>>,
        data_mean: DVector<f64>,
        data_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let dim = reference.len();
        let arms = values.len();
        if gradients.len() != arms || hessians.len() != arms {
            return Err(Error::Shape(format!(
                "expected {arms} gradients and hessians, got {} and {}",
                gradients.len(),
                hessians.len()
            )));
        }
        if data_mean.len() != dim || data_cov.nrows() != dim || data_cov.ncols() != dim {
            return Err(Error::Shape("data moments must match the reference dimension".into()));
        }
        check_symmetric(&data_cov, "data covariance")?;
        for (arm, (g, h)) in gradients.iter().zip(&hessians).enumerate() {
            if g.len() != dim {
                return Err(Error::Shape(format!("gradient of arm {arm} has wrong dimension")));
            }
            if h.nrows() != dim {
                return Err(Error::Shape(format!("hessian of arm {arm} has wrong dimension")));
            }
            check_symmetric(h, "hessian")?;
        }
        Ok(Self { reference, values, gradients, hessians, data_mean, data_cov })
    }

    /// Builds the surrogate with moments taken over `data` itself, so the
    /// surrogate mean is the exact population mean and arm means are
    /// preserved up to rounding.
    pub fn from_data(
        reference: DVector<f64>,
        values: Vec<f64>,
        gradients: Vec<DVector<f64>>,
        hessians: Vec<DMatrix<f64>>,
        data: &[DVector<f64>],
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("data population is empty".into()));
        }
        let dim = reference.len();
        if data.iter().any(|y| y.len() != dim) {
            return Err(Error::Shape("data points must match the reference dimension".into()));
        }
        let n = data.len() as f64;
        let mut mean = DVector::zeros(dim);
        for y in data {
            mean += y;
        }
        mean /= n;
        let mut cov = DMatrix::zeros(dim, dim);
        for y in data {
            let d = y - &mean;
            cov += &d * d.transpose();
        }
        cov /= n;
        Self::new(reference, values, gradients, hessians, mean, cov)
    }

    pub fn arm_count(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.reference.len()
    }

    /// Surrogate value at one data point.
    pub fn h(&self, arm: usize, y: &DVector<f64>) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::Shape(format!(
                "data point has dimension {}, surrogate expects {}",
                y.len(),
                self.dim()
            )));
        }
        let d = y - &self.reference;
        let quad = (&self.hessians[arm] * &d).dot(&d);
        Ok(self.values[arm] + self.gradients[arm].dot(&d) + 0.5 * quad)
    }

    /// Exact population mean of the surrogate, from the stored moments:
    /// `value + g.(mu - ref) + ((mu - ref)' H (mu - ref) + tr(H cov)) / 2`.
    pub fn mean(&self, arm: usize) -> f64 {
        let d = &self.data_mean - &self.reference;
        let h = &self.hessians[arm];
        let quad = (h * &d).dot(&d);
        let trace = (h * &self.data_cov).trace();
        self.values[arm] + self.gradients[arm].dot(&d) + 0.5 * (quad + trace)
    }

    /// Binds the surrogate to the data points backing each reward index.
    /// `data[n]` must be the point behind reward index `n` of every arm.
    pub fn over_data(self, data: Vec<DVector<f64>>) -> Result<TaylorDataCv> {
        if data.iter().any(|y| y.len() != self.dim()) {
            return Err(Error::Shape("data points must match the reference dimension".into()));
        }
        Ok(TaylorDataCv { cv: self, data })
    }
}

/// A [`TaylorCv`] paired with the data points it is evaluated on, usable as
/// a [`ControlVariate`] for populations whose reward index `n` corresponds
/// to `data[n]`.
#[derive(Debug, Clone)]
pub struct TaylorDataCv {
    cv: TaylorCv,
    data: Vec<DVector<f64>>,
}

impl TaylorDataCv {
    pub fn taylor(&self) -> &TaylorCv {
        &self.cv
    }
}

impl ControlVariate for TaylorDataCv {
    fn surrogate(&self, arm: usize, index: usize) -> f64 {
        self.cv.h(arm, &self.data[index]).expect("bound data points match the surrogate dimension")
    }
    fn surrogate_mean(&self, arm: usize) -> f64 {
        self.cv.mean(arm)
    }
}

/// Splits off per-arm outlier indices that should bypass subsampling.
///
/// The returned population holds only the kept rewards, rescaled and
/// shifted so each arm's mean equals the original full-population mean with
/// the outliers' exact contribution folded in. Racing it therefore decides
/// the original argmax while the outliers never enter a subsample.
pub fn carve_out<P: RewardPopulation + ?Sized>(
    pop: &P,
    outliers: &[Vec<usize>],
) -> Result<MatrixPopulation> {
    let d = pop.arm_count();
    if outliers.len() != d {
        return Err(Error::Shape(format!(
            "expected outlier lists for {d} arms, got {}",
            outliers.len()
        )));
    }
    let mut rows = Vec::with_capacity(d);
    for (arm, out) in outliers.iter().enumerate() {
        let n = pop.population_size(arm);
        let mut flag = vec![false; n];
        for &ix in out {
            if ix >= n {
                return Err(Error::InvalidArgument(format!(
                    "outlier index {ix} out of range for arm {arm} (population {n})"
                )));
            }
            if std::mem::replace(&mut flag[ix], true) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate outlier index {ix} for arm {arm}"
                )));
            }
        }
        let kept = n - out.len();
        if kept == 0 {
            return Err(Error::InvalidArgument(format!(
                "arm {arm} has no rewards left after carving out {n} outliers"
            )));
        }
        let outlier_mean_share: f64 =
            out.iter().map(|&ix| pop.reward(arm, ix)).sum::<f64>() / n as f64;
        let weight = kept as f64 / n as f64;
        let row: Vec<f64> = (0..n)
            .filter(|&ix| !flag[ix])
            .map(|ix| weight * pop.reward(arm, ix) + outlier_mean_share)
            .collect();
        rows.push(row);
    }
    MatrixPopulation::new(rows)
}
