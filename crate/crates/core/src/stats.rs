use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Streaming estimate of the mean and biased variance of rewards seen so far.
///
/// Batches merge through the pairwise update of (count, mean, sum of squared
/// deviations), so the result matches a single-pass computation over the
/// concatenated batches up to accumulation-order rounding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmStats {
    count: usize,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for ArmStats {
    fn default() -> Self {
        Self::new()
    }
}

impl ArmStats {
    pub fn new() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    /// Folds one batch of rewards into the running statistics.
    pub fn update(&mut self, batch: &[f64]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        // One Welford pass over the batch, then a two-accumulator merge.
        let mut b_count = 0usize;
        let mut b_mean = 0.0f64;
        let mut b_m2 = 0.0f64;
        for &x in batch {
            b_count += 1;
            let d = x - b_mean;
            b_mean += d / b_count as f64;
            b_m2 += d * (x - b_mean);
            if x < self.min {
                self.min = x;
            }
            if x > self.max {
                self.max = x;
            }
        }
        let n_a = self.count as f64;
        let n_b = b_count as f64;
        let n = n_a + n_b;
        let delta = b_mean - self.mean;
        self.mean += delta * n_b / n;
        self.m2 += b_m2 + delta * delta * n_a * n_b / n;
        self.count += b_count;
        Ok(())
    }

    /// Folds per-index differences `a[k] - b[k]` of two equal-length reward
    /// batches, for variance estimates of a gap between two arms sampled on
    /// shared indices.
    pub fn update_differences(&mut self, a: &[f64], b: &[f64]) -> Result<()> {
        if a.len() != b.len() {
            return Err(Error::InvalidArgument(format!(
                "paired batches must have equal length, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.update(&diffs)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Biased (population-style, divide-by-count) variance of the rewards seen.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Spread max - min of the rewards seen so far.
    pub fn observed_range(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.max - self.min
        }
    }
}
