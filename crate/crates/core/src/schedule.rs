use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Doubling batch schedule over a population of `n` items.
///
/// Cumulative draw counts start at `m1` and double until they hit `n`, with
/// the final batch truncated so the last cumulative count is exactly `n`:
/// `m1, 2*m1, 4*m1, ..., n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSchedule {
    population_size: usize,
    batch_sizes: Vec<usize>,
    cumulative: Vec<usize>,
}

impl BatchSchedule {
    /// Builds the doubling schedule for a population of `n` with first batch `m1`.
    pub fn new(n: usize, m1: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("population size must be positive".into()));
        }
        if m1 == 0 || m1 > n {
            return Err(Error::InvalidArgument(format!(
                "first batch size must lie in 1..={n}, got {m1}"
            )));
        }
        let mut cumulative = Vec::new();
        let mut total = m1;
        loop {
            cumulative.push(total);
            if total == n {
                break;
            }
            total = (2 * total).min(n);
        }
        let mut batch_sizes = Vec::with_capacity(cumulative.len());
        let mut prev = 0;
        for &c in &cumulative {
            batch_sizes.push(c - prev);
            prev = c;
        }
        Ok(Self {
            population_size: n,
            batch_sizes,
            cumulative,
        })
    }

    /// Number of iterations until the population is exhausted.
    pub fn horizon(&self) -> usize {
        self.batch_sizes.len()
    }

    pub fn population_size(&self) -> usize {
        self.population_size
    }

    /// Batch size of iteration `t` (1-based).
    pub fn batch_size(&self, t: usize) -> usize {
        self.batch_sizes[t - 1]
    }

    /// Cumulative draw count after iteration `t` (1-based).
    pub fn cumulative(&self, t: usize) -> usize {
        self.cumulative[t - 1]
    }

    /// Fraction of the population drawn after iteration `t` (1-based).
    pub fn proportion(&self, t: usize) -> f64 {
        self.cumulative(t) as f64 / self.population_size as f64
    }

    pub fn batch_sizes(&self) -> &[usize] {
        &self.batch_sizes
    }

    pub fn cumulative_counts(&self) -> &[usize] {
        &self.cumulative
    }
}
