use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};

/// Without-replacement sampler over indices `0..n`.
///
/// Runs a lazily materialized Fisher-Yates shuffle: only positions touched by
/// a swap are stored, so memory grows with the number of indices drawn rather
/// than with `n`.
#[derive(Debug, Clone)]
pub struct IndexSampler {
    n: usize,
    drawn: usize,
    displaced: HashMap<usize, usize>,
}

impl IndexSampler {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            drawn: 0,
            displaced: HashMap::new(),
        }
    }

    pub fn population_size(&self) -> usize {
        self.n
    }

    pub fn drawn(&self) -> usize {
        self.drawn
    }

    pub fn remaining(&self) -> usize {
        self.n - self.drawn
    }

    fn slot(&self, pos: usize) -> usize {
        *self.displaced.get(&pos).unwrap_or(&pos)
    }

    /// Draws the next `count` indices of the underlying shuffle.
    pub fn draw<R: Rng + ?Sized>(&mut self, count: usize, rng: &mut R) -> Result<Vec<usize>> {
        if count > self.remaining() {
            return Err(Error::Exhausted {
                requested: count,
                remaining: self.remaining(),
                total: self.n,
            });
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let j = self.drawn;
            let r = rng.random_range(j..self.n);
            let picked = self.slot(r);
            if r != j {
                let displaced_j = self.slot(j);
                self.displaced.insert(r, displaced_j);
            }
            self.displaced.remove(&j);
            out.push(picked);
            self.drawn += 1;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_every_index_exactly_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut sampler = IndexSampler::new(1000);
        let mut seen = vec![false; 1000];
        for batch in [100, 400, 250, 250] {
            for i in sampler.draw(batch, &mut rng).unwrap() {
                assert!(!seen[i], "index {i} drawn twice");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(sampler.remaining(), 0);
    }

    #[test]
    fn overdraw_is_rejected_without_state_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sampler = IndexSampler::new(5);
        sampler.draw(3, &mut rng).unwrap();
        assert!(matches!(
            sampler.draw(3, &mut rng),
            Err(Error::Exhausted { requested: 3, remaining: 2, total: 5 })
        ));
        assert_eq!(sampler.draw(2, &mut rng).unwrap().len(), 2);
    }

    #[test]
    fn memory_tracks_draws_not_population() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sampler = IndexSampler::new(10_000_000);
        sampler.draw(100, &mut rng).unwrap();
        assert!(sampler.displaced.len() <= 100);
    }

    #[test]
    fn uniform_first_draw() {
        // The first drawn index should be uniform over 0..n.
        let n = 8;
        let trials = 40_000;
        let mut counts = vec![0usize; n];
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let mut sampler = IndexSampler::new(n);
            counts[sampler.draw(1, &mut rng).unwrap()[0]] += 1;
        }
        let expected = trials as f64 / n as f64;
        for &c in &counts {
            assert!((c as f64 - expected).abs() < 5.0 * expected.sqrt());
        }
    }
}
