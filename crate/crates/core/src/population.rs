use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A finite population of rewards per arm, addressed by `(arm, index)`.
///
/// Implementations may materialize the rewards or compute them on demand.
/// Rewards must be finite; samplers surface a `NonFiniteReward` error when an
/// evaluation violates that.
pub trait RewardPopulation {
    fn arm_count(&self) -> usize;

    /// Number of rewards available for `arm`.
    fn population_size(&self, arm: usize) -> usize;

    /// Reward `index` of `arm`, with `index < population_size(arm)`.
    fn reward(&self, arm: usize, index: usize) -> f64;

    /// Known upper bound on `max - min` of the arm's rewards, when one is
    /// available without scanning.
    fn range_bound(&self, arm: usize) -> Option<f64> {
        let _ = arm;
        None
    }

    /// The shared population size when every arm has the same one.
    fn equal_population_size(&self) -> Option<usize> {
        let d = self.arm_count();
        if d == 0 {
            return None;
        }
        let n = self.population_size(0);
        (1..d).all(|i| self.population_size(i) == n).then_some(n)
    }

    /// Exact full-population mean of one arm.
    fn exact_mean(&self, arm: usize) -> f64 {
        let n = self.population_size(arm);
        let sum: f64 = (0..n).map(|k| self.reward(arm, k)).sum();
        sum / n as f64
    }
}

impl<P: RewardPopulation + ?Sized> RewardPopulation for &P {
    fn arm_count(&self) -> usize {
        (**self).arm_count()
    }
    fn population_size(&self, arm: usize) -> usize {
        (**self).population_size(arm)
    }
    fn reward(&self, arm: usize, index: usize) -> f64 {
        (**self).reward(arm, index)
    }
    fn range_bound(&self, arm: usize) -> Option<f64> {
        (**self).range_bound(arm)
    }
    fn equal_population_size(&self) -> Option<usize> {
        (**self).equal_population_size()
    }
    fn exact_mean(&self, arm: usize) -> f64 {
        (**self).exact_mean(arm)
    }
}

/// Upper bound on the reward spread of `arm`: a bound the population itself
/// advertises (for materialized populations, the exact `max - min`), otherwise
/// an error telling the caller to supply one.
pub fn range_bound<P: RewardPopulation + ?Sized>(pop: &P, arm: usize) -> Result<f64> {
    pop.range_bound(arm).ok_or(Error::MissingRangeBound { arm })
}

/// Fully materialized population; rows may have unequal lengths.
#[derive(Debug, Clone)]
pub struct MatrixPopulation {
    rows: Vec<Vec<f64>>,
    ranges: Vec<f64>,
}

impl MatrixPopulation {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Shape("population needs at least one arm".into()));
        }
        let mut ranges = Vec::with_capacity(rows.len());
        for (arm, row) in rows.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::Shape(format!("arm {arm} has no rewards")));
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (index, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteReward { arm, index, value: v });
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
            ranges.push(hi - lo);
        }
        Ok(Self { rows, ranges })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Loads a CSV matrix: one row per arm, one decimal reward per cell.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut rows = Vec::new();
        for record in csv_reader.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|e| {
                        Error::InvalidArgument(format!("bad reward cell {cell:?}: {e}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_csv(BufReader::new(File::open(path)?))
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .flexible(true)
            .from_writer(writer);
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.to_csv(BufWriter::new(File::create(path)?))
    }

    /// Loads the little-endian binary matrix format written by `to_binary`.
    pub fn from_binary<R: Read>(mut reader: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != b"FPM1" {
            return Err(Error::InvalidArgument(
                "not a binary population matrix (bad magic)".into(),
            ));
        }
        let arm_count = read_u64(&mut reader)? as usize;
        let mut rows = Vec::with_capacity(arm_count);
        for _ in 0..arm_count {
            let len = read_u64(&mut reader)? as usize;
            let mut buf = vec![0u8; len * 8];
            reader.read_exact(&mut buf)?;
            let row = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn from_binary_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_binary(BufReader::new(File::open(path)?))
    }

    pub fn to_binary<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(b"FPM1")?;
        writer.write_all(&(self.rows.len() as u64).to_le_bytes())?;
        for row in &self.rows {
            writer.write_all(&(row.len() as u64).to_le_bytes())?;
            for v in row {
                writer.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_binary_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.to_binary(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

fn read_u64<R: Read>(reader: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    reader.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

impl RewardPopulation for MatrixPopulation {
    fn arm_count(&self) -> usize {
        self.rows.len()
    }

    fn population_size(&self, arm: usize) -> usize {
        self.rows[arm].len()
    }

    fn reward(&self, arm: usize, index: usize) -> f64 {
        self.rows[arm][index]
    }

    fn range_bound(&self, arm: usize) -> Option<f64> {
        Some(self.ranges[arm])
    }
}

/// Adds a fixed per-arm offset to every reward of a base population.
///
/// Shifting leaves variances and ranges untouched, so the base population's
/// range bounds still apply.
#[derive(Debug, Clone)]
pub struct ShiftedPopulation<P> {
    base: P,
    offsets: Vec<f64>,
}

impl<P: RewardPopulation> ShiftedPopulation<P> {
    pub fn new(base: P, offsets: Vec<f64>) -> Result<Self> {
        if offsets.len() != base.arm_count() {
            return Err(Error::Shape(format!(
                "got {} offsets for {} arms",
                offsets.len(),
                base.arm_count()
            )));
        }
        if let Some((arm, &value)) = offsets.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteReward { arm, index: 0, value });
        }
        Ok(Self { base, offsets })
    }
}

impl<P: RewardPopulation> RewardPopulation for ShiftedPopulation<P> {
    fn arm_count(&self) -> usize {
        self.base.arm_count()
    }

    fn population_size(&self, arm: usize) -> usize {
        self.base.population_size(arm)
    }

    fn reward(&self, arm: usize, index: usize) -> f64 {
        self.base.reward(arm, index) + self.offsets[arm]
    }

    fn range_bound(&self, arm: usize) -> Option<f64> {
        self.base.range_bound(arm)
    }
}

/// Attaches caller-supplied range bounds to a population that lacks them.
#[derive(Debug, Clone)]
pub struct WithRangeBounds<P> {
    base: P,
    bounds: Vec<f64>,
}

impl<P: RewardPopulation> WithRangeBounds<P> {
    pub fn new(base: P, bounds: Vec<f64>) -> Result<Self> {
        if bounds.len() != base.arm_count() {
            return Err(Error::Shape(format!(
                "got {} range bounds for {} arms",
                bounds.len(),
                base.arm_count()
            )));
        }
        if bounds.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::InvalidArgument(
                "range bounds must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { base, bounds })
    }
}

impl<P: RewardPopulation> RewardPopulation for WithRangeBounds<P> {
    fn arm_count(&self) -> usize {
        self.base.arm_count()
    }

    fn population_size(&self, arm: usize) -> usize {
        self.base.population_size(arm)
    }

    fn reward(&self, arm: usize, index: usize) -> f64 {
        self.base.reward(arm, index)
    }

    fn range_bound(&self, arm: usize) -> Option<f64> {
        Some(self.bounds[arm])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample() -> MatrixPopulation {
        MatrixPopulation::new(vec![vec![1.0, 2.0, 6.0], vec![-1.0, 0.5, 0.0]]).unwrap()
    }

    #[test]
    fn exact_range_from_scan() {
        let pop = sample();
        assert_relative_eq!(range_bound(&pop, 0).unwrap(), 5.0);
        assert_relative_eq!(range_bound(&pop, 1).unwrap(), 1.5);
    }

    #[test]
    fn rejects_non_finite_rewards() {
        let err = MatrixPopulation::new(vec![vec![1.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteReward { arm: 0, index: 1, .. }));
    }

    #[test]
    fn csv_round_trip() {
        let pop = sample();
        let mut buf = Vec::new();
        pop.to_csv(&mut buf).unwrap();
        let back = MatrixPopulation::from_csv(&buf[..]).unwrap();
        assert_eq!(back.rows(), pop.rows());
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let pop = MatrixPopulation::new(vec![
            vec![0.1, -2.5e-17, 3.9999999999999996],
            vec![f64::MIN_POSITIVE, 1.0],
        ])
        .unwrap();
        let mut buf = Vec::new();
        pop.to_binary(&mut buf).unwrap();
        let back = MatrixPopulation::from_binary(&buf[..]).unwrap();
        for (a, b) in back.rows().iter().flatten().zip(pop.rows().iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn shift_preserves_range() {
        let pop = ShiftedPopulation::new(sample(), vec![10.0, -3.0]).unwrap();
        assert_relative_eq!(pop.reward(0, 2), 16.0);
        assert_relative_eq!(pop.reward(1, 0), -4.0);
        assert_relative_eq!(pop.range_bound(0).unwrap(), 5.0);
    }

    #[test]
    fn equal_population_detection() {
        assert_eq!(sample().equal_population_size(), Some(3));
        let ragged = MatrixPopulation::new(vec![vec![1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(ragged.equal_population_size(), None);
    }
}
