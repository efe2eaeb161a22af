//! Self-normalized weighted estimator `Σ w_i g(x_i) / Σ w_i`.

use alloc::vec::Vec;

use crate::math::NeumaierSum;
use crate::samplers::WeightedSample;
use crate::target::BinaryState;
use crate::{Error, Result};

/// Running sums for the weighted estimator, with compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EstimatorAccumulator {
    sum_wg: NeumaierSum,
    sum_w: NeumaierSum,
    n: u64,
}

impl EstimatorAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `w·g` and `w`. The weight must be finite and positive.
    pub fn push(&mut self, weight: f64, value: f64) -> Result<()> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidWeight(weight));
        }
        self.sum_wg.add(weight * value);
        self.sum_w.add(weight);
        self.n += 1;
        Ok(())
    }

    pub fn accumulate<G>(&mut self, sample: &WeightedSample, g: G) -> Result<()>
    where
        G: FnOnce(&BinaryState) -> f64,
    {
        self.push(sample.weight, g(&sample.state))
    }

    pub fn estimate(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::EmptyAccumulator);
        }
        Ok(self.sum_wg.value() / self.sum_w.value())
    }

    pub fn merge(&mut self, other: &EstimatorAccumulator) {
        self.sum_wg.merge(&other.sum_wg);
        self.sum_w.merge(&other.sum_w);
        self.n += other.n;
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sum_w(&self) -> f64 {
        self.sum_w.value()
    }

    pub fn sum_wg(&self) -> f64 {
        self.sum_wg.value()
    }
}

/// Ratio estimator with a batch-means standard error.
///
/// Samples are grouped into consecutive batches of `batch_len`; the error is
/// the delta-method SE of the ratio computed from the per-batch sums.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    batch_len: u64,
    current: EstimatorAccumulator,
    batches: Vec<(f64, f64)>,
    total: EstimatorAccumulator,
}

impl BatchMeans {
    pub fn new(batch_len: u64) -> Self {
        Self {
            batch_len: batch_len.max(1),
            current: EstimatorAccumulator::new(),
            batches: Vec::new(),
            total: EstimatorAccumulator::new(),
        }
    }

    pub fn push(&mut self, weight: f64, value: f64) -> Result<()> {
        self.current.push(weight, value)?;
        self.total.push(weight, value)?;
        if self.current.len() == self.batch_len {
            self.batches.push((self.current.sum_wg(), self.current.sum_w()));
            self.current = EstimatorAccumulator::new();
        }
        Ok(())
    }

    pub fn estimate(&self) -> Result<f64> {
        self.total.estimate()
    }

    pub fn batches(&self) -> usize {
        self.batches.len()
    }

    /// `sqrt(Σ_b (S_wg,b − r̂ S_w,b)² · B/(B−1)) / S_w` over complete batches.
    pub fn standard_error(&self) -> Result<f64> {
        let b = self.batches.len();
        if b < 2 {
            return Err(Error::EmptyAccumulator);
        }
        let (swg, sw) = self
            .batches
            .iter()
            .fold((0.0, 0.0), |(a, c), &(g, w)| (a + g, c + w));
        let r = swg / sw;
        let ss: f64 = self
            .batches
            .iter()
            .map(|&(g, w)| {
                let d = g - r * w;
                d * d
            })
            .sum();
        Ok(libm::sqrt(ss * b as f64 / (b - 1) as f64) / sw)
    }
}
