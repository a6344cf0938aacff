use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::LinalgError;

/// Seedable deterministic generator shared by every stochastic component.
///
/// Backed by ChaCha8, whose stream is fixed by the seed on every platform.
/// Gaussian draws use the ziggurat sampler from `rand_distr`.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn seed(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Derives an independent child stream, e.g. one per epoch or per worker.
    pub fn fork(&mut self) -> Self {
        Self::seed(self.inner.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64, LinalgError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(LinalgError::InvalidArgument(format!(
                "uniform range requires lo < hi, got [{lo}, {hi})"
            )));
        }
        let x = lo + (hi - lo) * self.unit();
        // Rounding can land exactly on `hi` for wide ranges.
        Ok(if x >= hi { lo } else { x })
    }

    pub fn gaussian(&mut self, mean: f64, std: f64) -> Result<f64, LinalgError> {
        if !(std.is_finite() && mean.is_finite() && std >= 0.0) {
            return Err(LinalgError::InvalidArgument(format!(
                "gaussian requires finite mean and std >= 0, got mean={mean}, std={std}"
            )));
        }
        if std == 0.0 {
            return Ok(mean);
        }
        let z: f64 = self.inner.sample(StandardNormal);
        Ok(mean + std * z)
    }

    /// Uniform index in `0..n`. Sampled through `u64` so the stream does not
    /// depend on pointer width.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() on empty range");
        self.inner.random_range(0..n as u64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n} without replacement");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
