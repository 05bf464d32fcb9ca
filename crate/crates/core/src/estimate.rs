//! Monte Carlo estimates and mergeable accumulators.
//!
//! Sums are kept in 128-bit fixed point (40 fractional bits). Integer
//! addition is associative, so partial accumulators from disjoint trial
//! ranges merge to bit-identical totals in any order and on any number of
//! workers. Each observation is rounded to 2^-40 once, on entry.

use serde::{Deserialize, Serialize};

const FRAC_BITS: i32 = 40;

/// Exactly associative sum of `f64` values rounded to multiples of 2^-40.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactSum(i128);

impl ExactSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        debug_assert!(v.is_finite());
        self.0 += (v * (FRAC_BITS as f64).exp2()).round() as i128;
    }

    #[inline]
    pub fn merge(&mut self, other: ExactSum) {
        self.0 += other.0;
    }

    pub fn value(&self) -> f64 {
        self.0 as f64 * (-(FRAC_BITS as f64)).exp2()
    }
}

/// Anything that can be folded across trials.
pub trait Accumulator: Default + Send {
    fn merge(&mut self, other: Self);
}

impl<A: Accumulator> Accumulator for Vec<A> {
    fn merge(&mut self, other: Self) {
        if self.len() < other.len() {
            self.resize_with(other.len(), A::default);
        }
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}

impl<A: Accumulator, B: Accumulator> Accumulator for (A, B) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
    }
}

/// Count, sum and sum of squares of a scalar observable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentsAccumulator {
    pub n: u64,
    pub sum: ExactSum,
    pub sum_sq: ExactSum,
}

impl MomentsAccumulator {
    pub fn single(v: f64) -> Self {
        let mut a = Self::default();
        a.observe(v);
        a
    }

    pub fn indicator(hit: bool) -> Self {
        Self::single(if hit { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn observe(&mut self, v: f64) {
        self.n += 1;
        self.sum.add(v);
        self.sum_sq.add(v * v);
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.sum.value() / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let s = self.sum.value();
        ((self.sum_sq.value() - s * s / n) / (n - 1.0)).max(0.0)
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn to_estimate(&self, seed: u64, descriptor: impl Into<String>) -> Estimate {
        Estimate {
            mean: self.mean(),
            stderr: self.stderr(),
            n_trials: self.n,
            experiment_seed: seed,
            descriptor: descriptor.into(),
        }
    }
}

impl Accumulator for MomentsAccumulator {
    fn merge(&mut self, other: Self) {
        self.n += other.n;
        self.sum.merge(other.sum);
        self.sum_sq.merge(other.sum_sq);
    }
}

/// Joint moments of two observables measured on the same trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairAccumulator {
    pub x: MomentsAccumulator,
    pub y: MomentsAccumulator,
    pub sum_xy: ExactSum,
}

impl PairAccumulator {
    pub fn single(x: f64, y: f64) -> Self {
        let mut a = Self::default();
        a.observe(x, y);
        a
    }

    #[inline]
    pub fn observe(&mut self, x: f64, y: f64) {
        self.x.observe(x);
        self.y.observe(y);
        self.sum_xy.add(x * y);
    }

    pub fn covariance(&self) -> f64 {
        let n = self.x.n as f64;
        if self.x.n < 2 {
            return 0.0;
        }
        (self.sum_xy.value() - self.x.sum.value() * self.y.sum.value() / n) / (n - 1.0)
    }

    /// Ratio of means `E[x] / E[y]` with a first-order delta-method error
    /// that accounts for the correlation between numerator and denominator.
    pub fn ratio_estimate(&self, seed: u64, descriptor: impl Into<String>) -> Estimate {
        let n = self.x.n as f64;
        let mx = self.x.mean();
        let my = self.y.mean();
        let r = mx / my;
        let var = (self.x.variance() - 2.0 * r * self.covariance() + r * r * self.y.variance())
            .max(0.0)
            / (n * my * my);
        Estimate {
            mean: r,
            stderr: var.sqrt(),
            n_trials: self.x.n,
            experiment_seed: seed,
            descriptor: descriptor.into(),
        }
    }
}

impl Accumulator for PairAccumulator {
    fn merge(&mut self, other: Self) {
        self.x.merge(other.x);
        self.y.merge(other.y);
        self.sum_xy.merge(other.sum_xy);
    }
}

/// A Monte Carlo mean with its standard error and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_trials)`.
    pub stderr: f64,
    pub n_trials: u64,
    pub experiment_seed: u64,
    pub descriptor: String,
}

impl Estimate {
    /// A value known without sampling error.
    pub fn exact(value: f64, n_trials: u64, seed: u64, descriptor: impl Into<String>) -> Self {
        Estimate { mean: value, stderr: 0.0, n_trials, experiment_seed: seed, descriptor: descriptor.into() }
    }

    /// Relative standard error, the standard error of `ln(mean)` to first order.
    pub fn relative_stderr(&self) -> f64 {
        self.stderr / self.mean.abs()
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within_sigmas(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

/// `|a - b| <= z * sqrt(se_a^2 + se_b^2)` for independent estimates.
pub fn consistent(a: f64, se_a: f64, b: f64, se_b: f64, z: f64) -> bool {
    (a - b).abs() <= z * (se_a * se_a + se_b * se_b).sqrt()
}
