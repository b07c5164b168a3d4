//! Scalar abstraction for the numeric kernels.
//!
//! Everything statistical in this crate (allocation, objectives, estimators,
//! entropy, models) is generic over [`Real`]. The simulation harness and CLI
//! pin it to `f64`; the aliases at the crate root name those instantiations.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point scalar usable by the sampling and estimation kernels.
pub trait Real:
    Float + AddAssign + Sum<Self> + Debug + Send + Sync + 'static
{
    /// Lossless-enough conversion from a count.
    fn from_count(n: usize) -> Self;

    /// Widen to `f64` for reporting.
    fn as_f64(self) -> f64;

    /// Narrow from `f64` (configuration values, tolerances).
    fn from_f64(x: f64) -> Self;

    /// Draw from U[0, 1).
    fn standard_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw from N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    fn from_count(n: usize) -> Self {
        n as f32
    }

    fn as_f64(self) -> f64 {
        f64::from(self)
    }

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn standard_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f64 {
    fn from_count(n: usize) -> Self {
        n as f64
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn standard_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_roundtrip() {
        assert_eq!(f64::from_count(42), 42.0);
        assert_eq!(f32::from_count(7), 7.0f32);
        assert_eq!(0.25f64.as_f64(), 0.25);
        assert_eq!(f32::from_f64(0.5), 0.5f32);
    }
}
