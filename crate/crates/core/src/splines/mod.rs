//! Spline machinery: the B-spline template basis, monotone Hermite warps
//! and the Jupp reparameterisation of warp knots.

mod bspline;
mod jupp;
mod warp;

pub use bspline::BSplineBasis;
pub use jupp::{jupp_forward, jupp_inverse, ThetaVector};
pub use warp::{MonotoneWarp, WarpKnots};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplineError {
    #[error("value {value} lies outside the interval [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },
    #[error("{what} must be strictly increasing (violated at index {index})")]
    NotIncreasing { what: &'static str, index: usize },
    #[error("{what} must lie strictly inside ({lo}, {hi}), got {value}")]
    OutsideInterval { what: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch { what: &'static str, expected: usize, actual: usize },
    #[error("{what} contains a non-finite value")]
    NonFinite { what: &'static str },
    #[error("invalid interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
}

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, SplineError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(SplineError::BadInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    /// Checks `t` against the interval, snapping values that sit within a few
    /// ulps of an endpoint onto it.
    pub fn admit(&self, t: f64) -> Result<f64, SplineError> {
        let slack = 64.0 * f64::EPSILON * self.lo.abs().max(self.hi.abs()).max(1.0);
        if t.is_nan() || t < self.lo - slack || t > self.hi + slack {
            return Err(SplineError::Domain { value: t, lo: self.lo, hi: self.hi });
        }
        Ok(t.clamp(self.lo, self.hi))
    }

    /// Verifies that `v` is strictly increasing and strictly inside the interval.
    pub(crate) fn check_interior(&self, v: &[f64], what: &'static str) -> Result<(), SplineError> {
        for (i, &x) in v.iter().enumerate() {
            if !x.is_finite() {
                return Err(SplineError::NonFinite { what });
            }
            if x <= self.lo || x >= self.hi {
                return Err(SplineError::OutsideInterval { what, value: x, lo: self.lo, hi: self.hi });
            }
            if i > 0 && v[i - 1] >= x {
                return Err(SplineError::NotIncreasing { what, index: i });
            }
        }
        Ok(())
    }
}
