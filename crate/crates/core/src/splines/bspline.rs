use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::{Interval, SplineError};
use crate::quadrature::gauss_legendre;

/// Clamped B-spline basis on a closed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    degree: usize,
    interior: Vec<f64>,
    interval: Interval,
    knots: Vec<f64>,
}

impl BSplineBasis {
    pub fn new(degree: usize, interior_knots: Vec<f64>, interval: Interval) -> Result<Self, SplineError> {
        interval.check_interior(&interior_knots, "interior knots")?;
        let mut knots = Vec::with_capacity(interior_knots.len() + 2 * degree + 2);
        knots.extend(core::iter::repeat_n(interval.lo, degree + 1));
        knots.extend_from_slice(&interior_knots);
        knots.extend(core::iter::repeat_n(interval.hi, degree + 1));
        Ok(Self { degree, interior: interior_knots, interval, knots })
    }

    /// Basis with `n_interior` equally spaced interior knots.
    pub fn equispaced(degree: usize, n_interior: usize, interval: Interval) -> Result<Self, SplineError> {
        let step = interval.length() / (n_interior + 1) as f64;
        let interior = (1..=n_interior).map(|k| interval.lo + step * k as f64).collect();
        Self::new(degree, interior, interval)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn interior_knots(&self) -> &[f64] {
        &self.interior
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// Number of basis functions.
    pub fn dim(&self) -> usize {
        self.interior.len() + self.degree + 1
    }

    /// Closed support `[start, end]` of the `l`-th basis function.
    pub fn support(&self, l: usize) -> (f64, f64) {
        (self.knots[l], self.knots[l + self.degree + 1])
    }

    /// Index `s` with `knots[s] <= t < knots[s + 1]`; the right endpoint
    /// belongs to the last non-empty span.
    fn span(&self, t: f64) -> usize {
        let q = self.dim();
        if t >= self.interval.hi {
            return q - 1;
        }
        // first knot strictly greater than t, within the active range
        let upper = self.knots[self.degree + 1..q].partition_point(|&k| k <= t);
        self.degree + upper
    }

    /// Values of the `degree + 1` functions that may be nonzero at `t`,
    /// together with the index of the first one.
    pub fn eval_local(&self, t: f64) -> Result<(usize, Vec<f64>), SplineError> {
        let t = self.interval.admit(t)?;
        let span = self.span(t);
        let k = self.degree;
        let mut values = vec![0.0; k + 1];
        let mut left = vec![0.0; k + 1];
        let mut right = vec![0.0; k + 1];
        values[0] = 1.0;
        for j in 1..=k {
            left[j] = t - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        Ok((span - k, values))
    }

    /// All `q` basis values at `t`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>, SplineError> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), SplineError> {
        let (first, local) = self.eval_local(t)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        out[first..first + local.len()].copy_from_slice(&local);
        Ok(())
    }

    /// `Σ_l coef[l] φ_l(t)`.
    pub fn combine(&self, coef: &[f64], t: f64) -> Result<f64, SplineError> {
        if coef.len() != self.dim() {
            return Err(SplineError::LengthMismatch { what: "spline coefficients", expected: self.dim(), actual: coef.len() });
        }
        let (first, local) = self.eval_local(t)?;
        Ok(local.iter().enumerate().map(|(i, v)| v * coef[first + i]).sum())
    }

    /// Gram matrix `J[k, l] = ∫ φ_k φ_l` over the interval, by Gauss–Legendre
    /// quadrature of order `degree + 1` on every knot span.
    pub fn gram(&self) -> DMatrix<f64> {
        let q = self.dim();
        let k = self.degree;
        let rule = gauss_legendre(k + 1);
        let mut gram = DMatrix::<f64>::zeros(q, q);
        for s in k..q {
            let (a, b) = (self.knots[s], self.knots[s + 1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = mid + half * x;
                let (first, local) = self.eval_local(t).expect("quadrature node inside interval");
                for i in 0..local.len() {
                    for j in i..local.len() {
                        gram[(first + i, first + j)] += w * half * local[i] * local[j];
                    }
                }
            }
        }
        for i in 0..q {
            for j in 0..i {
                gram[(i, j)] = gram[(j, i)];
            }
        }
        gram
    }
}
