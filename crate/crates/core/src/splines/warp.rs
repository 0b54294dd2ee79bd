use alloc::vec::Vec;

use super::{Interval, SplineError};

/// A reference knot vector `τ₀` together with subject knots `τ`, both
/// strictly increasing and strictly inside the interval.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WarpKnots {
    interval: Interval,
    reference: Vec<f64>,
    knots: Vec<f64>,
}

impl WarpKnots {
    pub fn new(interval: Interval, reference: Vec<f64>, knots: Vec<f64>) -> Result<Self, SplineError> {
        interval.check_interior(&reference, "reference warp knots")?;
        if knots.len() != reference.len() {
            return Err(SplineError::LengthMismatch { what: "warp knots", expected: reference.len(), actual: knots.len() });
        }
        interval.check_interior(&knots, "warp knots")?;
        Ok(Self { interval, reference, knots })
    }

    /// The identity configuration `τ = τ₀`.
    pub fn identity(interval: Interval, reference: Vec<f64>) -> Result<Self, SplineError> {
        let knots = reference.clone();
        Self::new(interval, reference, knots)
    }

    /// Same reference, new subject knots.
    pub fn with_knots(&self, knots: Vec<f64>) -> Result<Self, SplineError> {
        Self::new(self.interval, self.reference.clone(), knots)
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }
}

/// Monotone piecewise-cubic Hermite warp `h` with `h(τ₀) = τ` and both
/// interval endpoints fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneWarp {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

/// Fritsch–Carlson slopes: secant means, zeroed at extrema, then pulled
/// back onto the disk α² + β² ≤ 9 interval by interval.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let secants: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
    let mut d = Vec::with_capacity(n);
    d.push(secants[0]);
    for k in 1..n - 1 {
        let (s0, s1) = (secants[k - 1], secants[k]);
        if s0 * s1 <= 0.0 {
            d.push(0.0);
        } else {
            d.push(0.5 * (s0 + s1));
        }
    }
    d.push(secants[n - 2]);
    for k in 0..n - 1 {
        let s = secants[k];
        if s == 0.0 {
            d[k] = 0.0;
            d[k + 1] = 0.0;
            continue;
        }
        let alpha = d[k] / s;
        let beta = d[k + 1] / s;
        let r2 = alpha * alpha + beta * beta;
        if r2 > 9.0 {
            let scale = 3.0 / libm::sqrt(r2);
            d[k] = scale * alpha * s;
            d[k + 1] = scale * beta * s;
        }
    }
    d
}

impl MonotoneWarp {
    pub fn new(knots: &WarpKnots) -> Self {
        let iv = knots.interval;
        let mut x = Vec::with_capacity(knots.len() + 2);
        x.push(iv.lo);
        x.extend_from_slice(&knots.reference);
        x.push(iv.hi);
        let mut y = Vec::with_capacity(knots.len() + 2);
        y.push(iv.lo);
        y.extend_from_slice(&knots.knots);
        y.push(iv.hi);
        let slopes = monotone_slopes(&x, &y);
        Self { x, y, slopes }
    }

    pub fn interval(&self) -> Interval {
        Interval { lo: self.x[0], hi: *self.x.last().unwrap() }
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.x
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn segment(&self, t: f64) -> usize {
        let k = self.x.partition_point(|&v| v <= t);
        k.clamp(1, self.x.len() - 1) - 1
    }

    /// Power-form coefficients `(c2, c3)` of segment `k` in the local
    /// variable `u = (t - x_k) / width`: `h = y_k + (t - x_k)(d_k + u c2 + u² c3)`.
    fn coefficients(&self, k: usize) -> (f64, f64) {
        let delta = (self.y[k + 1] - self.y[k]) / (self.x[k + 1] - self.x[k]);
        let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
        (3.0 * delta - 2.0 * d0 - d1, d0 + d1 - 2.0 * delta)
    }

    fn cubic(&self, k: usize, s: f64) -> f64 {
        let width = self.x[k + 1] - self.x[k];
        let (c2, c3) = self.coefficients(k);
        self.y[k] + s * width * (self.slopes[k] + s * (c2 + s * c3))
    }

    fn cubic_at(&self, k: usize, t: f64) -> f64 {
        let dt = t - self.x[k];
        let s = dt / (self.x[k + 1] - self.x[k]);
        let (c2, c3) = self.coefficients(k);
        self.y[k] + dt * (self.slopes[k] + s * (c2 + s * c3))
    }

    fn cubic_deriv(&self, k: usize, s: f64) -> f64 {
        let (c2, c3) = self.coefficients(k);
        self.slopes[k] + s * (2.0 * c2 + 3.0 * s * c3)
    }

    /// `h(t)`.
    pub fn eval(&self, t: f64) -> Result<f64, SplineError> {
        let t = self.interval().admit(t)?;
        let k = self.segment(t);
        if t == self.x[k] {
            return Ok(self.y[k]);
        }
        if t == self.x[k + 1] {
            return Ok(self.y[k + 1]);
        }
        Ok(self.cubic_at(k, t))
    }

    /// `h'(t)`; at a knot this is the knot slope.
    pub fn deriv(&self, t: f64) -> Result<f64, SplineError> {
        let t = self.interval().admit(t)?;
        let k = self.segment(t);
        let s = (t - self.x[k]) / (self.x[k + 1] - self.x[k]);
        Ok(self.cubic_deriv(k, s))
    }

    /// `h⁻¹(t)`: bisection on the bracketing segment, accelerated by Newton
    /// steps that stay inside the bracket. On a flat stretch the leftmost
    /// preimage is returned.
    pub fn invert(&self, t: f64) -> Result<f64, SplineError> {
        let t = self.interval().admit(t)?;
        // first segment whose right ordinate reaches t
        let k = self.y.partition_point(|&v| v < t).clamp(1, self.y.len() - 1) - 1;
        if t <= self.y[k] {
            return Ok(self.x[k]);
        }
        if t == self.y[k + 1] {
            return Ok(self.x[k + 1]);
        }
        let width = self.x[k + 1] - self.x[k];
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut s = (t - self.y[k]) / (self.y[k + 1] - self.y[k]);
        for _ in 0..200 {
            let f = self.cubic(k, s) - t;
            if f == 0.0 {
                break;
            }
            if f < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let df = self.cubic_deriv(k, s) * width;
            let newton = if df > 0.0 { s - f / df } else { f64::NAN };
            s = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON {
                break;
            }
            if (f / df).abs() < 1e-15 {
                // converged to machine precision; take one last step
                let f2 = self.cubic(k, s) - t;
                if f2.abs() <= f.abs() {
                    break;
                }
            }
        }
        Ok(self.x[k] + s * width)
    }
}
