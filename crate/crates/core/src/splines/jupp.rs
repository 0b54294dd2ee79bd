use alloc::vec::Vec;

use super::{SplineError, WarpKnots};

/// Unconstrained warp parameter: log-ratios of consecutive knot gaps.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ThetaVector(Vec<f64>);

impl ThetaVector {
    pub fn new(theta: Vec<f64>) -> Result<Self, SplineError> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(SplineError::NonFinite { what: "theta" });
        }
        Ok(Self(theta))
    }

    pub fn zeros(r: usize) -> Self {
        Self(alloc::vec![0.0; r])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// `θ_j = log(Δ_{j+1} / Δ_j)` over the `r + 1` gaps of `(lo, τ, hi)`.
pub fn jupp_forward(knots: &WarpKnots) -> ThetaVector {
    let iv = knots.interval();
    let tau = knots.knots();
    let mut prev = iv.lo;
    let mut gaps = Vec::with_capacity(tau.len() + 1);
    for &t in tau.iter().chain(core::iter::once(&iv.hi)) {
        gaps.push(t - prev);
        prev = t;
    }
    ThetaVector(gaps.windows(2).map(|w| libm::log(w[1] / w[0])).collect())
}

/// Rebuilds the knots from `θ` relative to the reference in `context`.
///
/// Gaps are `exp` of the cumulative sums of `θ`, normalised to fill the
/// interval. Fails only if the gaps underflow for extreme `θ`.
pub fn jupp_inverse(theta: &ThetaVector, context: &WarpKnots) -> Result<WarpKnots, SplineError> {
    let r = context.len();
    if theta.len() != r {
        return Err(SplineError::LengthMismatch { what: "theta", expected: r, actual: theta.len() });
    }
    let iv = context.interval();
    let mut logs = Vec::with_capacity(r + 1);
    let mut acc = 0.0;
    logs.push(acc);
    for &v in theta.as_slice() {
        acc += v;
        logs.push(acc);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gaps: Vec<f64> = logs.iter().map(|&l| libm::exp(l - top)).collect();
    let total: f64 = gaps.iter().sum();
    let scale = iv.length() / total;
    let mut tau = Vec::with_capacity(r);
    let mut pos = 0.0;
    for g in &gaps[..r] {
        pos += g * scale;
        tau.push(iv.lo + pos);
    }
    context.with_knots(tau)
}
