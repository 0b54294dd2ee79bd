use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};

use super::{Curve, ModelError, TemplateModel};
use crate::linalg::floor_eigenvalues;
use crate::optim::{self, BfgsOptions};
use crate::splines::{jupp_inverse, MonotoneWarp, SplineError, ThetaVector};

/// `m × q` matrix with rows `φ(h⁻¹(t_j))`, `h` the warp encoded by `theta`.
pub fn design_matrix(curve: &Curve, theta: &ThetaVector, model: &TemplateModel) -> Result<DMatrix<f64>, ModelError> {
    let knots = jupp_inverse(theta, model.warp_reference())?;
    let warp = MonotoneWarp::new(&knots);
    let basis = model.basis();
    let q = basis.dim();
    let mut phi = DMatrix::zeros(curve.len(), q);
    for (j, &t) in curve.grid.iter().enumerate() {
        let s = warp.invert(t)?;
        let (first, local) = basis.eval_local(s)?;
        for (i, v) in local.into_iter().enumerate() {
            phi[(j, first + i)] = v;
        }
    }
    Ok(phi)
}

/// Conditional quantities at one warp value.
pub(crate) struct Conditional {
    pub loglik: f64,
    pub phi: DMatrix<f64>,
    pub z_mean: DVector<f64>,
    pub z_cov: DMatrix<f64>,
}

/// `log N(y; Φa, ΦCΛCᵀΦᵀ + σ²I)` through the rank-`p` Woodbury form, plus
/// the Gaussian posterior of `z` given `θ`.
pub(crate) fn conditional(curve: &Curve, theta: &ThetaVector, model: &TemplateModel) -> Result<Conditional, ModelError> {
    let sigma2 = model.noise_var();
    if !(sigma2 > 0.0) {
        return Err(ModelError::Parameter("noise variance must be positive"));
    }
    let phi = design_matrix(curve, theta, model)?;
    let m = curve.len() as f64;
    let y = DVector::from_column_slice(&curve.values);
    let resid = &y - &phi * model.mean();
    let rr = resid.dot(&resid);
    let p = model.p();
    if p == 0 {
        let loglik = -0.5 * (m * libm::log(2.0 * PI * sigma2) + rr / sigma2);
        return Ok(Conditional { loglik, phi, z_mean: DVector::zeros(0), z_cov: DMatrix::zeros(0, 0) });
    }
    let sd: Vec<f64> = model.variances().iter().map(|&l| libm::sqrt(l)).collect();
    let mut scaled = &phi * model.components();
    for k in 0..p {
        scaled.column_mut(k).scale_mut(sd[k]);
    }
    let mut k_mat = scaled.transpose() * &scaled / sigma2;
    for i in 0..p {
        k_mat[(i, i)] += 1.0;
    }
    let u = scaled.transpose() * &resid;
    let chol = k_mat.cholesky().ok_or(ModelError::Numerical("Woodbury capacitance matrix is not positive definite"))?;
    let logdet_k: f64 = 2.0 * (0..p).map(|i| libm::log(chol.l_dirty()[(i, i)])).sum::<f64>();
    let k_inv_u = chol.solve(&u);
    let quad = (rr - u.dot(&k_inv_u) / sigma2) / sigma2;
    let loglik = -0.5 * (m * libm::log(2.0 * PI) + m * libm::log(sigma2) + logdet_k + quad);
    let mut z_mean = k_inv_u / sigma2;
    let mut z_cov = chol.inverse();
    for i in 0..p {
        z_mean[i] *= sd[i];
        for j in 0..p {
            z_cov[(i, j)] *= sd[i] * sd[j];
        }
    }
    Ok(Conditional { loglik, phi, z_mean, z_cov })
}

/// `log p(y | θ)` with the amplitude scores integrated out.
pub fn conditional_loglik(curve: &Curve, theta: &ThetaVector, model: &TemplateModel) -> Result<f64, ModelError> {
    Ok(conditional(curve, theta, model)?.loglik)
}

/// Whitened parameterisation of the warp prior: `θ = θ₀ + L η` with
/// `η ~ N(0, I)` and `L = Σ^{1/2}`. Works unchanged when `Σ` is singular.
#[derive(Debug, Clone)]
pub struct WarpPrior {
    theta0: Vec<f64>,
    sqrt_cov: DMatrix<f64>,
}

impl WarpPrior {
    pub fn new(model: &TemplateModel) -> Self {
        Self { theta0: model.theta0().as_slice().to_vec(), sqrt_cov: model.warp_sqrt() }
    }

    pub fn dim(&self) -> usize {
        self.theta0.len()
    }

    pub fn sqrt_cov(&self) -> &DMatrix<f64> {
        &self.sqrt_cov
    }

    pub fn theta(&self, eta: &[f64]) -> Result<ThetaVector, SplineError> {
        let r = self.dim();
        let mut out = self.theta0.clone();
        for i in 0..r {
            for j in 0..r {
                out[i] += self.sqrt_cov[(i, j)] * eta[j];
            }
        }
        ThetaVector::new(out)
    }

    pub fn log_prior(&self, eta: &[f64]) -> f64 {
        -0.5 * eta.iter().map(|e| e * e).sum::<f64>() - 0.5 * self.dim() as f64 * libm::log(2.0 * PI)
    }

    /// `log p(y | θ(η)) + log N(η; 0, I)`; `-∞` where the warp is degenerate.
    pub fn log_integrand(&self, curve: &Curve, model: &TemplateModel, eta: &[f64]) -> f64 {
        let Ok(theta) = self.theta(eta) else {
            return f64::NEG_INFINITY;
        };
        match conditional_loglik(curve, &theta, model) {
            Ok(ll) if ll.is_finite() => ll + self.log_prior(eta),
            _ => f64::NEG_INFINITY,
        }
    }
}

/// Posterior mode of the warp effect for one subject.
#[derive(Debug, Clone)]
pub struct MapEstimate {
    pub theta: ThetaVector,
    /// Mode in whitened coordinates.
    pub eta: Vec<f64>,
    /// Negative Hessian of the log integrand in whitened coordinates,
    /// eigenvalues floored at `1e-8`.
    pub hessian: DMatrix<f64>,
    pub log_integrand: f64,
    /// Gradient norm (whitened coordinates) at the mode.
    pub grad_norm: f64,
    pub starts: usize,
    pub converged: bool,
}

/// Gradient norm above which the first run is followed by a multistart.
pub(crate) const MULTISTART_GRAD_TOL: f64 = 1e-6;
/// Gradient norm above which the subject is flagged as a failed search.
pub(crate) const FLAG_GRAD_TOL: f64 = 1e-3;

/// Maximiser of `log p(y | θ) + log N(θ; θ₀, Σ)`.
///
/// The warp posterior is often multimodal (a template peak can lock onto
/// the wrong feature), so BFGS is started from `θ₀` and from the best
/// points of a coarse scan over `η ∈ {-2, …, 2}ʳ`, keeping the highest
/// mode. If that mode is still not stationary, BFGS is rerun from the
/// `2r` whitened axis perturbations `±0.5`.
pub fn posterior_theta_map(curve: &Curve, model: &TemplateModel) -> Result<MapEstimate, ModelError> {
    let prior = WarpPrior::new(model);
    let r = prior.dim();
    let objective = |eta: &[f64]| -prior.log_integrand(curve, model, eta);
    let opts = BfgsOptions::default();
    let origin = vec![0.0; r];
    if !objective(&origin).is_finite() {
        return Err(ModelError::Numerical("log integrand is not finite at the prior mean"));
    }
    let better = |a: &optim::Minimum, b: &optim::Minimum| {
        let tol = 1e-9 * b.value.abs().max(1.0);
        a.value < b.value - tol || (a.value <= b.value + tol && a.grad_norm < b.grad_norm)
    };
    let mut best = optim::minimize(objective, &origin, &opts);
    let mut starts = 1;
    for start in scan_starts(&objective, r) {
        let run = optim::minimize(objective, &start, &opts);
        starts += 1;
        if better(&run, &best) {
            best = run;
        }
    }
    if best.grad_norm > MULTISTART_GRAD_TOL {
        for axis in 0..r {
            for sign in [0.5, -0.5] {
                let mut start = origin.clone();
                start[axis] = sign;
                let run = optim::minimize(objective, &start, &opts);
                starts += 1;
                if better(&run, &best) {
                    best = run;
                }
            }
        }
    }
    let mut hessian = optim::hessian(&objective, &best.x);
    if hessian.iter().any(|v| !v.is_finite()) {
        hessian = DMatrix::identity(r, r);
    }
    let hessian = floor_eigenvalues(&hessian, 1e-8);
    Ok(MapEstimate {
        theta: prior.theta(&best.x)?,
        eta: best.x,
        hessian,
        log_integrand: -best.value,
        grad_norm: best.grad_norm,
        starts,
        converged: best.grad_norm <= FLAG_GRAD_TOL,
    })
}

const SCAN_LEVELS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];
const SCAN_KEEP: usize = 3;

/// Best few points of a coarse whitened grid, excluding the origin.
fn scan_starts(objective: &impl Fn(&[f64]) -> f64, r: usize) -> Vec<Vec<f64>> {
    if r == 0 {
        return Vec::new();
    }
    let total = SCAN_LEVELS.len().pow(r as u32);
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::with_capacity(total);
    let mut idx = vec![0usize; r];
    for _ in 0..total {
        let point: Vec<f64> = idx.iter().map(|&i| SCAN_LEVELS[i]).collect();
        if point.iter().any(|&v| v != 0.0) {
            let v = objective(&point);
            if v.is_finite() {
                scored.push((v, point));
            }
        }
        for d in (0..r).rev() {
            idx[d] += 1;
            if idx[d] < SCAN_LEVELS.len() {
                break;
            }
            idx[d] = 0;
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.into_iter().take(SCAN_KEEP).map(|(_, p)| p).collect()
}
