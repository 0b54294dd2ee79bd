use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};
use nalgebra::{DMatrix, DVector};

use super::likelihood::{conditional, posterior_theta_map, MapEstimate, WarpPrior};
use super::{Curve, FitConfig, ModelError, TemplateModel};
use crate::linalg::{log_sum_exp, sym_apply};
use crate::optim;
use crate::quadrature::{gauss_hermite, tensor_product};
use crate::splines::{jupp_inverse, ThetaVector};

/// How the warp effects are integrated in the E-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EStepMode {
    /// Adaptive Gauss–Hermite quadrature centred at the posterior mode.
    #[default]
    LaplaceGhq,
    /// Single node at the posterior mode (hard EM).
    MapHard,
}

/// Expected complete-data sufficient statistics, summed over subjects.
///
/// The joint mean/component update works on `W = [a, C]` and the augmented
/// score `w = (1, z)`; `normal_matrix` accumulates `E[w wᵀ] ⊗ ΦᵀΦ` and
/// `normal_rhs` accumulates `E[w] ⊗ Φᵀy`, both in column-major `vec(W)`
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    pub n_subjects: usize,
    pub n_obs: usize,
    pub yty: f64,
    pub normal_matrix: DMatrix<f64>,
    pub normal_rhs: DVector<f64>,
    pub zz: DMatrix<f64>,
    pub z_sum: DVector<f64>,
    pub theta_dev: DMatrix<f64>,
    pub theta_sum: DVector<f64>,
}

impl SuffStats {
    pub fn zeros(q: usize, p: usize, r: usize) -> Self {
        let d = q * (p + 1);
        Self {
            n_subjects: 0,
            n_obs: 0,
            yty: 0.0,
            normal_matrix: DMatrix::zeros(d, d),
            normal_rhs: DVector::zeros(d),
            zz: DMatrix::zeros(p, p),
            z_sum: DVector::zeros(p),
            theta_dev: DMatrix::zeros(r, r),
            theta_sum: DVector::zeros(r),
        }
    }

    pub fn add(&mut self, other: &SuffStats) {
        self.n_subjects += other.n_subjects;
        self.n_obs += other.n_obs;
        self.yty += other.yty;
        self.normal_matrix += &other.normal_matrix;
        self.normal_rhs += &other.normal_rhs;
        self.zz += &other.zz;
        self.z_sum += &other.z_sum;
        self.theta_dev += &other.theta_dev;
        self.theta_sum += &other.theta_sum;
    }
}

/// Posterior summaries for one subject.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubjectEffects {
    pub id: String,
    pub theta_hat: Vec<f64>,
    pub theta_cov: Vec<Vec<f64>>,
    pub tau_hat: Vec<f64>,
    pub z_hat: Vec<f64>,
    pub z_cov: Vec<Vec<f64>>,
    pub loglik_contrib: f64,
    pub flagged: bool,
}

/// One quadrature node of a subject's warp posterior.
#[derive(Debug, Clone)]
pub struct PosteriorNode {
    pub theta: ThetaVector,
    /// Normalised posterior weight.
    pub weight: f64,
    pub phi: DMatrix<f64>,
    pub z_mean: DVector<f64>,
    pub z_cov: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct SubjectEStep {
    pub stats: SuffStats,
    pub effects: SubjectEffects,
    pub nodes: Vec<PosteriorNode>,
    pub map: Option<MapEstimate>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Quadrature nodes, normalised posterior weights and the log marginal
/// likelihood of one subject.
pub fn posterior_nodes(
    curve: &Curve,
    model: &TemplateModel,
    mode: EStepMode,
    points_per_dim: usize,
) -> Result<(Vec<PosteriorNode>, f64, Option<MapEstimate>, bool), ModelError> {
    if points_per_dim == 0 {
        return Err(ModelError::Parameter("quadrature needs at least one node per dimension"));
    }
    let prior = WarpPrior::new(model);
    let r = prior.dim();
    let (map, flagged) = match posterior_theta_map(curve, model) {
        Ok(m) if m.converged => (Some(m), false),
        Ok(_) | Err(ModelError::Numerical(_)) => (None, true),
        Err(e) => return Err(e),
    };
    let (center, hessian) = match &map {
        Some(m) => (m.eta.clone(), m.hessian.clone()),
        None => {
            let origin = vec![0.0; r];
            let objective = |eta: &[f64]| -prior.log_integrand(curve, model, eta);
            let h = optim::hessian(&objective, &origin);
            let h = if h.iter().all(|v| v.is_finite()) { h } else { DMatrix::identity(r, r) };
            (origin, crate::linalg::floor_eigenvalues(&h, 1e-8))
        }
    };
    let hard = mode == EStepMode::MapHard || points_per_dim == 1 || flagged || r == 0;
    let (offsets, rule_logw, log_jacobian): (Vec<Vec<f64>>, Vec<f64>, f64) = if hard {
        let logdet_h: f64 = hessian.clone().cholesky().map(|c| 2.0 * (0..r).map(|i| libm::log(c.l_dirty()[(i, i)])).sum::<f64>()).unwrap_or(0.0);
        (vec![vec![0.0; r]], vec![0.0], 0.5 * r as f64 * libm::log(2.0 * PI) - 0.5 * logdet_h)
    } else {
        let cov = sym_apply(&hessian, |v| 1.0 / v);
        let chol = cov.cholesky().ok_or(ModelError::Numerical("posterior covariance is not positive definite"))?;
        let s = chol.l();
        let log_det_s: f64 = (0..r).map(|i| libm::log(s[(i, i)])).sum();
        let (grid, weights) = tensor_product(&gauss_hermite(points_per_dim), r);
        let mut offsets = Vec::with_capacity(grid.len());
        let mut logw = Vec::with_capacity(grid.len());
        for (x, w) in grid.iter().zip(&weights) {
            let xv = DVector::from_column_slice(x);
            let off = (&s * xv) * core::f64::consts::SQRT_2;
            offsets.push(off.iter().copied().collect());
            logw.push(libm::log(*w) + x.iter().map(|v| v * v).sum::<f64>());
        }
        (offsets, logw, 0.5 * r as f64 * LN_2 + log_det_s)
    };
    let mut raw = Vec::with_capacity(offsets.len());
    let mut log_terms = Vec::with_capacity(offsets.len());
    for (off, lw) in offsets.iter().zip(&rule_logw) {
        let eta: Vec<f64> = center.iter().zip(off).map(|(c, o)| c + o).collect();
        let Ok(theta) = prior.theta(&eta) else { continue };
        let cond = match conditional(curve, &theta, model) {
            Ok(c) if c.loglik.is_finite() => c,
            Ok(_) | Err(ModelError::Spline(_)) => continue,
            Err(e) => return Err(e),
        };
        log_terms.push(lw + cond.loglik + prior.log_prior(&eta));
        raw.push((theta, cond));
    }
    if raw.is_empty() {
        return Err(ModelError::Numerical("no feasible quadrature node"));
    }
    let lse = log_sum_exp(&log_terms);
    let log_marginal = lse + log_jacobian;
    let nodes = raw
        .into_iter()
        .zip(&log_terms)
        .map(|((theta, cond), lt)| PosteriorNode {
            theta,
            weight: libm::exp(lt - lse),
            phi: cond.phi,
            z_mean: cond.z_mean,
            z_cov: cond.z_cov,
        })
        .collect();
    Ok((nodes, log_marginal, map, flagged))
}

/// E-step for one subject: posterior-weighted sufficient statistics and
/// empirical-Bayes effects.
pub fn e_step(curve: &Curve, model: &TemplateModel, config: &FitConfig) -> Result<SubjectEStep, ModelError> {
    let (nodes, log_marginal, map, flagged) = posterior_nodes(curve, model, config.estep_mode, config.quad_points_per_dim)?;
    let (q, p, r) = (model.q(), model.p(), model.r());
    let mut stats = SuffStats::zeros(q, p, r);
    let y = DVector::from_column_slice(&curve.values);
    stats.n_subjects = 1;
    stats.n_obs = curve.len();
    stats.yty = y.dot(&y);
    let theta0 = DVector::from_column_slice(model.theta0().as_slice());
    let mut theta_hat = DVector::zeros(r);
    let mut theta_second = DMatrix::zeros(r, r);
    let mut z_hat = DVector::zeros(p);
    let mut z_second = DMatrix::zeros(p, p);
    for node in &nodes {
        let w = node.weight;
        let ptp = node.phi.transpose() * &node.phi;
        let pty = node.phi.transpose() * &y;
        let mut ew = DVector::zeros(p + 1);
        ew[0] = 1.0;
        ew.rows_mut(1, p).copy_from(&node.z_mean);
        let zz = &node.z_cov + &node.z_mean * node.z_mean.transpose();
        let mut eww = DMatrix::zeros(p + 1, p + 1);
        eww[(0, 0)] = 1.0;
        for k in 0..p {
            eww[(0, k + 1)] = node.z_mean[k];
            eww[(k + 1, 0)] = node.z_mean[k];
            for l in 0..p {
                eww[(k + 1, l + 1)] = zz[(k, l)];
            }
        }
        for c in 0..=p {
            for d in 0..=p {
                let f = w * eww[(c, d)];
                if f != 0.0 {
                    let mut block = stats.normal_matrix.view_mut((c * q, d * q), (q, q));
                    block += &ptp * f;
                }
            }
            let mut rhs = stats.normal_rhs.rows_mut(c * q, q);
            rhs += &pty * (w * ew[c]);
        }
        stats.zz += &zz * w;
        stats.z_sum += &node.z_mean * w;
        z_hat += &node.z_mean * w;
        z_second += zz * w;
        let th = DVector::from_column_slice(node.theta.as_slice());
        let dev = &th - &theta0;
        stats.theta_dev += &dev * dev.transpose() * w;
        stats.theta_sum += &th * w;
        theta_hat += &th * w;
        theta_second += &th * th.transpose() * w;
    }
    let theta_cov = theta_second - &theta_hat * theta_hat.transpose();
    let z_cov = z_second - &z_hat * z_hat.transpose();
    let theta_vec = ThetaVector::new(theta_hat.iter().copied().collect())?;
    let tau_hat = jupp_inverse(&theta_vec, model.warp_reference())?.knots().to_vec();
    let effects = SubjectEffects {
        id: curve.id.clone(),
        theta_hat: theta_vec.into_vec(),
        theta_cov: to_rows(&theta_cov),
        tau_hat,
        z_hat: z_hat.iter().copied().collect(),
        z_cov: to_rows(&z_cov),
        loglik_contrib: log_marginal,
        flagged,
    };
    Ok(SubjectEStep { stats, effects, nodes, map })
}

/// Marginal log-likelihood of a set of curves, integrating over both random
/// effects with the E-step quadrature.
pub fn marginal_loglik(curves: &[Curve], model: &TemplateModel, config: &FitConfig) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for c in curves {
        total += posterior_nodes(c, model, config.estep_mode, config.quad_points_per_dim)?.1;
    }
    Ok(total)
}
