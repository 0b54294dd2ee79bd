use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::DiscriminateError;
use crate::model::SubjectEffects;

const MAX_ITERS: usize = 100;
const STEP_TOL: f64 = 1e-10;
const SEPARATION_NORM: f64 = 1e6;

/// One subject's regression inputs. `label` is 1 for the "upper" group.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureRow {
    pub id: String,
    pub z: Vec<f64>,
    pub tau: Option<Vec<f64>>,
    pub label: u8,
}

/// Feature rows from posterior means, labels in subject order.
pub fn feature_rows(effects: &[SubjectEffects], labels: &[u8]) -> Result<Vec<FeatureRow>, DiscriminateError> {
    if effects.len() != labels.len() {
        return Err(DiscriminateError::Length { what: "labels", expected: effects.len(), actual: labels.len() });
    }
    Ok(effects
        .iter()
        .zip(labels)
        .map(|(e, &label)| FeatureRow { id: e.id.clone(), z: e.z_hat.clone(), tau: Some(e.tau_hat.clone()), label })
        .collect())
}

/// `P(y = 1) = logistic(α + bᵀz + dᵀ(τ − τ̄))`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogisticModel {
    /// Intercept on the centred warp scale.
    pub alpha: f64,
    pub b: Vec<f64>,
    /// Empty when warp features were excluded.
    pub d: Vec<f64>,
    /// Training mean of the warp features.
    pub tau_center: Vec<f64>,
    pub ridge: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticModel {
    /// Intercept for uncentred warp features, `α − dᵀτ̄`.
    pub fn raw_intercept(&self) -> f64 {
        self.alpha - self.d.iter().zip(&self.tau_center).map(|(d, c)| d * c).sum::<f64>()
    }

    pub fn uses_tau(&self) -> bool {
        !self.d.is_empty()
    }

    pub fn linear_predictor(&self, row: &FeatureRow) -> Result<f64, DiscriminateError> {
        if row.z.len() != self.b.len() {
            return Err(DiscriminateError::Length { what: "score features", expected: self.b.len(), actual: row.z.len() });
        }
        let mut eta = self.alpha + self.b.iter().zip(&row.z).map(|(b, z)| b * z).sum::<f64>();
        if self.uses_tau() {
            let tau = row.tau.as_ref().ok_or(DiscriminateError::MissingTau(row.id.clone()))?;
            if tau.len() != self.d.len() {
                return Err(DiscriminateError::Length { what: "warp features", expected: self.d.len(), actual: tau.len() });
            }
            eta += self.d.iter().zip(tau).zip(&self.tau_center).map(|((d, t), c)| d * (t - c)).sum::<f64>();
        }
        Ok(eta)
    }

    pub fn classify(&self, row: &FeatureRow) -> Result<u8, DiscriminateError> {
        Ok((predict_prob(self, row)? >= 0.5) as u8)
    }
}

pub fn predict_prob(model: &LogisticModel, row: &FeatureRow) -> Result<f64, DiscriminateError> {
    Ok(logistic(model.linear_predictor(row)?))
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `log(1 + eˣ)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

struct Design {
    x: DMatrix<f64>,
    y: DVector<f64>,
    tau_center: Vec<f64>,
    p: usize,
}

fn design(rows: &[FeatureRow], include_tau: bool) -> Result<Design, DiscriminateError> {
    let p = rows[0].z.len();
    let r = if include_tau {
        rows[0].tau.as_ref().ok_or_else(|| DiscriminateError::MissingTau(rows[0].id.clone()))?.len()
    } else {
        0
    };
    let mut tau_center = alloc::vec![0.0; r];
    for row in rows {
        if row.label > 1 {
            return Err(DiscriminateError::NonBinaryLabel { id: row.id.clone(), value: row.label });
        }
        if row.z.len() != p {
            return Err(DiscriminateError::Length { what: "score features", expected: p, actual: row.z.len() });
        }
        if row.z.iter().any(|v| !v.is_finite()) {
            return Err(DiscriminateError::NonFinite(row.id.clone()));
        }
        if include_tau {
            let tau = row.tau.as_ref().ok_or_else(|| DiscriminateError::MissingTau(row.id.clone()))?;
            if tau.len() != r {
                return Err(DiscriminateError::Length { what: "warp features", expected: r, actual: tau.len() });
            }
            if tau.iter().any(|v| !v.is_finite()) {
                return Err(DiscriminateError::NonFinite(row.id.clone()));
            }
            for (c, t) in tau_center.iter_mut().zip(tau) {
                *c += t;
            }
        }
    }
    let n = rows.len();
    for c in &mut tau_center {
        *c /= n as f64;
    }
    let mut x = DMatrix::zeros(n, 1 + p + r);
    for (i, row) in rows.iter().enumerate() {
        x[(i, 0)] = 1.0;
        for k in 0..p {
            x[(i, 1 + k)] = row.z[k];
        }
        if include_tau {
            let tau = row.tau.as_ref().expect("checked above");
            for k in 0..r {
                x[(i, 1 + p + k)] = tau[k] - tau_center[k];
            }
        }
    }
    let y = DVector::from_iterator(n, rows.iter().map(|r| r.label as f64));
    Ok(Design { x, y, tau_center, p })
}

fn penalized_loglik(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, ridge: f64) -> f64 {
    let eta = x * beta;
    let ll: f64 = eta.iter().zip(y.iter()).map(|(e, y)| y * e - softplus(*e)).sum();
    let pen: f64 = beta.iter().skip(1).map(|b| b * b).sum();
    ll - 0.5 * ridge * pen
}

/// Gradient of the penalized log-likelihood.
pub(crate) fn penalized_score(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, ridge: f64) -> DVector<f64> {
    let mu = (x * beta).map(logistic);
    let mut g = x.transpose() * (y - mu);
    for k in 1..beta.len() {
        g[k] -= ridge * beta[k];
    }
    g
}

/// Ridge-penalized logistic regression by iteratively reweighted least
/// squares. The penalty `ridge/2 · (|b|² + |d|²)` leaves the intercept free;
/// warp features are centred at their mean first.
pub fn fit_logistic(rows: &[FeatureRow], include_tau: bool, ridge: f64) -> Result<LogisticModel, DiscriminateError> {
    if rows.len() < 2 {
        return Err(DiscriminateError::TooFewRows(rows.len()));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(DiscriminateError::Parameter("ridge must be finite and nonnegative"));
    }
    let Design { x, y, tau_center, p } = design(rows, include_tau)?;
    let (n, dim) = (x.nrows(), x.ncols());
    let ones = y.sum();
    if ones == 0.0 || ones == n as f64 {
        if ridge == 0.0 {
            return Err(DiscriminateError::SingleClass);
        }
        let prevalence = (ones + 0.5) / (n as f64 + 1.0);
        let alpha = libm::log(prevalence / (1.0 - prevalence));
        return Ok(LogisticModel {
            alpha,
            b: alloc::vec![0.0; p],
            d: alloc::vec![0.0; dim - 1 - p],
            tau_center,
            ridge,
            iterations: 0,
            converged: true,
        });
    }
    let mut beta = DVector::zeros(dim);
    let mut current = penalized_loglik(&x, &y, &beta, ridge);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERS {
        iterations += 1;
        let mu = (&x * &beta).map(logistic);
        let w = mu.map(|m| m * (1.0 - m));
        let mut info = DMatrix::zeros(dim, dim);
        for i in 0..n {
            let row = x.row(i);
            info += row.transpose() * row * w[i];
        }
        for k in 1..dim {
            info[(k, k)] += ridge;
        }
        let score = penalized_score(&x, &y, &beta, ridge);
        let Some(step) = info.cholesky().map(|c| c.solve(&score)).filter(|s| s.iter().all(|v| v.is_finite())) else {
            return Err(separation_or_numerical(ridge, beta.norm()));
        };
        let mut scale = 1.0;
        let mut next = &beta + &step;
        let mut value = penalized_loglik(&x, &y, &next, ridge);
        while !(value >= current - 1e-12 * current.abs()) && scale > 1e-10 {
            scale *= 0.5;
            next = &beta + &step * scale;
            value = penalized_loglik(&x, &y, &next, ridge);
        }
        let change = (&next - &beta).amax();
        beta = next;
        current = value;
        if ridge == 0.0 && beta.norm() > SEPARATION_NORM {
            return Err(DiscriminateError::Separation { norm: beta.norm() });
        }
        if change < STEP_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        if ridge == 0.0 {
            return Err(DiscriminateError::Separation { norm: beta.norm() });
        }
        log::warn!("logistic fit stopped after {MAX_ITERS} iterations without converging");
    }
    Ok(LogisticModel {
        alpha: beta[0],
        b: beta.rows(1, p).iter().copied().collect(),
        d: beta.rows(1 + p, dim - 1 - p).iter().copied().collect(),
        tau_center,
        ridge,
        iterations,
        converged,
    })
}

fn separation_or_numerical(ridge: f64, norm: f64) -> DiscriminateError {
    if ridge == 0.0 {
        DiscriminateError::Separation { norm }
    } else {
        DiscriminateError::Numerical("logistic information matrix is singular")
    }
}
