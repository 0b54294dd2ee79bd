use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use warpfit_core::{BSplineBasis, Interval, TemplateModel};

use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "warpfit-model-v1";

/// On-disk form of a fitted template. Components are stored one coefficient
/// vector per component, matrices row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub interval: [f64; 2],
    pub degree: usize,
    pub interior_knots: Vec<f64>,
    pub tau0: Vec<f64>,
    pub theta0: Vec<f64>,
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
    pub noise_var: f64,
    pub warp_cov: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn from_model(model: &TemplateModel) -> Self {
        let basis = model.basis();
        let iv = basis.interval();
        let c = model.components();
        let s = model.warp_cov();
        Self {
            format: MODEL_FORMAT.into(),
            interval: [iv.lo, iv.hi],
            degree: basis.degree(),
            interior_knots: basis.interior_knots().to_vec(),
            tau0: model.tau0().to_vec(),
            theta0: model.theta0().as_slice().to_vec(),
            mean: model.mean().iter().copied().collect(),
            components: (0..c.ncols()).map(|k| c.column(k).iter().copied().collect()).collect(),
            variances: model.variances().to_vec(),
            noise_var: model.noise_var(),
            warp_cov: (0..s.nrows()).map(|i| s.row(i).iter().copied().collect()).collect(),
        }
    }

    pub fn to_model(&self) -> Result<TemplateModel> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Validation(format!("model format is '{}', expected '{MODEL_FORMAT}'", self.format)));
        }
        let iv = Interval::new(self.interval[0], self.interval[1]).map_err(warpfit_core::model::ModelError::from)?;
        let basis = BSplineBasis::new(self.degree, self.interior_knots.clone(), iv).map_err(warpfit_core::model::ModelError::from)?;
        let q = basis.dim();
        if self.components.iter().any(|c| c.len() != q) {
            return Err(Error::Validation(format!("every component needs {q} coefficients")));
        }
        let comps = DMatrix::from_fn(q, self.components.len(), |i, k| self.components[k][i]);
        let r = self.warp_cov.len();
        if self.warp_cov.iter().any(|row| row.len() != r) {
            return Err(Error::Validation("warp_cov must be square".into()));
        }
        let cov = DMatrix::from_fn(r, r, |i, j| self.warp_cov[i][j]);
        let model = TemplateModel::new(basis, self.tau0.clone(), DVector::from_vec(self.mean.clone()), comps, self.variances.clone(), self.noise_var, cov)?;
        let theta0 = model.theta0().as_slice();
        if theta0.len() != self.theta0.len() || theta0.iter().zip(&self.theta0).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(Error::Validation("theta0 does not match tau0".into()));
        }
        Ok(model)
    }
}
