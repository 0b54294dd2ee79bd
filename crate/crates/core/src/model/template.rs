use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::ModelError;
use crate::linalg::{sqrt_psd, sym_apply, sym_eigen_desc, symmetrize};
use crate::splines::{jupp_forward, BSplineBasis, Interval, ThetaVector, WarpKnots};

/// Fitted (or generating) population parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateModel {
    basis: BSplineBasis,
    gram: DMatrix<f64>,
    mean: DVector<f64>,
    components: DMatrix<f64>,
    variances: Vec<f64>,
    noise_var: f64,
    warp_reference: WarpKnots,
    theta0: ThetaVector,
    warp_cov: DMatrix<f64>,
}

impl TemplateModel {
    /// Assembles a model from raw parts, validating shapes and signs but
    /// leaving the components as given.
    pub fn new(
        basis: BSplineBasis,
        tau0: Vec<f64>,
        mean: DVector<f64>,
        components: DMatrix<f64>,
        variances: Vec<f64>,
        noise_var: f64,
        warp_cov: DMatrix<f64>,
    ) -> Result<Self, ModelError> {
        let q = basis.dim();
        let warp_reference = WarpKnots::identity(basis.interval(), tau0)?;
        let r = warp_reference.len();
        let dim = |what, expected, actual| {
            if expected == actual {
                Ok(())
            } else {
                Err(ModelError::Dimension { what, expected, actual })
            }
        };
        dim("mean coefficients", q, mean.len())?;
        dim("component rows", q, components.nrows())?;
        dim("component variances", components.ncols(), variances.len())?;
        dim("warp covariance rows", r, warp_cov.nrows())?;
        dim("warp covariance columns", r, warp_cov.ncols())?;
        if mean.iter().chain(components.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::Parameter("non-finite template coefficients"));
        }
        if variances.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(ModelError::Parameter("component variances must be finite and nonnegative"));
        }
        if !(noise_var.is_finite() && noise_var >= 0.0) {
            return Err(ModelError::Parameter("noise variance must be finite and nonnegative"));
        }
        let scale = warp_cov.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        for i in 0..r {
            for j in 0..r {
                let v = warp_cov[(i, j)];
                if !v.is_finite() || (v - warp_cov[(j, i)]).abs() > 1e-10 * scale {
                    return Err(ModelError::Parameter("warp covariance must be finite and symmetric"));
                }
            }
        }
        let mut warp_cov = warp_cov;
        symmetrize(&mut warp_cov);
        if r > 0 && sym_eigen_desc(&warp_cov).0[r - 1] < -1e-10 * scale {
            return Err(ModelError::Parameter("warp covariance must be positive semi-definite"));
        }
        let theta0 = jupp_forward(&warp_reference);
        let gram = basis.gram();
        Ok(Self { basis, gram, mean, components, variances, noise_var, warp_reference, theta0, warp_cov })
    }

    /// Like [`TemplateModel::new`], then replaces `(C, Λ)` by the
    /// L²-orthonormal eigen-decomposition of `C Λ Cᵀ` (see [`Self::identify`]).
    #[allow(clippy::too_many_arguments)]
    pub fn identified(
        basis: BSplineBasis,
        tau0: Vec<f64>,
        mean: DVector<f64>,
        components: DMatrix<f64>,
        variances: Vec<f64>,
        noise_var: f64,
        warp_cov: DMatrix<f64>,
    ) -> Result<Self, ModelError> {
        let mut model = Self::new(basis, tau0, mean, components, variances, noise_var, warp_cov)?;
        let p = model.p();
        let mut cov = model.components.clone();
        for k in 0..p {
            let s = model.variances[k];
            cov.column_mut(k).scale_mut(s);
        }
        let m = cov * model.components.transpose();
        let (c, lambda) = model.identify(&m, p);
        model.components = c;
        model.variances = lambda;
        Ok(model)
    }

    /// Top-`p` eigenpairs of the covariance operator with coefficient matrix
    /// `m`, as coefficient vectors orthonormal under the Gram matrix:
    /// `Cᵀ J C = I`, eigenvalues decreasing, and the largest-magnitude
    /// coefficient of every column positive.
    pub fn identify(&self, m: &DMatrix<f64>, p: usize) -> (DMatrix<f64>, Vec<f64>) {
        identify_components(&self.gram, m, p)
    }

    pub fn basis(&self) -> &BSplineBasis {
        &self.basis
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn interval(&self) -> Interval {
        self.basis.interval()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn warp_reference(&self) -> &WarpKnots {
        &self.warp_reference
    }

    pub fn tau0(&self) -> &[f64] {
        self.warp_reference.reference()
    }

    pub fn theta0(&self) -> &ThetaVector {
        &self.theta0
    }

    pub fn warp_cov(&self) -> &DMatrix<f64> {
        &self.warp_cov
    }

    /// Number of amplitude components.
    pub fn p(&self) -> usize {
        self.components.ncols()
    }

    /// Basis dimension.
    pub fn q(&self) -> usize {
        self.basis.dim()
    }

    /// Number of warp knots.
    pub fn r(&self) -> usize {
        self.warp_reference.len()
    }

    /// Mean function `μ(t)`.
    pub fn mean_at(&self, t: f64) -> Result<f64, ModelError> {
        Ok(self.basis.combine(self.mean.as_slice(), t)?)
    }

    /// Component function `ξ_k(t)`.
    pub fn component_at(&self, k: usize, t: f64) -> Result<f64, ModelError> {
        let col: Vec<f64> = self.components.column(k).iter().copied().collect();
        Ok(self.basis.combine(&col, t)?)
    }

    pub(crate) fn warp_sqrt(&self) -> DMatrix<f64> {
        sqrt_psd(&self.warp_cov)
    }

    pub(crate) fn set_parameters(
        &mut self,
        mean: DVector<f64>,
        components: DMatrix<f64>,
        variances: Vec<f64>,
        noise_var: f64,
        warp_cov: DMatrix<f64>,
    ) {
        self.mean = mean;
        self.components = components;
        self.variances = variances;
        self.noise_var = noise_var;
        self.warp_cov = warp_cov;
    }

    /// Replaces the warp covariance; used to switch warping off (`Σ = 0`).
    pub fn with_warp_cov(mut self, warp_cov: DMatrix<f64>) -> Result<Self, ModelError> {
        if warp_cov.nrows() != self.r() || warp_cov.ncols() != self.r() {
            return Err(ModelError::Dimension { what: "warp covariance", expected: self.r(), actual: warp_cov.nrows() });
        }
        self.warp_cov = warp_cov;
        Ok(self)
    }
}

pub(crate) fn identify_components(gram: &DMatrix<f64>, m: &DMatrix<f64>, p: usize) -> (DMatrix<f64>, Vec<f64>) {
    let q = gram.nrows();
    let half = sym_apply(gram, |v| libm::sqrt(v.max(0.0)));
    let inv_half = sym_apply(gram, |v| 1.0 / libm::sqrt(v.max(1e-300)));
    let mut whitened = &half * m * &half;
    symmetrize(&mut whitened);
    let (values, vectors) = sym_eigen_desc(&whitened);
    let mut c = DMatrix::zeros(q, p);
    let mut lambda = Vec::with_capacity(p);
    for k in 0..p {
        let mut col = &inv_half * vectors.column(k);
        let (imax, _) = col.iter().enumerate().fold((0, 0.0_f64), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        c.set_column(k, &col);
        lambda.push(values[k]);
    }
    (c, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identification_is_orthonormal_sorted_and_signed() {
        let iv = Interval::new(-80.0, 0.0).unwrap();
        let basis = BSplineBasis::equispaced(3, 10, iv).unwrap();
        let q = basis.dim();
        let mut c = DMatrix::zeros(q, 2);
        for l in 0..q {
            c[(l, 0)] = -((l as f64) - 3.0).powi(2) / 10.0;
            c[(l, 1)] = (l as f64 * 0.7).sin();
        }
        let model = TemplateModel::identified(basis, vec![-60.0, -40.0, -20.0], DVector::zeros(q), c, vec![1.0, 3.0], 0.1, DMatrix::identity(3, 3) * 0.1).unwrap();
        let ctjc = model.components().transpose() * model.gram() * model.components();
        assert!((ctjc - DMatrix::<f64>::identity(2, 2)).norm() < 1e-8);
        assert!(model.variances()[0] >= model.variances()[1]);
        for k in 0..2 {
            let col = model.components().column(k);
            let big = col.iter().copied().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(big > 0.0);
        }
        assert_eq!(model.theta0().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_shapes_and_signs() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let basis = BSplineBasis::new(3, vec![0.5], iv).unwrap();
        let q = basis.dim();
        let tau0 = vec![0.5];
        let ok = |noise: f64, cov: f64, lam: f64| {
            TemplateModel::new(basis.clone(), tau0.clone(), DVector::zeros(q), DMatrix::zeros(q, 1), vec![lam], noise, DMatrix::from_element(1, 1, cov))
        };
        assert!(ok(0.1, 0.1, 1.0).is_ok());
        assert!(ok(-0.1, 0.1, 1.0).is_err());
        assert!(ok(0.1, -0.1, 1.0).is_err());
        assert!(ok(0.1, 0.1, -1.0).is_err());
        assert!(TemplateModel::new(basis.clone(), tau0.clone(), DVector::zeros(q + 1), DMatrix::zeros(q, 0), vec![], 0.1, DMatrix::zeros(1, 1)).is_err());
    }
}
