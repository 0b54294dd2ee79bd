use nalgebra::{DMatrix, DVector};

use crate::linalg::solve_spd;
use crate::model::{FitConfig, ModelError, TemplateModel};
use crate::splines::BSplineBasis;

const MAX_COMPONENTS: usize = 5;
const FIT_POINTS: usize = 401;

fn bump(t: f64, centre: f64, width: f64) -> f64 {
    libm::exp(-(t - centre) * (t - centre) / width)
}

fn mean_shape(t: f64) -> f64 {
    0.3 + 0.5 * bump(t, -60.0, 50.0) + 0.8 * bump(t, -40.0, 40.0) + 0.6 * bump(t, -20.0, 40.0) + 0.5 * bump(t, 0.0, 40.0)
}

fn component_shape(k: usize, t: f64) -> f64 {
    match k {
        0 => bump(t, -30.0, 300.0),
        1 => bump(t, -5.0, 60.0) - 0.3,
        2 => bump(t, -60.0, 80.0),
        3 => bump(t, -45.0, 30.0) - bump(t, -15.0, 30.0),
        _ => (t + 40.0) / 40.0,
    }
}

fn project(basis: &BSplineBasis, f: impl Fn(f64) -> f64) -> Result<DVector<f64>, ModelError> {
    let iv = basis.interval();
    let q = basis.dim();
    let mut ata = DMatrix::zeros(q, q);
    let mut aty = DVector::zeros(q);
    for i in 0..FIT_POINTS {
        let t = iv.lo + iv.length() * i as f64 / (FIT_POINTS - 1) as f64;
        let row = DVector::from_vec(basis.eval(t)?);
        ata += &row * row.transpose();
        aty += &row * f(t);
    }
    solve_spd(&ata, &aty, 0.0).map(|(x, _)| x).ok_or(ModelError::Numerical("demo template projection failed"))
}

/// A fixed smooth template on the default interval, basis and reference
/// knots: a four-peak mean and up to five L²-orthonormal components with
/// the given variances, isotropic warp covariance `warp_var·I`.
pub fn demo_template(variances: &[f64], noise_var: f64, warp_var: f64) -> Result<TemplateModel, ModelError> {
    let p = variances.len();
    if p > MAX_COMPONENTS {
        return Err(ModelError::Parameter("the demo template has at most five components"));
    }
    if variances.windows(2).any(|w| w[0] < w[1]) || variances.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(ModelError::Parameter("demo variances must be nonnegative and nonincreasing"));
    }
    if !(warp_var >= 0.0) {
        return Err(ModelError::Parameter("warp variance must be nonnegative"));
    }
    let config = FitConfig::default();
    let basis = config.basis()?;
    let gram = basis.gram();
    let mean = project(&basis, mean_shape)?;
    let mut components = DMatrix::zeros(basis.dim(), p);
    for k in 0..p {
        let mut v = project(&basis, |t| component_shape(k, t))?;
        for l in 0..k {
            let u = components.column(l).into_owned();
            let d = (u.transpose() * &gram * &v)[0];
            v -= u * d;
        }
        let norm = libm::sqrt((v.transpose() * &gram * &v)[0]);
        let peak = v.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if peak < 0.0 { -1.0 } else { 1.0 };
        components.set_column(k, &(v * (sign / norm)));
    }
    let r = config.tau0.len();
    TemplateModel::new(basis, config.tau0, mean, components, variances.to_vec(), noise_var, DMatrix::identity(r, r) * warp_var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_are_orthonormal() {
        let model = demo_template(&[5.0, 4.0, 3.0, 2.0, 1.0], 0.01, 0.1).unwrap();
        let c = model.components();
        let g = c.transpose() * model.gram() * c;
        assert!((g - DMatrix::identity(5, 5)).amax() < 1e-10);
        assert_eq!(model.variances(), &[5.0, 4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn rejects_bad_variances() {
        assert!(demo_template(&[1.0, 2.0], 0.01, 0.1).is_err());
        assert!(demo_template(&[1.0; 6], 0.01, 0.1).is_err());
        assert!(demo_template(&[-1.0], 0.01, 0.1).is_err());
        assert!(demo_template(&[0.0, 0.0], 0.0, 0.0).is_ok());
        assert!(demo_template(&[1.0], 0.01, -1.0).is_err());
    }
}
