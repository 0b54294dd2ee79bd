use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::{ModelError, SuffStats, TemplateModel};
use crate::linalg::{solve_spd, symmetrize};

const NORMAL_RIDGE: f64 = 1e-10;
const VARIANCE_FLOOR: f64 = 1e-12;

/// Closed-form M-step followed by the identifiability repair. `θ₀` is
/// never updated. The second return value reports whether the normal
/// equations needed a ridge.
pub fn m_step(stats: &SuffStats, model: &TemplateModel) -> Result<(TemplateModel, bool), ModelError> {
    let (q, p) = (model.q(), model.p());
    if stats.n_subjects == 0 || stats.n_obs == 0 {
        return Err(ModelError::Parameter("empty sufficient statistics"));
    }
    let (w, ridged) = solve_spd(&stats.normal_matrix, &stats.normal_rhs, NORMAL_RIDGE)
        .ok_or(ModelError::Numerical("normal equations are singular even with a ridge"))?;
    if ridged {
        log::warn!("M-step normal equations were singular; added a {NORMAL_RIDGE:e} ridge");
    }
    let mean = DVector::from_iterator(q, w.rows(0, q).iter().copied());
    let raw = DMatrix::from_iterator(q, p, w.rows(q, q * p).iter().copied());

    let rss = stats.yty - 2.0 * w.dot(&stats.normal_rhs) + w.dot(&(&stats.normal_matrix * &w));
    let noise_var = (rss / stats.n_obs as f64).max(VARIANCE_FLOOR * (stats.yty / stats.n_obs as f64).max(1.0));

    let n = stats.n_subjects as f64;
    let (components, variances) = if p == 0 {
        (DMatrix::zeros(q, 0), Vec::new())
    } else {
        let score_cov = &stats.zz / n;
        let mut cov = &raw * score_cov * raw.transpose();
        symmetrize(&mut cov);
        let (c, lambda) = model.identify(&cov, p);
        let top = lambda.first().copied().unwrap_or(0.0).max(1.0);
        (c, lambda.into_iter().map(|l| l.max(VARIANCE_FLOOR * top)).collect())
    };
    let mut warp_cov = &stats.theta_dev / n;
    symmetrize(&mut warp_cov);

    let mut next = model.clone();
    next.set_parameters(mean, components, variances, noise_var, warp_cov);
    Ok((next, ridged))
}
