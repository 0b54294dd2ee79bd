use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::{e_step, m_step, Curve, EStepMode, ModelError, SubjectEffects, SuffStats, TemplateModel};
use crate::exec::{Executor, Sequential};
use crate::linalg::{solve_spd, symmetrize};
use crate::splines::{BSplineBasis, Interval};

/// Settings for [`fit_em`]. The defaults reproduce the AneuRisk65 analysis:
/// cubic B-splines with ten equispaced knots on `[-80, 0]` and warp knots
/// at `(-60, -40, -20)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FitConfig {
    pub p: usize,
    pub interval: Interval,
    pub degree: usize,
    pub n_interior_knots: usize,
    pub tau0: Vec<f64>,
    pub max_em_iters: usize,
    /// EM keeps iterating at least this long even if converged.
    pub min_em_iters: usize,
    /// Relative change of the log-likelihood that counts as converged.
    pub em_tol: f64,
    pub quad_points_per_dim: usize,
    pub estep_mode: EStepMode,
    /// Initial warp covariance is `initial_warp_var · I`; zero disables warping.
    pub initial_warp_var: f64,
    pub seed: u64,
    /// Ridge weight for the downstream logistic stage.
    pub ridge: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            p: 2,
            interval: Interval { lo: -80.0, hi: 0.0 },
            degree: 3,
            n_interior_knots: 10,
            tau0: vec![-60.0, -40.0, -20.0],
            max_em_iters: 200,
            min_em_iters: 0,
            em_tol: 1e-6,
            quad_points_per_dim: 5,
            estep_mode: EStepMode::LaplaceGhq,
            initial_warp_var: 0.25,
            seed: 0,
            ridge: 1e-6,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        Interval::new(self.interval.lo, self.interval.hi)?;
        if self.quad_points_per_dim == 0 {
            return Err(ModelError::Parameter("quad_points_per_dim must be at least 1"));
        }
        if !(self.em_tol > 0.0) {
            return Err(ModelError::Parameter("em_tol must be positive"));
        }
        if self.max_em_iters == 0 {
            return Err(ModelError::Parameter("max_em_iters must be at least 1"));
        }
        if !(self.initial_warp_var >= 0.0 && self.initial_warp_var.is_finite()) {
            return Err(ModelError::Parameter("initial_warp_var must be finite and nonnegative"));
        }
        if !(self.ridge >= 0.0) {
            return Err(ModelError::Parameter("ridge must be nonnegative"));
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<BSplineBasis, ModelError> {
        Ok(BSplineBasis::equispaced(self.degree, self.n_interior_knots, Interval::new(self.interval.lo, self.interval.hi)?)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub final_loglik: f64,
    pub converged: bool,
    pub flagged: Vec<String>,
    pub ridged_m_steps: usize,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: TemplateModel,
    /// Marginal log-likelihood at the start of every iteration.
    pub trace: Vec<f64>,
    pub effects: Vec<SubjectEffects>,
    pub diagnostics: FitDiagnostics,
}

fn check_curves(curves: &[Curve], interval: Interval) -> Result<(), ModelError> {
    if curves.len() < 2 {
        return Err(ModelError::TooFewCurves { needed: 2, got: curves.len() });
    }
    for c in curves {
        Curve::new(c.id.clone(), c.grid.clone(), c.values.clone())?;
        for &t in &c.grid {
            interval.admit(t)?;
        }
    }
    Ok(())
}

/// Starting values: a pooled least-squares mean without warping, components
/// from the covariance of shrunken per-curve spline fits, the noise
/// variance from their residuals, and `Σ = initial_warp_var · I`.
pub fn initial_model(curves: &[Curve], config: &FitConfig) -> Result<TemplateModel, ModelError> {
    config.validate()?;
    let basis = config.basis()?;
    check_curves(curves, basis.interval())?;
    let q = basis.dim();
    let designs: Vec<DMatrix<f64>> = curves
        .iter()
        .map(|c| {
            let mut phi = DMatrix::zeros(c.len(), q);
            for (j, &t) in c.grid.iter().enumerate() {
                let (first, local) = basis.eval_local(t)?;
                for (i, v) in local.into_iter().enumerate() {
                    phi[(j, first + i)] = v;
                }
            }
            Ok(phi)
        })
        .collect::<Result<_, ModelError>>()?;
    let mut ptp = DMatrix::zeros(q, q);
    let mut pty = DVector::zeros(q);
    for (phi, c) in designs.iter().zip(curves) {
        let y = DVector::from_column_slice(&c.values);
        ptp += phi.transpose() * phi;
        pty += phi.transpose() * y;
    }
    let (mean, _) = solve_spd(&ptp, &pty, 1e-10).ok_or(ModelError::Numerical("initial mean fit failed"))?;

    let n = curves.len();
    let mut fits = Vec::with_capacity(n);
    let mut rss = 0.0;
    let mut n_obs = 0usize;
    for (phi, c) in designs.iter().zip(curves) {
        let y = DVector::from_column_slice(&c.values);
        let resid = &y - phi * &mean;
        let mut gram = phi.transpose() * phi;
        let kappa = 1e-2 * (gram.trace() / q as f64).max(1e-12);
        for i in 0..q {
            gram[(i, i)] += kappa;
        }
        let (delta, _) = solve_spd(&gram, &(phi.transpose() * &resid), 1e-10).ok_or(ModelError::Numerical("initial curve fit failed"))?;
        let fitted_resid = &resid - phi * &delta;
        rss += fitted_resid.dot(&fitted_resid);
        n_obs += c.len();
        fits.push(delta);
    }
    let center = fits.iter().fold(DVector::zeros(q), |acc, f| acc + f) / n as f64;
    let mut cov = DMatrix::zeros(q, q);
    for f in &fits {
        let d = f - &center;
        cov += &d * d.transpose();
    }
    cov /= n as f64;
    symmetrize(&mut cov);

    let pooled_var = {
        let all: Vec<f64> = curves.iter().flat_map(|c| c.values.iter().copied()).collect();
        let m = all.iter().sum::<f64>() / all.len() as f64;
        all.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / all.len() as f64
    };
    let noise_var = (rss / n_obs as f64).max(1e-6 * pooled_var.max(1e-12));
    let r = config.tau0.len();
    let warp_cov = DMatrix::identity(r, r) * config.initial_warp_var;
    let mut model = TemplateModel::new(basis, config.tau0.clone(), mean, DMatrix::zeros(q, 0), Vec::new(), noise_var, warp_cov)?;
    if config.p > 0 {
        let (c, lambda) = model.identify(&cov, config.p);
        let top = lambda.first().copied().unwrap_or(0.0).max(1e-12);
        let lambda = lambda.into_iter().map(|l| l.max(1e-6 * top)).collect();
        let (mean, noise, wc) = (model.mean().clone(), model.noise_var(), model.warp_cov().clone());
        model.set_parameters(mean, c, lambda, noise, wc);
    }
    Ok(model)
}

/// Maximum-likelihood fit by EM on the calling thread.
pub fn fit_em(curves: &[Curve], config: &FitConfig) -> Result<FitResult, ModelError> {
    fit_em_with(curves, config, &Sequential)
}

/// EM with the per-subject E-step scheduled by `exec`. Statistics are
/// reduced in subject order, so the result does not depend on scheduling.
pub fn fit_em_with<E>(curves: &[Curve], config: &FitConfig, exec: &E) -> Result<FitResult, ModelError>
where
    E: Executor + ?Sized + Sync,
{
    let mut model = initial_model(curves, config)?;
    fit_from(curves, config, exec, &mut model)
}

fn fit_from<E: Executor + ?Sized>(curves: &[Curve], config: &FitConfig, exec: &E, model: &mut TemplateModel) -> Result<FitResult, ModelError> {
    let n = curves.len();
    let mut trace: Vec<f64> = Vec::new();
    let mut ridged_m_steps = 0;
    let mut converged = false;
    loop {
        let current: &TemplateModel = model;
        let steps = exec.map(n, |i| e_step(&curves[i], current, config));
        let mut stats = SuffStats::zeros(model.q(), model.p(), model.r());
        let mut effects = Vec::with_capacity(n);
        let mut loglik = 0.0;
        for step in steps {
            let step = step?;
            stats.add(&step.stats);
            loglik += step.effects.loglik_contrib;
            effects.push(step.effects);
        }
        let flagged: Vec<String> = effects.iter().filter(|e| e.flagged).map(|e| e.id.clone()).collect();
        if flagged.len() == n {
            return Err(ModelError::AllFlagged(n));
        }
        if !loglik.is_finite() {
            return Err(ModelError::Numerical("marginal log-likelihood is not finite"));
        }
        let iteration = trace.len();
        if let Some(&prev) = trace.last() {
            let rel = (loglik - prev).abs() / prev.abs().max(1e-300);
            if rel < config.em_tol && iteration >= config.min_em_iters {
                converged = true;
            }
        }
        trace.push(loglik);
        log::debug!("EM iteration {iteration}: loglik {loglik:.6}, {} flagged", flagged.len());
        if converged || trace.len() >= config.max_em_iters {
            let diagnostics = FitDiagnostics { iterations: trace.len(), final_loglik: loglik, converged, flagged, ridged_m_steps };
            return Ok(FitResult { model: model.clone(), trace, effects, diagnostics });
        }
        let (next, ridged) = m_step(&stats, model)?;
        ridged_m_steps += ridged as usize;
        *model = next;
    }
}

/// Continues EM from an existing model instead of the default starting values.
pub fn refit_from<E: Executor + ?Sized + Sync>(curves: &[Curve], config: &FitConfig, exec: &E, start: TemplateModel) -> Result<FitResult, ModelError> {
    config.validate()?;
    check_curves(curves, start.interval())?;
    let mut model = start;
    fit_from(curves, config, exec, &mut model)
}
