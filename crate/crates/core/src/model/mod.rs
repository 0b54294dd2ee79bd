//! The random-effects warping model.
//!
//! Each subject's observations are `y = Φ(θ)(a + C z) + ε` where `Φ(θ)` is
//! the spline basis evaluated at the inverse-warped grid, `z ~ N(0, Λ)` are
//! amplitude scores and `θ ~ N(θ₀, Σ)` are Jupp-transformed warp knots.
//! The scores are integrated out in closed form; the warp effects by
//! adaptive Gauss–Hermite quadrature around each subject's posterior mode.

mod curve;
mod em;
mod estep;
mod likelihood;
mod mstep;
mod register;
mod template;

pub use curve::Curve;
pub use em::{fit_em, fit_em_with, initial_model, refit_from, FitConfig, FitDiagnostics, FitResult};
pub use estep::{e_step, marginal_loglik, posterior_nodes, EStepMode, PosteriorNode, SubjectEStep, SubjectEffects, SuffStats};
pub use likelihood::{conditional_loglik, design_matrix, posterior_theta_map, MapEstimate, WarpPrior};
pub use mstep::m_step;
pub use register::register_curve;
pub use template::TemplateModel;

use alloc::string::String;
use thiserror::Error;

use crate::splines::SplineError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error("curve {id}: {reason}")]
    InvalidCurve { id: String, reason: &'static str },
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error("{what}: expected dimension {expected}, got {actual}")]
    Dimension { what: &'static str, expected: usize, actual: usize },
    #[error("need at least {needed} curves, got {got}")]
    TooFewCurves { needed: usize, got: usize },
    #[error("fit failed: all {0} subjects were flagged by the posterior-mode search")]
    AllFlagged(usize),
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
}
