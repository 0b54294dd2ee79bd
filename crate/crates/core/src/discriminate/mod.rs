//! Logistic discrimination on amplitude scores and warp knots, and the
//! cross-validated misclassification harness.

mod cv;
mod logistic;

pub use cv::{cross_validate, cross_validate_pipeline, cross_validate_rows, fold_assignment, CvOptions, CvReport, CvRow, FeatureSet, Folds, HeldOut};
pub use logistic::{feature_rows, fit_logistic, predict_prob, FeatureRow, LogisticModel};

use alloc::string::String;
use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscriminateError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("{what}: expected length {expected}, got {actual}")]
    Length { what: &'static str, expected: usize, actual: usize },
    #[error("row {0} has no warp features")]
    MissingTau(String),
    #[error("row {0} has non-finite features")]
    NonFinite(String),
    #[error("label {value} for row {id} is not binary")]
    NonBinaryLabel { id: String, value: u8 },
    #[error("all training labels are equal; use ridge > 0")]
    SingleClass,
    #[error("labels are completely separated (coefficient norm {norm:.3e}); use ridge > 0")]
    Separation { norm: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}
