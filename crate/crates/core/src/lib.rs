//! Likelihood-based registration of sparsely sampled curves.
//!
//! Curves are modelled as a spline template (mean plus a few principal
//! components) composed with monotone Hermite warping functions whose knot
//! positions are random effects. The crate fits that model by EM with
//! adaptive Gauss–Hermite integration over the warp effects, and runs
//! logistic discrimination on the resulting amplitude scores and warp knots.
//!
//! The crate is `no_std` and only needs an allocator. File formats, the
//! command line and plotting live in the companion `warpfit` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod data;
pub mod discriminate;
pub mod exec;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod quadrature;
pub mod splines;

pub use model::{fit_em, Curve, EStepMode, FitConfig, FitResult, SubjectEffects, TemplateModel};
pub use data::{demo_template, downsample, simulate, truncate, Dataset, DatasetMeta, GridPolicy, LabelMechanism, SimSpec, Simulated, TrueEffects};
pub use discriminate::{cross_validate, fit_logistic, predict_prob, CvOptions, CvReport, FeatureRow, FeatureSet, Folds, LogisticModel};
pub use exec::{Executor, Sequential};
pub use splines::{BSplineBasis, Interval, MonotoneWarp, ThetaVector, WarpKnots};
