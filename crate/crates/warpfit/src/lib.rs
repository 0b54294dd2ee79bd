//! Files, plots and the command line for `warpfit`.
//!
//! The numerical work lives in `warpfit-core`; this crate reads and writes
//! datasets, models and reports, renders figures, and runs the pipeline
//! from the `warpfit` binary.

pub mod cli;
pub mod error;
pub mod exec;
pub mod io;
pub mod manifest;
pub mod plot;

pub use error::{Error, Result};
