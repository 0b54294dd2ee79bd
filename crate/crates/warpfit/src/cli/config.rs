use std::path::Path;

use serde::{Deserialize, Serialize};
use warpfit_core::discriminate::Folds;
use warpfit_core::{Dataset, FitConfig};

use crate::error::{Error, Result};
use crate::io::read_json;

/// Settings shared by the subcommands. Built from defaults, then a TOML
/// config file, then command-line flags.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads for per-subject work; `0` uses every core.
    pub threads: usize,
    pub fit: FitConfig,
    pub data: DataConfig,
    pub cv: CvConfig,
}

/// Preprocessing applied before fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Drop observations below this abscissa; defaults to the left end of
    /// the fitting interval.
    pub truncate: Option<f64>,
    /// Thin curves to this many observations; `0` keeps every point.
    pub downsample: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { truncate: None, downsample: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub ridge: f64,
    /// Number of folds; `0` means leave-one-out.
    pub folds: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { ridge: 1e-6, folds: 0 }
    }
}

impl CvConfig {
    pub fn folds(&self, seed: u64) -> Folds {
        if self.folds == 0 {
            Folds::LeaveOneOut
        } else {
            Folds::KFold { k: self.folds, seed }
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            return read_json(path);
        }
        let de = toml::Deserializer::new(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            Error::schema(path, format!("at '{field}': {}", e.inner().message()))
        })
    }

    /// Truncation and down-sampling as configured.
    pub fn prepare(&self, dataset: &Dataset, downsample: bool) -> Result<Dataset> {
        let cut = self.data.truncate.unwrap_or(self.fit.interval.lo);
        let mut out = warpfit_core::truncate(dataset, cut);
        if !out.meta.removed.is_empty() {
            log::warn!("{} curves have no observations after truncation at {cut} and were dropped", out.meta.removed.len());
        }
        if downsample && self.data.downsample > 0 {
            out = warpfit_core::downsample(&out, self.data.downsample)?;
        }
        Ok(out)
    }
}
