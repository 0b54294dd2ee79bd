use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use warpfit_core::{demo_template, GridPolicy, LabelMechanism, SimSpec, TemplateModel, TrueEffects};

use crate::error::{Error, Result};
use crate::io::{read_model, ModelFile};

pub const TRUTH_FORMAT: &str = "warpfit-truth-v1";

/// JSON simulation spec read by `warpfit simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// `common` or `incomplete`.
    #[serde(default = "default_grid")]
    pub grid: String,
    /// Smallest covered fraction of the interval for incomplete grids.
    #[serde(default = "default_min_fraction")]
    pub min_fraction: f64,
    #[serde(default)]
    pub template: TemplateSpec,
    #[serde(default)]
    pub labels: Option<LabelMechanism>,
}

fn default_grid() -> String {
    "common".into()
}

fn default_min_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    /// Built-in template with peaks at the reference knots.
    #[default]
    Demo,
    /// A fitted `warpfit-model-v1` file.
    Model,
}

/// Generating template. `demo` takes `variances`, `noise_var` and
/// `warp_var`; `model` takes `path`, relative to the spec's directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateSpec {
    pub kind: TemplateKind,
    pub variances: Option<Vec<f64>>,
    pub noise_var: Option<f64>,
    pub warp_var: Option<f64>,
    pub path: Option<PathBuf>,
}

impl SimulationSpec {
    /// Resolves the template and grid. `seed` overrides the spec's own seed,
    /// which overrides `fallback_seed`.
    pub fn resolve(&self, spec_path: &Path, seed: Option<u64>, fallback_seed: u64) -> Result<SimSpec> {
        let t = &self.template;
        let model = match t.kind {
            TemplateKind::Demo => {
                if t.path.is_some() {
                    return Err(Error::schema(spec_path, "at 'template.path': only a 'model' template takes a path"));
                }
                let variances = t.variances.clone().unwrap_or_else(|| vec![4.0, 1.0]);
                demo_template(&variances, t.noise_var.unwrap_or(0.01), t.warp_var.unwrap_or(0.04))
                    .map_err(|e| Error::schema(spec_path, format!("at 'template': {e}")))?
            }
            TemplateKind::Model => {
                if t.variances.is_some() || t.noise_var.is_some() || t.warp_var.is_some() {
                    return Err(Error::schema(spec_path, "at 'template': a 'model' template takes its parameters from the model file"));
                }
                let path = t.path.as_ref().ok_or_else(|| Error::schema(spec_path, "at 'template.path': missing model path"))?;
                let path = if path.is_relative() { spec_path.parent().unwrap_or(Path::new("")).join(path) } else { path.clone() };
                read_model(&path)?
            }
        };
        let grid = match self.grid.as_str() {
            "common" => GridPolicy::Common { m: self.m },
            "incomplete" => GridPolicy::Incomplete { m: self.m, min_fraction: self.min_fraction },
            other => return Err(Error::schema(spec_path, format!("at 'grid': unknown grid '{other}', expected 'common' or 'incomplete'"))),
        };
        Ok(SimSpec { model, n: self.n, grid, labels: self.labels.clone(), seed: seed.or(self.seed).unwrap_or(fallback_seed) })
    }
}

/// Generating model and per-subject effects of a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub format: String,
    pub model: ModelFile,
    pub effects: Vec<TrueEffects>,
}

impl TruthFile {
    pub fn new(model: &TemplateModel, effects: Vec<TrueEffects>) -> Self {
        Self { format: TRUTH_FORMAT.into(), model: ModelFile::from_model(model), effects }
    }
}
