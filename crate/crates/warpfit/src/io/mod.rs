//! File formats: curve CSVs, label CSVs, dataset and model JSON, and the
//! CSV reports written by the command line.

mod dataset;
mod model_file;
mod reports;

pub use dataset::{
    attach_labels, fmt_f64, load_dataset, load_dataset_json, read_curve_dir, read_labels, read_long_csv, save_dataset_json, write_labels,
    write_long_csv, DATASET_FORMAT, LOWER, UPPER,
};
pub use model_file::{ModelFile, MODEL_FORMAT};
pub use reports::{read_trace_csv, write_cv_csv, write_cv_table, write_effects_csv, write_trace_csv};

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::schema(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads JSON, reporting schema errors with the path of the offending field.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        Error::schema(path, format!("at '{field}': {}", e.inner()))
    })
}

pub fn read_model(path: &Path) -> Result<warpfit_core::TemplateModel> {
    let file: ModelFile = read_json(path)?;
    file.to_model().map_err(|e| match e {
        Error::Validation(m) => Error::schema(path, m),
        other => other,
    })
}

pub fn write_model(path: &Path, model: &warpfit_core::TemplateModel) -> Result<()> {
    write_json(path, &ModelFile::from_model(model))
}
