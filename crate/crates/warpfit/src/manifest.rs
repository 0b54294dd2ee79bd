use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::write_json;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command run, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub arguments: Vec<String>,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, arguments: Vec<String>, config: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            arguments,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            duration_secs: 0.0,
        }
    }

    /// Writes `manifest.json` into `dir`.
    pub fn write(&mut self, dir: &Path, elapsed: Duration) -> Result<PathBuf> {
        self.duration_secs = elapsed.as_secs_f64();
        let path = dir.join(MANIFEST_FILE);
        write_json(&path, self)?;
        Ok(path)
    }
}
