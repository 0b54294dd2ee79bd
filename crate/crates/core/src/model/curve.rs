use alloc::string::String;
use alloc::vec::Vec;

use super::ModelError;

/// One subject's observation grid and values. Grids may differ in length
/// and coverage across subjects.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Curve {
    pub id: String,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn new(id: impl Into<String>, grid: Vec<f64>, values: Vec<f64>) -> Result<Self, ModelError> {
        let id = id.into();
        let bad = |reason| Err(ModelError::InvalidCurve { id: id.clone(), reason });
        if grid.is_empty() {
            return bad("no observations");
        }
        if grid.len() != values.len() {
            return bad("grid and values differ in length");
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return bad("non-finite observation");
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("grid is not strictly increasing");
        }
        Ok(Self { id, grid, values })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}
