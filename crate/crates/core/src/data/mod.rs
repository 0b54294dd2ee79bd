//! Datasets of curves with optional group labels, and the preprocessing
//! steps applied before fitting: truncation and down-sampling.

mod demo;
mod simulate;

pub use demo::demo_template;
pub use simulate::{simulate, GridPolicy, LabelMechanism, SimSpec, Simulated, TrueEffects};

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::model::{Curve, ModelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("duplicate curve id {0}")]
    DuplicateId(String),
    #[error("labels cover {labels} curves but the dataset has {curves}")]
    LabelCount { labels: usize, curves: usize },
    #[error("label {value} for curve {id} is not binary")]
    NonBinaryLabel { id: String, value: u8 },
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Where a dataset came from and what was done to it.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DatasetMeta {
    pub sources: Vec<String>,
    pub truncated_at: Option<f64>,
    pub downsample_target: Option<usize>,
    pub seed: Option<u64>,
    /// Curves dropped by preprocessing.
    pub removed: Vec<String>,
}

/// Curves plus, optionally, one binary label per curve (1 = "upper").
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    pub curves: Vec<Curve>,
    pub labels: Option<Vec<u8>>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(curves: Vec<Curve>, labels: Option<Vec<u8>>, meta: DatasetMeta) -> Result<Self, DataError> {
        let mut seen = BTreeSet::new();
        for c in &curves {
            if !seen.insert(c.id.as_str()) {
                return Err(DataError::DuplicateId(c.id.clone()));
            }
        }
        if let Some(l) = &labels {
            if l.len() != curves.len() {
                return Err(DataError::LabelCount { labels: l.len(), curves: curves.len() });
            }
            if let Some((c, &v)) = curves.iter().zip(l).find(|(_, &v)| v > 1) {
                return Err(DataError::NonBinaryLabel { id: c.id.clone(), value: v });
            }
        }
        Ok(Self { curves, labels, meta })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn label_of(&self, index: usize) -> Option<u8> {
        self.labels.as_ref().map(|l| l[index])
    }

    fn retain(self, keep: impl Fn(&Curve) -> bool) -> (Vec<Curve>, Option<Vec<u8>>, Vec<String>) {
        let mut curves = Vec::new();
        let mut labels = self.labels.as_ref().map(|_| Vec::new());
        let mut removed = Vec::new();
        for (i, c) in self.curves.into_iter().enumerate() {
            if keep(&c) {
                if let (Some(out), Some(src)) = (labels.as_mut(), self.labels.as_ref()) {
                    out.push(src[i]);
                }
                curves.push(c);
            } else {
                removed.push(c.id);
            }
        }
        (curves, labels, removed)
    }
}

/// Drops observations below `t_min`; curves left empty are removed and
/// listed in the metadata.
pub fn truncate(dataset: &Dataset, t_min: f64) -> Dataset {
    let mut meta = dataset.meta.clone();
    meta.truncated_at = Some(meta.truncated_at.map_or(t_min, |old| old.max(t_min)));
    let clipped = Dataset {
        curves: dataset
            .curves
            .iter()
            .map(|c| {
                let start = c.grid.partition_point(|&t| t < t_min);
                Curve { id: c.id.clone(), grid: c.grid[start..].to_vec(), values: c.values[start..].to_vec() }
            })
            .collect(),
        labels: dataset.labels.clone(),
        meta: DatasetMeta::default(),
    };
    let (curves, labels, removed) = clipped.retain(|c| !c.grid.is_empty());
    meta.removed.extend(removed);
    Dataset { curves, labels, meta }
}

/// Indices of the observations kept when thinning `grid` to `m` points:
/// the first and last are always kept, and the interior targets
/// (equispaced in `t` over the curve's own range) are matched to distinct
/// observations minimising the total distance, in order.
pub(crate) fn thin_indices(grid: &[f64], m: usize) -> Vec<usize> {
    let n = grid.len();
    if n <= m {
        return (0..n).collect();
    }
    let (lo, hi) = (grid[0], grid[n - 1]);
    let targets: Vec<f64> = (1..m - 1).map(|k| lo + (hi - lo) * k as f64 / (m - 1) as f64).collect();
    let k = targets.len();
    let candidates = &grid[1..n - 1];
    let c = candidates.len();
    // cost[i][j]: best cost matching the first i targets within the first j candidates
    let inf = f64::INFINITY;
    let mut cost = alloc::vec![alloc::vec![inf; c + 1]; k + 1];
    let mut take = alloc::vec![alloc::vec![false; c + 1]; k + 1];
    for j in 0..=c {
        cost[0][j] = 0.0;
    }
    for i in 1..=k {
        for j in i..=c {
            let skip = cost[i][j - 1];
            let with = cost[i - 1][j - 1] + (candidates[j - 1] - targets[i - 1]).abs();
            if with <= skip {
                cost[i][j] = with;
                take[i][j] = true;
            } else {
                cost[i][j] = skip;
            }
        }
    }
    let mut picked = Vec::with_capacity(k);
    let (mut i, mut j) = (k, c);
    while i > 0 {
        if take[i][j] {
            picked.push(j);
            i -= 1;
        }
        j -= 1;
    }
    picked.reverse();
    let mut out = Vec::with_capacity(m);
    out.push(0);
    out.extend(picked);
    out.push(n - 1);
    out
}

/// Thins every curve with more than `m_target` observations down to
/// `m_target`; shorter curves pass through unchanged.
pub fn downsample(dataset: &Dataset, m_target: usize) -> Result<Dataset, DataError> {
    if m_target < 2 {
        return Err(DataError::Parameter("down-sampling target must be at least 2"));
    }
    let curves = dataset
        .curves
        .iter()
        .map(|c| {
            let idx = thin_indices(&c.grid, m_target);
            Curve { id: c.id.clone(), grid: idx.iter().map(|&i| c.grid[i]).collect(), values: idx.iter().map(|&i| c.values[i]).collect() }
        })
        .collect();
    let mut meta = dataset.meta.clone();
    meta.downsample_target = Some(m_target);
    Ok(Dataset { curves, labels: dataset.labels.clone(), meta })
}
