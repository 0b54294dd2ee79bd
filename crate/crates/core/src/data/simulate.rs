use alloc::format;
use alloc::vec::Vec;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{DataError, Dataset, DatasetMeta};
use crate::model::{design_matrix, Curve, TemplateModel, WarpPrior};
use crate::splines::jupp_inverse;

/// How observation grids are laid out.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum GridPolicy {
    /// `m` equispaced points spanning the whole interval, shared by all curves.
    Common { m: usize },
    /// `m` equispaced points on `[start, hi]` with the start drawn uniformly
    /// so every curve still covers at least `min_fraction` of the interval.
    /// The far end of each curve is missing, as with incomplete curves.
    Incomplete { m: usize, min_fraction: f64 },
}

/// Labels drawn as Bernoulli(logistic(α + bᵀz + dᵀτ)).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelMechanism {
    pub alpha: f64,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimSpec {
    pub model: TemplateModel,
    pub n: usize,
    pub grid: GridPolicy,
    pub labels: Option<LabelMechanism>,
    pub seed: u64,
}

/// The random effects that generated one simulated curve.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrueEffects {
    pub id: alloc::string::String,
    pub theta: Vec<f64>,
    pub tau: Vec<f64>,
    pub z: Vec<f64>,
    pub prob: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Simulated {
    pub dataset: Dataset,
    pub truth: Vec<TrueEffects>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws a dataset from the random-effects model; a pure function of `spec`.
pub fn simulate(spec: &SimSpec) -> Result<Simulated, DataError> {
    let model = &spec.model;
    if spec.n == 0 {
        return Err(DataError::Parameter("n must be at least 1"));
    }
    let m = match spec.grid {
        GridPolicy::Common { m } => m,
        GridPolicy::Incomplete { m, min_fraction } => {
            if !(min_fraction > 0.0 && min_fraction <= 1.0) {
                return Err(DataError::Parameter("min_fraction must lie in (0, 1]"));
            }
            m
        }
    };
    if m == 0 {
        return Err(DataError::Parameter("m must be at least 1"));
    }
    if let Some(mech) = &spec.labels {
        if mech.b.len() != model.p() || mech.d.len() != model.r() {
            return Err(DataError::Parameter("label mechanism dimensions do not match the model"));
        }
    }
    let iv = model.interval();
    let prior = WarpPrior::new(model);
    let sd: Vec<f64> = model.variances().iter().map(|&l| libm::sqrt(l)).collect();
    let noise_sd = libm::sqrt(model.noise_var());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut curves = Vec::with_capacity(spec.n);
    let mut truth = Vec::with_capacity(spec.n);
    let mut labels = spec.labels.as_ref().map(|_| Vec::with_capacity(spec.n));
    let width = digits(spec.n);
    for i in 0..spec.n {
        let id = format!("s{:0width$}", i + 1, width = width);
        let start = match spec.grid {
            GridPolicy::Common { .. } => iv.lo,
            GridPolicy::Incomplete { min_fraction, .. } => iv.lo + rng.random::<f64>() * (1.0 - min_fraction) * iv.length(),
        };
        let grid: Vec<f64> = if m == 1 {
            alloc::vec![iv.hi]
        } else {
            (0..m).map(|j| if j + 1 == m { iv.hi } else { start + (iv.hi - start) * j as f64 / (m - 1) as f64 }).collect()
        };
        let eta: Vec<f64> = (0..prior.dim()).map(|_| normal(&mut rng)).collect();
        let theta = prior.theta(&eta).map_err(crate::model::ModelError::from)?;
        let z: Vec<f64> = sd.iter().map(|s| s * normal(&mut rng)).collect();
        let probe = Curve { id: id.clone(), grid: grid.clone(), values: alloc::vec![0.0; grid.len()] };
        let phi = design_matrix(&probe, &theta, model)?;
        let coef = model.mean() + model.components() * DVector::from_column_slice(&z);
        let clean = phi * coef;
        let values: Vec<f64> = clean.iter().map(|v| v + noise_sd * normal(&mut rng)).collect();
        let tau = jupp_inverse(&theta, model.warp_reference()).map_err(crate::model::ModelError::from)?.knots().to_vec();
        let mut prob = None;
        if let (Some(mech), Some(out)) = (&spec.labels, labels.as_mut()) {
            let eta: f64 = mech.alpha + mech.b.iter().zip(&z).map(|(b, z)| b * z).sum::<f64>() + mech.d.iter().zip(&tau).map(|(d, t)| d * t).sum::<f64>();
            let pr = 1.0 / (1.0 + libm::exp(-eta));
            let u: f64 = rng.random();
            out.push((u < pr) as u8);
            prob = Some(pr);
        }
        curves.push(Curve::new(id.clone(), grid, values)?);
        truth.push(TrueEffects { id, theta: theta.into_vec(), tau, z, prob });
    }
    let meta = DatasetMeta { sources: alloc::vec![alloc::string::String::from("simulated")], seed: Some(spec.seed), ..Default::default() };
    Ok(Simulated { dataset: Dataset::new(curves, labels, meta)?, truth })
}

fn digits(mut n: usize) -> usize {
    let mut d = 1;
    while n >= 10 {
        n /= 10;
        d += 1;
    }
    d
}
