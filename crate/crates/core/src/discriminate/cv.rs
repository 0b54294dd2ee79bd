use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::logistic::{fit_logistic, predict_prob, FeatureRow};
use super::DiscriminateError;
use crate::exec::Executor;
use crate::model::{e_step, fit_em_with, Curve, FitConfig};

/// How subjects are split into held-out folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Folds {
    #[default]
    LeaveOneOut,
    /// Shuffled with `seed`, then dealt round-robin into `k` folds.
    KFold { k: usize, seed: u64 },
}

/// Fold index of every subject.
pub fn fold_assignment(n: usize, folds: Folds) -> Result<Vec<usize>, DiscriminateError> {
    match folds {
        Folds::LeaveOneOut => Ok((0..n).collect()),
        Folds::KFold { k, seed } => {
            if k < 2 || k > n {
                return Err(DiscriminateError::Parameter("fold count must lie in [2, n]"));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut out = alloc::vec![0; n];
            for (pos, &i) in order.iter().enumerate() {
                out[i] = pos % k;
            }
            Ok(out)
        }
    }
}

fn fold_count(assignment: &[usize]) -> usize {
    assignment.iter().copied().max().map_or(0, |m| m + 1)
}

/// Which features enter the logistic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FeatureSet {
    Scores,
    ScoresAndWarp,
}

impl FeatureSet {
    pub fn includes_tau(self) -> bool {
        self == FeatureSet::ScoresAndWarp
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Scores => "z",
            FeatureSet::ScoresAndWarp => "z+tau",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeldOut {
    pub id: String,
    pub fold: usize,
    pub label: u8,
    /// `None` when the subject's fold was flagged.
    pub prob: Option<f64>,
    pub predicted: Option<u8>,
}

/// Cross-validated misclassification for one `(p, features)` pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvRow {
    pub p: usize,
    pub features: FeatureSet,
    pub folds: usize,
    /// Misclassified fraction of the subjects in unflagged folds.
    pub cmr: f64,
    pub misclassified: usize,
    pub evaluated: usize,
    pub flagged_folds: Vec<usize>,
    pub predictions: Vec<HeldOut>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvReport {
    pub fold_of: Vec<usize>,
    pub rows: Vec<CvRow>,
}

impl CvReport {
    pub fn row(&self, p: usize, features: FeatureSet) -> Option<&CvRow> {
        self.rows.iter().find(|r| r.p == p && r.features == features)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub folds: Folds,
    pub ridge: f64,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self { folds: Folds::LeaveOneOut, ridge: 1e-6 }
    }
}

enum FoldOutcome {
    Predicted(Vec<(usize, f64)>),
    Flagged,
}

fn summarize(p: usize, features: FeatureSet, rows: &[FeatureRow], fold_of: &[usize], outcomes: Vec<FoldOutcome>) -> CvRow {
    let mut predictions: Vec<HeldOut> = rows
        .iter()
        .zip(fold_of)
        .map(|(r, &fold)| HeldOut { id: r.id.clone(), fold, label: r.label, prob: None, predicted: None })
        .collect();
    let mut flagged_folds = Vec::new();
    for (fold, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            FoldOutcome::Flagged => flagged_folds.push(fold),
            FoldOutcome::Predicted(list) => {
                for (i, prob) in list {
                    predictions[i].prob = Some(prob);
                    predictions[i].predicted = Some((prob >= 0.5) as u8);
                }
            }
        }
    }
    let evaluated = predictions.iter().filter(|h| h.prob.is_some()).count();
    let misclassified = predictions.iter().filter(|h| h.predicted.is_some_and(|y| y != h.label)).count();
    let cmr = if evaluated == 0 { f64::NAN } else { misclassified as f64 / evaluated as f64 };
    CvRow { p, features, folds: fold_count(fold_of), cmr, misclassified, evaluated, flagged_folds, predictions }
}

/// Refits only the logistic stage in each fold. A fold whose training fit
/// fails on single-class or separated data with `ridge = 0` is flagged and
/// left out of the rate.
pub fn cross_validate_rows<E: Executor + ?Sized + Sync>(
    rows: &[FeatureRow],
    p: usize,
    features: FeatureSet,
    fold_of: &[usize],
    ridge: f64,
    exec: &E,
) -> Result<CvRow, DiscriminateError> {
    if fold_of.len() != rows.len() {
        return Err(DiscriminateError::Length { what: "fold assignment", expected: rows.len(), actual: fold_of.len() });
    }
    let k = fold_count(fold_of);
    let outcomes = exec.map(k, |fold| -> Result<FoldOutcome, DiscriminateError> {
        let train: Vec<FeatureRow> = rows.iter().zip(fold_of).filter(|(_, &f)| f != fold).map(|(r, _)| r.clone()).collect();
        let model = match fit_logistic(&train, features.includes_tau(), ridge) {
            Ok(m) => m,
            Err(DiscriminateError::SingleClass | DiscriminateError::Separation { .. }) if ridge == 0.0 => {
                log::warn!("cross-validation fold {fold} flagged: training labels are separable or single-class");
                return Ok(FoldOutcome::Flagged);
            }
            Err(e) => return Err(e),
        };
        let mut out = Vec::new();
        for (i, (row, &f)) in rows.iter().zip(fold_of).enumerate() {
            if f == fold {
                out.push((i, predict_prob(&model, row)?));
            }
        }
        Ok(FoldOutcome::Predicted(out))
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(p, features, rows, fold_of, outcomes))
}

/// Table of cross-validated misclassification rates. `sets` pairs each
/// component count `p` with that model's feature rows (all in the same
/// subject order). Every `p > 0` gets a scores-only and a scores-plus-warp
/// row; `p = 0` gets only the warp-only row.
pub fn cross_validate<E: Executor + ?Sized + Sync>(
    sets: &[(usize, Vec<FeatureRow>)],
    options: CvOptions,
    exec: &E,
) -> Result<CvReport, DiscriminateError> {
    let Some((_, first)) = sets.first() else {
        return Err(DiscriminateError::Parameter("no feature sets to cross-validate"));
    };
    let n = first.len();
    if n < 3 {
        return Err(DiscriminateError::TooFewRows(n));
    }
    for (_, rows) in sets {
        if rows.len() != n || rows.iter().zip(first).any(|(a, b)| a.id != b.id || a.label != b.label) {
            return Err(DiscriminateError::Parameter("feature sets disagree on subjects or labels"));
        }
    }
    let fold_of = fold_assignment(n, options.folds)?;
    let mut out = Vec::new();
    for (p, rows) in sets {
        if *p > 0 {
            out.push(cross_validate_rows(rows, *p, FeatureSet::Scores, &fold_of, options.ridge, exec)?);
        }
        out.push(cross_validate_rows(rows, *p, FeatureSet::ScoresAndWarp, &fold_of, options.ridge, exec)?);
    }
    Ok(CvReport { fold_of, rows: out })
}

/// Cross-validation that refits the registration model in every fold and
/// scores the held-out curves with an E-step under the training model.
/// Expensive; exposes the optimism of fitting the registration once.
pub fn cross_validate_pipeline<E: Executor + ?Sized + Sync>(
    curves: &[Curve],
    labels: &[u8],
    config: &FitConfig,
    features: FeatureSet,
    options: CvOptions,
    exec: &E,
) -> Result<CvRow, DiscriminateError> {
    if labels.len() != curves.len() {
        return Err(DiscriminateError::Length { what: "labels", expected: curves.len(), actual: labels.len() });
    }
    let n = curves.len();
    let fold_of = fold_assignment(n, options.folds)?;
    let k = fold_count(&fold_of);
    let mut outcomes = Vec::with_capacity(k);
    let mut rows_out: Vec<Option<FeatureRow>> = alloc::vec![None; n];
    for fold in 0..k {
        let train_idx: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
        let train_curves: Vec<Curve> = train_idx.iter().map(|&i| curves[i].clone()).collect();
        let fit = fit_em_with(&train_curves, config, exec)?;
        let train_rows = super::feature_rows(&fit.effects, &train_idx.iter().map(|&i| labels[i]).collect::<Vec<_>>())?;
        let model = match fit_logistic(&train_rows, features.includes_tau(), options.ridge) {
            Ok(m) => Some(m),
            Err(DiscriminateError::SingleClass | DiscriminateError::Separation { .. }) if options.ridge == 0.0 => None,
            Err(e) => return Err(e),
        };
        let mut preds = Vec::new();
        for i in (0..n).filter(|&i| fold_of[i] == fold) {
            let step = e_step(&curves[i], &fit.model, config)?;
            let row = FeatureRow { id: curves[i].id.clone(), z: step.effects.z_hat, tau: Some(step.effects.tau_hat), label: labels[i] };
            if let Some(m) = &model {
                preds.push((i, predict_prob(m, &row)?));
            }
            rows_out[i] = Some(row);
        }
        outcomes.push(if model.is_some() { FoldOutcome::Predicted(preds) } else { FoldOutcome::Flagged });
    }
    let rows: Vec<FeatureRow> = rows_out.into_iter().map(|r| r.expect("every subject is held out once")).collect();
    Ok(summarize(config.p, features, &rows, &fold_of, outcomes))
}
