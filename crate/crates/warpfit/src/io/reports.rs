use std::path::Path;

use warpfit_core::discriminate::CvReport;
use warpfit_core::SubjectEffects;

use super::dataset::fmt_f64;
use super::create_parent;
use crate::error::{Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    create_parent(path)?;
    csv::Writer::from_path(path).map_err(|e| Error::parse(path, None, e.to_string()))
}

fn put<I, S>(w: &mut csv::Writer<std::fs::File>, path: &Path, row: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(row).map_err(|e| Error::parse(path, None, e.to_string()))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Columns `id, theta_1.., tau_1.., z_1.., loglik, flagged`.
pub fn write_effects_csv(path: &Path, effects: &[SubjectEffects]) -> Result<()> {
    let r = effects.first().map_or(0, |e| e.theta_hat.len());
    let p = effects.first().map_or(0, |e| e.z_hat.len());
    let mut w = writer(path)?;
    let mut header = vec!["id".to_string()];
    header.extend((1..=r).map(|j| format!("theta_{j}")));
    header.extend((1..=r).map(|j| format!("tau_{j}")));
    header.extend((1..=p).map(|k| format!("z_{k}")));
    header.extend(["loglik".to_string(), "flagged".to_string()]);
    put(&mut w, path, &header)?;
    for e in effects {
        let mut row = vec![e.id.clone()];
        row.extend(e.theta_hat.iter().map(|v| fmt_f64(*v)));
        row.extend(e.tau_hat.iter().map(|v| fmt_f64(*v)));
        row.extend(e.z_hat.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(e.loglik_contrib));
        row.push(e.flagged.to_string());
        put(&mut w, path, &row)?;
    }
    finish(w, path)
}

/// Columns `iteration, loglik`, iterations counted from 0.
pub fn write_trace_csv(path: &Path, trace: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    put(&mut w, path, ["iteration", "loglik"])?;
    for (i, v) in trace.iter().enumerate() {
        put(&mut w, path, [i.to_string(), fmt_f64(*v)])?;
    }
    finish(w, path)
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, None, e.to_string()))?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::parse(path, None, e.to_string()))?;
        let line = rec.position().map(|p| p.line());
        let v = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| Error::parse(path, line, "bad log-likelihood"))?;
        out.push(v);
    }
    Ok(out)
}

/// One row per `(p, features)`: `p, features, folds, cmr, flagged_folds`.
pub fn write_cv_csv(path: &Path, report: &CvReport) -> Result<()> {
    let mut w = writer(path)?;
    put(&mut w, path, ["p", "features", "folds", "cmr", "flagged_folds"])?;
    for r in &report.rows {
        let flagged = r.flagged_folds.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(";");
        put(&mut w, path, [r.p.to_string(), r.features.name().to_string(), r.folds.to_string(), fmt_f64(r.cmr), flagged])?;
    }
    finish(w, path)
}

/// Table-shaped summary: `p, without_tau, with_tau`, blank where a cell
/// does not apply.
pub fn write_cv_table(path: &Path, report: &CvReport) -> Result<()> {
    use warpfit_core::discriminate::FeatureSet;
    let mut ps: Vec<usize> = report.rows.iter().map(|r| r.p).collect();
    ps.dedup();
    let mut w = writer(path)?;
    put(&mut w, path, ["p", "without_tau", "with_tau"])?;
    for p in ps {
        let cell = |f| report.row(p, f).map(|r| fmt_f64(r.cmr)).unwrap_or_default();
        put(&mut w, path, [p.to_string(), cell(FeatureSet::Scores), cell(FeatureSet::ScoresAndWarp)])?;
    }
    finish(w, path)
}
