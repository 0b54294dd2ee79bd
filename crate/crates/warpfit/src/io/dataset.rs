use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use warpfit_core::{Curve, Dataset, DatasetMeta};

use super::{create_parent, read_json, write_json};
use crate::error::{Error, Result};

pub const DATASET_FORMAT: &str = "warpfit-dataset-v1";

/// Group name for label 1.
pub const UPPER: &str = "upper";
/// Group name for label 0.
pub const LOWER: &str = "lower";

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    Error::parse(path, line, e.to_string())
}

fn parse_number(path: &Path, line: u64, field: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::parse(path, Some(line), format!("{field} '{raw}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, Some(line), format!("{field} is not finite")));
    }
    Ok(v)
}

/// Sorts one curve's observations by `t` and rejects repeated abscissae.
fn assemble(path: &Path, id: String, mut points: Vec<(f64, f64, u64)>) -> Result<Curve> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in points.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::parse(path, Some(w[1].2), format!("duplicate observation for id {id} at t = {}", w[1].0)));
        }
    }
    let (grid, values) = points.into_iter().map(|(t, y, _)| (t, y)).unzip();
    Ok(Curve::new(id, grid, values)?)
}

fn column(headers: &csv::StringRecord, path: &Path, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::parse(path, Some(1), format!("missing column '{name}'")))
}

/// Long CSV with header `id,t,value`. Curves keep the order in which their
/// ids first appear.
pub fn read_long_csv(path: &Path) -> Result<Vec<Curve>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let (ci, ct, cv) = (column(&headers, path, "id")?, column(&headers, path, "t")?, column(&headers, path, "value")?);
    let mut order: Vec<String> = Vec::new();
    let mut points: HashMap<String, Vec<(f64, f64, u64)>> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize, name: &str| record.get(i).ok_or_else(|| Error::parse(path, Some(line), format!("missing {name}")));
        let id = get(ci, "id")?.to_string();
        if id.is_empty() {
            return Err(Error::parse(path, Some(line), "empty id"));
        }
        let t = parse_number(path, line, "t", get(ct, "t")?)?;
        let y = parse_number(path, line, "value", get(cv, "value")?)?;
        points
            .entry(id.clone())
            .or_insert_with(|| {
                order.push(id.clone());
                Vec::new()
            })
            .push((t, y, line));
    }
    if order.is_empty() {
        return Err(Error::parse(path, None, "no observations"));
    }
    order.into_iter().map(|id| {
        let p = points.remove(&id).expect("id recorded on first sight");
        assemble(path, id, p)
    }).collect()
}

pub fn write_long_csv(path: &Path, curves: &[Curve]) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["id", "t", "value"]).map_err(|e| csv_error(path, e))?;
    for c in curves {
        for (t, y) in c.grid.iter().zip(&c.values) {
            w.write_record([c.id.as_str(), &fmt_f64(*t), &fmt_f64(*y)]).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

const CURVE_EXTENSIONS: [&str; 4] = ["csv", "txt", "dat", "tsv"];

/// A directory with one file per curve, named `<id>.<ext>`, holding two
/// numeric columns `t` and `value` separated by commas, semicolons or
/// whitespace. A non-numeric first line is taken as a header.
pub fn read_curve_dir(dir: &Path) -> Result<Vec<Curve>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().and_then(|e| e.to_str()).is_some_and(|e| CURVE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str())))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::parse(dir, None, "directory holds no curve files"));
    }
    files.iter().map(|f| read_curve_file(f)).collect()
}

fn read_curve_file(path: &Path) -> Result<Curve> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let fields: Vec<&str> = raw.split(|c: char| c == ',' || c == ';' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if fields.is_empty() || fields[0].starts_with('#') {
            continue;
        }
        if points.is_empty() && fields[0].parse::<f64>().is_err() {
            continue;
        }
        if fields.len() < 2 {
            return Err(Error::parse(path, Some(line), "expected two columns"));
        }
        points.push((parse_number(path, line, "t", fields[0])?, parse_number(path, line, "value", fields[1])?, line));
    }
    if points.is_empty() {
        return Err(Error::parse(path, None, "no observations"));
    }
    assemble(path, id, points)
}

/// Labels CSV with header `id,group`; group is `upper` (1) or `lower` (0),
/// and `1`/`0` are accepted too.
pub fn read_labels(path: &Path) -> Result<Vec<(String, u8)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let (ci, cg) = (column(&headers, path, "id")?, column(&headers, path, "group")?);
    let mut out = Vec::new();
    let mut seen = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record.get(ci).unwrap_or_default().to_string();
        let group = record.get(cg).unwrap_or_default();
        let label = match group.to_ascii_lowercase().as_str() {
            UPPER | "1" => 1,
            LOWER | "0" => 0,
            other => return Err(Error::parse(path, Some(line), format!("group '{other}' is neither '{UPPER}' nor '{LOWER}'"))),
        };
        if seen.insert(id.clone(), line).is_some() {
            return Err(Error::parse(path, Some(line), format!("duplicate label for id {id}")));
        }
        out.push((id, label));
    }
    Ok(out)
}

pub fn write_labels(path: &Path, ids: &[&str], labels: &[u8]) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["id", "group"]).map_err(|e| csv_error(path, e))?;
    for (id, &y) in ids.iter().zip(labels) {
        w.write_record([*id, if y == 1 { UPPER } else { LOWER }]).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Aligns labels with curves; every label id must name a curve and every
/// curve must have a label.
pub fn attach_labels(curves: &[Curve], labels: &[(String, u8)], path: &Path) -> Result<Vec<u8>> {
    let map: HashMap<&str, u8> = labels.iter().map(|(id, y)| (id.as_str(), *y)).collect();
    let known: HashMap<&str, ()> = curves.iter().map(|c| (c.id.as_str(), ())).collect();
    if let Some((id, _)) = labels.iter().find(|(id, _)| !known.contains_key(id.as_str())) {
        return Err(Error::parse(path, None, format!("label for unknown id {id}")));
    }
    curves
        .iter()
        .map(|c| map.get(c.id.as_str()).copied().ok_or_else(|| Error::parse(path, None, format!("no label for id {}", c.id))))
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct Bundle {
    format: String,
    meta: DatasetMeta,
    curves: Vec<Curve>,
    #[serde(default)]
    labels: Option<Vec<u8>>,
}

pub fn save_dataset_json(path: &Path, dataset: &Dataset) -> Result<()> {
    let bundle = Bundle { format: DATASET_FORMAT.into(), meta: dataset.meta.clone(), curves: dataset.curves.clone(), labels: dataset.labels.clone() };
    write_json(path, &bundle)
}

pub fn load_dataset_json(path: &Path) -> Result<Dataset> {
    let bundle: Bundle = read_json(path)?;
    if bundle.format != DATASET_FORMAT {
        return Err(Error::schema(path, format!("format is '{}', expected '{DATASET_FORMAT}'", bundle.format)));
    }
    let curves = bundle.curves.into_iter().map(|c| Curve::new(c.id, c.grid, c.values)).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Dataset::new(curves, bundle.labels, bundle.meta)?)
}

/// Loads a dataset from a long CSV, a per-curve directory or a JSON bundle,
/// attaching labels from `labels` when given.
pub fn load_dataset(path: &Path, labels: Option<&Path>) -> Result<Dataset> {
    let mut dataset = if path.is_dir() {
        let curves = read_curve_dir(path)?;
        Dataset::new(curves, None, DatasetMeta { sources: vec![path.display().to_string()], ..Default::default() })?
    } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        load_dataset_json(path)?
    } else {
        let curves = read_long_csv(path)?;
        Dataset::new(curves, None, DatasetMeta { sources: vec![path.display().to_string()], ..Default::default() })?
    };
    if let Some(lp) = labels {
        let aligned = attach_labels(&dataset.curves, &read_labels(lp)?, lp)?;
        dataset.meta.sources.push(lp.display().to_string());
        dataset = Dataset::new(dataset.curves, Some(aligned), dataset.meta)?;
    }
    Ok(dataset)
}
