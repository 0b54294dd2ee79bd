use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use nalgebra::DMatrix;
use warpfit::io::{read_model, write_json, write_long_csv, write_model};
use warpfit_core::{demo_template, simulate, Curve, GridPolicy, LogisticModel, SimSpec, SubjectEffects, TemplateModel};

fn run(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_warpfit")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// `series -> [(x, y)]` from a plot CSV.
fn read_series(path: &Path) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["series", "x", "y"]);
    for rec in reader.records() {
        let rec = rec.unwrap();
        out.entry(rec[0].to_string()).or_default().push((rec[1].parse().unwrap(), rec[2].parse().unwrap()));
    }
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn identity_effects(curves: &[Curve], model: &TemplateModel) -> Vec<SubjectEffects> {
    curves
        .iter()
        .map(|c| SubjectEffects {
            id: c.id.clone(),
            theta_hat: model.theta0().as_slice().to_vec(),
            theta_cov: vec![vec![0.0; 3]; 3],
            tau_hat: model.tau0().to_vec(),
            z_hat: vec![0.0; model.p()],
            z_cov: vec![vec![0.0; model.p()]; model.p()],
            loglik_contrib: 0.0,
            flagged: false,
        })
        .collect()
}

#[test]
fn beta_recomposes_from_the_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let fit = dir.path().join("fit");
    write_model(&fit.join("model.json"), &demo_template(&[4.0, 1.0], 0.01, 0.1).unwrap()).unwrap();
    let logistic = LogisticModel { alpha: 0.3, b: vec![0.7, -1.3], d: vec![], tau_center: vec![], ridge: 0.0, iterations: 5, converged: true };
    let lpath = dir.path().join("logistic.json");
    write_json(&lpath, &logistic).unwrap();
    let out = dir.path().join("plots");
    run(&["plot", "--kind", "beta", "--fit", s(&fit), "--logistic", s(&lpath), "--out", s(&out)]);

    let model = read_model(&fit.join("model.json")).unwrap();
    let series = read_series(&out.join("beta.csv"));
    let beta = &series["beta"];
    assert_eq!(beta.len(), 201);
    for &(t, v) in beta {
        let basis = model.basis().eval(t).unwrap();
        let c = model.components();
        let expected: f64 = (0..2).map(|k| logistic.b[k] * basis.iter().enumerate().map(|(l, b)| b * c[(l, k)]).sum::<f64>()).sum();
        assert!((v - expected).abs() < 1e-10, "t = {t}: {v} vs {expected}");
    }
    assert!(fs::read_to_string(out.join("beta.svg")).unwrap().contains("<polyline"));
}

#[test]
fn zero_component_gives_coincident_lines() {
    let dir = tempfile::tempdir().unwrap();
    let demo = demo_template(&[1.0], 0.01, 0.1).unwrap();
    let zero = TemplateModel::new(demo.basis().clone(), demo.tau0().to_vec(), demo.mean().clone(), DMatrix::zeros(demo.q(), 1), vec![2.0], 0.01, demo.warp_cov().clone())
        .unwrap();
    write_model(&dir.path().join("model.json"), &zero).unwrap();
    run(&["plot", "--kind", "components", "--fit", s(dir.path()), "--out", s(dir.path())]);
    let series = read_series(&dir.path().join("components.csv"));
    assert_eq!(series.len(), 3);
    let mean = &series["mean"];
    assert_eq!(&series["mean+pc1"], mean);
    assert_eq!(&series["mean-pc1"], mean);
}

#[test]
fn component_band_is_two_standard_deviations() {
    let dir = tempfile::tempdir().unwrap();
    let model = demo_template(&[4.0, 1.0], 0.01, 0.1).unwrap();
    write_model(&dir.path().join("model.json"), &model).unwrap();
    run(&["plot", "--kind", "components", "--fit", s(dir.path()), "--out", s(dir.path())]);
    let series = read_series(&dir.path().join("components.csv"));
    let model = read_model(&dir.path().join("model.json")).unwrap();
    for (k, sd) in [(0usize, 2.0), (1, 1.0)] {
        for (&(t, up), &(_, mid)) in series[&format!("mean+pc{}", k + 1)].iter().zip(&series["mean"]) {
            assert!((up - mid - 2.0 * sd * model.component_at(k, t).unwrap()).abs() < 1e-10);
        }
    }
}

#[test]
fn identity_warps_leave_curves_in_place() {
    let dir = tempfile::tempdir().unwrap();
    let model = demo_template(&[4.0, 1.0], 0.01, 0.1).unwrap();
    let sim = simulate(&SimSpec { model: model.clone(), n: 5, grid: GridPolicy::Incomplete { m: 12, min_fraction: 0.6 }, labels: None, seed: 8 }).unwrap();
    let data = dir.path().join("data.csv");
    write_long_csv(&data, &sim.dataset.curves).unwrap();
    let fit = dir.path().join("fit");
    write_model(&fit.join("model.json"), &model).unwrap();
    write_json(&fit.join("effects.json"), &identity_effects(&sim.dataset.curves, &model)).unwrap();
    let out = dir.path().join("plots");
    run(&["plot", "--kind", "curves", "--data", s(&data), "--out", s(&out)]);
    run(&["plot", "--kind", "registered", "--data", s(&data), "--fit", s(&fit), "--out", s(&out)]);
    run(&["plot", "--kind", "warps", "--fit", s(&fit), "--out", s(&out)]);
    let raw = read_series(&out.join("curves.csv"));
    let reg = read_series(&out.join("registered.csv"));
    assert_eq!(raw.keys().collect::<Vec<_>>(), reg.keys().collect::<Vec<_>>());
    for (id, pts) in &raw {
        for (a, b) in pts.iter().zip(&reg[id]) {
            assert!((a.0 - b.0).abs() < 1e-9 && a.1 == b.1, "{id}: {a:?} vs {b:?}");
        }
    }
    for pts in read_series(&out.join("warps.csv")).values() {
        assert!(pts.iter().all(|(t, h)| (t - h).abs() < 1e-12));
    }
}
