use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use warpfit::io::{read_long_csv, read_model, read_trace_csv, write_labels, write_long_csv};
use warpfit_core::{demo_template, Curve};

fn warpfit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warpfit")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = warpfit(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_spec(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("spec.json");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn simulate_minimal_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), r#"{"n": 5, "m": 10, "seed": 1}"#);
    let out = dir.path().join("sim");
    ok(&["simulate", "--spec", p(&spec), "--out", p(&out)]);
    let curves = read_long_csv(&out.join("dataset.csv")).unwrap();
    assert_eq!(curves.len(), 5);
    assert_eq!(curves.iter().map(Curve::len).sum::<usize>(), 50);
    for name in ["dataset.json", "truth.json", "manifest.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    assert!(!out.join("labels.csv").exists());
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        r#"{"n": 6, "m": 12, "grid": "incomplete", "labels": {"alpha": 0.2, "b": [1.0, -0.5], "d": [0.0, 0.1, 0.0]}}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["simulate", "--spec", p(&spec), "--seed", "11", "--out", p(&a)]);
    ok(&["simulate", "--spec", p(&spec), "--seed", "11", "--out", p(&b)]);
    for name in ["dataset.csv", "labels.csv", "dataset.json", "truth.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let c = dir.path().join("c");
    ok(&["simulate", "--spec", p(&spec), "--seed", "12", "--out", p(&c)]);
    assert_ne!(fs::read(a.join("dataset.csv")).unwrap(), fs::read(c.join("dataset.csv")).unwrap());
}

#[test]
fn simulate_without_randomness_repeats_one_curve() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), r#"{"n": 4, "m": 9, "template": {"kind": "demo", "variances": [0, 0], "noise_var": 0, "warp_var": 0}}"#);
    ok(&["simulate", "--spec", p(&spec), "--out", p(dir.path())]);
    let curves = read_long_csv(&dir.path().join("dataset.csv")).unwrap();
    for c in &curves[1..] {
        assert_eq!(c.grid, curves[0].grid);
        assert_eq!(c.values, curves[0].values);
    }
}

#[test]
fn simulate_reports_schema_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), r#"{"n": 4, "m": 9, "template": {"kind": "demo", "noise_var": "big"}}"#);
    let out = warpfit(&["simulate", "--spec", p(&spec), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("template.noise_var"), "{err}");

    let spec = write_spec(dir.path(), r#"{"n": 4, "m": 9, "colour": "red"}"#);
    let out = warpfit(&["simulate", "--spec", p(&spec), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn fit_mean_only_model() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), r#"{"n": 8, "m": 15, "seed": 2}"#);
    let sim = dir.path().join("sim");
    ok(&["simulate", "--spec", p(&spec), "--out", p(&sim)]);
    let fit = dir.path().join("fit");
    ok(&["fit", "--data", p(&sim.join("dataset.csv")), "--p", "0", "--max-iters", "6", "--quad", "3", "--out", p(&fit)]);
    let model = read_model(&fit.join("model.json")).unwrap();
    assert_eq!(model.p(), 0);
    assert_eq!(model.tau0(), &[-60.0, -40.0, -20.0]);
    assert_eq!((model.basis().degree(), model.basis().interior_knots().len()), (3, 10));
    let trace = read_trace_csv(&fit.join("trace.csv")).unwrap();
    assert!(trace.len() >= 2);
    for w in trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-5 * w[0].abs().max(1.0), "{w:?}");
    }
    let effects = fs::read_to_string(fit.join("effects.csv")).unwrap();
    assert!(effects.starts_with("id,theta_1,theta_2,theta_3,tau_1,tau_2,tau_3,loglik,flagged\n"));
    assert_eq!(effects.lines().count(), 9);
}

#[test]
fn fit_several_p_writes_one_directory_each() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), r#"{"n": 6, "m": 12, "seed": 3}"#);
    ok(&["simulate", "--spec", p(&spec), "--out", p(dir.path())]);
    let fit = dir.path().join("fits");
    ok(&["fit", "--data", p(&dir.path().join("dataset.json")), "--p", "0,1", "--max-iters", "3", "--quad", "3", "--out", p(&fit)]);
    for k in 0..2 {
        let sub = fit.join(format!("p{k}"));
        assert_eq!(read_model(&sub.join("model.json")).unwrap().p(), k);
        assert!(sub.join("manifest.json").exists());
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(fit.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fit");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), r#"{"n": 5, "m": 12, "seed": 4}"#);
    ok(&["simulate", "--spec", p(&spec), "--out", p(dir.path())]);
    let config = dir.path().join("c.toml");
    fs::write(&config, "seed = 9\n[fit]\np = 1\nmax_em_iters = 2\nquad_points_per_dim = 3\n").unwrap();
    let data = dir.path().join("dataset.csv");
    let a = dir.path().join("a");
    ok(&["fit", "--data", p(&data), "--config", p(&config), "--out", p(&a)]);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["fit"]["max_em_iters"], 2);
    assert_eq!(read_model(&a.join("model.json")).unwrap().p(), 1);

    let b = dir.path().join("b");
    ok(&["fit", "--data", p(&data), "--config", p(&config), "--p", "0", "--seed", "5", "--out", p(&b)]);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(read_model(&b.join("model.json")).unwrap().p(), 0);

    fs::write(&config, "[fit]\nmax_em_iterations = 2\n").unwrap();
    let out = warpfit(&["fit", "--data", p(&data), "--config", p(&config), "--out", p(&b)]);
    assert_eq!(out.status.code(), Some(2));
}

/// Curves `μ + z ξ₁` with well-separated scores, labelled by the sign of z.
fn separable_dataset(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let template = demo_template(&[4.0], 0.0, 0.0).unwrap();
    let grid: Vec<f64> = (0..25).map(|j| -80.0 + 80.0 * j as f64 / 24.0).collect();
    let mut curves = Vec::new();
    let mut labels = Vec::new();
    for i in 0..14 {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let z = sign * (2.0 + 0.15 * i as f64);
        let values = grid
            .iter()
            .enumerate()
            .map(|(j, &t)| template.mean_at(t).unwrap() + z * template.component_at(0, t).unwrap() + 0.01 * ((i * 31 + j * 17) % 7) as f64 - 0.03)
            .collect();
        curves.push(Curve::new(format!("c{i:02}"), grid.clone(), values).unwrap());
        labels.push((sign > 0.0) as u8);
    }
    let data = dir.join("sep.csv");
    write_long_csv(&data, &curves).unwrap();
    let lab = dir.join("sep_labels.csv");
    let ids: Vec<&str> = curves.iter().map(|c| c.id.as_str()).collect();
    write_labels(&lab, &ids, &labels).unwrap();
    (data, lab)
}

#[test]
fn cv_on_separable_data_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let (data, labels) = separable_dataset(dir.path());
    let fits = dir.path().join("fits");
    ok(&["fit", "--data", p(&data), "--p", "1", "--warp-var", "0.01", "--max-iters", "15", "--quad", "3", "--out", p(&fits.join("p1"))]);
    let cv = dir.path().join("cv");
    let out = ok(&["cv", "--data", p(&data), "--labels", p(&labels), "--models", p(&fits), "--p", "1", "--quad", "3", "--out", p(&cv)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("without tau"));
    let table = fs::read_to_string(cv.join("cv_table.csv")).unwrap();
    assert_eq!(table, "p,without_tau,with_tau\n1,0.0,0.0\n");
    assert!(cv.join("logistic_p1_z.json").exists());
    assert!(cv.join("logistic_p1_z+tau.json").exists());

    let kfold = dir.path().join("cv5");
    ok(&["cv", "--data", p(&data), "--labels", p(&labels), "--models", p(&fits), "--p", "1", "--quad", "3", "--folds", "5", "--out", p(&kfold)]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(kfold.join("cv.json")).unwrap()).unwrap();
    let mut folds: Vec<u64> = report["fold_of"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(folds.len(), 14);
    folds.sort_unstable();
    folds.dedup();
    assert_eq!(folds, vec![0, 1, 2, 3, 4]);
    for row in report["rows"].as_array().unwrap() {
        assert_eq!(row["evaluated"], 14);
        let rate = row["cmr"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&rate));
    }
}

#[test]
fn cv_without_models_gives_a_hint() {
    let dir = tempfile::tempdir().unwrap();
    let (data, labels) = separable_dataset(dir.path());
    let out = warpfit(&["cv", "--data", p(&data), "--labels", p(&labels), "--p", "1", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warpfit fit"));
    let out = warpfit(&["cv", "--data", p(&data), "--labels", p(&labels), "--models", p(dir.path()), "--p", "2", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p = 2"));
}

#[test]
fn register_keeps_values_and_moves_times() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), r#"{"n": 6, "m": 15, "seed": 5}"#);
    ok(&["simulate", "--spec", p(&spec), "--out", p(dir.path())]);
    let data = dir.path().join("dataset.csv");
    let fit = dir.path().join("fit");
    ok(&["fit", "--data", p(&data), "--p", "1", "--max-iters", "4", "--quad", "3", "--out", p(&fit)]);
    let reg = dir.path().join("reg");
    ok(&["register", "--data", p(&data), "--fit", p(&fit), "--out", p(&reg)]);
    let raw = read_long_csv(&data).unwrap();
    let aligned = read_long_csv(&reg.join("registered.csv")).unwrap();
    assert_eq!(raw.len(), aligned.len());
    for (a, b) in raw.iter().zip(&aligned) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.values, b.values);
        assert_eq!(a.grid.first(), b.grid.first());
        assert_eq!(a.grid.last(), b.grid.last());
    }
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(warpfit(&["fit", "--data", p(&dir.path().join("missing.csv"))]).status.code(), Some(2));
    assert_eq!(warpfit(&["plot", "--kind", "histogram"]).status.code(), Some(2));
    assert_eq!(warpfit(&["plot", "--kind", "components", "--out", p(dir.path())]).status.code(), Some(2));
}
