use nalgebra::{DMatrix, DVector};
use warpfit_core::model::design_matrix;
use warpfit_core::{
    demo_template, downsample, simulate, truncate, Curve, Dataset, DatasetMeta, GridPolicy, LabelMechanism, SimSpec, TemplateModel,
};

fn equi(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m).map(|j| lo + (hi - lo) * j as f64 / (m - 1) as f64).collect()
}

fn dataset(curves: Vec<Curve>) -> Dataset {
    Dataset::new(curves, None, DatasetMeta::default()).unwrap()
}

#[test]
fn no_randomness_gives_the_mean() {
    let demo = demo_template(&[2.0], 0.01, 0.1).unwrap();
    let r = demo.r();
    let quiet = TemplateModel::new(
        demo.basis().clone(),
        demo.tau0().to_vec(),
        demo.mean().clone(),
        demo.components().clone(),
        vec![0.0],
        0.0,
        DMatrix::zeros(r, r),
    )
    .unwrap();
    let sim = simulate(&SimSpec { model: quiet.clone(), n: 4, grid: GridPolicy::Incomplete { m: 9, min_fraction: 0.5 }, labels: None, seed: 1 })
        .unwrap();
    for c in &sim.dataset.curves {
        for (&t, &y) in c.grid.iter().zip(&c.values) {
            assert!((y - quiet.mean_at(t).unwrap()).abs() < 1e-12);
        }
        assert_eq!(*c.grid.last().unwrap(), 0.0);
        assert!(c.grid[0] <= -40.0);
    }
}

#[test]
fn score_moments_match_variances() {
    let model = demo_template(&[4.0, 1.0], 0.01, 0.1).unwrap();
    let n = 10000;
    let sim = simulate(&SimSpec { model, n, grid: GridPolicy::Common { m: 2 }, labels: None, seed: 5 }).unwrap();
    for (k, lam) in [4.0, 1.0].into_iter().enumerate() {
        let z: Vec<f64> = sim.truth.iter().map(|t| t.z[k]).collect();
        let mean = z.iter().sum::<f64>() / n as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 * (lam / n as f64).sqrt());
        // variance of a sample variance of normals is 2λ²/(n−1)
        assert!((var - lam).abs() < 3.0 * (2.0 * lam * lam / (n - 1) as f64).sqrt());
    }
    let th: Vec<f64> = sim.truth.iter().map(|t| t.theta[0]).collect();
    let var = th.iter().map(|v| v * v).sum::<f64>() / n as f64;
    assert!((var - 0.1).abs() < 3.0 * (2.0 * 0.01 / n as f64).sqrt());
}

#[test]
fn label_prevalence_matches_mechanism() {
    let model = demo_template(&[4.0, 1.0], 0.01, 0.1).unwrap();
    let mech = LabelMechanism { alpha: 0.3, b: vec![-0.5, 0.8], d: vec![0.05, 0.0, -0.02] };
    let n = 10000;
    let sim = simulate(&SimSpec { model, n, grid: GridPolicy::Common { m: 2 }, labels: Some(mech), seed: 6 }).unwrap();
    let labels = sim.dataset.labels.as_ref().unwrap();
    let observed = labels.iter().map(|&y| y as f64).sum::<f64>() / n as f64;
    let probs: Vec<f64> = sim.truth.iter().map(|t| t.prob.unwrap()).collect();
    let expected = probs.iter().sum::<f64>() / n as f64;
    let se = (probs.iter().map(|p| p * (1.0 - p)).sum::<f64>()).sqrt() / n as f64;
    assert!((observed - expected).abs() < 3.0 * se, "{observed} vs {expected}");
}

#[test]
fn simulation_is_reproducible_and_consistent() {
    let model = demo_template(&[4.0, 1.0], 0.0, 0.1).unwrap();
    let spec = SimSpec { model: model.clone(), n: 5, grid: GridPolicy::Common { m: 12 }, labels: None, seed: 17 };
    let a = simulate(&spec).unwrap();
    let b = simulate(&spec).unwrap();
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.truth, b.truth);
    let other = simulate(&SimSpec { seed: 18, ..spec }).unwrap();
    assert_ne!(a.dataset.curves[0].values, other.dataset.curves[0].values);
    // noise-free values equal Φ(θ)(a + Cz) for the recorded effects
    for (c, t) in a.dataset.curves.iter().zip(&a.truth) {
        let phi = design_matrix(c, &warpfit_core::ThetaVector::new(t.theta.clone()).unwrap(), &model).unwrap();
        let fitted = phi * (model.mean() + model.components() * DVector::from_column_slice(&t.z));
        for (y, f) in c.values.iter().zip(fitted.iter()) {
            assert!((y - f).abs() < 1e-12);
        }
    }
}

#[test]
fn truncation_examples() {
    let inside = Curve::new("in", equi(-70.0, 0.0, 8), vec![1.0; 8]).unwrap();
    let long = Curve::new("long", equi(-120.0, 0.0, 25), (0..25).map(|i| i as f64).collect()).unwrap();
    let gone = Curve::new("gone", vec![-110.0, -95.0], vec![0.0, 1.0]).unwrap();
    let ds = dataset(vec![inside.clone(), long, gone]);
    let cut = truncate(&ds, -80.0);
    assert_eq!(cut.curves.len(), 2);
    assert_eq!(cut.curves[0], inside);
    assert!(cut.curves[1].grid.iter().all(|&t| t >= -80.0));
    assert_eq!(cut.curves[1].grid[0], -80.0);
    assert_eq!(cut.curves[1].values[0], 8.0);
    assert_eq!(cut.meta.removed, vec!["gone".to_string()]);
    assert_eq!(cut.meta.truncated_at, Some(-80.0));
    assert_eq!(truncate(&cut, -80.0).curves, cut.curves);
    assert_eq!(truncate(&ds, -500.0).curves, ds.curves);
}

#[test]
fn downsampling_examples() {
    let dense = Curve::new("d", equi(-80.0, 0.0, 100), (0..100).map(|i| (i as f64).sin()).collect()).unwrap();
    let exact = Curve::new("e", equi(-80.0, 0.0, 30), vec![0.5; 30]).unwrap();
    let short = Curve::new("s", equi(-50.0, 0.0, 12), vec![0.2; 12]).unwrap();
    let ds = dataset(vec![dense.clone(), exact.clone(), short.clone()]);
    let out = downsample(&ds, 30).unwrap();
    assert_eq!(out.curves[1], exact);
    assert_eq!(out.curves[2], short);
    let thin = &out.curves[0];
    assert_eq!(thin.len(), 30);
    assert_eq!(thin.grid[0], -80.0);
    assert_eq!(thin.grid[29], 0.0);
    let gaps: Vec<f64> = thin.grid.windows(2).map(|w| w[1] - w[0]).collect();
    let ideal = 80.0 / 29.0;
    let spacing = 80.0 / 99.0;
    assert!(gaps.iter().all(|g| (g - ideal).abs() <= spacing + 1e-9));
    for (t, y) in thin.grid.iter().zip(&thin.values) {
        let j = dense.grid.iter().position(|g| g == t).unwrap();
        assert_eq!(dense.values[j], *y);
    }
    assert_eq!(out.meta.downsample_target, Some(30));
    assert!(downsample(&ds, 1).is_err());
}
