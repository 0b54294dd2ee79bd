#![allow(clippy::needless_range_loop)]
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use warpfit_core::discriminate::{
    cross_validate, cross_validate_rows, fit_logistic, fold_assignment, predict_prob, CvOptions, DiscriminateError, FeatureRow, FeatureSet,
    Folds,
};
use warpfit_core::Sequential;

fn row(id: usize, z: &[f64], tau: Option<&[f64]>, label: u8) -> FeatureRow {
    FeatureRow { id: format!("r{id}"), z: z.to_vec(), tau: tau.map(|t| t.to_vec()), label }
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            for j in col..n {
                a[i][j] -= f * a[col][j];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Plain Newton–Raphson on raw (uncentred) features, 60 full steps.
fn newton_oracle(x: &[Vec<f64>], y: &[f64], ridge: f64) -> Vec<f64> {
    let d = x[0].len() + 1;
    let mut beta = vec![0.0; d];
    for _ in 0..60 {
        let mut g = vec![0.0; d];
        let mut h = vec![vec![0.0; d]; d];
        for (xi, &yi) in x.iter().zip(y) {
            let mut f = vec![1.0];
            f.extend_from_slice(xi);
            let eta: f64 = f.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-eta).exp());
            for j in 0..d {
                g[j] += (yi - p) * f[j];
                for k in 0..d {
                    h[j][k] += p * (1.0 - p) * f[j] * f[k];
                }
            }
        }
        for j in 1..d {
            g[j] -= ridge * beta[j];
            h[j][j] += ridge;
        }
        let step = solve(h, g);
        for j in 0..d {
            beta[j] += step[j];
        }
    }
    beta
}

fn fixtures() -> Vec<(Vec<FeatureRow>, bool, f64)> {
    let eight = vec![
        row(0, &[0.3, -1.2], Some(&[-61.0, -41.5, -19.0]), 1),
        row(1, &[-0.8, 0.4], Some(&[-58.2, -39.0, -22.4]), 0),
        row(2, &[1.1, 0.9], Some(&[-63.5, -43.1, -18.2]), 1),
        row(3, &[-0.2, -0.5], Some(&[-59.9, -38.7, -21.0]), 0),
        row(4, &[0.7, 1.6], Some(&[-60.4, -42.0, -20.5]), 0),
        row(5, &[-1.4, -0.3], Some(&[-57.6, -40.2, -23.3]), 1),
        row(6, &[0.05, 0.2], Some(&[-62.1, -40.9, -19.7]), 1),
        row(7, &[0.9, -0.9], Some(&[-61.3, -39.4, -20.9]), 0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut thirty = Vec::new();
    for i in 0..30 {
        let z = [rng.random_range(-2.0..2.0)];
        let tau = [rng.random_range(-65.0..-55.0), rng.random_range(-45.0..-35.0)];
        let p: f64 = 1.0 / (1.0 + (-(0.4_f64 + 1.2 * z[0] - 0.3 * (tau[0] + 60.0))).exp());
        thirty.push(row(i, &z, Some(&tau), (rng.random::<f64>() < p) as u8));
    }
    vec![(eight.clone(), false, 0.0), (eight, true, 0.5), (thirty, true, 1e-3)]
}

fn raw_features(rows: &[FeatureRow], include_tau: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x = rows
        .iter()
        .map(|r| {
            let mut v = r.z.clone();
            if include_tau {
                v.extend(r.tau.clone().unwrap());
            }
            v
        })
        .collect();
    (x, rows.iter().map(|r| r.label as f64).collect())
}

#[test]
fn matches_newton_oracle() {
    for (rows, include_tau, ridge) in fixtures() {
        let fit = fit_logistic(&rows, include_tau, ridge).unwrap();
        assert!(fit.converged);
        let (x, y) = raw_features(&rows, include_tau);
        let oracle = newton_oracle(&x, &y, ridge);
        let mut ours = vec![fit.raw_intercept()];
        ours.extend(&fit.b);
        ours.extend(&fit.d);
        assert_eq!(ours.len(), oracle.len());
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{ours:?} vs {oracle:?}");
        }
    }
}

#[test]
fn score_vanishes_at_the_fit() {
    for (rows, include_tau, ridge) in fixtures() {
        let fit = fit_logistic(&rows, include_tau, ridge).unwrap();
        let mut score = vec![0.0; 1 + fit.b.len() + fit.d.len()];
        for r in &rows {
            let p = predict_prob(&fit, r).unwrap();
            let mut f = vec![1.0];
            f.extend(&r.z);
            if include_tau {
                f.extend(r.tau.as_ref().unwrap().iter().zip(&fit.tau_center).map(|(t, c)| t - c));
            }
            for (s, v) in score.iter_mut().zip(&f) {
                *s += (r.label as f64 - p) * v;
            }
        }
        let coefs: Vec<f64> = fit.b.iter().chain(&fit.d).copied().collect();
        for (s, c) in score.iter_mut().skip(1).zip(&coefs) {
            *s -= ridge * c;
        }
        let norm = score.iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!(norm < 1e-8, "{norm}");
    }
}

#[test]
fn label_swap_negates_coefficients() {
    for (rows, include_tau, ridge) in fixtures() {
        let fit = fit_logistic(&rows, include_tau, ridge).unwrap();
        let swapped: Vec<FeatureRow> = rows.iter().map(|r| FeatureRow { label: 1 - r.label, ..r.clone() }).collect();
        let other = fit_logistic(&swapped, include_tau, ridge).unwrap();
        assert!((fit.alpha + other.alpha).abs() < 1e-9);
        for (a, b) in fit.b.iter().chain(&fit.d).zip(other.b.iter().chain(&other.d)) {
            assert!((a + b).abs() < 1e-9);
        }
        for r in &rows {
            assert!((predict_prob(&fit, r).unwrap() + predict_prob(&other, r).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn warp_translation_only_moves_the_intercept() {
    let (rows, _, ridge) = fixtures().remove(1);
    let fit = fit_logistic(&rows, true, ridge).unwrap();
    let shifted: Vec<FeatureRow> =
        rows.iter().map(|r| FeatureRow { tau: Some(r.tau.as_ref().unwrap().iter().map(|t| t + 7.5).collect()), ..r.clone() }).collect();
    let other = fit_logistic(&shifted, true, ridge).unwrap();
    for (a, b) in fit.b.iter().chain(&fit.d).zip(other.b.iter().chain(&other.d)) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!((fit.raw_intercept() - other.raw_intercept() - 7.5 * fit.d.iter().sum::<f64>()).abs() < 1e-8);
    for (r, s) in rows.iter().zip(&shifted) {
        assert!((predict_prob(&fit, r).unwrap() - predict_prob(&other, s).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn prediction_symmetry_and_monotonicity() {
    let (rows, _, ridge) = fixtures().remove(1);
    let mut fit = fit_logistic(&rows, true, ridge).unwrap();
    let r = &rows[0];
    let p = predict_prob(&fit, r).unwrap();
    let neg_row = FeatureRow {
        z: r.z.iter().map(|v| -v).collect(),
        tau: Some(r.tau.as_ref().unwrap().iter().zip(&fit.tau_center).map(|(t, c)| 2.0 * c - t).collect()),
        ..r.clone()
    };
    let mut neg = fit.clone();
    neg.b.iter_mut().chain(neg.d.iter_mut()).for_each(|v| *v = -*v);
    assert!((predict_prob(&neg, &neg_row).unwrap() - p).abs() < 1e-12);

    fit.b[0] = -fit.b[0].abs() - 0.1;
    let mut last = 1.0;
    for step in 0..20 {
        let mut moved = r.clone();
        moved.z[0] += step as f64 * 0.3;
        let q = predict_prob(&fit, &moved).unwrap();
        assert!(q < last);
        last = q;
    }
}

#[test]
fn separation_is_detected() {
    let rows: Vec<FeatureRow> = (0..10).map(|i| row(i, &[i as f64 - 4.5], None, (i >= 5) as u8)).collect();
    assert!(matches!(fit_logistic(&rows, false, 0.0), Err(DiscriminateError::Separation { .. })));
    let fit = fit_logistic(&rows, false, 1e-4).unwrap();
    assert!(fit.b[0] > 0.0 && fit.b[0].is_finite());
}

#[test]
fn contract_errors() {
    assert!(matches!(fit_logistic(&[row(0, &[1.0], None, 1)], false, 0.0), Err(DiscriminateError::TooFewRows(1))));
    let ragged = vec![row(0, &[1.0], None, 1), row(1, &[1.0, 2.0], None, 0)];
    assert!(fit_logistic(&ragged, false, 0.0).is_err());
    let no_tau = vec![row(0, &[1.0], None, 1), row(1, &[2.0], None, 0)];
    assert!(matches!(fit_logistic(&no_tau, true, 0.0), Err(DiscriminateError::MissingTau(_))));
    let bad = vec![row(0, &[1.0], None, 2), row(1, &[2.0], None, 0)];
    assert!(fit_logistic(&bad, false, 0.0).is_err());
}

#[test]
fn separable_features_are_never_misclassified() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows: Vec<FeatureRow> = (0..40)
        .map(|i| {
            let label = (i % 2) as u8;
            let centre = if label == 1 { 3.0 } else { -3.0 };
            row(i, &[centre + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], Some(&[-60.0 + rng.random_range(-1.0..1.0)]), label)
        })
        .collect();
    let report = cross_validate(&[(2, rows)], CvOptions { folds: Folds::LeaveOneOut, ridge: 1e-4 }, &Sequential).unwrap();
    for r in &report.rows {
        assert_eq!(r.cmr, 0.0);
        assert_eq!(r.evaluated, 40);
    }
}

#[test]
fn permuted_labels_give_chance_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let rows: Vec<FeatureRow> = (0..200)
        .map(|i| {
            let z = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let tau = [rng.random_range(-62.0..-58.0), rng.random_range(-42.0..-38.0), rng.random_range(-22.0..-18.0)];
            row(i, &z, Some(&tau), (i < 100) as u8)
        })
        .collect();
    let report = cross_validate(&[(2, rows)], CvOptions::default(), &Sequential).unwrap();
    for r in &report.rows {
        assert!((0.4..=0.6).contains(&r.cmr), "{} {}", r.features.name(), r.cmr);
    }
}

#[test]
fn fold_partitions() {
    let loo = fold_assignment(17, Folds::LeaveOneOut).unwrap();
    let mut seen = loo.clone();
    seen.sort_unstable();
    assert_eq!(seen, (0..17).collect::<Vec<_>>());

    let k = fold_assignment(17, Folds::KFold { k: 5, seed: 3 }).unwrap();
    assert_eq!(k, fold_assignment(17, Folds::KFold { k: 5, seed: 3 }).unwrap());
    let mut sizes = [0; 5];
    for &f in &k {
        sizes[f] += 1;
    }
    assert!(sizes.iter().all(|&s| s == 3 || s == 4));
    assert!(fold_assignment(3, Folds::KFold { k: 4, seed: 0 }).is_err());
}

#[test]
fn single_class_folds_are_flagged_without_ridge() {
    let z = [0.1, -0.5, 0.7, -0.8, -0.2, 0.4];
    let labels = [1, 1, 0, 0, 0, 0];
    let rows: Vec<FeatureRow> = (0..6).map(|i| row(i, &[z[i]], None, labels[i])).collect();
    let fold_of = vec![0, 0, 1, 1, 2, 2];
    let r = cross_validate_rows(&rows, 1, FeatureSet::Scores, &fold_of, 0.0, &Sequential).unwrap();
    assert_eq!(r.flagged_folds, vec![0]);
    assert_eq!(r.evaluated, 4);
    assert!(r.predictions[0].prob.is_none());
}
