//! Small dense linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues in decreasing order.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut s = m.clone();
    symmetrize(&mut s);
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// `V f(D) Vᵀ` for a symmetric matrix.
pub fn sym_apply(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen_desc(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for j in 0..n {
        let fj = f(values[j]);
        for i in 0..n {
            scaled[(i, j)] *= fj;
        }
    }
    let mut out = scaled * vectors.transpose();
    symmetrize(&mut out);
    out
}

/// Symmetric square root of a positive semi-definite matrix; negative
/// eigenvalues from rounding are treated as zero.
pub fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    sym_apply(m, |v| libm::sqrt(v.max(0.0)))
}

/// Raises every eigenvalue below `floor` to `floor`.
pub fn floor_eigenvalues(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    sym_apply(m, |v| v.max(floor))
}

/// Solves `A x = b` for symmetric positive definite `A`. When the Cholesky
/// factorisation fails a ridge of `ridge × max(1, mean diagonal)` is added
/// and the second return value is `true`.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>, ridge: f64) -> Option<(DVector<f64>, bool)> {
    if let Some(chol) = a.clone().cholesky() {
        let x = chol.solve(b);
        if x.iter().all(|v| v.is_finite()) {
            return Some((x, false));
        }
    }
    let n = a.nrows();
    let scale = if n == 0 { 1.0 } else { (a.trace() / n as f64).abs().max(1.0) };
    let mut reg = a.clone();
    for i in 0..n {
        reg[(i, i)] += ridge * scale;
    }
    reg.cholesky().map(|c| (c.solve(b), true))
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + libm::log(values.iter().map(|v| libm::exp(v - top)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_roundtrip() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let s = sqrt_psd(&m);
        assert!((&s * &s - &m).norm() < 1e-12);
    }

    #[test]
    fn ridge_fallback_on_singular_system() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(alloc::vec![2.0, 2.0]);
        let (x, ridged) = solve_spd(&a, &b, 1e-10).unwrap();
        assert!(ridged);
        assert!((x[0] + x[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn eigen_order_and_floor() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -3.0]);
        let (v, _) = sym_eigen_desc(&m);
        assert_eq!(v, alloc::vec![1.0, -3.0]);
        let f = floor_eigenvalues(&m, 1e-8);
        assert!((f[(1, 1)] - 1e-8).abs() < 1e-20);
        assert!((log_sum_exp(&[0.0, 0.0]) - core::f64::consts::LN_2).abs() < 1e-15);
    }
}
