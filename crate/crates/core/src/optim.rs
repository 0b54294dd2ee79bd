//! Quasi-Newton minimisation with finite-difference derivatives.
//!
//! The warp log-likelihood goes through a numerical warp inverse, so
//! derivatives are taken by central differences throughout.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iters: usize,
    /// Stop once the gradient norm drops below this.
    pub grad_tol: f64,
    /// Longest step the line search will try.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iters: 200, grad_tol: 1e-8, max_step: 2.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

fn fd_step(x: f64) -> f64 {
    6e-6 * x.abs().max(1.0)
}

/// Central-difference gradient.
pub fn gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = fd_step(x[i]);
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Hessian, symmetrised.
pub fn hessian(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut out = DMatrix::zeros(n, n);
    let f0 = f(x);
    let steps: Vec<f64> = x.iter().map(|&v| 1e-4 * v.abs().max(1.0)).collect();
    let mut p = x.to_vec();
    for i in 0..n {
        let hi = steps[i];
        p[i] = x[i] + hi;
        let up = f(&p);
        p[i] = x[i] - hi;
        let down = f(&p);
        p[i] = x[i];
        out[(i, i)] = (up - 2.0 * f0 + down) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let mut eval = |si: f64, sj: f64| {
                p[i] = x[i] + si * hi;
                p[j] = x[j] + sj * hj;
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * hi * hj);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// BFGS with backtracking Armijo line search. Non-finite objective values
/// are treated as infeasible and backtracked away from.
pub fn minimize(f: impl Fn(&[f64]) -> f64, start: &[f64], opts: &BfgsOptions) -> Minimum {
    let n = start.len();
    let mut x = start.to_vec();
    let mut fx = f(&x);
    if n == 0 {
        return Minimum { x, value: fx, grad_norm: 0.0, iterations: 0 };
    }
    let mut g = gradient(&f, &x);
    let mut inv_h = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    while iterations < opts.max_iters {
        if norm(&g) < opts.grad_tol {
            break;
        }
        iterations += 1;
        let gv = DVector::from_column_slice(&g);
        let mut dir = -(&inv_h * &gv);
        let mut slope = dir.dot(&gv);
        if slope >= 0.0 {
            // lost positive definiteness: restart from steepest descent
            inv_h = DMatrix::identity(n, n);
            dir = -gv.clone();
            slope = dir.dot(&gv);
        }
        let len = dir.norm();
        if len > opts.max_step {
            dir *= opts.max_step / len;
            slope *= opts.max_step / len;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + alpha * d).collect();
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, f_next)) = accepted else {
            break;
        };
        let g_next = gradient(&f, &next);
        let s = DVector::from_iterator(n, next.iter().zip(&x).map(|(a, b)| a - b));
        let y = DVector::from_iterator(n, g_next.iter().zip(&g).map(|(a, b)| a - b));
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if iterations == 1 {
                // scale the initial inverse Hessian to the observed curvature
                inv_h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &inv_h * &y;
            let yhy = y.dot(&hy);
            inv_h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        let stalled = (fx - f_next).abs() <= 1e-15 * fx.abs().max(1.0);
        x = next;
        fx = f_next;
        g = g_next;
        if stalled && norm(&g) < 1e3 * opts.grad_tol {
            break;
        }
    }
    let grad_norm = norm(&g);
    Minimum { x, value: fx, grad_norm, iterations }
}

/// Gradient norm of `f` at `x` with a five-point stencil; used to audit
/// stationarity independently of the optimiser's own differences.
pub fn gradient_five_point(f: &impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    let mut out = vec![0.0; x.len()];
    for i in 0..x.len() {
        let mut at = |s: f64| {
            p[i] = x[i] + s * h;
            let v = f(&p);
            p[i] = x[i];
            v
        };
        out[i] = (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(f, &[-1.2, 1.0], &BfgsOptions { max_iters: 500, ..Default::default() });
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m);
    }

    #[test]
    fn quadratic_hessian() {
        let f = |x: &[f64]| 2.0 * x[0] * x[0] + x[0] * x[1] + 3.0 * x[1] * x[1];
        let h = hessian(&f, &[0.3, -0.2]);
        assert!((h[(0, 0)] - 4.0).abs() < 1e-6);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-6);
        assert!((h[(1, 1)] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        let f = |x: &[f64]| if x[0] > 1.5 { f64::NAN } else { (x[0] - 1.0).powi(2) };
        let m = minimize(f, &[0.0], &BfgsOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-6);
    }
}
