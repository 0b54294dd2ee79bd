//! Gaussian quadrature rules via the Golub–Welsch eigenvalue method.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn golub_welsch(n: usize, off_diag: impl Fn(usize) -> f64, mu0: f64) -> Rule {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = off_diag(k);
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetric rules: pin the centre node and mirror the rest
    let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Gauss–Legendre rule on [-1, 1]; exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Rule {
    golub_welsch(
        n,
        |k| {
            let k = k as f64;
            k / libm::sqrt(4.0 * k * k - 1.0)
        },
        2.0,
    )
}

/// Gauss–Hermite rule for the weight `exp(-x²)` on the real line.
pub fn gauss_hermite(n: usize) -> Rule {
    golub_welsch(n, |k| libm::sqrt(k as f64 / 2.0), libm::sqrt(core::f64::consts::PI))
}

/// Tensor product of a one-dimensional rule in `dim` dimensions.
///
/// Nodes are returned row-major: the last coordinate varies fastest.
pub fn tensor_product(rule: &Rule, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = rule.nodes.len();
    let total = n.pow(dim as u32);
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        nodes.push(idx.iter().map(|&i| rule.nodes[i]).collect());
        weights.push(idx.iter().map(|&i| rule.weights[i]).product());
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
    (nodes, weights)
}
