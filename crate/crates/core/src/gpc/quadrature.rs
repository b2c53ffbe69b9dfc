use super::poly::Family;
use nalgebra::{DMatrix, SymmetricEigen};

/// A one-dimensional quadrature rule for a probability density.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `n`-point Gauss rule of `family`, weights summing to one.
///
/// Golub–Welsch start, one Newton polish per node, Christoffel weights,
/// then exact symmetrization about the origin.
pub fn gauss_rule(family: Family, n: usize) -> Rule1d {
    assert!(n >= 1);
    if n == 1 {
        return Rule1d {
            nodes: vec![0.0],
            weights: vec![1.0],
        };
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = family.recurrence(k);
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for x in nodes.iter_mut() {
        let (v, d) = family.eval_with_derivative(n, *x);
        if d[n] != 0.0 {
            *x -= v[n] / d[n];
        }
    }
    for i in 0..n / 2 {
        let a = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -a;
        nodes[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| 1.0 / family.eval_all(n - 1, x).iter().map(|v| v * v).sum::<f64>())
        .collect();
    for i in 0..n / 2 {
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Rule1d { nodes, weights }
}
