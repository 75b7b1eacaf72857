//! Independent reference computations shared by integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Weighted ridge regression with an unpenalised intercept, solved by SVD of
/// the augmented least-squares system
/// `[sqrt(w_i)·(1, x_i)] ; [0, sqrt(ridge)·I]` against `[sqrt(w_i)·y_i ; 0]`.
pub fn weighted_ridge_svd(
    design: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    ridge: f64,
) -> (f64, Vec<f64>) {
    let n = design.len();
    let p = design[0].len();
    let mut a = DMatrix::<f64>::zeros(n + p, p + 1);
    let mut b = DVector::<f64>::zeros(n + p);
    for i in 0..n {
        let s = weights[i].sqrt();
        a[(i, 0)] = s;
        for j in 0..p {
            a[(i, j + 1)] = s * design[i][j];
        }
        b[i] = s * targets[i];
    }
    for j in 0..p {
        a[(n + j, j + 1)] = ridge.sqrt();
    }
    let solution = a.svd(true, true).solve(&b, 1e-14).expect("svd solve");
    (solution[0], solution.iter().skip(1).copied().collect())
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Gaussian kernel `exp(-d²/width²)` on the standardised group deltas.
pub fn kernel(deltas: &[f64], scales: &[f64], width: f64) -> f64 {
    let d2: f64 = deltas
        .iter()
        .zip(scales)
        .filter(|(_, s)| **s > 0.0)
        .map(|(d, s)| (d / s).powi(2))
        .sum();
    (-d2 / (width * width)).exp()
}
