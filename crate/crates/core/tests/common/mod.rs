#![allow(dead_code)]

use stiefel_opt::problems::Problem;
use stiefel_opt::{
    gradient_split, mixed_direction, random_orthonormal, FnObjective, IterRecord64, Matrix64, MixParams64, Rng,
    StiefelPoint64,
};

pub fn point(rng: &mut Rng, n: usize, p: usize) -> StiefelPoint64 {
    StiefelPoint64::new(random_orthonormal(n, p, rng).unwrap()).unwrap()
}

/// Tangent direction built from a Gaussian "gradient".
pub fn tangent(rng: &mut Rng, x: &StiefelPoint64, mix: &MixParams64) -> (Matrix64, Matrix64) {
    let (n, p) = x.shape();
    let g = rng.gaussian_matrix::<f64>(n, p);
    let split = gradient_split(x, &g).unwrap();
    let h = mixed_direction(&split, mix);
    (g, h)
}

/// `F(X) = <G, X>`, whose Euclidean gradient is `G` everywhere.
pub fn linear(g: Matrix64) -> FnObjective<impl Fn(&Matrix64) -> f64, impl Fn(&Matrix64) -> Matrix64> {
    let g2 = g.clone();
    FnObjective::new(g.shape(), "linear", move |x: &Matrix64| g.dot(x), move |_: &Matrix64| g2.clone())
}

pub fn rel_err(a: &Matrix64, b: &Matrix64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// `X (X^T X)^{-1/2}` through a symmetric eigendecomposition.
pub fn polar_by_eig(x: &Matrix64) -> Matrix64 {
    let eig = (x.transpose() * x).symmetric_eigen();
    let inv_sqrt = eig.eigenvalues.map(|v| 1.0 / v.sqrt());
    let m = &eig.eigenvectors * Matrix64::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    x * m
}

/// Checks that `C_k` never increases and never drops below the best `F` seen.
pub fn ck_violation(history: &[IterRecord64]) -> Option<String> {
    let mut fmin = f64::INFINITY;
    for (i, rec) in history.iter().enumerate() {
        fmin = fmin.min(rec.fval);
        let scale = 1e-12 * (1.0 + rec.ck.abs());
        if rec.ck < fmin - scale {
            return Some(format!("k={} C={:e} below min F={:e}", rec.k, rec.ck, fmin));
        }
        if i > 0 && rec.ck > history[i - 1].ck + scale {
            return Some(format!("k={} C rose from {:e} to {:e}", rec.k, history[i - 1].ck, rec.ck));
        }
    }
    None
}

pub fn max_feasibility(history: &[IterRecord64]) -> f64 {
    history.iter().map(|r| r.feasibility).fold(0.0, f64::max)
}

pub fn kkt(problem: &Problem<f64>, x: &StiefelPoint64) -> f64 {
    use stiefel_opt::{kkt_residual, Objective};
    kkt_residual(x, &problem.gradient(x.matrix()))
}
