//! Weighted orthogonal Procrustes problem `min 1/2 ||A X C - B||_F^2`.
//!
//! The manifold is `St(m, n)`: `X` is `m x n`, `A = P S R^T` is `m x m` and
//! `C = Q Lambda Q^T` is `n x n`. `B` is either `A Q* C` for a random feasible
//! `Q*` (so the optimum is zero) or has entries uniform on `[0, 1]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dense::{householder, random_orthonormal, Rng};
use crate::error::{Error, Result};
use crate::manifold::StiefelPoint;
use crate::objective::Objective;
use crate::scalar::Real;

/// How the diagonal `S` of `A = P S R^T` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WoppType {
    /// Normal(11, 1) truncated to `[10, 12]`; well conditioned.
    #[serde(alias = "p1", alias = "1")]
    P1,
    /// `S_ii = i + 2 r_i`.
    #[serde(alias = "p2", alias = "2")]
    P2,
    /// `S_ii = 1 + 99 (i - 1) / (m + 1) + 2 r_i`.
    #[serde(alias = "p3", alias = "3")]
    P3,
}

impl std::str::FromStr for WoppType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "p1" => Ok(Self::P1),
            "2" | "p2" => Ok(Self::P2),
            "3" | "p3" => Ok(Self::P3),
            other => Err(Error::InvalidParameter(format!("unknown WOPP type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WoppInstance<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    /// Diagonal of `S`, kept for conditioning diagnostics.
    pub s: DVector<T>,
    pub known_solution: Option<StiefelPoint<T>>,
    pub ptype: WoppType,
    pub seed: Option<u64>,
}

fn random_orthogonal<T: Real>(n: usize, rng: &mut Rng) -> Result<DMatrix<T>> {
    random_orthonormal(n, n, rng)
}

fn scaling_diagonal(m: usize, ptype: WoppType, rng: &mut Rng) -> Vec<f64> {
    (1..=m)
        .map(|i| match ptype {
            WoppType::P1 => loop {
                let z = 11.0 + rng.gaussian();
                if (10.0..=12.0).contains(&z) {
                    break z;
                }
            },
            WoppType::P2 => i as f64 + 2.0 * rng.uniform(),
            WoppType::P3 => {
                1.0 + 99.0 * (i as f64 - 1.0) / (m as f64 + 1.0) + 2.0 * rng.uniform()
            }
        })
        .collect()
}

impl<T: Real> WoppInstance<T> {
    /// Draws an instance from `rng`. The stream is consumed in the order
    /// `P, R, S, Q, Lambda` and then `Q*` or `B`.
    pub fn generate(m: usize, n: usize, ptype: WoppType, with_known_solution: bool, rng: &mut Rng) -> Result<Self> {
        if n == 0 || m < n {
            return Err(Error::InvalidDimensions(format!(
                "WOPP needs m >= n >= 1, got m={m}, n={n}"
            )));
        }
        let p_orth = random_orthogonal::<T>(m, rng)?;
        let r_orth = random_orthogonal::<T>(m, rng)?;
        let s = DVector::from_iterator(m, scaling_diagonal(m, ptype, rng).into_iter().map(T::lit));
        let q = householder(&rng.gaussian_vector::<T>(n))?;
        let lambda = DVector::from_iterator(n, (0..n).map(|_| T::lit(rng.uniform_in(0.5, 2.0))));

        let a = &p_orth * DMatrix::from_diagonal(&s) * r_orth.transpose();
        let c = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
        let (b, known_solution) = if with_known_solution {
            let qstar = StiefelPoint::new(random_orthonormal::<T>(m, n, rng)?)?;
            (&a * qstar.matrix() * &c, Some(qstar))
        } else {
            (rng.uniform_matrix::<T>(m, n, 0.0, 1.0), None)
        };
        Ok(Self {
            a,
            b,
            c,
            s,
            known_solution,
            ptype,
            seed: Some(rng.seed()),
        })
    }

    pub fn rows(&self) -> usize {
        self.a.ncols()
    }

    pub fn cols(&self) -> usize {
        self.c.nrows()
    }

    /// `max S_ii / min S_ii`, the condition number of `A`.
    pub fn condition_number(&self) -> T {
        self.s.max() / self.s.min()
    }

    fn residual(&self, x: &DMatrix<T>) -> DMatrix<T> {
        &self.a * x * &self.c - &self.b
    }

    /// `(1/2 ||A X C - B||^2, A^T (A X C - B) C^T)`.
    pub fn eval(&self, x: &DMatrix<T>) -> Result<(T, DMatrix<T>)> {
        if x.shape() != (self.rows(), self.cols()) {
            return Err(Error::ShapeMismatch {
                op: "wopp_eval",
                left: (self.rows(), self.cols()),
                right: x.shape(),
            });
        }
        Ok(self.value_and_gradient(x))
    }
}

pub fn wopp_generate<T: Real>(
    m: usize,
    n: usize,
    ptype: WoppType,
    seed: u64,
    with_known_solution: bool,
) -> Result<WoppInstance<T>> {
    WoppInstance::generate(m, n, ptype, with_known_solution, &mut Rng::new(seed))
}

impl<T: Real> Objective<T> for WoppInstance<T> {
    fn dims(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn name(&self) -> &str {
        "wopp"
    }

    fn value(&self, x: &DMatrix<T>) -> T {
        self.residual(x).norm_squared() * T::lit(0.5)
    }

    fn gradient(&self, x: &DMatrix<T>) -> DMatrix<T> {
        self.a.tr_mul(&self.residual(x)) * self.c.transpose()
    }

    fn value_and_gradient(&self, x: &DMatrix<T>) -> (T, DMatrix<T>) {
        let r = self.residual(x);
        let f = r.norm_squared() * T::lit(0.5);
        (f, self.a.tr_mul(&r) * self.c.transpose())
    }
}
