//! Sum of the `p` largest eigenvalues as `max Tr[X^T A X]`, solved in the
//! minimization form `f = -Tr[X^T A X]`, `G = -2 A X`.

use nalgebra::DMatrix;

use crate::dense::Rng;
use crate::error::{Error, Result};
use crate::manifold::StiefelPoint;
use crate::objective::Objective;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct EigInstance<T: Real> {
    pub a: DMatrix<T>,
    pub p: usize,
    /// The `p` largest eigenvalues of `a`, in decreasing order.
    pub oracle_eigs: Option<Vec<T>>,
    pub seed: Option<u64>,
}

/// Eigenvalues of a symmetric matrix, largest first, from a dense solver.
pub fn top_eigenvalues<T: Real>(a: &DMatrix<T>, p: usize) -> Vec<T> {
    let mut values: Vec<T> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    values.truncate(p);
    values
}

impl<T: Real> EigInstance<T> {
    pub fn new(a: DMatrix<T>, p: usize, with_oracle: bool) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidDimensions("eigenvalue problem needs a square matrix".into()));
        }
        if p == 0 || p > n {
            return Err(Error::InvalidDimensions(format!("need 1 <= p <= n, got p={p}, n={n}")));
        }
        if (&a - a.transpose()).norm() > T::default_epsilon() * T::lit(100.0) * a.norm() {
            return Err(Error::InvalidParameter("matrix is not symmetric".into()));
        }
        let oracle_eigs = with_oracle.then(|| top_eigenvalues(&a, p));
        Ok(Self {
            a,
            p,
            oracle_eigs,
            seed: None,
        })
    }

    /// `A = Abar^T Abar` with a standard Gaussian `Abar`.
    pub fn generate(n: usize, p: usize, with_oracle: bool, rng: &mut Rng) -> Result<Self> {
        let abar = rng.gaussian_matrix::<T>(n, n);
        let a = abar.tr_mul(&abar);
        let mut inst = Self::new(a, p, with_oracle)?;
        inst.seed = Some(rng.seed());
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn trace_form(&self, x: &DMatrix<T>) -> T {
        x.dot(&(&self.a * x))
    }

    pub fn eval(&self, x: &DMatrix<T>) -> Result<(T, DMatrix<T>)> {
        if x.shape() != (self.n(), self.p) {
            return Err(Error::ShapeMismatch {
                op: "eig_eval",
                left: (self.n(), self.p),
                right: x.shape(),
            });
        }
        Ok(self.value_and_gradient(x))
    }

    /// `|sum lambda_i - Tr[X^T A X]| / |Tr[X^T A X]|`.
    pub fn error(&self, x: &StiefelPoint<T>) -> Result<T> {
        let eigs = self.oracle_eigs.as_ref().ok_or(Error::MissingOracle)?;
        let reference = eigs.iter().fold(T::zero(), |acc, v| acc + *v);
        let trace = self.trace_form(x.matrix());
        Ok((reference - trace).abs() / trace.abs())
    }
}

pub fn eig_error<T: Real>(inst: &EigInstance<T>, x: &StiefelPoint<T>) -> Result<T> {
    inst.error(x)
}

impl<T: Real> Objective<T> for EigInstance<T> {
    fn dims(&self) -> (usize, usize) {
        (self.n(), self.p)
    }

    fn name(&self) -> &str {
        "eig"
    }

    fn value(&self, x: &DMatrix<T>) -> T {
        -self.trace_form(x)
    }

    fn gradient(&self, x: &DMatrix<T>) -> DMatrix<T> {
        &self.a * x * T::lit(-2.0)
    }

    fn value_and_gradient(&self, x: &DMatrix<T>) -> (T, DMatrix<T>) {
        let ax = &self.a * x;
        (-x.dot(&ax), ax * T::lit(-2.0))
    }
}
