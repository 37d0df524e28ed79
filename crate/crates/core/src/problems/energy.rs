//! Simplified total energy
//! `E(X) = 1/2 Tr[X^T L X] + (mu / 4) rho^T L^{-1} rho`, `rho = diag(X X^T)`,
//! with `L` the 1-D Dirichlet Laplacian (2 on the diagonal, -1 off it).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::manifold::StiefelPoint;
use crate::objective::Objective;
use crate::scalar::Real;
use crate::solver::kkt_residual;

/// Factorization of a tridiagonal system by the Thomas recursion.
#[derive(Debug, Clone)]
pub struct TridiagonalSolver<T: Real> {
    sub: Vec<T>,
    /// Modified super-diagonal `c'_i`.
    upper: Vec<T>,
    pivots: Vec<T>,
}

impl<T: Real> TridiagonalSolver<T> {
    /// `sub[i]` couples rows `i + 1` and `i`; `sup[i]` couples rows `i` and `i + 1`.
    pub fn new(diag: &[T], sub: &[T], sup: &[T]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::InvalidDimensions("tridiagonal band lengths".into()));
        }
        let mut upper = Vec::with_capacity(n.saturating_sub(1));
        let mut pivots = Vec::with_capacity(n);
        for i in 0..n {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - sub[i - 1] * upper[i - 1]
            };
            if pivot == T::zero() {
                return Err(Error::InvalidParameter("singular tridiagonal system".into()));
            }
            pivots.push(pivot);
            if i + 1 < n {
                upper.push(sup[i] / pivot);
            }
        }
        Ok(Self {
            sub: sub.to_vec(),
            upper,
            pivots,
        })
    }

    pub fn solve(&self, rhs: &DVector<T>) -> DVector<T> {
        let n = self.pivots.len();
        let mut y = DVector::zeros(n);
        for i in 0..n {
            let carry = if i == 0 { T::zero() } else { self.sub[i - 1] * y[i - 1] };
            y[i] = (rhs[i] - carry) / self.pivots[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = y[i + 1];
            y[i] -= self.upper[i] * next;
        }
        y
    }
}

#[derive(Debug, Clone)]
pub struct EnergyInstance<T: Real> {
    pub n: usize,
    pub k: usize,
    pub mu: T,
    pub seed: Option<u64>,
    solver: TridiagonalSolver<T>,
}

impl<T: Real> EnergyInstance<T> {
    pub fn new(n: usize, k: usize, mu: T) -> Result<Self> {
        if k == 0 || n < k {
            return Err(Error::InvalidDimensions(format!(
                "energy problem needs n >= k >= 1, got n={n}, k={k}"
            )));
        }
        if !(mu >= T::zero()) || !mu.is_finite_value() {
            return Err(Error::InvalidParameter(format!("mu must be nonnegative, got {:e}", mu)));
        }
        let two = T::lit(2.0);
        let off = vec![-T::one(); n - 1];
        let solver = TridiagonalSolver::new(&vec![two; n], &off, &off)?;
        Ok(Self {
            n,
            k,
            mu,
            seed: None,
            solver,
        })
    }

    /// Dense copy of `L`.
    pub fn laplacian(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            if i == j {
                T::lit(2.0)
            } else if i.abs_diff(j) == 1 {
                -T::one()
            } else {
                T::zero()
            }
        })
    }

    /// `L X` without forming `L`.
    pub fn apply_laplacian(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let n = x.nrows();
        let two = T::lit(2.0);
        DMatrix::from_fn(n, x.ncols(), |i, j| {
            let mut v = two * x[(i, j)];
            if i > 0 {
                v -= x[(i - 1, j)];
            }
            if i + 1 < n {
                v -= x[(i + 1, j)];
            }
            v
        })
    }

    /// `rho(X) = diag(X X^T)`, the squared row norms.
    pub fn density(&self, x: &DMatrix<T>) -> DVector<T> {
        DVector::from_iterator(x.nrows(), x.row_iter().map(|r| r.norm_squared()))
    }

    /// `L^{-1} rho` through the cached factorization.
    pub fn potential(&self, rho: &DVector<T>) -> DVector<T> {
        self.solver.solve(rho)
    }

    /// `H(X) X = L X + mu Diag(L^{-1} rho) X`, which is also the gradient.
    pub fn hamiltonian_times(&self, x: &DMatrix<T>) -> DMatrix<T> {
        self.value_and_gradient(x).1
    }

    pub fn eval(&self, x: &DMatrix<T>) -> Result<(T, DMatrix<T>)> {
        if x.shape() != (self.n, self.k) {
            return Err(Error::ShapeMismatch {
                op: "energy_eval",
                left: (self.n, self.k),
                right: x.shape(),
            });
        }
        Ok(self.value_and_gradient(x))
    }

    /// `||H X - X (X^T H X)||_F`.
    pub fn kkt(&self, x: &StiefelPoint<T>) -> T {
        kkt_residual(x, &self.hamiltonian_times(x.matrix()))
    }
}

impl<T: Real> Objective<T> for EnergyInstance<T> {
    fn dims(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    fn name(&self) -> &str {
        "energy"
    }

    fn value(&self, x: &DMatrix<T>) -> T {
        let lx = self.apply_laplacian(x);
        let rho = self.density(x);
        let y = self.potential(&rho);
        x.dot(&lx) * T::lit(0.5) + self.mu * T::lit(0.25) * rho.dot(&y)
    }

    fn gradient(&self, x: &DMatrix<T>) -> DMatrix<T> {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &DMatrix<T>) -> (T, DMatrix<T>) {
        let mut g = self.apply_laplacian(x);
        let rho = self.density(x);
        let y = self.potential(&rho);
        let f = x.dot(&g) * T::lit(0.5) + self.mu * T::lit(0.25) * rho.dot(&y);
        for (i, mut row) in g.row_iter_mut().enumerate() {
            let w = self.mu * y[i];
            row.zip_apply(&x.row(i), |gv, xv| *gv += w * xv);
        }
        (f, g)
    }
}
