//! Dense linear-algebra layer.
//!
//! Matrices are nalgebra [`DMatrix`] values, stored **column-major**. Every
//! other module treats them as opaque and goes through the helpers here or
//! through nalgebra's arithmetic; conversions to and from nested row arrays
//! (used by the JSON formats) are the only place where storage order is
//! spelled out.
//!
//! Random draws come from [`Rng`], a ChaCha8 stream seeded through
//! `rand_core`'s `seed_from_u64`. Uniform variates take the top 53 bits of
//! each 64-bit word; Gaussian variates use the Box-Muller transform on two
//! uniforms and return both members of the pair in order. The stream is
//! therefore fixed for a given seed on every platform.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `Tr[A^T B]`, the Frobenius inner product.
pub fn frobenius_inner<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op: "frobenius_inner",
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(a.dot(b))
}

pub fn frobenius_norm<T: Real>(a: &DMatrix<T>) -> T {
    a.norm()
}

/// `||X^T X - I||_F`.
pub fn feasibility_error<T: Real>(x: &DMatrix<T>) -> T {
    let mut gram = x.tr_mul(x);
    for i in 0..gram.nrows() {
        gram[(i, i)] -= T::one();
    }
    gram.norm()
}

/// Builds a matrix from row slices, rejecting ragged or non-finite input.
pub fn matrix_from_rows<T: Real>(rows: &[Vec<T>]) -> Result<DMatrix<T>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidDimensions("ragged rows".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite_value()) {
        return Err(Error::NonFinite("matrix_from_rows"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows<T: Real>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.to_f64_lossy()).collect())
        .collect()
}

pub fn rows_to_matrix<T: Real>(rows: &[Vec<f64>]) -> Result<DMatrix<T>> {
    let converted: Vec<Vec<T>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| T::lit(v)).collect())
        .collect();
    matrix_from_rows(&converted)
}

fn all_finite<T: Real>(m: &DMatrix<T>) -> bool {
    m.iter().all(|v| v.is_finite_value())
}

/// Thin singular value decomposition `X = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct ThinSvd<T: Real> {
    /// `n x p`, orthonormal columns.
    pub u: DMatrix<T>,
    /// Nonincreasing, nonnegative.
    pub sigma: DVector<T>,
    /// `p x p`, orthogonal.
    pub v: DMatrix<T>,
}

impl<T: Real> ThinSvd<T> {
    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    /// `U V^T`, the polar factor.
    pub fn polar(&self) -> DMatrix<T> {
        &self.u * self.v.transpose()
    }
}

/// Thin SVD by one-sided Jacobi rotations on the triangular factor of a
/// Householder QR. Columns are orthogonalized to working precision, which keeps
/// the polar factor accurate even when singular values nearly coincide.
pub fn svd_thin<T: Real>(x: &DMatrix<T>) -> Result<ThinSvd<T>> {
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::InvalidDimensions(format!(
            "thin SVD needs rows >= cols, got {n}x{p}"
        )));
    }
    if !all_finite(x) {
        return Err(Error::NonFinite("svd_thin"));
    }
    if p == 0 {
        return Ok(ThinSvd {
            u: DMatrix::zeros(n, 0),
            sigma: DVector::zeros(0),
            v: DMatrix::zeros(0, 0),
        });
    }
    let (q, mut w) = if n > p {
        let qr = x.clone().qr();
        (Some(qr.q()), qr.r())
    } else {
        (None, x.clone())
    };
    let mut v = DMatrix::<T>::identity(p, p);
    jacobi_sweeps(&mut w, &mut v)?;

    let mut sigma: Vec<T> = (0..p).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap_or(std::cmp::Ordering::Equal));
    let m = w.nrows();
    let mut u_small = DMatrix::<T>::zeros(m, p);
    let mut v_sorted = DMatrix::<T>::zeros(p, p);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        v_sorted.set_column(dst, &v.column(src));
        if sigma[src] > T::zero() {
            u_small.set_column(dst, &(w.column(src) / sigma[src]));
        } else {
            missing.push(dst);
        }
    }
    sigma = order.iter().map(|&j| sigma[j]).collect();
    complete_basis(&mut u_small, &missing);
    let u = match q {
        Some(q) => q * u_small,
        None => u_small,
    };
    Ok(ThinSvd {
        u,
        sigma: DVector::from_vec(sigma),
        v: v_sorted,
    })
}

/// Rotates column pairs of `w` (accumulating into `v`) until every pair is
/// orthogonal relative to the product of their norms.
fn jacobi_sweeps<T: Real>(w: &mut DMatrix<T>, v: &mut DMatrix<T>) -> Result<()> {
    const MAX_SWEEPS: usize = 80;
    let (m, p) = w.shape();
    let tol = T::default_epsilon() * T::lit(p as f64).sqrt();
    let two = T::lit(2.0);
    let wd = w.as_mut_slice();
    let vd = v.as_mut_slice();
    let mut norms: Vec<T> = wd.chunks(m).map(|c| dot(c, c)).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in (i + 1)..p {
                let (a, b) = (norms[i], norms[j]);
                let (wi, wj) = column_pair(wd, m, i, j);
                let c = dot(wi, wj);
                if c == T::zero() || c.abs() <= tol * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (two * c);
                let t = if zeta == T::zero() {
                    T::one()
                } else {
                    zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt())
                };
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                rotate(wi, wj, cs, sn);
                norms[i] = dot(wi, wi);
                norms[j] = dot(wj, wj);
                let (vi, vj) = column_pair(vd, p, i, j);
                rotate(vi, vj, cs, sn);
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::SvdFailed)
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Columns `i < j` of a column-major buffer with `m` rows.
fn column_pair<T>(data: &mut [T], m: usize, i: usize, j: usize) -> (&mut [T], &mut [T]) {
    let (head, tail) = data.split_at_mut(j * m);
    (&mut head[i * m..(i + 1) * m], &mut tail[..m])
}

fn rotate<T: Real>(xi: &mut [T], xj: &mut [T], cs: T, sn: T) {
    for (a, b) in xi.iter_mut().zip(xj.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = cs * x - sn * y;
        *b = sn * x + cs * y;
    }
}

/// Fills the listed columns with unit vectors orthogonal to all others.
fn complete_basis<T: Real>(u: &mut DMatrix<T>, missing: &[usize]) {
    let m = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|j| !missing.contains(j)).collect();
    for &dst in missing {
        let mut best: Option<DVector<T>> = None;
        for e in 0..m {
            let mut cand = DVector::<T>::zeros(m);
            cand[e] = T::one();
            for _ in 0..2 {
                for &k in &filled {
                    let proj = u.column(k).dot(&cand);
                    cand -= u.column(k) * proj;
                }
            }
            let norm = cand.norm();
            if best.as_ref().is_none_or(|b| norm > b.norm()) {
                best = Some(cand);
            }
            if norm > T::lit(0.5) {
                break;
            }
        }
        if let Some(b) = best {
            let norm = b.norm();
            u.set_column(dst, &(b / norm));
        }
        filled.push(dst);
    }
}

/// Reflector `I - 2 v v^T / (v^T v)`.
pub fn householder<T: Real>(v: &DVector<T>) -> Result<DMatrix<T>> {
    let vv = v.dot(v);
    if vv <= T::zero() {
        return Err(Error::ZeroVector);
    }
    if !vv.is_finite_value() {
        return Err(Error::NonFinite("householder"));
    }
    let n = v.len();
    let scale = T::lit(2.0) / vv;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { T::one() } else { T::zero() };
        delta - scale * v[i] * v[j]
    }))
}

/// Seeded random source with a platform-independent stream.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], so the logarithm is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Gaussian matrix filled in column-major order.
    pub fn gaussian_matrix<T: Real>(&mut self, rows: usize, cols: usize) -> DMatrix<T> {
        let data: Vec<T> = (0..rows * cols).map(|_| T::lit(self.gaussian())).collect();
        DMatrix::from_vec(rows, cols, data)
    }

    pub fn gaussian_vector<T: Real>(&mut self, len: usize) -> DVector<T> {
        DVector::from_iterator(len, (0..len).map(|_| T::lit(self.gaussian())))
    }

    pub fn uniform_matrix<T: Real>(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<T> {
        let data: Vec<T> = (0..rows * cols)
            .map(|_| T::lit(self.uniform_in(lo, hi)))
            .collect();
        DMatrix::from_vec(rows, cols, data)
    }
}

/// Draws a Gaussian `n x p` matrix and returns the `U V^T` factor of its thin SVD.
pub fn random_orthonormal<T: Real>(n: usize, p: usize, rng: &mut Rng) -> Result<DMatrix<T>> {
    if n < p {
        return Err(Error::InvalidDimensions(format!(
            "random_orthonormal needs n >= p, got n={n}, p={p}"
        )));
    }
    if p == 0 {
        return Err(Error::InvalidDimensions("p must be positive".into()));
    }
    let g = rng.gaussian_matrix::<T>(n, p);
    Ok(svd_thin(&g)?.polar())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inner_product_of_identities_is_dimension() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(frobenius_inner(&i2, &i2).unwrap(), 2.0);
    }

    #[test]
    fn inner_product_is_sum_of_squares() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(frobenius_inner(&a, &a).unwrap(), 30.0);
        assert_abs_diff_eq!(frobenius_norm(&a), 30f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn inner_product_matches_double_loop() {
        let mut rng = Rng::new(11);
        let a = rng.gaussian_matrix::<f64>(4, 3);
        let b = rng.gaussian_matrix::<f64>(4, 3);
        let mut brute = 0.0;
        for i in 0..4 {
            for j in 0..3 {
                brute += a[(i, j)] * b[(i, j)];
            }
        }
        assert_abs_diff_eq!(frobenius_inner(&a, &b).unwrap(), brute, epsilon = 1e-14);
    }

    #[test]
    fn inner_product_rejects_shape_mismatch() {
        let a = DMatrix::<f64>::zeros(2, 3);
        let b = DMatrix::<f64>::zeros(3, 2);
        assert!(matches!(
            frobenius_inner(&a, &b),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn svd_of_diagonal_sorts_values() {
        let x = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let svd = svd_thin(&x).unwrap();
        assert_abs_diff_eq!(svd.sigma[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(svd.sigma[1], 2.0, epsilon = 1e-14);
        assert_eq!(svd.u.shape(), (3, 2));
        assert_eq!(svd.v.shape(), (2, 2));
    }

    #[test]
    fn svd_of_isometry_has_unit_values() {
        let mut rng = Rng::new(3);
        let q = random_orthonormal::<f64>(7, 4, &mut rng).unwrap();
        let svd = svd_thin(&q).unwrap();
        for s in svd.sigma.iter() {
            assert_abs_diff_eq!(*s, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn svd_reconstructs_random_matrix() {
        let mut rng = Rng::new(5);
        let x = rng.gaussian_matrix::<f64>(6, 3);
        let svd = svd_thin(&x).unwrap();
        assert!((svd.reconstruct() - &x).norm() < 1e-10 * x.norm());
    }

    #[test]
    fn svd_handles_clustered_values() {
        // 1 + 1e-7 perturbations of an orthogonal matrix: three nearly equal values.
        let mut rng = Rng::new(5);
        let q = random_orthonormal::<f64>(3, 3, &mut rng).unwrap();
        let x = &q + rng.gaussian_matrix::<f64>(3, 3) * 1e-7;
        let svd = svd_thin(&x).unwrap();
        assert!((svd.reconstruct() - &x).norm() < 1e-14);
        assert!(feasibility_error(&svd.u) < 1e-14);
    }

    #[test]
    fn svd_completes_basis_for_zero_column() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let svd = svd_thin(&x).unwrap();
        assert_eq!(svd.sigma.as_slice(), &[1.0, 0.0]);
        assert!(feasibility_error(&svd.u) < 1e-15);
        assert!((svd.reconstruct() - &x).norm() < 1e-15);
    }

    #[test]
    fn svd_rejects_wide_and_non_finite() {
        assert!(svd_thin(&DMatrix::<f64>::zeros(2, 3)).is_err());
        let mut x = DMatrix::<f64>::identity(3, 2);
        x[(1, 1)] = f64::NAN;
        assert!(matches!(svd_thin(&x), Err(Error::NonFinite(_))));
    }

    #[test]
    fn random_orthonormal_scalar_is_unit() {
        let mut rng = Rng::new(0);
        let x = random_orthonormal::<f64>(1, 1, &mut rng).unwrap();
        assert_abs_diff_eq!(x[(0, 0)].abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn random_orthonormal_is_feasible_and_reproducible() {
        let a = random_orthonormal::<f64>(5, 2, &mut Rng::new(42)).unwrap();
        let b = random_orthonormal::<f64>(5, 2, &mut Rng::new(42)).unwrap();
        assert!(feasibility_error(&a) <= 1e-12);
        assert_eq!(a, b);
        assert!(random_orthonormal::<f64>(2, 5, &mut Rng::new(42)).is_err());
    }

    #[test]
    fn householder_axis_reflection() {
        let q = householder(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(q, DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn householder_diagonal_vector() {
        let q = householder(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!((q - expected).norm() < 1e-15);
    }

    #[test]
    fn householder_rejects_zero() {
        assert!(matches!(
            householder(&DVector::<f64>::zeros(3)),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn gaussian_stream_has_expected_moments() {
        let mut rng = Rng::new(2024);
        let n = 20_000;
        let draws: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03);
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn row_conversion_round_trips() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let m: DMatrix<f64> = rows_to_matrix(&rows).unwrap();
        assert_eq!(m[(1, 0)], 4.0);
        assert_eq!(matrix_to_rows(&m), rows);
        assert!(rows_to_matrix::<f64>(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(rows_to_matrix::<f64>(&[vec![f64::INFINITY]]).is_err());
    }
}
