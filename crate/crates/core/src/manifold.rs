//! Points on `St(n, p) = {X : X^T X = I}` and the projection-based retraction.

use nalgebra::DMatrix;

use crate::dense::{self, svd_thin};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub use crate::dense::feasibility_error;

/// An `n x p` matrix whose columns are orthonormal to within
/// [`Real::feasibility_tol`].
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint<T: Real> {
    x: DMatrix<T>,
    feasibility: T,
}

impl<T: Real> StiefelPoint<T> {
    /// Accepts `x` as is, rejecting it when it is not feasible.
    pub fn new(x: DMatrix<T>) -> Result<Self> {
        if x.nrows() < x.ncols() || x.ncols() == 0 {
            return Err(Error::InvalidDimensions(format!(
                "Stiefel point needs rows >= cols > 0, got {:?}",
                x.shape()
            )));
        }
        let feasibility = feasibility_error(&x);
        if !(feasibility <= T::feasibility_tol()) {
            return Err(Error::NotFeasible(feasibility.to_f64_lossy()));
        }
        Ok(Self { x, feasibility })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.x
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.x
    }

    pub fn feasibility(&self) -> T {
        self.feasibility
    }

    pub fn shape(&self) -> (usize, usize) {
        self.x.shape()
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }
}

impl<T: Real> AsRef<DMatrix<T>> for StiefelPoint<T> {
    fn as_ref(&self) -> &DMatrix<T> {
        &self.x
    }
}

/// Relative singular-value floor below which projection is refused.
pub fn rank_tol<T: Real>() -> T {
    T::lit(1e-12).max(T::default_epsilon() * T::lit(10.0))
}

/// Nearest point of the manifold in Frobenius norm, `U V^T` from the thin SVD.
pub fn project<T: Real>(x: &DMatrix<T>) -> Result<StiefelPoint<T>> {
    let svd = svd_thin(x)?;
    let p = svd.sigma.len();
    if p == 0 {
        return Err(Error::InvalidDimensions("cannot project an empty matrix".into()));
    }
    let sigma_max = svd.sigma[0];
    let sigma_min = svd.sigma[p - 1];
    if !(sigma_max > T::zero()) || sigma_min <= rank_tol::<T>() * sigma_max {
        return Err(Error::RankDeficient {
            sigma_min: sigma_min.to_f64_lossy(),
            sigma_max: sigma_max.to_f64_lossy(),
        });
    }
    let polar = svd.polar();
    match StiefelPoint::new(polar) {
        Ok(point) => Ok(point),
        // One more pass absorbs the rounding of a badly scaled first SVD.
        Err(Error::NotFeasible(_)) => StiefelPoint::new(svd_thin(&svd.polar())?.polar()),
        Err(e) => Err(e),
    }
}

/// True iff `||X^T Z + Z^T X||_F <= tol`.
pub fn is_tangent<T: Real>(x: &StiefelPoint<T>, z: &DMatrix<T>, tol: T) -> bool {
    if x.shape() != z.shape() {
        return false;
    }
    let xtz = x.matrix().tr_mul(z);
    (&xtz + xtz.transpose()).norm() <= tol
}

/// Result of one step along the retraction curve.
#[derive(Debug, Clone)]
pub struct Retraction<T: Real> {
    pub point: StiefelPoint<T>,
    /// The second-order Taylor candidate was accepted without an SVD.
    pub fast_path: bool,
}

/// `X - tau H - (tau^2 / 2) X H^T H`.
pub fn taylor_candidate<T: Real>(x: &DMatrix<T>, h: &DMatrix<T>, tau: T) -> DMatrix<T> {
    let hth = h.tr_mul(h);
    let half_tau_sq = tau * tau / T::lit(2.0);
    x - h * tau - x * hth * half_tau_sq
}

/// Evaluates the curve `Z(tau) = pi(X - tau H)`.
///
/// The Taylor candidate is returned whenever its feasibility error is below
/// [`Real::fast_path_tol`]; otherwise `X - tau H` is projected by SVD.
/// `H` is expected to be tangent at `X`; the fast path relies on it.
pub fn retract<T: Real>(x: &StiefelPoint<T>, h: &DMatrix<T>, tau: T) -> Result<Retraction<T>> {
    if x.shape() != h.shape() {
        return Err(Error::ShapeMismatch {
            op: "retract",
            left: x.shape(),
            right: h.shape(),
        });
    }
    if tau < T::zero() || !tau.is_finite_value() {
        return Err(Error::InvalidParameter(format!(
            "step size must be finite and nonnegative, got {:e}",
            tau
        )));
    }
    if tau == T::zero() {
        return Ok(Retraction {
            point: x.clone(),
            fast_path: true,
        });
    }
    let candidate = taylor_candidate(x.matrix(), h, tau);
    let feasibility = feasibility_error(&candidate);
    if feasibility < T::fast_path_tol() {
        return Ok(Retraction {
            point: StiefelPoint {
                x: candidate,
                feasibility,
            },
            fast_path: true,
        });
    }
    let point = project(&(x.matrix() - h * tau))?;
    Ok(Retraction {
        point,
        fast_path: false,
    })
}

/// Frobenius distance, kept here for callers holding two points.
pub fn distance<T: Real>(a: &StiefelPoint<T>, b: &StiefelPoint<T>) -> T {
    dense::frobenius_norm(&(a.matrix() - b.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{random_orthonormal, Rng};
    use approx::assert_abs_diff_eq;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn projection_normalizes_orthogonal_columns() {
        let x = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let p = project(&x).unwrap();
        let expected = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((p.matrix() - expected).norm() < 1e-14);
    }

    #[test]
    fn projection_is_idempotent_on_manifold() {
        let x = random_orthonormal::<f64>(6, 3, &mut Rng::new(1)).unwrap();
        let p = project(&x).unwrap();
        assert!((p.matrix() - &x).norm() < 1e-12);
    }

    #[test]
    fn projection_rejects_rank_deficiency() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(project(&x), Err(Error::RankDeficient { .. })));
        assert!(matches!(
            project(&DMatrix::<f64>::zeros(4, 2)),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn feasibility_of_scaled_identity() {
        let x = DMatrix::<f64>::identity(5, 3) * 2.0;
        assert_abs_diff_eq!(feasibility_error(&x), 3.0 * 3f64.sqrt(), epsilon = 1e-14);
        let q = random_orthonormal::<f64>(5, 3, &mut Rng::new(9)).unwrap();
        assert!(feasibility_error(&q) <= 1e-13);
    }

    #[test]
    fn feasibility_matches_entrywise_gram() {
        let x = Rng::new(4).gaussian_matrix::<f64>(5, 3);
        let mut acc = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let mut g = 0.0;
                for i in 0..5 {
                    g += x[(i, a)] * x[(i, b)];
                }
                if a == b {
                    g -= 1.0;
                }
                acc += g * g;
            }
        }
        assert_abs_diff_eq!(feasibility_error(&x), acc.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn stiefel_point_rejects_infeasible() {
        assert!(matches!(
            StiefelPoint::new(DMatrix::<f64>::identity(3, 2) * 1.1),
            Err(Error::NotFeasible(_))
        ));
        assert!(StiefelPoint::new(DMatrix::<f64>::identity(2, 3)).is_err());
    }

    #[test]
    fn tangency_checks() {
        let x = StiefelPoint::new(random_orthonormal::<f64>(5, 2, &mut Rng::new(2)).unwrap()).unwrap();
        assert!(is_tangent(&x, &DMatrix::zeros(5, 2), 0.0));
        let p = 2f64;
        assert!(!is_tangent(&x, &x.matrix().clone(), 2.0 * p.sqrt() - 1e-3));
    }

    #[test]
    fn zero_step_returns_start() {
        let x = StiefelPoint::new(col(&[1.0, 0.0])).unwrap();
        let r = retract(&x, &col(&[0.0, 1.0]), 0.0).unwrap();
        assert!(r.fast_path);
        assert_eq!(r.point, x);
    }

    #[test]
    fn sphere_step_takes_svd_branch() {
        let x = StiefelPoint::new(col(&[1.0, 0.0])).unwrap();
        let h = col(&[0.0, 1.0]);
        let cand = taylor_candidate(x.matrix(), &h, 0.1);
        assert_abs_diff_eq!(cand[0], 0.995, epsilon = 1e-15);
        assert_abs_diff_eq!(cand[1], -0.1, epsilon = 1e-15);
        // (0.995^2 + 0.01 - 1) = -2.5e-5
        assert_abs_diff_eq!(feasibility_error(&cand), 2.5e-5, epsilon = 1e-12);

        let r = retract(&x, &h, 0.1).unwrap();
        assert!(!r.fast_path);
        let norm = 1.01f64.sqrt();
        assert_abs_diff_eq!(r.point.matrix()[0], 1.0 / norm, epsilon = 1e-14);
        assert_abs_diff_eq!(r.point.matrix()[1], -0.1 / norm, epsilon = 1e-14);
    }

    #[test]
    fn retract_rejects_negative_step() {
        let x = StiefelPoint::new(col(&[1.0, 0.0])).unwrap();
        assert!(retract(&x, &col(&[0.0, 1.0]), -1.0).is_err());
    }
}
