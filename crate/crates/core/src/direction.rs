//! Tangent search directions built from the Euclidean gradient `G`.
//!
//! * `grad1 = G - X G^T X = A X` with the skew matrix `A = G X^T - X G^T`
//! * `grad2 = (I - X X^T) G`
//! * `H = alpha * grad1 + beta * grad2`
//!
//! Both gradients lie in the tangent space at a feasible `X`, so any `H` with
//! `alpha > 0, beta >= 0` does as well, and the curve `pi(X - tau H)` descends
//! at `tau = 0` with slope at most `-(alpha / 2) ||A||_F^2`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::manifold::StiefelPoint;
use crate::scalar::Real;

/// Ambient dimension up to which the `n x n` skew matrix is formed explicitly.
pub const DENSE_SKEW_LIMIT: usize = 2000;

#[derive(Debug, Clone)]
pub struct GradientSplit<T: Real> {
    pub grad1: DMatrix<T>,
    pub grad2: DMatrix<T>,
    /// `A = G X^T - X G^T`; `None` above [`DENSE_SKEW_LIMIT`].
    pub skew: Option<DMatrix<T>>,
    /// `||A||_F^2`, available in both representations.
    pub skew_norm_sq: T,
}

impl<T: Real> GradientSplit<T> {
    /// The skew matrix, forming it from the factors when it was not stored.
    pub fn skew_matrix(&self, x: &StiefelPoint<T>, g: &DMatrix<T>) -> DMatrix<T> {
        match &self.skew {
            Some(a) => a.clone(),
            None => dense_skew(x.matrix(), g),
        }
    }
}

fn dense_skew<T: Real>(x: &DMatrix<T>, g: &DMatrix<T>) -> DMatrix<T> {
    let gxt = g * x.transpose();
    &gxt - gxt.transpose()
}

/// `||G X^T - X G^T||_F^2` from `p x p` products only:
/// `2 Tr[(G^T G)(X^T X)] - 2 Tr[(G^T X)^2]`.
pub fn skew_norm_sq_factored<T: Real>(x: &DMatrix<T>, g: &DMatrix<T>) -> T {
    let gtg = g.tr_mul(g);
    let xtx = x.tr_mul(x);
    let gtx = g.tr_mul(x);
    let two = T::lit(2.0);
    let first = gtg.dot(&xtx);
    let second = gtx.dot(&gtx.transpose());
    (two * (first - second)).max(T::zero())
}

pub fn gradient_split<T: Real>(x: &StiefelPoint<T>, g: &DMatrix<T>) -> Result<GradientSplit<T>> {
    if x.shape() != g.shape() {
        return Err(Error::ShapeMismatch {
            op: "gradient_split",
            left: x.shape(),
            right: g.shape(),
        });
    }
    let xm = x.matrix();
    let xtg = xm.tr_mul(g);
    let grad1 = g - xm * xtg.transpose();
    let grad2 = g - xm * &xtg;
    let (skew, skew_norm_sq) = if xm.nrows() <= DENSE_SKEW_LIMIT {
        let a = dense_skew(xm, g);
        let nsq = a.norm_squared();
        (Some(a), nsq)
    } else {
        (None, skew_norm_sq_factored(xm, g))
    };
    Ok(GradientSplit {
        grad1,
        grad2,
        skew,
        skew_norm_sq,
    })
}

/// Mixture weights of the search direction; `alpha > 0`, `beta >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixParams<T: Real> {
    alpha: T,
    beta: T,
}

impl<T: Real> MixParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite_value() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {:e}",
                alpha
            )));
        }
        if !(beta >= T::zero()) || !beta.is_finite_value() {
            return Err(Error::InvalidParameter(format!(
                "beta must be nonnegative, got {:e}",
                beta
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Also admits `alpha = 0` as long as `beta > 0`. The direction is then
    /// `grad2` alone, which is not a descent direction when `grad2` vanishes
    /// (always the case for square `X`); the solver reports such runs as
    /// line-search failures.
    pub fn relaxed(alpha: T, beta: T) -> Result<Self> {
        if alpha == T::zero() {
            if !(beta > T::zero()) || !beta.is_finite_value() {
                return Err(Error::InvalidParameter("alpha = 0 needs beta > 0".into()));
            }
            return Ok(Self { alpha, beta });
        }
        Self::new(alpha, beta)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }
}

impl<T: Real> Default for MixParams<T> {
    /// `alpha = 1, beta = 0`: the plain `grad1` direction.
    fn default() -> Self {
        Self {
            alpha: T::one(),
            beta: T::zero(),
        }
    }
}

pub fn mixed_direction<T: Real>(split: &GradientSplit<T>, mix: &MixParams<T>) -> DMatrix<T> {
    if mix.beta == T::zero() {
        return &split.grad1 * mix.alpha;
    }
    &split.grad1 * mix.alpha + &split.grad2 * mix.beta
}

/// `DF(X)[Z'(0)] = -(alpha/2)||A||^2 - beta ||G||^2 + beta ||X^T G||^2`.
pub fn descent_derivative<T: Real>(
    x: &StiefelPoint<T>,
    g: &DMatrix<T>,
    split: &GradientSplit<T>,
    mix: &MixParams<T>,
) -> T {
    let half = T::lit(0.5);
    let mut dd = -(mix.alpha * half * split.skew_norm_sq);
    if mix.beta != T::zero() {
        let xtg = x.matrix().tr_mul(g);
        dd += mix.beta * (xtg.norm_squared() - g.norm_squared());
    }
    dd
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{frobenius_inner, random_orthonormal, Rng};
    use crate::manifold::is_tangent;
    use approx::assert_abs_diff_eq;

    fn e1_instance() -> (StiefelPoint<f64>, DMatrix<f64>) {
        let x = StiefelPoint::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let g = DMatrix::from_column_slice(2, 1, &[3.0, 4.0]);
        (x, g)
    }

    fn random_instance(seed: u64, n: usize, p: usize) -> (StiefelPoint<f64>, DMatrix<f64>) {
        let mut rng = Rng::new(seed);
        let x = StiefelPoint::new(random_orthonormal(n, p, &mut rng).unwrap()).unwrap();
        let g = rng.gaussian_matrix(n, p);
        (x, g)
    }

    #[test]
    fn vector_case_gradients_coincide() {
        let (x, g) = e1_instance();
        let split = gradient_split(&x, &g).unwrap();
        let expected = DMatrix::from_column_slice(2, 1, &[0.0, 4.0]);
        assert_eq!(split.grad1, expected);
        assert_eq!(split.grad2, expected);
    }

    #[test]
    fn orthogonal_group_at_identity() {
        let g = Rng::new(8).gaussian_matrix::<f64>(3, 3);
        let x = StiefelPoint::new(DMatrix::identity(3, 3)).unwrap();
        let split = gradient_split(&x, &g).unwrap();
        assert!((split.grad1 - (&g - g.transpose())).norm() < 1e-15);
    }

    #[test]
    fn grad1_is_skew_times_x() {
        let (x, g) = random_instance(21, 7, 3);
        let split = gradient_split(&x, &g).unwrap();
        let a = split.skew.as_ref().unwrap();
        assert!((a + a.transpose()).norm() <= 1e-12);
        assert!((&split.grad1 - a * x.matrix()).norm() <= 1e-12);
    }

    #[test]
    fn factored_skew_norm_matches_dense() {
        for seed in 0..10 {
            let (x, g) = random_instance(seed, 9, 4);
            let split = gradient_split(&x, &g).unwrap();
            let factored = skew_norm_sq_factored(x.matrix(), &g);
            assert_abs_diff_eq!(split.skew_norm_sq, factored, epsilon = 1e-10 * factored.max(1.0));
        }
    }

    #[test]
    fn unit_alpha_direction_is_grad1() {
        let (x, g) = random_instance(5, 6, 2);
        let split = gradient_split(&x, &g).unwrap();
        let h = mixed_direction(&split, &MixParams::new(1.0, 0.0).unwrap());
        assert_eq!(h, split.grad1);
    }

    #[test]
    fn convex_mix_of_equal_gradients() {
        let (x, g) = e1_instance();
        let split = gradient_split(&x, &g).unwrap();
        let h = mixed_direction(&split, &MixParams::new(0.3, 0.7).unwrap());
        assert!((h - &split.grad1).norm() < 1e-15);
    }

    #[test]
    fn mixed_direction_is_tangent() {
        let (x, g) = random_instance(6, 8, 3);
        let split = gradient_split(&x, &g).unwrap();
        let h = mixed_direction(&split, &MixParams::new(0.45, 0.55).unwrap());
        assert!(is_tangent(&x, &h, 1e-10));
    }

    #[test]
    fn mix_params_validate() {
        assert!(MixParams::new(0.0, 0.5).is_err());
        assert!(MixParams::new(-1.0, 0.5).is_err());
        assert!(MixParams::new(1.0, -0.1).is_err());
        assert!(MixParams::new(f64::NAN, 0.0).is_err());
        assert!(MixParams::new(1e-3, 0.0).is_ok());
        assert!(MixParams::relaxed(0.0, 1.0).is_ok());
        assert!(MixParams::relaxed(0.0, 0.0).is_err());
        assert!(MixParams::relaxed(-0.5, 1.0).is_err());
    }

    #[test]
    fn stationary_point_has_zero_slope() {
        // G = X S with S symmetric gives A = X S X^T - X S X^T = 0.
        let mut rng = Rng::new(30);
        let x = StiefelPoint::new(random_orthonormal::<f64>(5, 2, &mut rng).unwrap()).unwrap();
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0]);
        let g = x.matrix() * s;
        let split = gradient_split(&x, &g).unwrap();
        assert!(split.skew_norm_sq < 1e-28);
        let dd = descent_derivative(&x, &g, &split, &MixParams::default());
        assert!(dd.abs() < 1e-14);
    }

    #[test]
    fn vector_case_slope_is_tight() {
        let (x, g) = e1_instance();
        let split = gradient_split(&x, &g).unwrap();
        // A = [[0,-4],[4,0]], so (1/2)||A||^2 = 16.
        assert_abs_diff_eq!(split.skew_norm_sq, 32.0, epsilon = 1e-14);
        let mix = MixParams::default();
        let dd = descent_derivative(&x, &g, &split, &mix);
        let h = mixed_direction(&split, &mix);
        assert_abs_diff_eq!(dd, -16.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dd, -frobenius_inner(&g, &h).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn closed_form_equals_inner_product() {
        for seed in 0..20 {
            let (x, g) = random_instance(100 + seed, 7, 3);
            let split = gradient_split(&x, &g).unwrap();
            let mix = MixParams::new(0.6, 0.8).unwrap();
            let h = mixed_direction(&split, &mix);
            let dd = descent_derivative(&x, &g, &split, &mix);
            let direct = -frobenius_inner(&g, &h).unwrap();
            assert_abs_diff_eq!(dd, direct, epsilon = 1e-10);
            assert!(dd <= -0.3 * split.skew_norm_sq + 1e-12);
        }
    }
}
