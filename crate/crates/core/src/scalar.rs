//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All algorithms are written against [`Real`], which bundles nalgebra's
//! `RealField` with the `num-traits` conversions used for literals and
//! reporting. `f64` is the reference precision; `f32` is supported with
//! feasibility tolerances scaled to its machine epsilon.

use std::fmt;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the solver.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::LowerExp + fmt::Debug + Send + Sync + 'static
{
    /// Largest `||X^T X - I||_F` accepted for a point on the manifold.
    fn feasibility_tol() -> Self;

    /// Bound under which the second-order Taylor candidate replaces the SVD
    /// projection in [`crate::retract`].
    fn fast_path_tol() -> Self;

    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Widening conversion used for reports and serialization.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn is_finite_value(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Real for f64 {
    #[inline]
    fn feasibility_tol() -> Self {
        1e-12
    }

    #[inline]
    fn fast_path_tol() -> Self {
        1e-13
    }
}

impl Real for f32 {
    #[inline]
    fn feasibility_tol() -> Self {
        2e-5
    }

    #[inline]
    fn fast_path_tol() -> Self {
        2e-6
    }
}
