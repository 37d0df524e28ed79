//! Feasible descent on the Stiefel manifold `St(n, p) = {X : X^T X = I}`.
//!
//! Each iteration moves along the curve `Z(tau) = pi(X - tau H)`, where `pi`
//! is the SVD projection onto the manifold and `H` mixes the two tangent
//! gradients `G - X G^T X` and `(I - X X^T) G`. Steps come either from a
//! monotone Armijo search or from Barzilai-Borwein trial steps globalized by a
//! Zhang-Hager non-monotone search. Small steps skip the SVD when the
//! second-order Taylor expansion of the curve is already feasible.
//!
//! Everything is generic over [`Real`] (`f64` and `f32`); the `*64` aliases at
//! the crate root name the double-precision types used by the benchmarks.
//!
//! ```
//! use nalgebra::DMatrix;
//! use stiefel_opt::{problems::{Family, ProblemSpec}, solve, SolverConfig64};
//!
//! let (problem, x0) = ProblemSpec::new(Family::Eig, 20, 3).generate::<f64>(1).unwrap();
//! let report = solve(&problem, &x0, &SolverConfig64::default()).unwrap();
//! assert!(report.termination.converged());
//! assert!(report.feasi <= 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dense;
pub mod direction;
mod error;
pub mod linesearch;
pub mod manifold;
mod objective;
pub mod problems;
mod scalar;
pub mod solver;

pub use dense::{frobenius_inner, frobenius_norm, householder, random_orthonormal, svd_thin, Rng, ThinSvd};
pub use direction::{descent_derivative, gradient_split, mixed_direction, GradientSplit, MixParams};
pub use error::{Error, Result};
pub use linesearch::{
    backtrack, bb_steps, clamp_step, nonmonotone_update, AcceptedStep, BacktrackParams, BbMemory,
    LineSearchFailure, NonmonotoneState,
};
pub use manifold::{feasibility_error, is_tangent, project, retract, Retraction, StiefelPoint};
pub use objective::{FnObjective, Objective};
pub use scalar::Real;
pub use solver::{
    kkt_residual, solve, stopping_check, BbGradient, BbMode, IterRecord, SearchMode, SolverConfig,
    SolverReport, StepRule, Termination,
};

/// Dense matrix type used throughout (column-major).
pub type Matrix<T> = nalgebra::DMatrix<T>;

pub type Matrix64 = Matrix<f64>;
pub type StiefelPoint64 = StiefelPoint<f64>;
pub type MixParams64 = MixParams<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type SolverReport64 = SolverReport<f64>;
pub type IterRecord64 = IterRecord<f64>;
pub type Problem64 = problems::Problem<f64>;

pub type Matrix32 = Matrix<f32>;
pub type StiefelPoint32 = StiefelPoint<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type SolverReport32 = SolverReport<f32>;
