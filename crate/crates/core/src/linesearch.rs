//! Step-size selection: Barzilai-Borwein candidates, the Zhang-Hager
//! reference value and backtracking along the retraction curve.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::manifold::{retract, StiefelPoint};
use crate::objective::Objective;
use crate::scalar::Real;

/// Magnitude below which a BB denominator is treated as zero.
const BB_DENOMINATOR_FLOOR: f64 = 1e-30;

/// Differences between two consecutive iterates used by the BB formulas.
#[derive(Debug, Clone)]
pub struct BbMemory<T: Real> {
    /// `X_{k+1} - X_k`
    pub s: DMatrix<T>,
    /// Difference of the gradient-like fields at the two iterates.
    pub r: DMatrix<T>,
    pub valid: bool,
}

impl<T: Real> BbMemory<T> {
    pub fn empty(n: usize, p: usize) -> Self {
        Self {
            s: DMatrix::zeros(n, p),
            r: DMatrix::zeros(n, p),
            valid: false,
        }
    }

    pub fn new(s: DMatrix<T>, r: DMatrix<T>) -> Result<Self> {
        if s.shape() != r.shape() {
            return Err(Error::ShapeMismatch {
                op: "BbMemory::new",
                left: s.shape(),
                right: r.shape(),
            });
        }
        Ok(Self { s, r, valid: true })
    }
}

/// `(|<S,S>/<S,R>|, |<S,R>/<R,R>|)`. A vanishing denominator yields `+inf`,
/// which [`clamp_step`] maps to the upper step bound.
pub fn bb_steps<T: Real>(mem: &BbMemory<T>) -> Result<(T, T)> {
    if !mem.valid {
        return Err(Error::EmptyBbMemory);
    }
    let floor = T::lit(BB_DENOMINATOR_FLOOR);
    let inf = T::lit(f64::INFINITY);
    let ss = mem.s.norm_squared();
    let sr = mem.s.dot(&mem.r);
    let rr = mem.r.norm_squared();
    let bb1 = if sr.abs() < floor { inf } else { (ss / sr).abs() };
    let bb2 = if rr.abs() < floor { inf } else { (sr / rr).abs() };
    Ok((bb1, bb2))
}

/// `max(min(tau, tau_max), tau_min)`; NaN is sent to the upper bound like `+inf`.
pub fn clamp_step<T: Real>(tau: T, tau_min: T, tau_max: T) -> T {
    #[allow(clippy::eq_op)]
    if tau != tau {
        return tau_max;
    }
    tau.min(tau_max).max(tau_min)
}

/// Weighted running average of objective values, `Q_0 = 1`, `C_0 = F(X_0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonmonotoneState<T: Real> {
    pub q: T,
    pub c: T,
}

impl<T: Real> NonmonotoneState<T> {
    pub fn new(f0: T) -> Self {
        Self { q: T::one(), c: f0 }
    }

    /// `Q' = eta Q + 1`, `C' = (eta Q C + f_new) / Q'`.
    pub fn update(self, f_new: T, eta: T) -> Self {
        let weighted = eta * self.q;
        let q = weighted + T::one();
        let c = (weighted * self.c + f_new) / q;
        Self { q, c }
    }
}

pub fn nonmonotone_update<T: Real>(
    state: NonmonotoneState<T>,
    f_new: T,
    eta: T,
) -> NonmonotoneState<T> {
    state.update(f_new, eta)
}

/// Constants of the backtracking loop.
#[derive(Debug, Clone, Copy)]
pub struct BacktrackParams<T: Real> {
    /// Sufficient-decrease constant, in `(0, 1)`.
    pub rho1: T,
    /// Reduction factor, in `(0, 1)`.
    pub delta: T,
    /// Reductions tried after the first candidate before giving up.
    pub max_reductions: usize,
    /// Step halvings allowed per candidate when `X - tau H` loses rank.
    pub rank_retries: usize,
}

impl<T: Real> Default for BacktrackParams<T> {
    fn default() -> Self {
        Self {
            rho1: T::lit(1e-4),
            delta: T::lit(0.3),
            max_reductions: 60,
            rank_retries: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AcceptedStep<T: Real> {
    pub tau: T,
    pub point: StiefelPoint<T>,
    pub f: T,
    pub nfe: usize,
    pub fast_path: bool,
}

#[derive(Debug, Clone)]
pub enum LineSearchFailure<T: Real> {
    /// Every candidate violated sufficient decrease; carries the lowest one.
    Exhausted {
        best: Option<(T, StiefelPoint<T>, T)>,
        nfe: usize,
    },
    /// `X - tau H` stayed rank deficient through every halving.
    RankDeficient { nfe: usize },
    Invalid(String),
}

impl<T: Real> LineSearchFailure<T> {
    pub fn nfe(&self) -> usize {
        match self {
            Self::Exhausted { nfe, .. } | Self::RankDeficient { nfe } => *nfe,
            Self::Invalid(_) => 0,
        }
    }
}

/// Tries `tau0 * delta^i` until `F(Z(tau)) < c_ref + rho1 * tau * dd`.
///
/// Equality rejects. `c_ref` is `F(X)` for the monotone rule and `C_k` for the
/// non-monotone one.
pub fn backtrack<T, O>(
    objective: &O,
    x: &StiefelPoint<T>,
    h: &DMatrix<T>,
    dd: T,
    tau0: T,
    c_ref: T,
    params: &BacktrackParams<T>,
) -> std::result::Result<AcceptedStep<T>, LineSearchFailure<T>>
where
    T: Real,
    O: Objective<T> + ?Sized,
{
    let unit = |v: T| v > T::zero() && v < T::one();
    if !(dd < T::zero()) {
        return Err(LineSearchFailure::Invalid(format!(
            "directional derivative must be negative, got {:e}",
            dd
        )));
    }
    if !(tau0 > T::zero()) || !unit(params.rho1) || !unit(params.delta) {
        return Err(LineSearchFailure::Invalid(
            "need tau0 > 0 and rho1, delta in (0, 1)".into(),
        ));
    }

    let half = T::lit(0.5);
    let mut tau = tau0;
    let mut nfe = 0;
    let mut best: Option<(T, StiefelPoint<T>, T)> = None;

    for _ in 0..=params.max_reductions {
        let mut retries = 0;
        let step = loop {
            match retract(x, h, tau) {
                Ok(step) => break step,
                Err(Error::RankDeficient { .. }) if retries < params.rank_retries => {
                    retries += 1;
                    tau *= half;
                }
                Err(Error::RankDeficient { .. }) => {
                    return Err(LineSearchFailure::RankDeficient { nfe });
                }
                Err(e) => return Err(LineSearchFailure::Invalid(e.to_string())),
            }
        };
        let f = objective.value(step.point.matrix());
        nfe += 1;
        if f < c_ref + params.rho1 * tau * dd {
            return Ok(AcceptedStep {
                tau,
                point: step.point,
                f,
                nfe,
                fast_path: step.fast_path,
            });
        }
        if f.is_finite_value() && best.as_ref().is_none_or(|(_, _, fb)| f < *fb) {
            best = Some((tau, step.point, f));
        }
        tau *= params.delta;
    }
    Err(LineSearchFailure::Exhausted { best, nfe })
}
