//! Outer iteration: monotone Armijo search and the non-monotone
//! Barzilai-Borwein search with Zhang-Hager averaging, plus stopping rules
//! and report assembly.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::direction::{descent_derivative, gradient_split, mixed_direction, GradientSplit, MixParams};
use crate::error::{Error, Result};
use crate::linesearch::{
    backtrack, bb_steps, clamp_step, BacktrackParams, BbMemory, LineSearchFailure, NonmonotoneState,
};
use crate::manifold::{feasibility_error, StiefelPoint};
use crate::objective::Objective;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Reference value `F(X_k)`.
    Monotone,
    /// Reference value `C_k`, the Zhang-Hager average.
    Nonmonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BbMode {
    /// BB1 on even iterations, BB2 on odd ones.
    Alternate,
    Bb1,
    Bb2,
}

/// How the first trial step of each iteration is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    /// Restart from `tau0` every iteration.
    Constant,
    /// Clamped BB step from the previous pair of iterates.
    Bb,
}

/// Which field the BB gradient difference `R_k` is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BbGradient {
    Grad1,
    Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    GradTol,
    RelChange,
    RelChangeMean,
    MaxIters,
    LineSearchFailed,
    RankDeficient,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(self, Self::GradTol | Self::RelChange | Self::RelChangeMean)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::GradTol => "GradTol",
            Self::RelChange => "RelChange",
            Self::RelChangeMean => "RelChangeMean",
            Self::MaxIters => "MaxIters",
            Self::LineSearchFailed => "LineSearchFailed",
            Self::RankDeficient => "RankDeficient",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig<T: Real> {
    pub mix: MixParams<T>,
    /// Tolerance on `||grad1||_F`.
    pub epsilon: T,
    pub tolx: T,
    pub tolf: T,
    /// Window length of the averaged relative-change test.
    pub window: usize,
    pub max_iters: usize,
    pub delta: T,
    pub rho1: T,
    pub tau_min: T,
    pub tau_max: T,
    pub eta: T,
    /// First trial step (and every trial step under [`StepRule::Constant`]).
    pub tau0: T,
    pub bb_mode: BbMode,
    pub mode: SearchMode,
    pub step_rule: StepRule,
    pub bb_gradient: BbGradient,
    pub max_reductions: usize,
    pub rank_retries: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            mix: MixParams::default(),
            epsilon: T::lit(1e-4),
            tolx: T::lit(1e-6),
            tolf: T::lit(1e-12),
            window: 5,
            max_iters: 1000,
            delta: T::lit(0.3),
            rho1: T::lit(1e-4),
            tau_min: T::lit(1e-20),
            tau_max: T::lit(1e20),
            eta: T::lit(0.85),
            tau0: T::lit(1e-3),
            bb_mode: BbMode::Alternate,
            mode: SearchMode::Nonmonotone,
            step_rule: StepRule::Bb,
            bb_gradient: BbGradient::Grad1,
            max_reductions: 60,
            rank_retries: 10,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    /// Armijo search with a fixed restart step.
    pub fn monotone() -> Self {
        Self {
            mode: SearchMode::Monotone,
            step_rule: StepRule::Constant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit_open = |v: T| v > T::zero() && v < T::one();
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !unit_open(self.delta) {
            return bad("delta must lie in (0, 1)");
        }
        if !unit_open(self.rho1) {
            return bad("rho1 must lie in (0, 1)");
        }
        if !(self.eta >= T::zero() && self.eta < T::one()) {
            return bad("eta must lie in [0, 1)");
        }
        if !(self.tau_min > T::zero() && self.tau_min <= self.tau_max) {
            return bad("need 0 < tau_min <= tau_max");
        }
        if !(self.tau0 > T::zero()) {
            return bad("tau0 must be positive");
        }
        if !(self.epsilon >= T::zero() && self.tolx >= T::zero() && self.tolf >= T::zero()) {
            return bad("tolerances must be nonnegative");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        Ok(())
    }

    fn backtrack_params(&self) -> BacktrackParams<T> {
        BacktrackParams {
            rho1: self.rho1,
            delta: self.delta,
            max_reductions: self.max_reductions,
            rank_retries: self.rank_retries,
        }
    }
}

/// One row of the iteration log. Row `k` describes `X_k`; the step fields
/// (`tau`, `dd`, `skew_norm_sq`, `relx`, `relf`) refer to the move from
/// `X_{k-1}` and are `None` on row 0.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord<T: Real> {
    pub k: usize,
    pub fval: T,
    pub nrmg: T,
    /// Reference value for the next acceptance test (`C_k`, or `F(X_k)` when monotone).
    pub ck: T,
    pub feasibility: T,
    pub tau: Option<T>,
    /// Slope of the curve at `X_{k-1}`.
    pub dd: Option<T>,
    /// `||A||_F^2` at `X_{k-1}`.
    pub skew_norm_sq: Option<T>,
    pub relx: Option<T>,
    pub relf: Option<T>,
    pub fast_path: bool,
    /// Cumulative objective evaluations after this row.
    pub nfe: usize,
}

#[derive(Debug, Clone)]
pub struct SolverReport<T: Real> {
    pub nitr: usize,
    pub nfe: usize,
    pub ngrad: usize,
    pub time_seconds: f64,
    pub fval: T,
    pub nrmg: T,
    pub feasi: T,
    pub termination: Termination,
    pub x: StiefelPoint<T>,
    pub history: Vec<IterRecord<T>>,
}

/// `||G - X (G^T X)||_F`, the residual of `G = X Lambda` with `Lambda = G^T X`.
pub fn kkt_residual<T: Real>(x: &StiefelPoint<T>, g: &DMatrix<T>) -> T {
    let xm = x.matrix();
    (g - xm * g.tr_mul(xm)).norm()
}

fn window_mean<T: Real>(values: impl Iterator<Item = T>) -> (T, usize) {
    let mut sum = T::zero();
    let mut count = 0;
    for v in values {
        sum += v;
        count += 1;
    }
    (sum / T::lit(count.max(1) as f64), count)
}

/// Applies the stopping rules to the latest row of `history`.
pub fn stopping_check<T: Real>(history: &[IterRecord<T>], config: &SolverConfig<T>) -> Option<Termination> {
    let last = history.last()?;
    if last.nrmg <= config.epsilon {
        return Some(Termination::GradTol);
    }
    let k = last.k;
    if k >= 1 {
        if let (Some(relx), Some(relf)) = (last.relx, last.relf) {
            if relx < config.tolx && relf < config.tolf {
                return Some(Termination::RelChange);
            }
        }
        let span = k.min(config.window);
        let recent = &history[history.len().saturating_sub(span)..];
        let (mean_x, nx) = window_mean(recent.iter().filter_map(|r| r.relx));
        let (mean_f, nf) = window_mean(recent.iter().filter_map(|r| r.relf));
        let ten = T::lit(10.0);
        if nx == span && nf == span && mean_x <= ten * config.tolx && mean_f <= ten * config.tolf {
            return Some(Termination::RelChangeMean);
        }
    }
    if k >= config.max_iters {
        return Some(Termination::MaxIters);
    }
    None
}

struct Iterate<T: Real> {
    x: StiefelPoint<T>,
    f: T,
    g: DMatrix<T>,
    split: GradientSplit<T>,
    h: DMatrix<T>,
}

impl<T: Real> Iterate<T> {
    fn new(x: StiefelPoint<T>, f: T, g: DMatrix<T>, mix: &MixParams<T>) -> Result<Self> {
        let split = gradient_split(&x, &g)?;
        let h = mixed_direction(&split, mix);
        Ok(Self { x, f, g, split, h })
    }

    fn nrmg(&self) -> T {
        self.split.grad1.norm()
    }
}

/// Minimizes `objective` over the Stiefel manifold starting from `x0`.
///
/// Errors are reserved for invalid input; numerical breakdowns end the run
/// and are reported through [`SolverReport::termination`].
pub fn solve<T, O>(objective: &O, x0: &StiefelPoint<T>, config: &SolverConfig<T>) -> Result<SolverReport<T>>
where
    T: Real,
    O: Objective<T> + ?Sized,
{
    config.validate()?;
    if objective.dims() != x0.shape() {
        return Err(Error::ShapeMismatch {
            op: "solve",
            left: objective.dims(),
            right: x0.shape(),
        });
    }
    let n = x0.nrows();
    let sqrt_n = T::lit(n as f64).sqrt();
    let params = config.backtrack_params();
    let start = Instant::now();

    let (f0, g0) = objective.value_and_gradient(x0.matrix());
    let mut nfe = 1;
    let mut ngrad = 1;
    let mut cur = Iterate::new(x0.clone(), f0, g0, &config.mix)?;
    let mut nonmonotone = NonmonotoneState::new(f0);
    let mut tau = config.tau0;
    let mut best: Option<(StiefelPoint<T>, T, T)> = None;

    let mut history = vec![IterRecord {
        k: 0,
        fval: f0,
        nrmg: cur.nrmg(),
        ck: f0,
        feasibility: x0.feasibility(),
        tau: None,
        dd: None,
        skew_norm_sq: None,
        relx: None,
        relf: None,
        fast_path: false,
        nfe,
    }];

    let termination = loop {
        if let Some(stop) = stopping_check(&history, config) {
            break stop;
        }
        let k = history.len() - 1;
        let dd = descent_derivative(&cur.x, &cur.g, &cur.split, &config.mix);
        let c_ref = match config.mode {
            SearchMode::Monotone => cur.f,
            SearchMode::Nonmonotone => nonmonotone.c,
        };
        let trial = match config.step_rule {
            StepRule::Constant => config.tau0,
            StepRule::Bb => tau,
        };

        let step = match backtrack(objective, &cur.x, &cur.h, dd, trial, c_ref, &params) {
            Ok(step) => step,
            Err(failure) => {
                nfe += failure.nfe();
                if cur.f.is_finite_value() {
                    best = Some(pick_best(best, &cur));
                }
                break match failure {
                    LineSearchFailure::RankDeficient { .. } => Termination::RankDeficient,
                    _ => Termination::LineSearchFailed,
                };
            }
        };
        nfe += step.nfe;

        if config.mode == SearchMode::Nonmonotone {
            best = Some(pick_best(best, &cur));
        }

        let g_new = objective.gradient(step.point.matrix());
        ngrad += 1;
        let next = Iterate::new(step.point, step.f, g_new, &config.mix)?;

        let s = next.x.matrix() - cur.x.matrix();
        let relx = s.norm() / sqrt_n;
        let relf = (cur.f - next.f).abs() / (cur.f.abs() + T::one());

        if config.step_rule == StepRule::Bb {
            let r = match config.bb_gradient {
                BbGradient::Grad1 => &next.split.grad1 - &cur.split.grad1,
                BbGradient::Direction => &next.h - &cur.h,
            };
            let memory = BbMemory::new(s, r)?;
            let (bb1, bb2) = bb_steps(&memory)?;
            let raw = match config.bb_mode {
                BbMode::Bb1 => bb1,
                BbMode::Bb2 => bb2,
                BbMode::Alternate if k % 2 == 0 => bb1,
                BbMode::Alternate => bb2,
            };
            tau = clamp_step(raw, config.tau_min, config.tau_max);
        }

        nonmonotone = match config.mode {
            SearchMode::Nonmonotone => nonmonotone.update(next.f, config.eta),
            SearchMode::Monotone => NonmonotoneState::new(next.f),
        };

        history.push(IterRecord {
            k: k + 1,
            fval: next.f,
            nrmg: next.nrmg(),
            ck: nonmonotone.c,
            feasibility: next.x.feasibility(),
            tau: Some(step.tau),
            dd: Some(dd),
            skew_norm_sq: Some(cur.split.skew_norm_sq),
            relx: Some(relx),
            relf: Some(relf),
            fast_path: step.fast_path,
            nfe,
        });
        cur = next;
    };
    let time_seconds = start.elapsed().as_secs_f64();

    let (x, fval, nrmg) = match (termination.converged(), best) {
        (false, Some((bx, bf, bg))) if bf < cur.f => (bx, bf, bg),
        _ => (cur.x.clone(), cur.f, cur.nrmg()),
    };
    let feasi = feasibility_error(x.matrix());
    Ok(SolverReport {
        nitr: history.len() - 1,
        nfe,
        ngrad,
        time_seconds,
        fval,
        nrmg,
        feasi,
        termination,
        x,
        history,
    })
}

fn pick_best<T: Real>(best: Option<(StiefelPoint<T>, T, T)>, cur: &Iterate<T>) -> (StiefelPoint<T>, T, T) {
    match best {
        Some(b) if b.1 <= cur.f => b,
        _ => (cur.x.clone(), cur.f, cur.nrmg()),
    }
}
