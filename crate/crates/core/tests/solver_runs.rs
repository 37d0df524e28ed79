mod common;

use common::*;
use stiefel_opt::problems::{fd_gradient, Family, Problem, ProblemSpec, WoppType};
use stiefel_opt::{
    solve, BbGradient, BbMode, MixParams, Objective, SearchMode, SolverConfig, SolverConfig64, StepRule,
};

#[test]
fn analytic_gradients_match_finite_differences() {
    for family in [Family::Wopp, Family::Energy, Family::Eig] {
        for seed in 0..5 {
            let spec = ProblemSpec {
                ptype: WoppType::P2,
                ..ProblemSpec::new(family, 12, 4)
            };
            let (problem, x0) = spec.generate::<f64>(seed).unwrap();
            let g = problem.gradient(x0.matrix());
            let fd = fd_gradient(&problem, x0.matrix(), 1e-6);
            assert!(rel_err(&fd, &g) <= 1e-6, "{family:?} seed {seed}: {}", rel_err(&fd, &g));
        }
    }
}

#[test]
fn zero_eta_reproduces_monotone_bb() {
    let (problem, x0) = ProblemSpec::new(Family::Eig, 30, 4).generate::<f64>(3).unwrap();
    let nonmono = SolverConfig64 {
        eta: 0.0,
        ..SolverConfig64::default()
    };
    let mono = SolverConfig64 {
        mode: SearchMode::Monotone,
        step_rule: StepRule::Bb,
        ..SolverConfig64::default()
    };
    let a = solve(&problem, &x0, &nonmono).unwrap();
    let b = solve(&problem, &x0, &mono).unwrap();
    assert_eq!(a.nitr, b.nitr);
    for (ra, rb) in a.history.iter().zip(&b.history) {
        assert!((ra.fval - rb.fval).abs() <= 1e-14 * (1.0 + ra.fval.abs()));
        assert_eq!(ra.tau, rb.tau);
    }
    assert!((a.x.matrix() - b.x.matrix()).norm() <= 1e-14);
}

#[test]
fn monotone_search_strictly_decreases() {
    let spec = ProblemSpec {
        ptype: WoppType::P2,
        ..ProblemSpec::new(Family::Wopp, 20, 5)
    };
    let (problem, x0) = spec.generate::<f64>(11).unwrap();
    let cfg = SolverConfig64 {
        max_iters: 300,
        ..SolverConfig64::monotone()
    };
    let report = solve(&problem, &x0, &cfg).unwrap();
    assert!(report.nitr > 1);
    for w in report.history.windows(2) {
        assert!(w[1].fval < w[0].fval);
    }
}

#[test]
fn history_satisfies_logged_invariants() {
    let spec = ProblemSpec {
        ptype: WoppType::P1,
        ..ProblemSpec::new(Family::Wopp, 25, 6)
    };
    let (problem, x0) = spec.generate::<f64>(5).unwrap();
    let cfg = SolverConfig64 {
        mix: MixParams::new(0.5, 0.5).unwrap(),
        ..SolverConfig64::default()
    };
    let report = solve(&problem, &x0, &cfg).unwrap();
    assert!(report.termination.converged());
    assert!(report.nfe >= report.nitr);
    assert!(max_feasibility(&report.history) <= 1e-12);
    assert_eq!(ck_violation(&report.history), None);
    for w in report.history.windows(2) {
        let (prev, rec) = (&w[0], &w[1]);
        let (tau, dd, a2) = (rec.tau.unwrap(), rec.dd.unwrap(), rec.skew_norm_sq.unwrap());
        assert!(dd <= -0.25 * a2 + 1e-10);
        // Sufficient decrease against the previous reference value.
        assert!(rec.fval < prev.ck + cfg.rho1 * tau * dd);
    }
}

#[test]
fn repeated_solves_are_identical() {
    let (problem, x0) = ProblemSpec::new(Family::Energy, 30, 4).generate::<f64>(8).unwrap();
    let cfg = SolverConfig64 {
        mix: MixParams::new(0.7, 0.3).unwrap(),
        ..SolverConfig64::default()
    };
    let a = solve(&problem, &x0, &cfg).unwrap();
    let b = solve(&problem, &x0, &cfg).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.x, b.x);
}

#[test]
fn step_variants_all_converge() {
    let (problem, x0) = ProblemSpec::new(Family::Eig, 25, 3).generate::<f64>(2).unwrap();
    for bb_mode in [BbMode::Alternate, BbMode::Bb1, BbMode::Bb2] {
        for bb_gradient in [BbGradient::Grad1, BbGradient::Direction] {
            let cfg = SolverConfig64 {
                bb_mode,
                bb_gradient,
                ..SolverConfig64::default()
            };
            let report = solve(&problem, &x0, &cfg).unwrap();
            assert!(report.termination.converged(), "{bb_mode:?} {bb_gradient:?}");
            assert!(problem.error(&report.x).unwrap() <= 1e-8);
        }
    }
}

#[test]
fn single_precision_solve() {
    let (problem, x0) = ProblemSpec::new(Family::Eig, 15, 2).generate::<f32>(4).unwrap();
    let cfg = SolverConfig::<f32> {
        epsilon: 1e-2,
        tolx: 1e-5,
        tolf: 1e-7,
        ..SolverConfig::default()
    };
    let report = solve(&problem, &x0, &cfg).unwrap();
    assert!(report.feasi <= 2e-5);
    let err = problem.error(&report.x).unwrap();
    assert!(err <= 1e-3, "error {err}");
    assert!(matches!(problem, Problem::Eig(_)));
}
