mod common;

use common::*;
use proptest::prelude::*;
use stiefel_opt::direction::skew_norm_sq_factored;
use stiefel_opt::linesearch::NonmonotoneState;
use stiefel_opt::manifold::taylor_candidate;
use stiefel_opt::{
    descent_derivative, feasibility_error, gradient_split, householder, mixed_direction, project, retract,
    svd_thin, Matrix64, MixParams64, Rng,
};

fn dims(max_n: usize) -> impl Strategy<Value = (usize, usize)> {
    (1..=max_n).prop_flat_map(|n| (Just(n), 1..=n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_lemma((n, p) in dims(12), seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let x = point(&mut rng, n, p);
        let m = rng.gaussian_matrix::<f64>(n, p);
        prop_assert!(x.matrix().tr_mul(&m).norm() <= m.norm() + 1e-12);
    }

    #[test]
    fn projection_beats_random_competitors((n, p) in dims(8), seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let x = rng.gaussian_matrix::<f64>(n, p);
        let px = project(&x).unwrap();
        let d = (&x - px.matrix()).norm();
        for _ in 0..20 {
            let q = point(&mut rng, n, p);
            prop_assert!(d <= (&x - q.matrix()).norm() + 1e-10);
        }
    }

    #[test]
    fn projection_matches_polar_factor((n, p) in dims(10), seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let x = rng.gaussian_matrix::<f64>(n, p) + Matrix64::identity(n, p) * 3.0;
        let px = project(&x).unwrap();
        prop_assert!((px.matrix() - polar_by_eig(&x)).norm() <= 1e-9);
        prop_assert!(px.feasibility() <= 1e-12);
    }

    #[test]
    fn svd_reconstructs((n, p) in dims(50), seed in any::<u64>()) {
        let x = Rng::new(seed).gaussian_matrix::<f64>(n, p);
        let svd = svd_thin(&x).unwrap();
        prop_assert!((svd.reconstruct() - &x).norm() <= 1e-10 * x.norm());
        prop_assert!(feasibility_error(&svd.u) <= 1e-12);
        prop_assert!(feasibility_error(&svd.v) <= 1e-12);
        prop_assert!(svd.sigma.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn householder_is_symmetric_orthogonal(n in 1usize..20, seed in any::<u64>()) {
        let v = Rng::new(seed).gaussian_vector::<f64>(n);
        let q = householder(&v).unwrap();
        prop_assert!((&q - q.transpose()).norm() <= 1e-12);
        prop_assert!((q.transpose() * &q - Matrix64::identity(n, n)).norm() <= 1e-12);
    }

    #[test]
    fn retraction_stays_feasible((n, p) in dims(12), seed in any::<u64>(), tau in 0.0f64..10.0) {
        let mut rng = Rng::new(seed);
        let x = point(&mut rng, n, p);
        let (_, h) = tangent(&mut rng, &x, &MixParams64::new(0.6, 0.4).unwrap());
        let z = retract(&x, &h, tau).unwrap();
        prop_assert!(feasibility_error(z.point.matrix()) <= 1e-12);
    }

    #[test]
    fn taylor_remainder_is_third_order((n, p) in dims(10), seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let x = point(&mut rng, n, p);
        let (_, h) = tangent(&mut rng, &x, &MixParams64::default());
        prop_assume!(h.norm() > 1e-6);
        let h = &h / h.norm();
        let err = |tau: f64| {
            (project(&(x.matrix() - &h * tau)).unwrap().matrix() - taylor_candidate(x.matrix(), &h, tau)).norm()
        };
        let ratio = err(1e-3) / err(5e-4);
        prop_assert!((2.5..=3.5).contains(&ratio.log2()), "ratio {}", ratio);
    }

    #[test]
    fn gradient_split_identities((n, p) in dims(12), seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let x = point(&mut rng, n, p);
        let g = rng.gaussian_matrix::<f64>(n, p);
        let split = gradient_split(&x, &g).unwrap();
        let a = split.skew_matrix(&x, &g);
        prop_assert!((&a + a.transpose()).norm() <= 1e-12);
        prop_assert!((&split.grad1 - &a * x.matrix()).norm() <= 1e-10);
        let xm = x.matrix();
        for z in [&split.grad1, &split.grad2] {
            let xtz = xm.tr_mul(z);
            prop_assert!((&xtz + xtz.transpose()).norm() <= 1e-10);
        }
        let factored = skew_norm_sq_factored(xm, &g);
        prop_assert!((factored - a.norm_squared()).abs() <= 1e-10 * (1.0 + a.norm_squared()));
    }

    #[test]
    fn descent_bound_and_closed_form(
        (n, p) in dims(10),
        seed in any::<u64>(),
        alpha in 0.01f64..=1.0,
        beta in 0.0f64..=1.0,
    ) {
        let mut rng = Rng::new(seed);
        let x = point(&mut rng, n, p);
        let g = rng.gaussian_matrix::<f64>(n, p);
        let mix = MixParams64::new(alpha, beta).unwrap();
        let split = gradient_split(&x, &g).unwrap();
        let h = mixed_direction(&split, &mix);
        let dd = descent_derivative(&x, &g, &split, &mix);
        prop_assert!(dd <= -0.5 * alpha * split.skew_norm_sq + 1e-10);
        prop_assert!((dd + g.dot(&h)).abs() <= 1e-10 * (1.0 + dd.abs()));
    }

    #[test]
    fn nonmonotone_average_stays_above_best(
        fs in proptest::collection::vec(-1e3f64..1e3, 1..30),
        eta in 0.0f64..1.0,
    ) {
        let mut state = NonmonotoneState::new(fs[0]);
        let mut fmin = fs[0];
        for &f in &fs[1..] {
            state = state.update(f, eta);
            fmin = fmin.min(f);
            prop_assert!(state.q >= 1.0);
            prop_assert!(state.c >= fmin - 1e-9);
        }
    }
}

#[test]
fn descent_derivative_matches_curve_difference() {
    let mut rng = Rng::new(77);
    for _ in 0..30 {
        let x = point(&mut rng, 9, 3);
        let mix = MixParams64::new(0.5, 0.5).unwrap();
        let (g, h) = tangent(&mut rng, &x, &mix);
        let split = gradient_split(&x, &g).unwrap();
        let dd = descent_derivative(&x, &g, &split, &mix);
        let f = |z: &Matrix64| g.dot(z);
        let t = 1e-6;
        let plus = f(retract(&x, &h, t).unwrap().point.matrix());
        let minus = f(retract(&x, &(-&h), t).unwrap().point.matrix());
        let fd = (plus - minus) / (2.0 * t);
        assert!((fd - dd).abs() <= 1e-4 * dd.abs(), "fd {fd} dd {dd}");
    }
}
