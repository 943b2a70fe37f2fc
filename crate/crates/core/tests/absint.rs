use std::sync::Arc;

use flatcauchy::absint::*;
use flatcauchy::genus0::{solve_genus0, Genus0Problem, PoleDatum, ZeroDatum};
use flatcauchy::kernel::{CauchyKernel, DirectSumKernel, LineKernel, SphereKernel};
use flatcauchy::surface::{FlatLineBundle, Surface, SurfacePoint, Torus};
use flatcauchy::verify::{rel_mat, RankTwoExample};
use flatcauchy::{CMat, CVec, Error, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const TAU: C64 = C64::new(0.3, 0.8);

fn torus() -> Arc<Torus> {
    Arc::new(Torus::new(TAU).unwrap())
}

fn pt() -> impl Strategy<Value = C64> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(s, t)| s + TAU * t)
}

fn spread(t: &Torus, pts: &[C64], sep: f64) -> bool {
    pts.iter().enumerate().all(|(i, &a)| pts[..i].iter().all(|&b| t.reduce(a - b).norm() > sep))
}

fn rank_two() -> RankTwoExample {
    let t = torus();
    let tilde0 = FlatLineBundle::from_characteristic(t, 0.23, 0.41).unwrap();
    let p = CMat::from_row_slice(2, 2, &[c(1.0, 0.2), c(0.3, 0.0), c(-0.4, 0.1), c(1.1, -0.3)]);
    RankTwoExample::new(&tilde0, c(0.2, 0.1), c(0.55, 0.45), c(0.8, 0.3), p, [c(1.0, 0.0), c(1.3, 0.2)])
        .unwrap()
}

#[test]
fn rank_two_partial_fractions_reproduce_the_product() {
    let ex = rank_two();
    let q = c(0.05, 0.6);
    let chi: Arc<dyn CauchyKernel> = ex.chi.clone();
    let til: Arc<dyn CauchyKernel> = ex.tilde.clone();
    let sol = build_solution(&ex.data(), q, ex.eval(q).unwrap(), chi, til).unwrap();
    for p in [c(0.4, 0.2), c(0.9, 0.7), c(0.1, 0.3)] {
        assert!(rel_mat(&sol.eval(p).unwrap(), &ex.eval(p).unwrap()) < 1e-9);
        let prod = sol.eval(p).unwrap() * sol.eval_inverse(p).unwrap();
        assert!((prod - CMat::identity(2, 2)).norm() < 1e-9);
    }
    assert!(verify_solution(&sol, &ex.data()).unwrap().max() < 1e-7);
}

#[test]
fn matrix_fay_at_genus_zero_and_one() {
    let x = CVec::from_column_slice(&[c(1.0, 0.5), c(-0.3, 0.2)]);
    let u = CVec::from_column_slice(&[c(0.7, 0.0), c(0.4, -0.6)]);
    let (lam, mu) = (c(0.3, -0.2), c(-1.1, 0.8));
    let problem = Genus0Problem {
        rank: 2,
        zeros: vec![ZeroDatum { point: lam, x: x.iter().copied().collect() }],
        poles: vec![PoleDatum { point: mu, u: u.iter().copied().collect() }],
    };
    let t0 = solve_genus0(&problem).unwrap();
    let s = SphereKernel::new(2);
    let r = matrix_fay_residual(&t0, &s, &s, lam, &x, mu, &u, c(2.0, 1.0), c(-0.5, -1.5)).unwrap();
    assert!(r < 1e-10);

    let ex = rank_two();
    let r = matrix_fay_residual(
        &ex,
        ex.chi.as_ref(),
        ex.tilde.as_ref(),
        ex.lambda,
        &ex.x,
        ex.mu,
        &ex.u,
        c(0.4, 0.2),
        c(0.9, 0.7),
    )
    .unwrap();
    assert!(r < 1e-8);
}

#[test]
fn coupled_pair_on_a_direct_sum() {
    let t = torus();
    let k: Arc<dyn CauchyKernel> = Arc::new(DirectSumKernel::lines(t, &[(0.23, 0.41), (0.61, 0.12)]).unwrap());
    let xi = c(0.35, 0.2);
    let data = AbsintData {
        zeros: vec![Node { point: xi, vectors: vec![vec![c(0.0, 0.0), c(1.0, 0.0)]] }],
        poles: vec![Node { point: xi, vectors: vec![vec![c(1.0, 0.0), c(0.0, 0.0)]] }],
        couplings: vec![Coupling { zero: 0, pole: 0, rho: CMat::from_element(1, 1, c(0.3, 0.0)) }],
    };
    let g = build_gamma(k.as_ref(), &data).unwrap();
    assert_eq!(g[(0, 0)], c(-0.3, 0.0));
    let sol = build_solution(&data, c(0.8, 0.5), CMat::identity(2, 2), k.clone(), k.clone()).unwrap();
    // Q = I is not the boundary value of a solution here, so only the local conditions apply.
    let rep = verify_solution(&sol, &data).unwrap();
    let local = rep.pole_gaps.iter().chain(&rep.zero_gaps).chain(&rep.coupling_residuals);
    assert!(local.fold(0.0f64, |a, &b| a.max(b)) < 1e-7, "{rep:?}");

    let mut missing = data.clone();
    missing.couplings.clear();
    assert!(matches!(build_gamma(k.as_ref(), &missing), Err(Error::InvalidInput(_))));
    let mut violated = data.clone();
    violated.zeros[0].vectors[0] = vec![c(1.0, 0.0), c(1.0, 0.0)];
    assert!(matches!(build_gamma(k.as_ref(), &violated), Err(Error::ZpViolated(_))));
}

#[test]
fn input_errors() {
    let t = torus();
    let tilde = FlatLineBundle::from_characteristic(t.clone(), 0.23, 0.41).unwrap();
    let k: Arc<dyn CauchyKernel> = Arc::new(LineKernel::new(tilde.clone()));
    let data = full_rank_data(&[c(0.2, 0.1)], &[c(0.5, 0.4)], 1);
    let r = build_solution(&data, c(0.2, 0.1) + 1.0, CMat::identity(1, 1), k.clone(), k.clone());
    assert!(matches!(r, Err(Error::BasePointCollision)));
    let other: Arc<dyn CauchyKernel> = Arc::new(LineKernel::new(
        FlatLineBundle::from_characteristic(Arc::new(Torus::new(c(0.0, 1.0)).unwrap()), 0.2, 0.3).unwrap(),
    ));
    let r = build_solution(&data, c(0.7, 0.7), CMat::identity(1, 1), other, k);
    assert!(matches!(r, Err(Error::SurfaceMismatch)));
    // Degree condition fails when χ is unrelated to the divisor.
    let r = scalar_multiplicative(&[c(0.2, 0.1)], &[c(0.5, 0.4)], &tilde, &tilde, c(0.7, 0.7), c(1.0, 0.0));
    assert!(matches!(r, Err(Error::NecessityViolated(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fay_trisecant(z in pt(), l in pt(), m in pt(), p in pt(), q in pt()) {
        let t = torus();
        prop_assume!(spread(&t, &[l, m, p, q], 0.05));
        let s = Surface::Torus(t);
        let sp = SurfacePoint::Coord;
        let r = fay_residual(&s, &[z], &sp(l), &sp(m), &sp(p), &sp(q)).unwrap();
        prop_assert!(r <= 1e-9);
    }

    #[test]
    fn product_form_equals_partial_fractions(
        a in 0.05f64..0.95, b in 0.05f64..0.95,
        nodes in prop::collection::vec(pt(), 5), p in pt(), n in 1usize..=2
    ) {
        let t = torus();
        let tilde = FlatLineBundle::from_characteristic(t.clone(), a, b).unwrap();
        prop_assume!(tilde.theta0().norm() > 0.25);
        let (lam, mu, q) = (&nodes[..n], &nodes[n..2 * n], nodes[4]);
        let used: Vec<C64> = [lam, mu, &[q][..]].concat();
        prop_assume!(spread(&t, &used, 0.08));
        prop_assume!(used.iter().all(|&x| t.reduce(x - p).norm() > 0.05));
        let d: C64 = lam.iter().sum::<C64>() - mu.iter().sum::<C64>();
        let chi = FlatLineBundle::from_point(t.clone(), tilde.point() - d);
        prop_assume!(chi.as_ref().map(|c| c.theta0().norm() > 0.25).unwrap_or(false));
        let chi = chi.unwrap();
        let prod = scalar_multiplicative(lam, mu, &chi, &tilde, q, c(1.0, 0.0)).unwrap();
        let data = full_rank_data(lam, mu, 1);
        let kc: Arc<dyn CauchyKernel> = Arc::new(LineKernel::new(chi.clone()));
        let kt: Arc<dyn CauchyKernel> = Arc::new(LineKernel::new(tilde));
        let pf = build_solution(&data, q, CMat::identity(1, 1), kc, kt).unwrap();
        let (x, y) = (prod.eval_scalar(p).unwrap(), pf.eval(p).unwrap()[(0, 0)]);
        prop_assert!((x - y).norm() <= 1e-9 * x.norm().max(y.norm()));
        if n == 1 {
            let s = special_partial_fraction(&chi, lam[0], mu[0], q, c(1.0, 0.0), p).unwrap();
            prop_assert!((x - s).norm() <= 1e-9 * x.norm().max(s.norm()));
        }
    }
}
