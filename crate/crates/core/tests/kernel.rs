use std::sync::Arc;

use flatcauchy::kernel::*;
use flatcauchy::surface::{build_embedding_functions, FlatLineBundle};
use flatcauchy::{CMat, Error, Torus, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn torus() -> Arc<Torus> {
    Arc::new(Torus::new(c(0.3, 0.8)).unwrap())
}

fn line(a: f64, b: f64) -> LineKernel {
    LineKernel::new(FlatLineBundle::from_characteristic(torus(), a, b).unwrap())
}

#[test]
fn degenerate_bundle_is_rejected() {
    // θ[a;b](0) vanishes at the odd half period a = b = ½.
    let r = FlatLineBundle::from_characteristic(torus(), 0.5, 0.5);
    assert!(matches!(r, Err(Error::DegenerateBundle(_))));
}

#[test]
fn connection_closed_form() {
    let k = line(0.21, 0.37);
    let cc = extract_laurent_coeffs(&k, c(0.1, 0.1), &Stencil::default()).unwrap();
    let closed = k.connection_scalar().unwrap();
    assert!((cc.a[(0, 0)] - closed).norm() < 1e-6);
    assert!((cc.a[(0, 0)] + cc.a_left[(0, 0)]).norm() < 1e-7);
}

#[test]
fn collection_formula_on_the_diagonal() {
    let t = torus();
    let emb = build_embedding_functions(t.clone(), [c(0.1, 0.1), c(0.45, 0.3), c(0.7, 0.75)]).unwrap();
    let k = line(0.21, 0.37);
    let p = c(0.3, 0.5);
    let r = collection_residual(&k, &emb, [c(0.4, 0.1), c(-0.2, 0.9)], p, p).unwrap();
    assert!(r < 1e-8);
}

#[test]
fn direct_sum_is_block_diagonal() {
    let t = torus();
    let ds = DirectSumKernel::lines(t, &[(0.21, 0.37), (0.6, 0.1)]).unwrap();
    let (p, q) = (c(0.1, 0.2), c(0.4, -0.1));
    let m = ds.eval(p, q).unwrap();
    assert_eq!(m[(0, 1)], c(0.0, 0.0));
    assert!((m[(1, 1)] - line(0.6, 0.1).scalar(p, q).unwrap()).norm() < 1e-15);
}

fn pt() -> impl Strategy<Value = C64> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(s, t)| s + c(0.3, 0.8) * t)
}

fn apart(t: &Torus, p: C64, q: C64) -> bool {
    t.reduce(p - q).norm() > 0.05
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residue_is_identity(a in 0.05f64..0.95, b in 0.05f64..0.95, q in pt()) {
        let t = torus();
        let bundle = FlatLineBundle::from_characteristic(t, a, b).unwrap();
        prop_assume!(bundle.theta0().norm() > 0.05);
        let k = LineKernel::new(bundle);
        let r = diagonal_residue(&k, q, &Stencil::default()).unwrap();
        prop_assert!((r - CMat::identity(1, 1)).norm() <= 1e-8);
    }

    #[test]
    fn duality(a in 0.05f64..0.95, b in 0.05f64..0.95, p in pt(), q in pt()) {
        let t = torus();
        prop_assume!(apart(&t, p, q));
        let bundle = FlatLineBundle::from_characteristic(t, a, b).unwrap();
        prop_assume!(bundle.theta0().norm() > 0.05);
        prop_assert!(duality_residual(&LineKernel::new(bundle), p, q).unwrap() <= 1e-10);
    }

    #[test]
    fn kernel_multipliers(a in 0.05f64..0.95, b in 0.05f64..0.95, p in pt(), q in pt()) {
        let t = torus();
        prop_assume!(apart(&t, p, q));
        let bundle = FlatLineBundle::from_characteristic(t.clone(), a, b).unwrap();
        prop_assume!(bundle.theta0().norm() > 0.05);
        let (m1, m2) = bundle.multipliers();
        prop_assert!((m1.norm() - 1.0).abs() < 1e-14 && (m2.norm() - 1.0).abs() < 1e-14);
        let k = LineKernel::new(bundle);
        let base = k.scalar(p, q).unwrap();
        // The half-order differential frame contributes a sign along both cycles.
        let along1 = k.scalar(p + 1.0, q).unwrap();
        let along_tau = k.scalar(p + t.tau(), q).unwrap();
        prop_assert!((along1 + m1 * base).norm() <= 1e-10 * base.norm().max(1.0));
        prop_assert!((along_tau + m2 * base).norm() <= 1e-10 * base.norm().max(1.0));
    }

    #[test]
    fn collection_formula(xr in -1.0f64..1.0, xi in -1.0f64..1.0, p in pt(), q in pt()) {
        let t = torus();
        let emb = build_embedding_functions(t.clone(), [c(0.1, 0.1), c(0.45, 0.3), c(0.7, 0.75)]).unwrap();
        prop_assume!(emb.points().iter().all(|&x| apart(&t, x, p) && apart(&t, x, q)));
        prop_assume!(apart(&t, p, q));
        let k = DirectSumKernel::lines(t, &[(0.21, 0.37), (0.6, 0.1)]).unwrap();
        let r = collection_residual(&k, &emb, [c(xr, xi), c(0.3, -0.2)], p, q).unwrap();
        prop_assert!(r <= 1e-8);
    }
}
