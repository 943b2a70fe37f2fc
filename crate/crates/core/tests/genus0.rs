use flatcauchy::genus0::*;
use flatcauchy::{CMat, CVec, Error, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn real(x: f64) -> C64 {
    c(x, 0.0)
}

/// Cramer's rule for a 2×2 system, kept separate from the library's solver.
fn cramer2(m: [[C64; 2]; 2], rhs: [C64; 2]) -> [C64; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det,
    ]
}

#[test]
fn single_pair_fixture() {
    let p = Genus0Problem {
        rank: 1,
        zeros: vec![ZeroDatum { point: real(2.0), x: vec![real(1.0)] }],
        poles: vec![PoleDatum { point: real(3.0), u: vec![real(1.0)] }],
    };
    let t = solve_genus0(&p).unwrap();
    // (z − 2)/(z − 3) at z = 10
    assert!((t.eval(real(10.0)).unwrap()[(0, 0)] - real(8.0 / 7.0)).norm() < 1e-14);
}

#[test]
fn sylvester_two_by_two() {
    let lam = [real(0.0), real(1.0)];
    let mu = [real(2.0), real(3.0)];
    // Residues of (z(z−1))/((z−2)(z−3)) at 2 and 3.
    let s = [[real(1.0 / 2.0), real(1.0 / 3.0)], [real(1.0), real(1.0 / 2.0)]];
    let oracle = cramer2(s, [real(1.0), real(1.0)]);
    assert!((oracle[0] - real(-2.0)).norm() < 1e-14);
    assert!((oracle[1] - real(6.0)).norm() < 1e-14);
    let coef = sylvester_coefficients(&lam, &mu).unwrap();
    assert!((coef[0] - real(-2.0)).norm() < 1e-12);
    assert!((coef[1] - real(6.0)).norm() < 1e-12);
    let z = real(5.0);
    assert!((scalar_product_form(&lam, &mu, z) - real(10.0 / 3.0)).norm() < 1e-14);
    assert!((scalar_partial_fraction(&mu, &coef, z) - real(10.0 / 3.0)).norm() < 1e-12);
}

#[test]
fn rejects_bad_problems() {
    let e1 = vec![real(1.0), real(0.0)];
    let e2 = vec![real(0.0), real(1.0)];
    let singular = Genus0Problem {
        rank: 2,
        zeros: vec![ZeroDatum { point: real(0.0), x: e1.clone() }],
        poles: vec![PoleDatum { point: real(1.0), u: e2 }],
    };
    assert!(matches!(solve_genus0(&singular), Err(Error::SingularGamma { .. })));
    let uneven = Genus0Problem { rank: 2, zeros: singular.zeros.clone(), poles: vec![] };
    assert!(matches!(solve_genus0(&uneven), Err(Error::CountMismatch { zeros: 1, poles: 0 })));
    let short = Genus0Problem {
        rank: 2,
        zeros: vec![ZeroDatum { point: real(0.0), x: vec![real(1.0)] }],
        poles: vec![PoleDatum { point: real(1.0), u: e1 }],
    };
    assert!(matches!(solve_genus0(&short), Err(Error::InvalidInput(_))));
    assert!(sylvester_coefficients(&[real(1.0)], &[real(1.0)]).is_err());
}

#[test]
fn empty_problem_is_identity() {
    let t = solve_genus0(&Genus0Problem { rank: 3, zeros: vec![], poles: vec![] }).unwrap();
    assert_eq!(t.eval(c(0.3, 0.1)).unwrap(), CMat::identity(3, 3));
}

fn cplx() -> impl Strategy<Value = C64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| c(a, b))
}

fn separated(points: &[C64], sep: f64) -> bool {
    points.iter().enumerate().all(|(i, a)| points[..i].iter().all(|b| (a - b).norm() >= sep))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_equals_partial_fractions(
        pts in prop::collection::vec(cplx(), 2..=8), z in cplx()
    ) {
        let n = pts.len() / 2;
        let (lam, mu) = (&pts[..n], &pts[n..2 * n]);
        prop_assume!(separated(&pts[..2 * n], 0.2));
        prop_assume!(mu.iter().all(|m| (m - z).norm() > 0.1));
        let coef = sylvester_coefficients(lam, mu).unwrap();
        let a = scalar_product_form(lam, mu, z);
        let b = scalar_partial_fraction(mu, &coef, z);
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(b.norm()).max(1.0));
    }

    #[test]
    fn interpolant_meets_its_data(
        r in 1usize..=3,
        pts in prop::collection::vec(cplx(), 2..=8),
        vecs in prop::collection::vec(cplx(), 24),
        z in cplx(),
    ) {
        let n = pts.len() / 2;
        prop_assume!(separated(&pts[..2 * n], 0.3));
        let zeros: Vec<ZeroDatum> = (0..n)
            .map(|i| ZeroDatum { point: pts[i], x: vecs[i * r..(i + 1) * r].to_vec() })
            .collect();
        let poles: Vec<PoleDatum> = (0..n)
            .map(|j| PoleDatum { point: pts[n + j], u: vecs[12 + j * r..12 + (j + 1) * r].to_vec() })
            .collect();
        let problem = Genus0Problem { rank: r, zeros, poles };
        prop_assume!(gamma_condition(&problem) < 1e6);
        let t = solve_genus0(&problem).unwrap();
        for zd in &problem.zeros {
            let x = CVec::from_column_slice(&zd.x);
            prop_assert!((x.transpose() * t.eval(zd.point).unwrap()).norm() <= 1e-10 * (1.0 + t.eval(zd.point).unwrap().norm()));
        }
        for pd in &problem.poles {
            let u = CVec::from_column_slice(&pd.u);
            let ti = t.eval_inverse(pd.point).unwrap();
            prop_assert!((&ti * &u).norm() <= 1e-10 * (1.0 + ti.norm()));
        }
        prop_assume!(pts[..2 * n].iter().all(|p| (p - z).norm() > 0.1));
        let prod = t.eval(z).unwrap() * t.eval_inverse(z).unwrap();
        prop_assert!((prod - CMat::identity(r, r)).norm() <= 1e-10);
        // T(∞) = I
        let far = t.eval(c(1e8, 0.0)).unwrap();
        prop_assert!((far - CMat::identity(r, r)).norm() <= 1e-6);
    }
}
