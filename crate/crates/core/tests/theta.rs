use std::f64::consts::PI;

use flatcauchy::theta::{riemann_theta, PeriodMatrix, ThetaCharacteristic, ThetaEngine, ThetaEvalConfig};
use flatcauchy::{CMat, Error, Torus, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `Σ_n exp(πi(n+a)²τ + 2πi(n+a)(z+b))`, summed term by term.
fn char_series(tau: C64, a: f64, b: f64, z: C64) -> C64 {
    let mut s = c(0.0, 0.0);
    for n in -60..=60 {
        let k = n as f64 + a;
        s += (c(0.0, PI) * k * k * tau + c(0.0, 2.0 * PI) * k * (z + b)).exp();
    }
    s
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

// θ(0|i) = π^{1/4}/Γ(3/4), frozen from the series oracle.
const THETA_0_I: f64 = 1.086_434_811_213_308;

#[test]
fn theta_at_i_matches_closed_form_and_series() {
    let p = PeriodMatrix::genus1(c(0.0, 1.0)).unwrap();
    let v = riemann_theta(&[c(0.0, 0.0)], &p, &ThetaEvalConfig::default()).unwrap();
    assert!((v - c(THETA_0_I, 0.0)).norm() < 1e-14);
    let series = char_series(c(0.0, 1.0), 0.0, 0.0, c(0.0, 0.0));
    assert!((series - c(THETA_0_I, 0.0)).norm() < 1e-14);
    let closed = PI.powf(0.25) / statrs::function::gamma::gamma(0.75);
    assert!((closed - THETA_0_I).abs() < 1e-14);
}

#[test]
fn odd_derivative_matches_product_formula() {
    for tau in [c(0.0, 1.0), c(0.3, 0.8), c(-0.2, 1.7)] {
        let t = Torus::new(tau).unwrap();
        let q = (c(0.0, PI) * tau).exp();
        let mut prod = c(1.0, 0.0);
        for n in 1..200 {
            let f = c(1.0, 0.0) - q.powu(2 * n);
            prod *= f * f * f;
        }
        let expected = -2.0 * PI * (c(0.0, PI / 4.0) * tau).exp() * prod;
        assert!(rel(t.odd_theta_prime(), expected) < 1e-12, "tau = {tau}");
    }
}

#[test]
fn odd_theta_vanishes_at_lattice_points() {
    let t = Torus::new(c(0.3, 0.8)).unwrap();
    for z in [c(0.0, 0.0), c(1.0, 0.0), c(0.3, 0.8), c(-1.3, -0.8)] {
        assert!(t.odd_theta(z).unwrap().norm() < 1e-13);
    }
}

#[test]
fn nonconvergent_for_degenerate_period() {
    let p = PeriodMatrix::genus1(c(0.0, 1e-6)).unwrap();
    assert!(matches!(
        ThetaEngine::new(p, ThetaEvalConfig::default()),
        Err(Error::NonConvergent { .. })
    ));
}

#[test]
fn rejects_invalid_period_matrices() {
    let nonsym = CMat::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.1, 0.0), c(0.2, 0.0), c(0.0, 1.0)]);
    assert!(matches!(PeriodMatrix::new(nonsym), Err(Error::InvalidPeriodMatrix(_))));
    let indefinite = CMat::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 2.0), c(0.0, 2.0), c(0.0, 1.0)]);
    assert!(matches!(PeriodMatrix::new(indefinite), Err(Error::InvalidPeriodMatrix(_))));
}

fn genus2() -> PeriodMatrix {
    PeriodMatrix::new(CMat::from_row_slice(
        2,
        2,
        &[c(0.1, 1.1), c(0.25, 0.3), c(0.25, 0.3), c(-0.2, 0.9)],
    ))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn characteristic_matches_direct_series(
        a in 0.0f64..1.0, b in 0.0f64..1.0, zr in -1.0f64..1.0, zi in -0.4f64..0.4, k in 0usize..3
    ) {
        let tau = [c(0.0, 1.0), c(0.0, 2.0), c(0.3, 0.8)][k];
        let t = Torus::new(tau).unwrap();
        let chi = ThetaCharacteristic::genus1(a, b);
        let z = c(zr, zi);
        let v = t.theta_char(&chi, z).unwrap();
        let s = char_series(tau, a, b, z);
        prop_assert!((v - s).norm() <= 1e-11 * (1.0 + s.norm()));
    }

    #[test]
    fn reduction_preserves_values(
        a in -3.0f64..3.0, b in -3.0f64..3.0, zr in -1.0f64..1.0, zi in -0.4f64..0.4
    ) {
        let t = Torus::new(c(0.3, 0.8)).unwrap();
        let chi = ThetaCharacteristic::genus1(a, b);
        let (red, factor) = chi.reduce();
        let z = c(zr, zi);
        let lhs = t.theta_char(&chi, z).unwrap();
        let rhs = factor * t.theta_char(&red, z).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + lhs.norm()));
    }

    #[test]
    fn quasi_periodicity_genus1(
        zr in -1.0f64..1.0, zi in -0.5f64..0.5, m in -2i64..=2, n in -2i64..=2, k in 0usize..3
    ) {
        let tau = [c(0.0, 1.0), c(0.0, 2.0), c(0.3, 0.8)][k];
        let e = ThetaEngine::new(PeriodMatrix::genus1(tau).unwrap(), Default::default()).unwrap();
        let z = c(zr, zi);
        let shifted = e.theta(&[z + m as f64 + tau * n as f64]).unwrap();
        let nf = n as f64;
        let factor = (c(0.0, -PI) * nf * nf * tau - c(0.0, 2.0 * PI) * nf * z).exp();
        let base = e.theta(&[z]).unwrap();
        prop_assert!(rel(shifted, factor * base) <= 1e-10);
    }

    #[test]
    fn quasi_periodicity_genus2(
        z0 in (-1.0f64..1.0, -0.5f64..0.5), z1 in (-1.0f64..1.0, -0.5f64..0.5),
        m in prop::array::uniform2(-2i64..=2), n in prop::array::uniform2(-2i64..=2)
    ) {
        let p = genus2();
        let e = ThetaEngine::new(p.clone(), Default::default()).unwrap();
        let z = [c(z0.0, z0.1), c(z1.0, z1.1)];
        let shift = p.lattice_vector(&n, &m);
        let zs = [z[0] + shift[0], z[1] + shift[1]];
        let om = p.omega();
        let mut quad = c(0.0, 0.0);
        let mut lin = c(0.0, 0.0);
        for i in 0..2 {
            lin += n[i] as f64 * z[i];
            for j in 0..2 {
                quad += n[i] as f64 * om[(i, j)] * n[j] as f64;
            }
        }
        let factor = (c(0.0, -PI) * quad - c(0.0, 2.0 * PI) * lin).exp();
        prop_assert!(rel(e.theta(&zs).unwrap(), factor * e.theta(&z).unwrap()) <= 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences(
        z0 in (-1.0f64..1.0, -0.5f64..0.5), z1 in (-1.0f64..1.0, -0.5f64..0.5)
    ) {
        let e = ThetaEngine::new(genus2(), Default::default()).unwrap();
        let z = [c(z0.0, z0.1), c(z1.0, z1.1)];
        let (v, g) = e.theta_and_gradient(&z).unwrap();
        let h = 1e-5;
        for k in 0..2 {
            let (mut zp, mut zm) = (z, z);
            zp[k] += h;
            zm[k] -= h;
            let fd = (e.theta(&zp).unwrap() - e.theta(&zm).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[k]).norm() <= 1e-6 * (v.norm() + g[k].norm()));
        }
    }

    #[test]
    fn characteristic_gradient_matches_finite_differences(
        a in 0.0f64..1.0, b in 0.0f64..1.0, zr in -1.0f64..1.0, zi in -0.4f64..0.4
    ) {
        let t = Torus::new(c(0.3, 0.8)).unwrap();
        let chi = ThetaCharacteristic::genus1(a, b);
        let z = c(zr, zi);
        let (v, d) = t.theta_char_d(&chi, z).unwrap();
        let h = 1e-5;
        let fd = (t.theta_char(&chi, z + h).unwrap() - t.theta_char(&chi, z - h).unwrap()) / (2.0 * h);
        prop_assert!((fd - d).norm() <= 1e-6 * (v.norm() + d.norm()));
    }
}
