//! Riemann theta functions.
//!
//! `θ(z|Ω) = Σ_n exp(πi nᵀΩn + 2πi nᵀz)` summed over the lattice points inside an
//! ellipsoid centred at `−Y⁻¹ Im z`, where `Y = Im Ω`. The ellipsoid radius is chosen
//! from a rigorous Gaussian tail bound, so the truncation error of the sum divided by
//! `exp(π cᵀYc)` (with `c = Y⁻¹ Im z`) stays below the configured target.
//!
//! The bound compares each lattice term with the integral of a majorant over a ball of
//! radius `ρ/2` around it, `ρ` being the length of the shortest lattice vector:
//!
//! ```text
//! Σ_{‖w‖≥R} ‖w‖^k e^{−‖w‖²} ≤ g (2/ρ)^g Σ_j C(g−1+k, j) ρ^{g−1+k−j} Γ((j+1)/2, (R−ρ)²) / 2
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::{CMat, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Symmetric complex `g×g` matrix with positive definite imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodMatrix {
    omega: CMat,
}

impl PeriodMatrix {
    pub fn new(omega: CMat) -> Result<Self> {
        if !omega.is_square() || omega.nrows() == 0 {
            return Err(Error::InvalidPeriodMatrix("not a nonempty square matrix".into()));
        }
        let scale = omega.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if (&omega - omega.transpose()).iter().any(|z| z.norm() > 1e-12 * scale) {
            return Err(Error::InvalidPeriodMatrix("not symmetric".into()));
        }
        let y = omega.map(|z| z.im);
        if y.cholesky().is_none() {
            return Err(Error::InvalidPeriodMatrix(
                "imaginary part is not positive definite".into(),
            ));
        }
        Ok(Self { omega })
    }

    pub fn genus1(tau: C64) -> Result<Self> {
        Self::new(CMat::from_element(1, 1, tau))
    }

    pub fn genus(&self) -> usize {
        self.omega.nrows()
    }

    pub fn omega(&self) -> &CMat {
        &self.omega
    }

    /// `Ωa + b`.
    pub fn point_of(&self, chi: &ThetaCharacteristic) -> Vec<C64> {
        let g = self.genus();
        (0..g)
            .map(|i| (0..g).map(|j| self.omega[(i, j)] * chi.a[j]).sum::<C64>() + chi.b[i])
            .collect()
    }

    /// `Ωm + n` for integer vectors.
    pub fn lattice_vector(&self, m: &[i64], n: &[i64]) -> Vec<C64> {
        let g = self.genus();
        (0..g)
            .map(|i| {
                (0..g).map(|j| self.omega[(i, j)] * m[j] as f64).sum::<C64>() + n[i] as f64
            })
            .collect()
    }
}

/// Half-integer or general real characteristic `[a; b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaCharacteristic {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ThetaCharacteristic {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::InvalidInput("characteristic halves differ in length".into()));
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite characteristic".into()));
        }
        Ok(Self { a, b })
    }

    pub fn zero(g: usize) -> Self {
        Self { a: vec![0.0; g], b: vec![0.0; g] }
    }

    pub fn genus1(a: f64, b: f64) -> Self {
        Self { a: vec![a], b: vec![b] }
    }

    pub fn genus(&self) -> usize {
        self.a.len()
    }

    pub fn negate(&self) -> Self {
        Self { a: self.a.iter().map(|x| -x).collect(), b: self.b.iter().map(|x| -x).collect() }
    }

    /// Real `a, b` with `Ωa + b = z`.
    pub fn from_point(period: &PeriodMatrix, z: &[C64]) -> Result<Self> {
        let g = period.genus();
        if z.len() != g {
            return Err(Error::InvalidInput("point has wrong dimension".into()));
        }
        let om = period.omega();
        let y = om.map(|w| w.im);
        let x = om.map(|w| w.re);
        let yi = nalgebra::DVector::from_iterator(g, z.iter().map(|w| w.im));
        let a = y
            .lu()
            .solve(&yi)
            .ok_or_else(|| Error::InvalidPeriodMatrix("singular imaginary part".into()))?;
        let b: Vec<f64> = (0..g).map(|i| z[i].re - (&x * &a)[i]).collect();
        Ok(Self { a: a.iter().copied().collect(), b })
    }

    /// Reduce both halves into `[0, 1)`.
    ///
    /// Returns the reduced characteristic and the factor `f` with
    /// `θ[a;b](λ) = f · θ[a_red;b_red](λ)`.
    pub fn reduce(&self) -> (Self, C64) {
        let a_red: Vec<f64> = self.a.iter().map(|x| x - x.floor()).collect();
        let k: Vec<f64> = self.b.iter().map(|x| x.floor()).collect();
        let b_red: Vec<f64> = self.b.iter().map(|x| x - x.floor()).collect();
        let phase: f64 = a_red.iter().zip(&k).map(|(a, k)| a * k).sum();
        (Self { a: a_red, b: b_red }, (2.0 * PI * I * phase).exp())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaEvalConfig {
    pub target_abs_error: f64,
    pub max_lattice_radius: usize,
}

impl Default for ThetaEvalConfig {
    fn default() -> Self {
        Self { target_abs_error: 1e-12, max_lattice_radius: 60 }
    }
}

impl ThetaEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1e-15..=1e-6).contains(&self.target_abs_error) {
            return Err(Error::InvalidInput("target_abs_error must lie in [1e-15, 1e-6]".into()));
        }
        if self.max_lattice_radius == 0 {
            return Err(Error::InvalidInput("max_lattice_radius must be positive".into()));
        }
        Ok(())
    }
}

/// Precomputed lattice data for repeated theta evaluation at a fixed `Ω`.
#[derive(Clone, Debug)]
pub struct ThetaEngine {
    period: PeriodMatrix,
    cfg: ThetaEvalConfig,
    /// Upper triangular `T` with `πY = TᵀT`.
    t: DMatrix<f64>,
    y_inv: DMatrix<f64>,
    t_inv_norm: f64,
    t_inv_rows: Vec<f64>,
    rho: f64,
    radius: f64,
}

impl ThetaEngine {
    pub fn new(period: PeriodMatrix, cfg: ThetaEvalConfig) -> Result<Self> {
        cfg.validate()?;
        let g = period.genus();
        let y = period.omega().map(|z| z.im);
        let chol = (y.clone() * PI)
            .cholesky()
            .ok_or_else(|| Error::InvalidPeriodMatrix("imaginary part not positive definite".into()))?;
        let t = chol.l().transpose();
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidPeriodMatrix("degenerate Cholesky factor".into()))?;
        let y_inv = y
            .try_inverse()
            .ok_or_else(|| Error::InvalidPeriodMatrix("singular imaginary part".into()))?;
        let t_inv_norm = t_inv.clone().singular_values().max();
        let t_inv_rows = (0..g).map(|i| t_inv.row(i).norm()).collect();
        let mut engine = Self { period, cfg, t, y_inv, t_inv_norm, t_inv_rows, rho: 0.0, radius: 0.0 };
        engine.rho = engine.shortest_vector();
        engine.radius = engine.radius_for(|r| engine.tail(0, r))?;
        Ok(engine)
    }

    pub fn genus(&self) -> usize {
        self.period.genus()
    }

    pub fn period(&self) -> &PeriodMatrix {
        &self.period
    }

    pub fn config(&self) -> &ThetaEvalConfig {
        &self.cfg
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn shortest_vector(&self) -> f64 {
        let g = self.genus();
        let r0 = (0..g).map(|i| self.t.column(i).norm()).fold(f64::INFINITY, f64::min);
        let mut best = r0;
        let zero = vec![0.0; g];
        self.enumerate(&zero, r0 * (1.0 + 1e-9), &mut |n, sq| {
            if n.iter().any(|&k| k != 0) {
                best = best.min(sq.sqrt());
            }
        });
        best
    }

    /// Tail bound for `Σ_{‖w‖≥R} ‖w‖^k exp(−‖w‖²)` over any translate of the lattice.
    fn tail(&self, k: usize, r: f64) -> f64 {
        let g = self.genus();
        let rho = self.rho;
        if r <= rho {
            return f64::INFINITY;
        }
        let n = g - 1 + k;
        let x = (r - rho) * (r - rho);
        let mut sum = 0.0;
        let mut binom = 1.0;
        for j in 0..=n {
            if j > 0 {
                binom *= (n - j + 1) as f64 / j as f64;
            }
            let s = (j as f64 + 1.0) / 2.0;
            sum += binom * rho.powi((n - j) as i32) * 0.5 * gamma_ur(s, x) * gamma(s);
        }
        g as f64 * (2.0 / rho).powi(g as i32) * sum
    }

    fn radius_for(&self, bound: impl Fn(f64) -> f64) -> Result<f64> {
        let step = 0.05;
        let mut r = self.rho + step;
        let reach = self.t_inv_rows.iter().fold(0.0f64, |a, &b| a.max(b));
        loop {
            if r * reach > self.cfg.max_lattice_radius as f64 {
                return Err(Error::NonConvergent { radius: self.cfg.max_lattice_radius });
            }
            if bound(r) <= self.cfg.target_abs_error {
                return Ok(r);
            }
            r += step;
        }
    }

    /// Visit every `n` with `‖T(n + c)‖ < r`, passing `‖T(n + c)‖²`.
    fn enumerate(&self, c: &[f64], r: f64, visit: &mut dyn FnMut(&[i64], f64)) {
        let g = self.genus();
        let mut n = vec![0i64; g];
        self.enum_level(g, c, r * r, 0.0, &mut n, visit);
    }

    fn enum_level(
        &self,
        level: usize,
        c: &[f64],
        r2: f64,
        acc: f64,
        n: &mut Vec<i64>,
        visit: &mut dyn FnMut(&[i64], f64),
    ) {
        if level == 0 {
            visit(n, acc);
            return;
        }
        let i = level - 1;
        let g = self.genus();
        let s: f64 = (i + 1..g).map(|j| self.t[(i, j)] * (n[j] as f64 + c[j])).sum();
        let tii = self.t[(i, i)];
        let room = (r2 - acc).max(0.0).sqrt();
        let lo = ((-s - room) / tii - c[i]).ceil() as i64;
        let hi = ((-s + room) / tii - c[i]).floor() as i64;
        for k in lo..=hi {
            let v = tii * (k as f64 + c[i]) + s;
            let a = acc + v * v;
            if a < r2 {
                n[i] = k;
                self.enum_level(i, c, r2, a, n, visit);
            }
        }
        n[i] = 0;
    }

    fn center(&self, z: &[C64]) -> Vec<f64> {
        let g = self.genus();
        (0..g).map(|i| (0..g).map(|j| self.y_inv[(i, j)] * z[j].im).sum()).collect()
    }

    fn check_dim(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.genus() {
            return Err(Error::InvalidInput(format!(
                "expected a vector of length {}, got {}",
                self.genus(),
                z.len()
            )));
        }
        if z.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite argument".into()));
        }
        Ok(())
    }

    fn lattice_sum(&self, z: &[C64], r: f64, grad: bool) -> (C64, Vec<C64>) {
        let g = self.genus();
        let om = self.period.omega();
        let c = self.center(z);
        let mut val = C64::new(0.0, 0.0);
        let mut gr = vec![C64::new(0.0, 0.0); if grad { g } else { 0 }];
        self.enumerate(&c, r, &mut |n, _| {
            let mut quad = C64::new(0.0, 0.0);
            let mut lin = C64::new(0.0, 0.0);
            for i in 0..g {
                let ni = n[i] as f64;
                lin += ni * z[i];
                for j in 0..g {
                    quad += ni * (n[j] as f64) * om[(i, j)];
                }
            }
            let term = (PI * I * quad + 2.0 * PI * I * lin).exp();
            val += term;
            if grad {
                for i in 0..g {
                    gr[i] += 2.0 * PI * I * (n[i] as f64) * term;
                }
            }
        });
        (val, gr)
    }

    /// `θ(z|Ω)`.
    pub fn theta(&self, z: &[C64]) -> Result<C64> {
        self.check_dim(z)?;
        Ok(self.lattice_sum(z, self.radius, false).0)
    }

    /// `θ(z|Ω)` together with its gradient in `z`.
    pub fn theta_and_gradient(&self, z: &[C64]) -> Result<(C64, Vec<C64>)> {
        self.check_dim(z)?;
        let c = self.center(z);
        let cmax = c.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let r = self.radius_for(|r| {
            2.0 * PI * (self.t_inv_norm * self.tail(1, r) + cmax * self.tail(0, r))
        })?;
        Ok(self.lattice_sum(z, r.max(self.radius), true))
    }

    fn char_shift(&self, chi: &ThetaCharacteristic, lam: &[C64]) -> Result<(C64, Vec<C64>)> {
        if chi.genus() != self.genus() {
            return Err(Error::InvalidInput("characteristic has wrong genus".into()));
        }
        self.check_dim(lam)?;
        let om = self.period.omega();
        let g = self.genus();
        let mut expo = C64::new(0.0, 0.0);
        for i in 0..g {
            for j in 0..g {
                expo += PI * I * chi.a[i] * om[(i, j)] * chi.a[j];
            }
            expo += 2.0 * PI * I * chi.a[i] * (lam[i] + chi.b[i]);
        }
        let shift = self.period.point_of(chi);
        let w = (0..g).map(|i| lam[i] + shift[i]).collect();
        Ok((expo.exp(), w))
    }

    /// `θ[a;b](λ|Ω) = exp(πi aᵀΩa + 2πi aᵀ(λ+b)) θ(λ + Ωa + b|Ω)`.
    pub fn theta_char(&self, chi: &ThetaCharacteristic, lam: &[C64]) -> Result<C64> {
        let (pref, w) = self.char_shift(chi, lam)?;
        Ok(pref * self.theta(&w)?)
    }

    /// Value and gradient of `θ[a;b](λ|Ω)` in `λ`.
    pub fn theta_char_and_gradient(
        &self,
        chi: &ThetaCharacteristic,
        lam: &[C64],
    ) -> Result<(C64, Vec<C64>)> {
        let (pref, w) = self.char_shift(chi, lam)?;
        let (th, gr) = self.theta_and_gradient(&w)?;
        let grad = gr
            .iter()
            .zip(&chi.a)
            .map(|(d, a)| pref * (2.0 * PI * I * a * th + d))
            .collect();
        Ok((pref * th, grad))
    }
}

/// One-shot `θ(z|Ω)`.
pub fn riemann_theta(z: &[C64], omega: &PeriodMatrix, cfg: &ThetaEvalConfig) -> Result<C64> {
    ThetaEngine::new(omega.clone(), *cfg)?.theta(z)
}

/// One-shot `θ[a;b](λ|Ω)`.
pub fn theta_with_char(
    chi: &ThetaCharacteristic,
    lam: &[C64],
    omega: &PeriodMatrix,
    cfg: &ThetaEvalConfig,
) -> Result<C64> {
    ThetaEngine::new(omega.clone(), *cfg)?.theta_char(chi, lam)
}

/// One-shot gradient of `θ[a;b](λ|Ω)` in `λ`.
pub fn theta_gradient(
    chi: &ThetaCharacteristic,
    lam: &[C64],
    omega: &PeriodMatrix,
    cfg: &ThetaEvalConfig,
) -> Result<Vec<C64>> {
    Ok(ThetaEngine::new(omega.clone(), *cfg)?.theta_char_and_gradient(chi, lam)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau_engine(tau: C64) -> ThetaEngine {
        ThetaEngine::new(PeriodMatrix::genus1(tau).unwrap(), ThetaEvalConfig::default()).unwrap()
    }

    #[test]
    fn rejects_bad_period_matrices() {
        assert!(PeriodMatrix::genus1(C64::new(0.0, -1.0)).is_err());
        let asym = CMat::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 1.0), C64::new(0.1, 0.0), C64::new(0.2, 0.0), C64::new(0.0, 1.0)],
        );
        assert!(matches!(PeriodMatrix::new(asym), Err(Error::InvalidPeriodMatrix(_))));
    }

    #[test]
    fn nearly_degenerate_lattice_is_nonconvergent() {
        let p = PeriodMatrix::genus1(C64::new(0.0, 1e-6)).unwrap();
        let e = ThetaEngine::new(p, ThetaEvalConfig::default());
        assert!(matches!(e, Err(Error::NonConvergent { .. })));
    }

    #[test]
    fn shortest_vector_genus_one() {
        let e = tau_engine(C64::new(0.3, 0.8));
        assert!((e.rho - (PI * 0.8f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn reduction_factor_is_consistent() {
        let e = tau_engine(C64::new(0.1, 1.2));
        let chi = ThetaCharacteristic::genus1(1.3, -0.8);
        let (red, f) = chi.reduce();
        assert!((red.a[0] - 0.3).abs() < 1e-12 && (red.b[0] - 0.2).abs() < 1e-12);
        let lam = [C64::new(0.21, -0.13)];
        let lhs = e.theta_char(&chi, &lam).unwrap();
        let rhs = f * e.theta_char(&red, &lam).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn characteristic_from_point_round_trip() {
        let p = PeriodMatrix::genus1(C64::new(0.3, 0.8)).unwrap();
        let z = [C64::new(0.17, 0.41)];
        let chi = ThetaCharacteristic::from_point(&p, &z).unwrap();
        assert!((p.point_of(&chi)[0] - z[0]).norm() < 1e-14);
    }

    #[test]
    fn config_bounds() {
        let cfg = ThetaEvalConfig { target_abs_error: 1e-20, max_lattice_radius: 10 };
        assert!(cfg.validate().is_err());
    }
}
