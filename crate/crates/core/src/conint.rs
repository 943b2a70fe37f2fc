//! Zero-pole interpolation on a determinantal representation.
//!
//! Data live on the kernel bundles of a reference pencil `Ũ(z) = z₁σ₂ − z₂σ₁ + γ̃`:
//! column vectors `φ_{jβ} ∈ ker Ũ(μʲ)` at poles and row vectors `ψ_{iα}` in the left
//! kernel of `Ũ(λⁱ)` at zeros. For a direction `ξ` with `ξ·(μʲ − λⁱ) ≠ 0`,
//!
//! ```text
//! Γ⁰_{ij,αβ} = ψ_{iα}(ξ₁σ₁ + ξ₂σ₂)φ_{jβ} / (ξ·(μʲ − λⁱ))      (−ρ on coincidences)
//! γ          = γ̃ − σ₁φΓ⁰⁻¹ψσ₂ + σ₂φΓ⁰⁻¹ψσ₁
//! S(z)       = I + φ diag(ξ·(z − μʲ))⁻¹ Γ⁰⁻¹ ψ (ξ₁σ₁ + ξ₂σ₂)
//! S_ℓ⁻¹(z)   = I − (ξ₁σ₁ + ξ₂σ₂) φ Γ⁰⁻¹ diag(ξ·(z − λⁱ))⁻¹ ψ
//! ```

use crate::absint::{AbsintData, BundleMap, Coupling};
use crate::detrep::{left_sections, right_sections, Pencil};
use crate::error::{Error, Result};
use crate::kernel::{check_torus, CauchyKernel};
use crate::linalg::{checked_inverse, frob, left_null_space, null_space};
use crate::surface::EmbeddingPair;
use crate::{CMat, CVec, C64};

pub const SINGULAR_COND: f64 = 1e12;
const COINCIDENCE_TOL: f64 = 1e-9;

/// A point of the affine curve, optionally with its preimage on the torus, carrying
/// vectors of length `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveNode {
    pub coords: [C64; 2],
    pub surface_point: Option<C64>,
    pub vectors: Vec<CVec>,
}

#[derive(Clone, Debug)]
pub struct ConintData {
    pub pencil: Pencil,
    /// Rows `ψ_{iα}`, stored as vectors.
    pub zeros: Vec<CurveNode>,
    /// Columns `φ_{jβ}`.
    pub poles: Vec<CurveNode>,
    pub couplings: Vec<Coupling>,
}

fn dot2(xi: [C64; 2], a: [C64; 2]) -> C64 {
    xi[0] * a[0] + xi[1] * a[1]
}

fn diff(a: [C64; 2], b: [C64; 2]) -> [C64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

impl ConintData {
    fn flat(nodes: &[CurveNode]) -> Vec<(usize, usize, [C64; 2], &CVec)> {
        let mut out = Vec::new();
        for (i, n) in nodes.iter().enumerate() {
            for (a, v) in n.vectors.iter().enumerate() {
                out.push((i, a, n.coords, v));
            }
        }
        out
    }

    pub fn coupling(&self, zero: usize, pole: usize) -> Option<&Coupling> {
        self.couplings.iter().find(|c| c.zero == zero && c.pole == pole)
    }

    pub fn coincident(&self, zero: usize, pole: usize) -> bool {
        let d = diff(self.zeros[zero].coords, self.poles[pole].coords);
        d[0].norm().max(d[1].norm()) <= COINCIDENCE_TOL
    }

    /// `(φ, ψ)` as matrices of shape `M × N∞` and `N₀ × M`.
    pub fn matrices(&self) -> (CMat, CMat) {
        let m = self.pencil.size();
        let ps = Self::flat(&self.poles);
        let zs = Self::flat(&self.zeros);
        let phi = CMat::from_fn(m, ps.len(), |r, c| ps[c].3[r]);
        let psi = CMat::from_fn(zs.len(), m, |r, c| zs[r].3[c]);
        (phi, psi)
    }

    pub fn validate(&self, xi: [C64; 2]) -> Result<()> {
        self.pencil.validate()?;
        let m = self.pencil.size();
        let n0: usize = self.zeros.iter().map(|n| n.vectors.len()).sum();
        let ni: usize = self.poles.iter().map(|n| n.vectors.len()).sum();
        if n0 != ni {
            return Err(Error::CountMismatch { zeros: n0, poles: ni });
        }
        if self.zeros.iter().chain(&self.poles).any(|n| n.vectors.iter().any(|v| v.len() != m)) {
            return Err(Error::InvalidInput(format!("vectors must have length {m}")));
        }
        let xs = self.pencil.xi_sigma(xi);
        for i in 0..self.zeros.len() {
            for j in 0..self.poles.len() {
                match (self.coincident(i, j), self.coupling(i, j)) {
                    (true, None) => {
                        return Err(Error::InvalidInput(format!(
                            "zero {i} and pole {j} coincide but no coupling was given"
                        )))
                    }
                    (false, Some(_)) => {
                        return Err(Error::InvalidInput(format!(
                            "coupling given for distinct zero {i} and pole {j}"
                        )))
                    }
                    (true, Some(c)) => {
                        if c.rho.shape()
                            != (self.zeros[i].vectors.len(), self.poles[j].vectors.len())
                        {
                            return Err(Error::InvalidInput("coupling has wrong shape".into()));
                        }
                        for psi in &self.zeros[i].vectors {
                            for phi in &self.poles[j].vectors {
                                let v = (psi.transpose() * &xs * phi)[(0, 0)].norm();
                                let scale = psi.norm() * frob(&xs) * phi.norm();
                                if v > 1e-8 * scale {
                                    return Err(Error::ZpViolated(v / scale));
                                }
                            }
                        }
                    }
                    (false, None) => {
                        let d = dot2(xi, diff(self.poles[j].coords, self.zeros[i].coords));
                        if d.norm() < 1e-12 {
                            return Err(Error::XiDenominatorZero);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Residuals `‖Ũ(μʲ)φ‖` and `‖ψŨ(λⁱ)‖`, each relative to the norms involved.
    pub fn membership_residuals(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for n in &self.poles {
            let u = self.pencil.eval(n.coords);
            for v in &n.vectors {
                out.push((&u * v).norm() / (frob(&u) * v.norm()));
            }
        }
        for n in &self.zeros {
            let u = self.pencil.eval(n.coords);
            for v in &n.vectors {
                out.push((v.transpose() * &u).norm() / (frob(&u) * v.norm()));
            }
        }
        out
    }
}

pub fn build_gamma0(data: &ConintData, xi: [C64; 2]) -> Result<CMat> {
    data.validate(xi)?;
    let xs = data.pencil.xi_sigma(xi);
    let zs = ConintData::flat(&data.zeros);
    let ps = ConintData::flat(&data.poles);
    let mut g = CMat::zeros(zs.len(), ps.len());
    for (r, (i, a, lam, psi)) in zs.iter().enumerate() {
        for (c, (j, b, mu, phi)) in ps.iter().enumerate() {
            g[(r, c)] = match data.coupling(*i, *j) {
                Some(cp) => -cp.rho[(*a, *b)],
                None => (psi.transpose() * &xs * *phi)[(0, 0)] / dot2(xi, diff(*mu, *lam)),
            };
        }
    }
    Ok(g)
}

#[derive(Clone, Debug)]
pub struct ConintSolution {
    pub xi: [C64; 2],
    pub pencil: Pencil,
    pub reference: Pencil,
    pub gamma0: CMat,
    phi: CMat,
    psi: CMat,
    g_inv: CMat,
    mu: Vec<[C64; 2]>,
    lambda: Vec<[C64; 2]>,
}

pub fn solve_conint(data: &ConintData, xi: [C64; 2]) -> Result<ConintSolution> {
    let gamma0 = build_gamma0(data, xi)?;
    let g_inv = if gamma0.is_empty() {
        gamma0.clone()
    } else {
        checked_inverse(&gamma0, SINGULAR_COND).map_err(|cond| Error::SingularGamma0 { cond })?
    };
    let (phi, psi) = data.matrices();
    let p = &data.pencil;
    let core = &phi * &g_inv * &psi;
    let gamma = &p.gamma - &p.sigma1 * &core * &p.sigma2 + &p.sigma2 * &core * &p.sigma1;
    let expand = |nodes: &[CurveNode]| -> Vec<[C64; 2]> {
        nodes.iter().flat_map(|n| n.vectors.iter().map(move |_| n.coords)).collect()
    };
    Ok(ConintSolution {
        xi,
        pencil: Pencil { gamma, ..p.clone() },
        reference: p.clone(),
        gamma0,
        phi,
        psi,
        g_inv,
        mu: expand(&data.poles),
        lambda: expand(&data.zeros),
    })
}

impl ConintSolution {
    fn inv_diag(&self, nodes: &[[C64; 2]], z: [C64; 2]) -> Result<CMat> {
        let mut d = CMat::zeros(nodes.len(), nodes.len());
        for (k, &n) in nodes.iter().enumerate() {
            let v = dot2(self.xi, diff(z, n));
            if v.norm() == 0.0 {
                return Err(Error::PointOnExcludedSet);
            }
            d[(k, k)] = 1.0 / v;
        }
        Ok(d)
    }

    /// Full matrix of `S(z)`; its action is meaningful on `ker U(z)`.
    pub fn s_matrix(&self, z: [C64; 2]) -> Result<CMat> {
        let m = self.pencil.size();
        let xs = self.pencil.xi_sigma(self.xi);
        Ok(CMat::identity(m, m) + &self.phi * self.inv_diag(&self.mu, z)? * &self.g_inv * &self.psi * xs)
    }

    /// Full matrix of `S_ℓ⁻¹(z)`, acting from the right on left kernel vectors.
    pub fn s_left_inverse_matrix(&self, z: [C64; 2]) -> Result<CMat> {
        let m = self.pencil.size();
        let xs = self.pencil.xi_sigma(self.xi);
        Ok(CMat::identity(m, m)
            - xs * &self.phi * &self.g_inv * self.inv_diag(&self.lambda, z)? * &self.psi)
    }

    /// `S(z)` applied after projecting `v` onto the numerical kernel of `U(z)`.
    pub fn apply(&self, z: [C64; 2], v: &CVec) -> Result<CVec> {
        let k = null_space(&self.pencil.eval(z), self.pencil.rank);
        let proj = &k * (k.adjoint() * v);
        Ok(self.s_matrix(z)? * proj)
    }

    /// `‖Ũ(z) S(z) K‖` for an orthonormal basis `K` of `ker U(z)`, and the analogue for
    /// `S_ℓ⁻¹` on left kernels, both relative.
    pub fn kernel_mapping_residuals(&self, z: [C64; 2]) -> Result<[f64; 2]> {
        let r = self.pencil.rank;
        let u_new = self.pencil.eval(z);
        let u_ref = self.reference.eval(z);
        let k = null_space(&u_new, r);
        let w = self.s_matrix(z)? * k;
        let right = frob(&(&u_ref * &w)) / (frob(&u_ref) * frob(&w));
        let l = left_null_space(&u_new, r);
        let wl = l * self.s_left_inverse_matrix(z)?;
        let left = frob(&(&wl * &u_ref)) / (frob(&u_ref) * frob(&wl));
        Ok([right, left])
    }
}

/// `φ_{jβ} = ũ^×(μʲ) u_{jβ}`, `ψ_{iα} = x_{iα}ᵀ ũ_ℓ^×(λⁱ)`, coordinates `λ(·)`.
pub fn convert_absint_to_conint(
    data: &AbsintData,
    tilde: &dyn CauchyKernel,
    emb: &EmbeddingPair,
    reference: &Pencil,
) -> Result<ConintData> {
    check_torus(tilde, emb)?;
    let t = emb.torus();
    let near_infinity = |p: C64| emb.points().iter().any(|&x| t.same_point(p, x, 1e-8));
    if data.zeros.iter().chain(&data.poles).any(|n| near_infinity(n.point)) {
        return Err(Error::PoleCollision);
    }
    let mut poles = Vec::new();
    for n in &data.poles {
        let sec = right_sections(tilde, emb, n.point)?;
        let vectors = n.vectors.iter().map(|u| &sec * CVec::from_column_slice(u)).collect();
        poles.push(CurveNode { coords: emb.eval(n.point)?, surface_point: Some(n.point), vectors });
    }
    let mut zeros = Vec::new();
    for n in &data.zeros {
        let sec = left_sections(tilde, emb, n.point)?;
        let vectors = n
            .vectors
            .iter()
            .map(|x| (CVec::from_column_slice(x).transpose() * &sec).transpose())
            .collect();
        zeros.push(CurveNode { coords: emb.eval(n.point)?, surface_point: Some(n.point), vectors });
    }
    Ok(ConintData {
        pencil: reference.clone(),
        zeros,
        poles,
        couplings: data.couplings.clone(),
    })
}

/// Relative residual of `S(p) β⁻¹ u^{×'}(p) = ũ^×(p) T(p)` with `β⁻¹ = diag(T(xⁱ))`.
pub fn check_intertwining(
    sol: &ConintSolution,
    t: &dyn BundleMap,
    chi: &dyn CauchyKernel,
    tilde: &dyn CauchyKernel,
    emb: &EmbeddingPair,
    beta_inv: &[CMat],
    p: C64,
) -> Result<f64> {
    let z = emb.eval(p)?;
    let bi = crate::linalg::block_diag(beta_inv);
    let lhs = sol.s_matrix(z)? * bi * right_sections(chi, emb, p)?;
    let rhs = right_sections(tilde, emb, p)? * t.eval(p)?;
    Ok(frob(&(&lhs - &rhs)) / frob(&lhs).max(frob(&rhs)).max(1e-300))
}

/// Step for the central differences in [`check_condition_i3`].
pub const I3_STEP: f64 = 1e-5;

/// Left kernel frame of `U(z)` normalised against `b0` so that it varies holomorphically.
fn continued_left_frame(pencil: &Pencil, z: [C64; 2], b0: &CMat) -> Result<CMat> {
    let k = left_null_space(&pencil.eval(z), pencil.rank);
    let g = &k * b0.adjoint();
    let gi = checked_inverse(&g, 1e10).map_err(|_| Error::PointOnExcludedSet)?;
    Ok(gi * k)
}

/// Residuals `|ρ_computed − ρ_{ij,αβ}|` of the coupled condition at the coincident
/// zero `zero` and pole `pole`, one per `(α, β)`.
pub fn check_condition_i3(
    sol: &ConintSolution,
    data: &ConintData,
    emb: &EmbeddingPair,
    zero: usize,
    pole: usize,
) -> Result<Vec<f64>> {
    let cp = data.coupling(zero, pole).ok_or(Error::NoCoincidence)?;
    let xi_pt = data.zeros[zero]
        .surface_point
        .ok_or_else(|| Error::InvalidInput("coincident node needs its surface point".into()))?;
    let h = I3_STEP;
    let xi = sol.xi;
    let xs = sol.pencil.xi_sigma(xi);
    let z_at = |t: f64| emb.eval(xi_pt + t);
    let b0 = left_null_space(&sol.pencil.eval(z_at(0.0)?), sol.pencil.rank);
    let frame = |t: f64| continued_left_frame(&sol.pencil, z_at(t)?, &b0);
    let sinv = |t: f64| sol.s_left_inverse_matrix(z_at(t)?);
    let (gp, gm) = (frame(h)?, frame(-h)?);
    let (sp, sm) = (sinv(h)?, sinv(-h)?);
    let g0 = frame(0.0)?;
    let res = (&sp - &sm) * C64::new(h / 2.0, 0.0);
    let g0r = &g0 * &res;
    let pinv = g0r
        .clone()
        .pseudo_inverse(1e-10 * frob(&g0r))
        .map_err(|e| Error::InvalidInput(e.into()))?;
    let d1 = emb.derivative(xi_pt)?;
    let d2 = emb.second_derivative(xi_pt)?;
    let (l1, l2) = (dot2(xi, d1), dot2(xi, d2));
    let mut out = Vec::new();
    for (al, psi) in data.zeros[zero].vectors.iter().enumerate() {
        let y0 = psi.transpose() * &pinv;
        let psi1 = (&y0 * &gp * &sp + &y0 * &gm * &sm) / C64::new(2.0, 0.0);
        for (b, phi) in data.poles[pole].vectors.iter().enumerate() {
            let a = (&psi1 * &xs * phi)[(0, 0)];
            let b0v = (psi.transpose() * &xs * phi)[(0, 0)];
            let rho = a / l1 - b0v * l2 / (C64::new(2.0, 0.0) * l1 * l1);
            out.push((rho - cp.rho[(al, b)]).norm());
        }
    }
    Ok(out)
}

/// Maximum entrywise difference between `Γ` of the abstract data and `Γ⁰` of the
/// converted data, relative to the largest entry.
pub fn check_gamma_equality(
    data: &AbsintData,
    tilde: &dyn CauchyKernel,
    converted: &ConintData,
    xi: [C64; 2],
) -> Result<f64> {
    let g = crate::absint::build_gamma(tilde, data)?;
    let g0 = build_gamma0(converted, xi)?;
    if g.shape() != g0.shape() {
        return Err(Error::NotSquare);
    }
    let scale = g.iter().chain(g0.iter()).map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    Ok((g - g0).iter().map(|v| v.norm()).fold(0.0, f64::max) / scale)
}
