//! Zero-pole interpolation for bundle maps `T: χ → χ̃` between flat bundles.
//!
//! With `Γ_{ij,αβ} = −x_{iα}ᵀ K(χ̃; λⁱ, μʲ) u_{jβ}` (or `−ρ_{ij,αβ}` when `λⁱ = μʲ`),
//! the interpolant normalised by `T(q) = Q` is
//!
//! ```text
//! T(p)  = [K(χ̃; p, q) + K_{μ,u}(p) Γ⁻¹ K^{x,λ}(q)] Q K(χ; p, q)⁻¹
//! T(p)⁻¹ = K(χ; q, p)⁻¹ Q⁻¹ [K(χ̃; q, p) + K_{μ,u}(q) Γ⁻¹ K^{x,λ}(p)]
//! ```
//!
//! where `K_{μ,u}(p) = [K(χ̃; p, μʲ) u_{jβ}]` and `K^{x,λ}(q) = [x_{iα}ᵀ K(χ̃; λⁱ, q)]`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{same_point, same_surface, CauchyKernel};
use crate::linalg::{checked_inverse, frob, projector_above};
use crate::surface::{abel_jacobi, prime_form, FlatLineBundle, Surface, SurfacePoint, Torus};
use crate::theta::ThetaEngine;
use crate::{CMat, CVec, C64};

pub const SINGULAR_COND: f64 = 1e12;
/// Points closer than this (modulo the lattice) are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// A bundle map evaluated in the global frame.
pub trait BundleMap {
    fn rank(&self) -> usize;
    fn eval(&self, p: C64) -> Result<CMat>;
}

/// Adapter turning a closure into a [`BundleMap`].
pub struct FnMap<F: Fn(C64) -> Result<CMat>> {
    pub rank: usize,
    pub f: F,
}

impl<F: Fn(C64) -> Result<CMat>> BundleMap for FnMap<F> {
    fn rank(&self) -> usize {
        self.rank
    }

    fn eval(&self, p: C64) -> Result<CMat> {
        (self.f)(p)
    }
}

impl BundleMap for crate::genus0::RationalMatrixFunction {
    fn rank(&self) -> usize {
        crate::genus0::RationalMatrixFunction::rank(self)
    }

    fn eval(&self, p: C64) -> Result<CMat> {
        crate::genus0::RationalMatrixFunction::eval(self, p)
    }
}

/// Interpolation node: a point with a list of vectors (null vectors `x_{iα}` at zeros,
/// pole vectors `u_{jβ}` at poles).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub point: C64,
    pub vectors: Vec<Vec<C64>>,
}

/// `ρ_{ij}` for a coincident zero `i` and pole `j`, of shape `t_i × s_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    pub zero: usize,
    pub pole: usize,
    pub rho: CMat,
}

#[derive(Clone, Debug, Default)]
pub struct AbsintData {
    pub zeros: Vec<Node>,
    pub poles: Vec<Node>,
    pub couplings: Vec<Coupling>,
}

impl AbsintData {
    pub fn n_zero_vectors(&self) -> usize {
        self.zeros.iter().map(|n| n.vectors.len()).sum()
    }

    pub fn n_pole_vectors(&self) -> usize {
        self.poles.iter().map(|n| n.vectors.len()).sum()
    }

    fn flat(nodes: &[Node]) -> Vec<(usize, usize, C64, CVec)> {
        let mut out = Vec::new();
        for (i, n) in nodes.iter().enumerate() {
            for (a, v) in n.vectors.iter().enumerate() {
                out.push((i, a, n.point, CVec::from_column_slice(v)));
            }
        }
        out
    }

    pub fn coupling(&self, zero: usize, pole: usize) -> Option<&Coupling> {
        self.couplings.iter().find(|c| c.zero == zero && c.pole == pole)
    }

    pub fn validate(&self, k: &dyn CauchyKernel) -> Result<()> {
        let r = k.rank();
        let (n0, ni) = (self.n_zero_vectors(), self.n_pole_vectors());
        if n0 != ni {
            return Err(Error::CountMismatch { zeros: n0, poles: ni });
        }
        if self.zeros.iter().chain(&self.poles).any(|n| n.vectors.iter().any(|v| v.len() != r)) {
            return Err(Error::InvalidInput(format!("vectors must have length {r}")));
        }
        for (i, z) in self.zeros.iter().enumerate() {
            for (j, p) in self.poles.iter().enumerate() {
                let coincident = same_point(k, z.point, p.point, COINCIDENCE_TOL);
                match (coincident, self.coupling(i, j)) {
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
                        if c.rho.shape() != (z.vectors.len(), p.vectors.len()) {
                            return Err(Error::InvalidInput("coupling has wrong shape".into()));
                        }
                        for x in &z.vectors {
                            for u in &p.vectors {
                                let xu: C64 = x.iter().zip(u).map(|(a, b)| a * b).sum();
                                let scale = norm(x) * norm(u);
                                if xu.norm() > 1e-8 * scale {
                                    return Err(Error::ZpViolated(xu.norm() / scale));
                                }
                            }
                        }
                    }
                    (false, None) => {}
                }
            }
        }
        Ok(())
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// The block matrix `Γ`.
pub fn build_gamma(tilde: &dyn CauchyKernel, data: &AbsintData) -> Result<CMat> {
    data.validate(tilde)?;
    let zs = AbsintData::flat(&data.zeros);
    let ps = AbsintData::flat(&data.poles);
    let mut g = CMat::zeros(zs.len(), ps.len());
    for (r, (i, a, lam, x)) in zs.iter().enumerate() {
        for (c, (j, b, mu, u)) in ps.iter().enumerate() {
            g[(r, c)] = match data.coupling(*i, *j) {
                Some(cp) => -cp.rho[(*a, *b)],
                None => -(x.transpose() * tilde.eval(*lam, *mu)? * u)[(0, 0)],
            };
        }
    }
    Ok(g)
}

/// Evaluator for the interpolant and its inverse.
#[derive(Clone, Debug)]
pub struct BundleMapEvaluator {
    chi: Arc<dyn CauchyKernel>,
    tilde: Arc<dyn CauchyKernel>,
    zeros: Vec<(C64, CVec)>,
    poles: Vec<(C64, CVec)>,
    gamma: CMat,
    gamma_inv: CMat,
    q: C64,
    big_q: CMat,
    kxl_q: CMat,
    kmu_q: CMat,
}

pub fn build_solution(
    data: &AbsintData,
    q: C64,
    big_q: CMat,
    chi: Arc<dyn CauchyKernel>,
    tilde: Arc<dyn CauchyKernel>,
) -> Result<BundleMapEvaluator> {
    if !same_surface(chi.as_ref(), tilde.as_ref()) {
        return Err(Error::SurfaceMismatch);
    }
    let r = tilde.rank();
    if chi.rank() != r || big_q.shape() != (r, r) {
        return Err(Error::InvalidInput("rank mismatch between bundles and Q".into()));
    }
    for n in data.zeros.iter().chain(&data.poles) {
        if same_point(tilde.as_ref(), n.point, q, COINCIDENCE_TOL) {
            return Err(Error::BasePointCollision);
        }
    }
    let gamma = build_gamma(tilde.as_ref(), data)?;
    let gamma_inv = if gamma.is_empty() {
        gamma.clone()
    } else {
        checked_inverse(&gamma, SINGULAR_COND).map_err(|cond| Error::SingularGamma { cond })?
    };
    let zeros = AbsintData::flat(&data.zeros).into_iter().map(|(_, _, p, v)| (p, v)).collect();
    let poles = AbsintData::flat(&data.poles).into_iter().map(|(_, _, p, v)| (p, v)).collect();
    let mut t = BundleMapEvaluator {
        chi,
        tilde,
        zeros,
        poles,
        gamma,
        gamma_inv,
        q,
        big_q,
        kxl_q: CMat::zeros(0, 0),
        kmu_q: CMat::zeros(0, 0),
    };
    t.kxl_q = t.k_xl(q)?;
    t.kmu_q = t.k_mu(q)?;
    Ok(t)
}

impl BundleMapEvaluator {
    pub fn gamma(&self) -> &CMat {
        &self.gamma
    }

    pub fn base_point(&self) -> C64 {
        self.q
    }

    pub fn base_value(&self) -> &CMat {
        &self.big_q
    }

    pub fn chi(&self) -> &Arc<dyn CauchyKernel> {
        &self.chi
    }

    pub fn tilde(&self) -> &Arc<dyn CauchyKernel> {
        &self.tilde
    }

    /// `K_{μ,u}(p)`, of shape `r × N∞`.
    pub fn k_mu(&self, p: C64) -> Result<CMat> {
        let r = self.tilde.rank();
        let mut m = CMat::zeros(r, self.poles.len());
        for (j, (mu, u)) in self.poles.iter().enumerate() {
            m.set_column(j, &(self.tilde.eval(p, *mu)? * u));
        }
        Ok(m)
    }

    /// `K^{x,λ}(q)`, of shape `N₀ × r`.
    pub fn k_xl(&self, q: C64) -> Result<CMat> {
        let r = self.tilde.rank();
        let mut m = CMat::zeros(self.zeros.len(), r);
        for (i, (lam, x)) in self.zeros.iter().enumerate() {
            m.set_row(i, &(x.transpose() * self.tilde.eval(*lam, q)?));
        }
        Ok(m)
    }

    fn on_nodes(&self, p: C64) -> bool {
        let k = self.tilde.as_ref();
        self.zeros.iter().chain(&self.poles).any(|(z, _)| same_point(k, *z, p, 0.0))
    }

    /// `T(p)K(χ; p, q)Q⁻¹`-free bracket `K(χ̃; p, q) + K_{μ,u}(p) Γ⁻¹ K^{x,λ}(q)`.
    pub fn bracket(&self, p: C64) -> Result<CMat> {
        Ok(self.tilde.eval(p, self.q)? + self.k_mu(p)? * &self.gamma_inv * &self.kxl_q)
    }

    pub fn eval(&self, p: C64) -> Result<CMat> {
        if p == self.q {
            return Ok(self.big_q.clone());
        }
        if self.on_nodes(p) {
            return Err(Error::PointOnPoleSet);
        }
        let k = self.chi.eval(p, self.q)?;
        let ki = checked_inverse(&k, 1e14).map_err(|_| Error::KernelSingular(p))?;
        Ok(self.bracket(p)? * &self.big_q * ki)
    }

    pub fn eval_inverse(&self, p: C64) -> Result<CMat> {
        let qi = checked_inverse(&self.big_q, 1e14).map_err(|_| Error::SingularBoundaryValue)?;
        if p == self.q {
            return Ok(qi);
        }
        if self.on_nodes(p) {
            return Err(Error::PointOnPoleSet);
        }
        let k = self.chi.eval(self.q, p)?;
        let ki = checked_inverse(&k, 1e14).map_err(|_| Error::KernelSingular(p))?;
        let inner = self.tilde.eval(self.q, p)? + &self.kmu_q * &self.gamma_inv * self.k_xl(p)?;
        Ok(ki * qi * inner)
    }
}

impl BundleMap for BundleMapEvaluator {
    fn rank(&self) -> usize {
        self.tilde.rank()
    }

    fn eval(&self, p: C64) -> Result<CMat> {
        BundleMapEvaluator::eval(self, p)
    }
}

/// Step used for the derivative and residue estimates in [`verify_solution`].
pub const VERIFY_STEP: f64 = 1e-5;

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolutionReport {
    /// Gap between residue images of `T` at poles and the spans of the `u_{jβ}`.
    pub pole_gaps: Vec<f64>,
    /// Same for `(T⁻¹)ᵀ` at zeros and the spans of the `x_{iα}`.
    pub zero_gaps: Vec<f64>,
    /// `|x_{iα}ᵀ ∇(t u)(ξ) + ρ_{ij,αβ}|` for every coincident index pair.
    pub coupling_residuals: Vec<f64>,
    /// Residue conditions at the poles of `K(χ; ·, q)⁻¹`.
    pub inverse_pole_residuals: Vec<f64>,
}

impl SolutionReport {
    pub fn max(&self) -> f64 {
        self.pole_gaps
            .iter()
            .chain(&self.zero_gaps)
            .chain(&self.coupling_residuals)
            .chain(&self.inverse_pole_residuals)
            .fold(0.0, |a, &b| a.max(b))
    }
}

/// Gap between the residue image and the span of `vectors`; a residue that is negligible
/// against the regular part counts as the zero subspace.
fn residue_gap(res: &CMat, regular: &CMat, vectors: &CMat) -> f64 {
    let floor = 1e-6 * (frob(res) + frob(regular));
    let d = projector_above(res, floor) - crate::linalg::column_projector(vectors, 1e-6);
    crate::linalg::singular_values(&d).first().copied().unwrap_or(0.0)
}

fn residue_fd(f: &dyn Fn(C64) -> Result<CMat>, xi: C64, h: f64) -> Result<(CMat, CMat)> {
    let (fp, fm) = (f(xi + h)?, f(xi - h)?);
    let hc = C64::new(h, 0.0);
    let res = (&fp - &fm) * (hc / 2.0);
    let cst = (fp + fm) / C64::new(2.0, 0.0);
    Ok((res, cst))
}

/// Numerical residues of `T` at the poles, of `T⁻¹` at the zeros, and the coupling
/// conditions at coincident pairs.
pub fn verify_solution(t: &BundleMapEvaluator, data: &AbsintData) -> Result<SolutionReport> {
    let mut rep = SolutionReport::default();
    let h = VERIFY_STEP;
    let teval = |p: C64| t.eval(p);
    let tinv = |p: C64| t.eval_inverse(p);
    for pole in &data.poles {
        let (res, cst) = residue_fd(&teval, pole.point, h)?;
        let u = CMat::from_fn(t.rank(), pole.vectors.len(), |r, c| pole.vectors[c][r]);
        rep.pole_gaps.push(residue_gap(&res, &cst, &u));
    }
    for zero in &data.zeros {
        let (res, cst) = residue_fd(&tinv, zero.point, h)?;
        let x = CMat::from_fn(t.rank(), zero.vectors.len(), |r, c| zero.vectors[c][r]);
        rep.zero_gaps.push(residue_gap(&res.transpose(), &cst, &x));
    }
    for cp in &data.couplings {
        let pole = &data.poles[cp.pole];
        let zero = &data.zeros[cp.zero];
        let xi = pole.point;
        let (res, cst) = residue_fd(&teval, xi, h)?;
        let a = match t.tilde.connection() {
            Some(a) => a,
            None => crate::kernel::extract_laurent_coeffs(t.tilde.as_ref(), xi, &Default::default())?.a,
        };
        let pinv = res.clone().pseudo_inverse(1e-8 * frob(&res)).map_err(|e| Error::InvalidInput(e.into()))?;
        for (b, u) in pole.vectors.iter().enumerate() {
            let u = CVec::from_column_slice(u);
            let v = &pinv * &u;
            let nabla = &a * &res * &v + &cst * &v;
            for (al, x) in zero.vectors.iter().enumerate() {
                let x = CVec::from_column_slice(x);
                let lhs = (x.transpose() * &nabla)[(0, 0)];
                let rho = cp.rho[(al, b)];
                rep.coupling_residuals.push((lhs + rho).norm() / (1.0 + rho.norm()));
            }
        }
    }
    if let Some(poles) = t.chi.inverse_poles(t.q) {
        let cfg = crate::surface::LaurentConfig { radius: 1e-3, nodes: 32 };
        let kinv = |p: C64| -> Result<CMat> {
            checked_inverse(&t.chi.eval(p, t.q)?, 1e300).map_err(|_| Error::KernelSingular(p))
        };
        for p1 in poles {
            let (_, res, _) = crate::surface::laurent_coeffs_matrix(kinv, p1, &cfg)?;
            let br = t.bracket(p1)?;
            let direct = t.tilde.eval(p1, t.q)?;
            let scale = (frob(&direct) + frob(&(&br - &direct))) * frob(&t.big_q) * frob(&res);
            rep.inverse_pole_residuals.push(frob(&(br * &t.big_q * &res)) / scale.max(1e-300));
        }
    }
    Ok(rep)
}

/// Largest representative distance from `d` to the lattice.
fn lattice_defect(torus: &Torus, d: C64) -> f64 {
    torus.reduce(d).norm()
}

/// Scalar interpolant in product form:
/// `T(p) = Π E(p,λⁱ)/E(q,λⁱ) / Π E(p,μʲ)/E(q,μʲ) · exp(−2πi a (p − q)) · Q`,
/// with `τa + b = Σλⁱ − Σμʲ`.
#[derive(Clone, Debug)]
pub struct ScalarMultiplicative {
    torus: Arc<Torus>,
    lambda: Vec<C64>,
    mu: Vec<C64>,
    q: C64,
    big_q: C64,
    a: f64,
    norm_q: C64,
}

pub fn scalar_multiplicative(
    lambda: &[C64],
    mu: &[C64],
    chi: &FlatLineBundle,
    tilde: &FlatLineBundle,
    q: C64,
    big_q: C64,
) -> Result<ScalarMultiplicative> {
    let torus = tilde.torus().clone();
    if !torus.same_surface(chi.torus()) {
        return Err(Error::SurfaceMismatch);
    }
    if lambda.len() != mu.len() {
        return Err(Error::CountMismatch { zeros: lambda.len(), poles: mu.len() });
    }
    let d: C64 = lambda.iter().sum::<C64>() - mu.iter().sum::<C64>();
    let defect = lattice_defect(&torus, tilde.point() - chi.point() - d);
    if defect > 1e-9 {
        return Err(Error::NecessityViolated(defect));
    }
    if lambda.iter().chain(mu).any(|&n| torus.same_point(n, q, COINCIDENCE_TOL)) {
        return Err(Error::BasePointCollision);
    }
    let a = d.im / torus.tau().im;
    let mut norm_q = C64::new(1.0, 0.0);
    for &l in lambda {
        norm_q *= torus.prime_form(q, l)?;
    }
    for &m in mu {
        norm_q /= torus.prime_form(q, m)?;
    }
    Ok(ScalarMultiplicative {
        torus,
        lambda: lambda.to_vec(),
        mu: mu.to_vec(),
        q,
        big_q,
        a,
        norm_q,
    })
}

impl ScalarMultiplicative {
    pub fn eval_scalar(&self, p: C64) -> Result<C64> {
        let mut v = C64::new(1.0, 0.0);
        for &l in &self.lambda {
            v *= self.torus.prime_form(p, l)?;
        }
        for &m in &self.mu {
            let e = self.torus.prime_form(p, m)?;
            if e.norm() == 0.0 {
                return Err(Error::PointOnPoleSet);
            }
            v /= e;
        }
        let phase = (C64::new(0.0, -2.0 * PI) * self.a * (p - self.q)).exp();
        Ok(v / self.norm_q * phase * self.big_q)
    }
}

impl BundleMap for ScalarMultiplicative {
    fn rank(&self) -> usize {
        1
    }

    fn eval(&self, p: C64) -> Result<CMat> {
        Ok(CMat::from_element(1, 1, self.eval_scalar(p)?))
    }
}

/// Single-pair interpolant assembled from the two Fay terms, with `z = τa + b` of `χ`.
pub fn special_partial_fraction(
    chi: &FlatLineBundle,
    lambda: C64,
    mu: C64,
    q: C64,
    big_q: C64,
    p: C64,
) -> Result<C64> {
    let t = chi.torus();
    let z = chi.point();
    let a = (lambda - mu).im / t.tau().im;
    let th = |w: C64| t.theta(w);
    let e = |x: C64, y: C64| t.prime_form(x, y);
    let den = th(z + lambda - mu)? * th(z + q - p)?;
    if den.norm() == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let first = th(z + lambda - mu + q - p)? * th(z)? / den;
    let second = th(z + lambda - p)? * th(z + q - mu)? * e(mu, lambda)? * e(q, p)?
        / (den * e(mu, p)? * e(q, lambda)?);
    let phase = (C64::new(0.0, -2.0 * PI) * a * (p - q)).exp();
    Ok(phase * (first - second) * big_q)
}

/// Relative residual of the Fay trisecant identity
/// `θ(z+λ−μ)θ(z+q−p)E(p,λ)E(q,μ) + θ(z+λ−p)θ(z+q−μ)E(λ,μ)E(q,p)
///  = θ(z+λ−μ+q−p)θ(z)E(p,μ)E(q,λ)`.
pub fn fay_residual(
    surface: &Surface,
    z: &[C64],
    lambda: &SurfacePoint,
    mu: &SurfacePoint,
    p: &SurfacePoint,
    q: &SurfacePoint,
) -> Result<f64> {
    let period = surface.period()?.clone();
    let engine = match surface {
        Surface::Torus(t) => t.engine().clone(),
        _ => ThetaEngine::new(period, Default::default())?,
    };
    fay_residual_with(&engine, surface, z, lambda, mu, p, q)
}

/// As [`fay_residual`] with a caller-supplied theta engine for the surface.
pub fn fay_residual_with(
    engine: &ThetaEngine,
    surface: &Surface,
    z: &[C64],
    lambda: &SurfacePoint,
    mu: &SurfacePoint,
    p: &SurfacePoint,
    q: &SurfacePoint,
) -> Result<f64> {
    let g = surface.genus();
    if z.len() != g {
        return Err(Error::InvalidInput("z has wrong dimension".into()));
    }
    let (fl, fm) = (abel_jacobi(surface, lambda)?, abel_jacobi(surface, mu)?);
    let (fp, fq) = (abel_jacobi(surface, p)?, abel_jacobi(surface, q)?);
    let comb = |terms: &[(&[C64], f64)]| -> Vec<C64> {
        (0..g).map(|i| z[i] + terms.iter().map(|(v, s)| v[i] * *s).sum::<C64>()).collect()
    };
    let th = |v: Vec<C64>| engine.theta(&v);
    let e = |a: &SurfacePoint, b: &SurfacePoint| prime_form(surface, a, b);
    let t1 = th(comb(&[(&fl, 1.0), (&fm, -1.0)]))?
        * th(comb(&[(&fq, 1.0), (&fp, -1.0)]))?
        * e(p, lambda)?
        * e(q, mu)?;
    let t2 = th(comb(&[(&fl, 1.0), (&fp, -1.0)]))?
        * th(comb(&[(&fq, 1.0), (&fm, -1.0)]))?
        * e(lambda, mu)?
        * e(q, p)?;
    let t3 = th(comb(&[(&fl, 1.0), (&fm, -1.0), (&fq, 1.0), (&fp, -1.0)]))?
        * th(comb(&[]))?
        * e(p, mu)?
        * e(q, lambda)?;
    Ok((t1 + t2 - t3).norm() / (t1.norm() + t2.norm() + t3.norm() + 1e-300))
}

/// Relative residual of
/// `T(p) K(χ; p, q) T(q)⁻¹ = K(χ̃; p, q) − K(χ̃; p, μ) u xᵀ K(χ̃; λ, q) / (xᵀ K(χ̃; λ, μ) u)`
/// for a single zero `(λ, x)` and pole `(μ, u)`.
#[allow(clippy::too_many_arguments)]
pub fn matrix_fay_residual(
    t: &dyn BundleMap,
    chi: &dyn CauchyKernel,
    tilde: &dyn CauchyKernel,
    lambda: C64,
    x: &CVec,
    mu: C64,
    u: &CVec,
    p: C64,
    q: C64,
) -> Result<f64> {
    if !same_surface(chi, tilde) {
        return Err(Error::SurfaceMismatch);
    }
    let den = (x.transpose() * tilde.eval(lambda, mu)? * u)[(0, 0)];
    if den.norm() < 1e-14 {
        return Err(Error::DegenerateDenominator);
    }
    let tq = t.eval(q)?;
    let tqi = checked_inverse(&tq, 1e14).map_err(|_| Error::SingularBoundaryValue)?;
    let lhs = t.eval(p)? * chi.eval(p, q)? * tqi;
    let rhs = tilde.eval(p, q)?
        - tilde.eval(p, mu)? * u * x.transpose() * tilde.eval(lambda, q)? / den;
    Ok(frob(&(&lhs - &rhs)) / frob(&lhs).max(frob(&rhs)).max(1e-300))
}

/// Full-rank interpolant `T(p) = f(p) Q`, `f` the scalar product form with `f(q) = 1`.
#[derive(Clone, Debug)]
pub struct FullRankMap {
    scalar: ScalarMultiplicative,
    big_q: CMat,
}

/// Zero and pole data with the full standard basis at every node.
pub fn full_rank_data(lambda: &[C64], mu: &[C64], r: usize) -> AbsintData {
    let basis = |r: usize| -> Vec<Vec<C64>> {
        (0..r)
            .map(|k| (0..r).map(|i| C64::new(if i == k { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect()
    };
    AbsintData {
        zeros: lambda.iter().map(|&p| Node { point: p, vectors: basis(r) }).collect(),
        poles: mu.iter().map(|&p| Node { point: p, vectors: basis(r) }).collect(),
        couplings: Vec::new(),
    }
}

pub fn full_rank_multiplicative(
    data: &AbsintData,
    tilde: &FlatLineBundle,
    chi: &FlatLineBundle,
    q: C64,
    big_q: CMat,
) -> Result<FullRankMap> {
    let r = big_q.nrows();
    for n in data.zeros.iter().chain(&data.poles) {
        let m = CMat::from_fn(r, n.vectors.len(), |i, c| n.vectors[c].get(i).copied().unwrap_or_default());
        if n.vectors.len() != r || crate::linalg::numerical_rank(&m, 1e-10) != r {
            return Err(Error::NotFullRank);
        }
    }
    if checked_inverse(&big_q, 1e14).is_err() {
        return Err(Error::SingularBoundaryValue);
    }
    let lambda: Vec<C64> = data.zeros.iter().map(|n| n.point).collect();
    let mu: Vec<C64> = data.poles.iter().map(|n| n.point).collect();
    let scalar = scalar_multiplicative(&lambda, &mu, chi, tilde, q, C64::new(1.0, 0.0))?;
    Ok(FullRankMap { scalar, big_q })
}

impl BundleMap for FullRankMap {
    fn rank(&self) -> usize {
        self.big_q.nrows()
    }

    fn eval(&self, p: C64) -> Result<CMat> {
        Ok(&self.big_q * self.scalar.eval_scalar(p)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SphereKernel;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn genus0_single_pair_matches_rational_function() {
        let k: Arc<dyn CauchyKernel> = Arc::new(SphereKernel::new(1));
        let data = AbsintData {
            zeros: vec![Node { point: c(2.0, 0.0), vectors: vec![vec![c(1.0, 0.0)]] }],
            poles: vec![Node { point: c(3.0, 0.0), vectors: vec![vec![c(1.0, 0.0)]] }],
            couplings: vec![],
        };
        let q = c(0.0, 1.0);
        let t = build_solution(&data, q, CMat::identity(1, 1), k.clone(), k).unwrap();
        let p = c(0.7, -0.4);
        let expected = ((p - 2.0) / (p - 3.0)) / ((q - 2.0) / (q - 3.0));
        assert!((t.eval(p).unwrap()[(0, 0)] - expected).norm() < 1e-13);
        assert!((t.eval_inverse(p).unwrap()[(0, 0)] - 1.0 / expected).norm() < 1e-13);
    }

    #[test]
    fn base_point_collision() {
        let k: Arc<dyn CauchyKernel> = Arc::new(SphereKernel::new(1));
        let data = AbsintData {
            zeros: vec![Node { point: c(2.0, 0.0), vectors: vec![vec![c(1.0, 0.0)]] }],
            poles: vec![Node { point: c(3.0, 0.0), vectors: vec![vec![c(1.0, 0.0)]] }],
            couplings: vec![],
        };
        let r = build_solution(&data, c(2.0, 0.0), CMat::identity(1, 1), k.clone(), k);
        assert!(matches!(r, Err(Error::BasePointCollision)));
    }

    #[test]
    fn necessity_is_enforced() {
        let t = Arc::new(Torus::new(c(0.0, 1.0)).unwrap());
        let chi = FlatLineBundle::from_characteristic(t.clone(), 0.1, 0.2).unwrap();
        let r = scalar_multiplicative(&[c(0.1, 0.1)], &[c(0.4, 0.3)], &chi, &chi, c(0.0, 0.0), c(1.0, 0.0));
        assert!(matches!(r, Err(Error::NecessityViolated(_))));
    }
}
