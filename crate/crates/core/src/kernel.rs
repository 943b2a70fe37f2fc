//! Cauchy kernels `K(χ; p, q)` in the global frame.
//!
//! For a flat line bundle with characteristics `[a; b]` on a torus,
//! `K(χ; p, q) = θ[a;b](q − p) / (θ[a;b](0) E(q, p))`, which has residue one on the
//! diagonal: `(p − q) K(χ; p, q) → 1`. On the sphere `K(p, q) = I / (p − q)`.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{block_diag, frob};
use crate::surface::{EmbeddingPair, FlatLineBundle, Torus};
use crate::{CMat, C64};

/// Matrix-valued Cauchy kernel of a flat bundle.
pub trait CauchyKernel: Debug + Send + Sync {
    fn rank(&self) -> usize;

    /// `None` for the sphere.
    fn torus(&self) -> Option<&Arc<Torus>>;

    fn eval(&self, p: C64, q: C64) -> Result<CMat>;

    /// Representatives of the poles of `p ↦ K(p, q)⁻¹`, when known in closed form.
    fn inverse_poles(&self, q: C64) -> Option<Vec<C64>>;

    /// Closed-form connection coefficient `A` (constant in the global frame).
    fn connection(&self) -> Option<CMat>;

    /// Kernel of the dual bundle.
    fn dual(&self) -> Result<Arc<dyn CauchyKernel>>;
}

pub fn same_surface(a: &dyn CauchyKernel, b: &dyn CauchyKernel) -> bool {
    match (a.torus(), b.torus()) {
        (None, None) => true,
        (Some(x), Some(y)) => x.same_surface(y),
        _ => false,
    }
}

/// Whether two points coincide on the common surface of `k`.
pub fn same_point(k: &dyn CauchyKernel, p: C64, q: C64, tol: f64) -> bool {
    match k.torus() {
        Some(t) => t.same_point(p, q, tol),
        None => (p - q).norm() <= tol,
    }
}

#[derive(Clone, Debug)]
pub struct SphereKernel {
    rank: usize,
}

impl SphereKernel {
    pub fn new(rank: usize) -> Self {
        Self { rank }
    }
}

impl CauchyKernel for SphereKernel {
    fn rank(&self) -> usize {
        self.rank
    }

    fn torus(&self) -> Option<&Arc<Torus>> {
        None
    }

    fn eval(&self, p: C64, q: C64) -> Result<CMat> {
        let d = p - q;
        if d.norm() == 0.0 {
            return Err(Error::PointOnPoleSet);
        }
        Ok(CMat::identity(self.rank, self.rank) / d)
    }

    fn inverse_poles(&self, _q: C64) -> Option<Vec<C64>> {
        Some(Vec::new())
    }

    fn connection(&self) -> Option<CMat> {
        Some(CMat::zeros(self.rank, self.rank))
    }

    fn dual(&self) -> Result<Arc<dyn CauchyKernel>> {
        Ok(Arc::new(self.clone()))
    }
}

#[derive(Clone, Debug)]
pub struct LineKernel {
    bundle: FlatLineBundle,
}

impl LineKernel {
    pub fn new(bundle: FlatLineBundle) -> Self {
        Self { bundle }
    }

    pub fn bundle(&self) -> &FlatLineBundle {
        &self.bundle
    }

    pub fn scalar(&self, p: C64, q: C64) -> Result<C64> {
        let t = self.bundle.torus();
        let e = t.prime_form(q, p)?;
        if e.norm() == 0.0 {
            return Err(Error::PointOnPoleSet);
        }
        let num = t.theta_char(self.bundle.characteristic(), q - p)?;
        Ok(num / (self.bundle.theta0() * e))
    }

    /// `∂ log θ[a;b](0)`.
    pub fn connection_scalar(&self) -> Result<C64> {
        let (v, d) = self
            .bundle
            .torus()
            .theta_char_d(self.bundle.characteristic(), C64::new(0.0, 0.0))?;
        Ok(d / v)
    }
}

impl CauchyKernel for LineKernel {
    fn rank(&self) -> usize {
        1
    }

    fn torus(&self) -> Option<&Arc<Torus>> {
        Some(self.bundle.torus())
    }

    fn eval(&self, p: C64, q: C64) -> Result<CMat> {
        Ok(CMat::from_element(1, 1, self.scalar(p, q)?))
    }

    /// `θ[a;b](q − p)` vanishes where `q − p + τa + b ≡ (1 + τ)/2`.
    fn inverse_poles(&self, q: C64) -> Option<Vec<C64>> {
        let t = self.bundle.torus();
        let half = (C64::new(1.0, 0.0) + t.tau()) / 2.0;
        Some(vec![q + self.bundle.point() - half])
    }

    fn connection(&self) -> Option<CMat> {
        self.connection_scalar().ok().map(|a| CMat::from_element(1, 1, a))
    }

    fn dual(&self) -> Result<Arc<dyn CauchyKernel>> {
        Ok(Arc::new(LineKernel::new(self.bundle.dual()?)))
    }
}

/// Kernel of a direct sum, block diagonal in the summands.
#[derive(Clone, Debug)]
pub struct DirectSumKernel {
    parts: Vec<Arc<dyn CauchyKernel>>,
}

impl DirectSumKernel {
    pub fn new(parts: Vec<Arc<dyn CauchyKernel>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidInput("empty direct sum".into()));
        }
        if parts.iter().any(|k| !same_surface(k.as_ref(), parts[0].as_ref())) {
            return Err(Error::SurfaceMismatch);
        }
        Ok(Self { parts })
    }

    /// Direct sum of line bundles with the given characteristics.
    pub fn lines(torus: Arc<Torus>, chars: &[(f64, f64)]) -> Result<Self> {
        let parts = chars
            .iter()
            .map(|&(a, b)| {
                FlatLineBundle::from_characteristic(torus.clone(), a, b)
                    .map(|l| Arc::new(LineKernel::new(l)) as Arc<dyn CauchyKernel>)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parts)
    }

    pub fn parts(&self) -> &[Arc<dyn CauchyKernel>] {
        &self.parts
    }
}

impl CauchyKernel for DirectSumKernel {
    fn rank(&self) -> usize {
        self.parts.iter().map(|k| k.rank()).sum()
    }

    fn torus(&self) -> Option<&Arc<Torus>> {
        self.parts[0].torus()
    }

    fn eval(&self, p: C64, q: C64) -> Result<CMat> {
        let blocks = self.parts.iter().map(|k| k.eval(p, q)).collect::<Result<Vec<_>>>()?;
        Ok(block_diag(&blocks))
    }

    fn inverse_poles(&self, q: C64) -> Option<Vec<C64>> {
        let mut out = Vec::new();
        for k in &self.parts {
            out.extend(k.inverse_poles(q)?);
        }
        Some(out)
    }

    fn connection(&self) -> Option<CMat> {
        let blocks = self.parts.iter().map(|k| k.connection()).collect::<Option<Vec<_>>>()?;
        Some(block_diag(&blocks))
    }

    fn dual(&self) -> Result<Arc<dyn CauchyKernel>> {
        let parts = self.parts.iter().map(|k| k.dual()).collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(DirectSumKernel::new(parts)?))
    }
}

/// Step sizes for the finite-difference stencils near the diagonal.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub h1: f64,
    pub h2: f64,
}

impl Default for Stencil {
    fn default() -> Self {
        Self { h1: 1e-3, h2: 1e-4 }
    }
}

impl Stencil {
    fn richardson(&self, d1: &CMat, d2: &CMat) -> CMat {
        let k = (self.h1 / self.h2).powi(2) - 1.0;
        d2 + (d2 - d1) / C64::new(k, 0.0)
    }
}

/// Laurent data `(p − q) K(p, q) = I + A_ℓ t(p) + A t(q) + O(2)` around `p0`.
#[derive(Clone, Debug)]
pub struct ConnectionCoefficients {
    pub a_left: CMat,
    pub a: CMat,
}

pub fn extract_laurent_coeffs(
    k: &dyn CauchyKernel,
    p0: C64,
    stencil: &Stencil,
) -> Result<ConnectionCoefficients> {
    let f = |s: f64, t: f64| -> Result<CMat> {
        Ok(k.eval(p0 + s, p0 + t)? * C64::new(s - t, 0.0))
    };
    let ds = |h: f64| -> Result<CMat> { Ok((f(h, 0.0)? - f(-h, 0.0)?) / C64::new(2.0 * h, 0.0)) };
    let dt = |h: f64| -> Result<CMat> { Ok((f(0.0, h)? - f(0.0, -h)?) / C64::new(2.0 * h, 0.0)) };
    let (l1, l2) = (ds(stencil.h1)?, ds(stencil.h2)?);
    let (a1, a2) = (dt(stencil.h1)?, dt(stencil.h2)?);
    let spread = frob(&(&l1 - &l2)).max(frob(&(&a1 - &a2)));
    if spread > 1e-4 * (1.0 + frob(&l2) + frob(&a2)) {
        return Err(Error::ExtractionUnstable(spread));
    }
    Ok(ConnectionCoefficients { a_left: stencil.richardson(&l1, &l2), a: stencil.richardson(&a1, &a2) })
}

/// `lim_{p→q} (p − q) K(p, q)` by symmetric sampling and Richardson extrapolation.
pub fn diagonal_residue(k: &dyn CauchyKernel, q: C64, stencil: &Stencil) -> Result<CMat> {
    let g = |h: f64| -> Result<CMat> {
        let plus = k.eval(q + h, q)? * C64::new(h, 0.0);
        let minus = k.eval(q - h, q)? * C64::new(-h, 0.0);
        Ok((plus + minus) / C64::new(2.0, 0.0))
    };
    Ok(stencil.richardson(&g(stencil.h1)?, &g(stencil.h2)?))
}

/// `‖K(χ^∨; p, q) + K(χ; q, p)ᵀ‖` relative to the kernel size.
pub fn duality_residual(k: &dyn CauchyKernel, p: C64, q: C64) -> Result<f64> {
    let dual = k.dual()?;
    let lhs = dual.eval(p, q)?;
    let rhs = -k.eval(q, p)?.transpose();
    Ok(frob(&(&lhs - &rhs)) / frob(&rhs).max(1e-300))
}

/// Residual of
/// `Σ_j (ξ·c_j) K(p, xʲ) K(xʲ, q) = (ξ·(λ(q) − λ(p))) K(p, q)`,
/// or of its diagonal limit `−(ξ·λ'(p)) I` when `p = q`.
pub fn collection_residual(
    k: &dyn CauchyKernel,
    emb: &EmbeddingPair,
    xi: [C64; 2],
    p: C64,
    q: C64,
) -> Result<f64> {
    check_torus(k, emb)?;
    let r = k.rank();
    let mut lhs = CMat::zeros(r, r);
    for (j, &x) in emb.points().iter().enumerate() {
        let w = xi[0] * emb.c(j, 0) + xi[1] * emb.c(j, 1);
        lhs += k.eval(p, x)? * k.eval(x, q)? * w;
    }
    let rhs = if p == q {
        let d = emb.derivative(p)?;
        CMat::identity(r, r) * -(xi[0] * d[0] + xi[1] * d[1])
    } else {
        let (lp, lq) = (emb.eval(p)?, emb.eval(q)?);
        k.eval(p, q)? * (xi[0] * (lq[0] - lp[0]) + xi[1] * (lq[1] - lp[1]))
    };
    Ok(frob(&(&lhs - &rhs)) / frob(&lhs).max(frob(&rhs)).max(1e-300))
}

pub(crate) fn check_torus(k: &dyn CauchyKernel, emb: &EmbeddingPair) -> Result<()> {
    match k.torus() {
        Some(t) if t.same_surface(emb.torus()) => Ok(()),
        Some(_) => Err(Error::SurfaceMismatch),
        None => Err(Error::UnsupportedGenus(0)),
    }
}
