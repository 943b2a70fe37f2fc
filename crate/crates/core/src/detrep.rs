//! Determinantal representations `U(z) = z₁σ₂ − z₂σ₁ + γ` of the plane cubic cut out
//! by an [`EmbeddingPair`], built from the Cauchy kernel of a flat bundle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_torus, CauchyKernel};
use crate::linalg::{checked_inverse, condition_number, frob, singular_values};
use crate::surface::EmbeddingPair;
use crate::{CMat, C64};

/// Linear matrix pencil with block structure `m × m` of `r × r` blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Pencil {
    pub rank: usize,
    pub sigma1: CMat,
    pub sigma2: CMat,
    pub gamma: CMat,
}

impl Pencil {
    pub fn size(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn eval(&self, z: [C64; 2]) -> CMat {
        &self.sigma2 * z[0] - &self.sigma1 * z[1] + &self.gamma
    }

    /// `ξ₁σ₁ + ξ₂σ₂`.
    pub fn xi_sigma(&self, xi: [C64; 2]) -> CMat {
        &self.sigma1 * xi[0] + &self.sigma2 * xi[1]
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.gamma.nrows();
        let square = |a: &CMat| a.shape() == (m, m);
        if !(square(&self.sigma1) && square(&self.sigma2) && square(&self.gamma)) {
            return Err(Error::NotSquare);
        }
        if self.rank == 0 || !m.is_multiple_of(self.rank) {
            return Err(Error::InvalidInput("pencil size is not a multiple of the rank".into()));
        }
        Ok(())
    }
}

/// Block matrices `σ_k = diag(c_{ik} I_r)` and
/// `γ_ii = (d_{i1}c_{i2} − d_{i2}c_{i1}) I_r`,
/// `γ_ij = (c_{i1}c_{j2} − c_{j1}c_{i2}) K(χ; xⁱ, xʲ)`.
pub fn build_pencil(k: &dyn CauchyKernel, emb: &EmbeddingPair) -> Result<Pencil> {
    check_torus(k, emb)?;
    let r = k.rank();
    let x = emb.points();
    let n = 3 * r;
    let mut s1 = CMat::zeros(n, n);
    let mut s2 = CMat::zeros(n, n);
    let mut g = CMat::zeros(n, n);
    let id = CMat::identity(r, r);
    for i in 0..3 {
        let (ci1, ci2) = (emb.c(i, 0), emb.c(i, 1));
        s1.view_mut((i * r, i * r), (r, r)).copy_from(&(&id * C64::new(ci1, 0.0)));
        s2.view_mut((i * r, i * r), (r, r)).copy_from(&(&id * C64::new(ci2, 0.0)));
        for j in 0..3 {
            let block = if i == j {
                &id * (emb.d(i, 0) * ci2 - emb.d(i, 1) * ci1)
            } else {
                let w = ci1 * emb.c(j, 1) - emb.c(j, 0) * ci2;
                k.eval(x[i], x[j])? * C64::new(w, 0.0)
            };
            g.view_mut((i * r, j * r), (r, r)).copy_from(&block);
        }
    }
    Ok(Pencil { rank: r, sigma1: s1, sigma2: s2, gamma: g })
}

/// `u^×(p)`: the blocks `K(χ; xⁱ, p)` stacked vertically (`3r × r`).
pub fn right_sections(k: &dyn CauchyKernel, emb: &EmbeddingPair, p: C64) -> Result<CMat> {
    let r = k.rank();
    let mut out = CMat::zeros(3 * r, r);
    for (i, &x) in emb.points().iter().enumerate() {
        out.view_mut((i * r, 0), (r, r)).copy_from(&k.eval(x, p)?);
    }
    Ok(out)
}

/// `u_ℓ^×(p) = −[K(χ; p, x¹) K(χ; p, x²) K(χ; p, x³)]` (`r × 3r`).
pub fn left_sections(k: &dyn CauchyKernel, emb: &EmbeddingPair, p: C64) -> Result<CMat> {
    let r = k.rank();
    let mut out = CMat::zeros(r, 3 * r);
    for (i, &x) in emb.points().iter().enumerate() {
        out.view_mut((0, i * r), (r, r)).copy_from(&(-k.eval(p, x)?));
    }
    Ok(out)
}

/// Residuals of `U(λ(p)) u^×(p) = 0`, `u_ℓ^×(p) U(λ(p)) = 0` and
/// `u_ℓ^×(p) (ξ₁σ₁ + ξ₂σ₂) u^×(p) = (ξ₁λ₁'(p) + ξ₂λ₂'(p)) I`.
pub fn identity_residuals(
    pencil: &Pencil,
    k: &dyn CauchyKernel,
    emb: &EmbeddingPair,
    p: C64,
    xi: [C64; 2],
) -> Result<[f64; 3]> {
    let z = emb.eval(p)?;
    let u = pencil.eval(z);
    let right = right_sections(k, emb, p)?;
    let left = left_sections(k, emb, p)?;
    let nu = frob(&u);
    let r1 = frob(&(&u * &right)) / (nu * frob(&right));
    let r2 = frob(&(&left * &u)) / (nu * frob(&left));
    let d = emb.derivative(p)?;
    let den = xi[0] * d[0] + xi[1] * d[1];
    if den.norm() < 1e-12 {
        return Err(Error::DegenerateDenominator);
    }
    let pair = &left * pencil.xi_sigma(xi) * &right / den;
    let r3 = frob(&(pair - CMat::identity(k.rank(), k.rank())));
    Ok([r1, r2, r3])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveMembership {
    /// Geometric mean of the `r` smallest singular values relative to the largest.
    /// Since `det U = c F^r`, this scales like `|F(z)|` whatever the rank.
    pub relative_det: f64,
    /// Number of singular values below the largest relative gap of at least `1e6`.
    pub kernel_dim: usize,
    pub singular_values: Vec<f64>,
}

pub fn curve_membership(pencil: &Pencil, z: [C64; 2]) -> CurveMembership {
    let s = singular_values(&pencil.eval(z));
    let top = s[0].max(1e-300);
    let r = pencil.rank;
    let relative_det = s.iter().rev().take(r).map(|x| x / top).product::<f64>().powf(1.0 / r as f64);
    let floor = top * f64::EPSILON;
    let mut kernel_dim = 0;
    let mut best = 1e6;
    for i in 1..s.len() {
        let ratio = s[i - 1].max(floor) / s[i].max(floor);
        if ratio >= best {
            best = ratio;
            kernel_dim = s.len() - i;
        }
    }
    CurveMembership { relative_det, kernel_dim, singular_values: s }
}

/// Condition number of `[K(χ; xⁱ, yʲ)]` for three points `y` on a line section,
/// i.e. with `y¹ + y² + y³ ≡ x¹ + x² + x³`.
pub fn gamma_invertibility_check(
    k: &dyn CauchyKernel,
    emb: &EmbeddingPair,
    y: [C64; 3],
) -> Result<f64> {
    check_torus(k, emb)?;
    let t = emb.torus();
    let sx: C64 = emb.points().iter().sum();
    let sy: C64 = y.iter().sum();
    if t.reduce(sx - sy).norm() > 1e-8 {
        return Err(Error::InvalidInput("points do not lie on a line section".into()));
    }
    let r = k.rank();
    let mut m = CMat::zeros(3 * r, 3 * r);
    for (i, &x) in emb.points().iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            m.view_mut((i * r, j * r), (r, r)).copy_from(&k.eval(x, yj)?);
        }
    }
    Ok(condition_number(&m))
}

/// `γ ↦ α γ α⁻¹` with `α = diag(T(xⁱ))`; `σ₁, σ₂` are unchanged because they are
/// scalar on each block.
pub fn adjust_gamma_by_map(pencil: &Pencil, t_at_x: &[CMat]) -> Result<Pencil> {
    let r = pencil.rank;
    if t_at_x.len() * r != pencil.size() || t_at_x.iter().any(|t| t.shape() != (r, r)) {
        return Err(Error::InvalidInput("need one r×r value per block".into()));
    }
    let alpha = crate::linalg::block_diag(t_at_x);
    let alpha_inv = checked_inverse(&alpha, 1e14).map_err(|_| Error::SingularBoundaryValue)?;
    Ok(Pencil { gamma: &alpha * &pencil.gamma * alpha_inv, ..pencil.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::LineKernel;
    use crate::surface::{build_embedding_functions, FlatLineBundle, Torus};
    use std::sync::Arc;

    #[test]
    fn pencil_shapes_and_sigma() {
        let t = Arc::new(Torus::new(C64::new(0.0, 1.0)).unwrap());
        let emb = build_embedding_functions(
            t.clone(),
            [C64::new(0.1, 0.1), C64::new(0.45, 0.3), C64::new(0.7, 0.75)],
        )
        .unwrap();
        let k = LineKernel::new(FlatLineBundle::from_characteristic(t, 0.2, 0.3).unwrap());
        let p = build_pencil(&k, &emb).unwrap();
        assert_eq!(p.size(), 3);
        assert_eq!(p.sigma1[(0, 0)], C64::new(-1.0, 0.0));
        assert_eq!(p.sigma2[(2, 2)], C64::new(1.0, 0.0));
        assert!(p.validate().is_ok());
    }
}
