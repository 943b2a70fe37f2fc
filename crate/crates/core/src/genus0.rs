//! Zero-pole interpolation on the Riemann sphere.
//!
//! Given zeros `λ^i` with left null vectors `x_i` (rows) and poles `μ^j` with right pole
//! vectors `u_j` (columns), the unique rational `r×r` function normalised by `T(∞) = I`
//! is `T(z) = I + Σ_j u_j (z − μ^j)⁻¹ c_j`, where the rows `c_j` solve
//! `Γ c = X` with `Γ_ij = x_i u_j / (μ^j − λ^i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{checked_inverse, condition_number};
use crate::{CMat, CVec, C64};

pub const SINGULAR_COND: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroDatum {
    pub point: C64,
    /// Left null vector (a row).
    pub x: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleDatum {
    pub point: C64,
    /// Right pole vector (a column).
    pub u: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Genus0Problem {
    pub rank: usize,
    pub zeros: Vec<ZeroDatum>,
    pub poles: Vec<PoleDatum>,
}

impl Genus0Problem {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidInput("rank must be positive".into()));
        }
        if self.zeros.len() != self.poles.len() {
            return Err(Error::CountMismatch { zeros: self.zeros.len(), poles: self.poles.len() });
        }
        let r = self.rank;
        if self.zeros.iter().any(|z| z.x.len() != r) || self.poles.iter().any(|p| p.u.len() != r)
        {
            return Err(Error::InvalidInput(format!("vectors must have length {r}")));
        }
        for z in &self.zeros {
            if self.poles.iter().any(|p| p.point == z.point) {
                return Err(Error::InvalidInput("a zero coincides with a pole".into()));
            }
        }
        let all: Vec<C64> =
            self.zeros.iter().map(|z| z.point).chain(self.poles.iter().map(|p| p.point)).collect();
        if all.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite node".into()));
        }
        Ok(())
    }

    /// `Γ_ij = x_i u_j / (μ^j − λ^i)`.
    pub fn gamma(&self) -> CMat {
        let n = self.zeros.len();
        CMat::from_fn(n, n, |i, j| {
            let xu: C64 =
                self.zeros[i].x.iter().zip(&self.poles[j].u).map(|(a, b)| a * b).sum();
            xu / (self.poles[j].point - self.zeros[i].point)
        })
    }
}

/// `T(z) = I + U · diag((z − μ^j)⁻¹) · C` together with the data for its inverse
/// `T(z)⁻¹ = I − U Γ⁻¹ diag((z − λ^i)⁻¹) X`.
#[derive(Clone, Debug)]
pub struct RationalMatrixFunction {
    rank: usize,
    lambda: Vec<C64>,
    mu: Vec<C64>,
    u: CMat,
    c: CMat,
    x: CMat,
    w: CMat,
}

pub fn solve_genus0(problem: &Genus0Problem) -> Result<RationalMatrixFunction> {
    problem.validate()?;
    let n = problem.zeros.len();
    let r = problem.rank;
    let gamma = problem.gamma();
    let gi = if n == 0 {
        CMat::zeros(0, 0)
    } else {
        checked_inverse(&gamma, SINGULAR_COND).map_err(|cond| Error::SingularGamma { cond })?
    };
    let x = CMat::from_fn(n, r, |i, k| problem.zeros[i].x[k]);
    let u = CMat::from_fn(r, n, |k, j| problem.poles[j].u[k]);
    let c = &gi * &x;
    let w = -(&u * &gi);
    Ok(RationalMatrixFunction {
        rank: r,
        lambda: problem.zeros.iter().map(|z| z.point).collect(),
        mu: problem.poles.iter().map(|p| p.point).collect(),
        u,
        c,
        x,
        w,
    })
}

impl RationalMatrixFunction {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn zeros(&self) -> &[C64] {
        &self.lambda
    }

    pub fn poles(&self) -> &[C64] {
        &self.mu
    }

    /// Residue `u_j c_j` at the `j`-th pole.
    pub fn residue(&self, j: usize) -> CMat {
        self.u.column(j) * self.c.row(j)
    }

    fn sum_with(&self, left: &CMat, right: &CMat, nodes: &[C64], z: C64) -> Result<CMat> {
        let mut t = CMat::identity(self.rank, self.rank);
        for (j, &m) in nodes.iter().enumerate() {
            let d = z - m;
            if d.norm() == 0.0 {
                return Err(Error::PointOnPoleSet);
            }
            t += left.column(j) * right.row(j) / d;
        }
        Ok(t)
    }

    pub fn eval(&self, z: C64) -> Result<CMat> {
        self.sum_with(&self.u, &self.c, &self.mu, z)
    }

    pub fn eval_inverse(&self, z: C64) -> Result<CMat> {
        self.sum_with(&self.w, &self.x, &self.lambda, z)
    }
}

/// Scalar Cauchy matrix `S_ij = 1 / (μ^j − λ^i)`.
pub fn sylvester_matrix(lambda: &[C64], mu: &[C64]) -> CMat {
    CMat::from_fn(lambda.len(), mu.len(), |i, j| 1.0 / (mu[j] - lambda[i]))
}

/// Coefficients `c = S⁻¹ 1` of the partial fraction expansion
/// `Π(z − λ^i)/Π(z − μ^j) = 1 + Σ_j c_j / (z − μ^j)`.
pub fn sylvester_coefficients(lambda: &[C64], mu: &[C64]) -> Result<CVec> {
    if lambda.len() != mu.len() {
        return Err(Error::CountMismatch { zeros: lambda.len(), poles: mu.len() });
    }
    let s = sylvester_matrix(lambda, mu);
    let inv = checked_inverse(&s, SINGULAR_COND).map_err(|_| Error::SingularSylvester)?;
    Ok(inv * CVec::from_element(lambda.len(), C64::new(1.0, 0.0)))
}

pub fn scalar_product_form(lambda: &[C64], mu: &[C64], z: C64) -> C64 {
    lambda.iter().map(|l| z - l).product::<C64>() / mu.iter().map(|m| z - m).product::<C64>()
}

pub fn scalar_partial_fraction(mu: &[C64], c: &CVec, z: C64) -> C64 {
    C64::new(1.0, 0.0) + mu.iter().zip(c.iter()).map(|(m, cj)| cj / (z - m)).sum::<C64>()
}

/// Condition number of `Γ`, for reporting.
pub fn gamma_condition(problem: &Genus0Problem) -> f64 {
    condition_number(&problem.gamma())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn two_point_sylvester_matches_residues() {
        // Residues of z(z−1)/((z−2)(z−3)) at 2 and 3 are −2 and 6.
        let coeffs = sylvester_coefficients(&[c(0.0), c(1.0)], &[c(2.0), c(3.0)]).unwrap();
        assert!((coeffs[0] - c(-2.0)).norm() < 1e-13);
        assert!((coeffs[1] - c(6.0)).norm() < 1e-13);
        let lhs = scalar_product_form(&[c(0.0), c(1.0)], &[c(2.0), c(3.0)], c(5.0));
        assert!((lhs - c(10.0 / 3.0)).norm() < 1e-13);
    }

    #[test]
    fn mismatch_and_singular() {
        let p = Genus0Problem {
            rank: 1,
            zeros: vec![ZeroDatum { point: c(0.0), x: vec![c(1.0)] }],
            poles: vec![],
        };
        assert!(matches!(solve_genus0(&p), Err(Error::CountMismatch { .. })));
        let p = Genus0Problem {
            rank: 2,
            zeros: vec![ZeroDatum { point: c(0.0), x: vec![c(1.0), c(0.0)] }],
            poles: vec![PoleDatum { point: c(1.0), u: vec![c(0.0), c(1.0)] }],
        };
        assert!(matches!(solve_genus0(&p), Err(Error::SingularGamma { .. })));
    }

    #[test]
    fn scalar_single_pair() {
        let p = Genus0Problem {
            rank: 1,
            zeros: vec![ZeroDatum { point: c(2.0), x: vec![c(1.0)] }],
            poles: vec![PoleDatum { point: c(3.0), u: vec![c(1.0)] }],
        };
        let t = solve_genus0(&p).unwrap();
        let z = C64::new(0.4, 0.7);
        let expected = (z - 2.0) / (z - 3.0);
        assert!((t.eval(z).unwrap()[(0, 0)] - expected).norm() < 1e-14);
        assert!((t.eval_inverse(z).unwrap()[(0, 0)] - 1.0 / expected).norm() < 1e-14);
    }
}
