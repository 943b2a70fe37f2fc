//! Small dense complex linear algebra used throughout.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::{CMat, CVec, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// 2-norm condition number; infinite for singular or empty input.
pub fn condition_number(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vnorm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, floor)` in the Frobenius norm.
pub fn rel_diff(a: &CMat, b: &CMat, floor: f64) -> f64 {
    let d = frob(&(a - b));
    d / frob(a).max(frob(b)).max(floor)
}

/// Inverse through full-pivot LU, refusing matrices with condition above `max_cond`.
pub fn checked_inverse(m: &CMat, max_cond: f64) -> std::result::Result<CMat, f64> {
    if !m.is_square() {
        return Err(f64::INFINITY);
    }
    let cond = condition_number(m);
    if !cond.is_finite() || cond > max_cond {
        return Err(cond);
    }
    m.clone().full_piv_lu().try_inverse().ok_or(cond)
}

pub fn solve(m: &CMat, rhs: &CMat) -> Result<CMat> {
    m.clone()
        .full_piv_lu()
        .solve(rhs)
        .ok_or(Error::InvalidInput("singular linear system".into()))
}

/// Numerical rank: number of singular values above `rtol * s_max`.
pub fn numerical_rank(m: &CMat, rtol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&hi) if hi > 0.0 => s.iter().filter(|&&x| x > rtol * hi).count(),
        _ => 0,
    }
}

/// Orthonormal basis (columns) of the right null space of dimension `dim`,
/// taken from the trailing right singular vectors.
pub fn null_space(m: &CMat, dim: usize) -> CMat {
    let n = m.ncols();
    let svd = full_svd(m);
    let order = svd.order;
    let vh = svd.v_t;
    let mut out = CMat::zeros(n, dim);
    for (k, &idx) in order.iter().rev().take(dim).enumerate() {
        for r in 0..n {
            out[(r, k)] = vh[(idx, r)].conj();
        }
    }
    out
}

/// Orthonormal basis (rows) of the left null space of dimension `dim`.
pub fn left_null_space(m: &CMat, dim: usize) -> CMat {
    null_space(&m.adjoint(), dim).adjoint()
}

pub struct FullSvd {
    pub s: Vec<f64>,
    pub v_t: CMat,
    pub u: CMat,
    /// Indices into `s` sorted by descending singular value.
    pub order: Vec<usize>,
}

/// SVD padded to a full right basis for wide or square inputs.
pub fn full_svd(m: &CMat) -> FullSvd {
    let (r, n) = m.shape();
    let padded = if r < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (r, n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(true, true);
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    FullSvd { s, v_t: svd.v_t.unwrap(), u: svd.u.unwrap(), order }
}

/// Orthogonal projector onto the column span of `m`, using its numerical rank.
pub fn column_projector(m: &CMat, rtol: f64) -> CMat {
    let k = numerical_rank(m, rtol);
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let s = svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let mut basis = CMat::zeros(m.nrows(), k);
    for (j, &i) in idx.iter().take(k).enumerate() {
        basis.set_column(j, &u.column(i));
    }
    &basis * basis.adjoint()
}

/// Projector onto the span of the left singular vectors of `m` with singular value
/// above `abs_tol`.
pub fn projector_above(m: &CMat, abs_tol: f64) -> CMat {
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let mut p = CMat::zeros(m.nrows(), m.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > abs_tol {
            let col = u.column(i);
            p += col * col.adjoint();
        }
    }
    p
}

/// Spectral-norm distance between the column spans of `a` and `b`.
pub fn subspace_gap(a: &CMat, b: &CMat, rtol: f64) -> f64 {
    let d = column_projector(a, rtol) - column_projector(b, rtol);
    singular_values(&d).first().copied().unwrap_or(0.0)
}

pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), b.shape()).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

pub fn scalar_mat(z: C64) -> CMat {
    DMatrix::from_element(1, 1, z)
}

pub fn column(v: &[C64]) -> CVec {
    CVec::from_column_slice(v)
}
