//! Seeded identity sweeps. Each criterion collects named checks; a check keeps the worst
//! residual over its samples and compares it against an upper (or, for negative
//! controls, lower) bound.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::absint::{
    build_solution, fay_residual, matrix_fay_residual, scalar_multiplicative,
    special_partial_fraction, verify_solution, AbsintData, BundleMap, Coupling, Node,
    ScalarMultiplicative,
};
use crate::conint::{
    build_gamma0, check_condition_i3, check_gamma_equality, check_intertwining,
    convert_absint_to_conint, solve_conint, ConintData, CurveNode,
};
use crate::detrep::{
    build_pencil, curve_membership, gamma_invertibility_check, identity_residuals,
    left_sections, right_sections,
};
use crate::error::{Error, Result};
use crate::genus0::{
    scalar_partial_fraction, scalar_product_form, solve_genus0, sylvester_coefficients,
    Genus0Problem, PoleDatum, ZeroDatum,
};
use crate::kernel::{
    collection_residual, diagonal_residue, duality_residual, extract_laurent_coeffs,
    CauchyKernel, DirectSumKernel, LineKernel, SphereKernel, Stencil,
};
use crate::linalg::frob;
use crate::surface::{build_embedding_functions, EmbeddingPair, FlatLineBundle, Surface, SurfacePoint, Torus};
use crate::theta::{PeriodMatrix, ThetaEngine};
use crate::{CMat, CVec, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub samples: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
    pub pass: bool,
}

impl CriterionReport {
    pub fn worst(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Multiplies every upper-bound tolerance.
    pub tol_scale: f64,
    /// Overrides the sweep sizes when set.
    pub samples: Option<usize>,
    /// Per-check tolerance overrides by check name.
    pub tolerances: BTreeMap<String, f64>,
    /// Moduli swept by the genus-one criteria; [`TAUS`] when unset.
    #[serde(default)]
    pub taus: Option<Vec<C64>>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 20240611, tol_scale: 1.0, samples: None, tolerances: BTreeMap::new(), taus: None }
    }
}

pub struct Ctx {
    cfg: VerifyConfig,
    pub rng: ChaCha8Rng,
    checks: Vec<Check>,
}

impl Ctx {
    pub fn new(cfg: &VerifyConfig, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        Self { cfg: cfg.clone(), rng, checks: Vec::new() }
    }

    pub fn taus(&self) -> Vec<C64> {
        self.cfg.taus.clone().unwrap_or_else(|| TAUS.to_vec())
    }

    pub fn samples(&self, default: usize) -> usize {
        self.cfg.samples.unwrap_or(default).max(1)
    }

    fn tolerance(&self, name: &str, tol: f64, bound: Bound) -> f64 {
        if let Some(t) = self.cfg.tolerances.get(name) {
            return *t;
        }
        match bound {
            Bound::AtMost => tol * self.cfg.tol_scale,
            Bound::AtLeast => tol,
        }
    }

    fn record(&mut self, name: &str, residual: f64, tol: f64, bound: Bound) {
        let tolerance = self.tolerance(name, tol, bound);
        if let Some(c) = self.checks.iter_mut().find(|c| c.name == name) {
            c.samples += 1;
            c.residual = match bound {
                Bound::AtMost => worse_max(c.residual, residual),
                Bound::AtLeast => worse_min(c.residual, residual),
            };
        } else {
            self.checks.push(Check {
                name: name.to_string(),
                residual,
                tolerance,
                bound,
                samples: 1,
                pass: false,
                note: None,
            });
        }
    }

    pub fn at_most(&mut self, name: &str, residual: f64, tol: f64) {
        self.record(name, residual, tol, Bound::AtMost);
    }

    pub fn at_least(&mut self, name: &str, residual: f64, tol: f64) {
        self.record(name, residual, tol, Bound::AtLeast);
    }

    /// Records a failure to evaluate as an infinite residual.
    pub fn at_most_res(&mut self, name: &str, r: Result<f64>, tol: f64) {
        match r {
            Ok(v) => self.at_most(name, v, tol),
            Err(e) => self.fail(name, tol, e),
        }
    }

    pub fn fail(&mut self, name: &str, tol: f64, e: Error) {
        self.at_most(name, f64::INFINITY, tol);
        if let Some(c) = self.checks.iter_mut().find(|c| c.name == name) {
            c.note.get_or_insert_with(|| e.to_string());
        }
    }

    /// Passes when `r` is an error accepted by `ok`.
    pub fn rejects<T>(&mut self, name: &str, r: Result<T>, ok: impl Fn(&Error) -> bool) {
        let (v, note) = match r {
            Err(e) if ok(&e) => (0.0, None),
            Err(e) => (1.0, Some(format!("unexpected error: {e}"))),
            Ok(_) => (1.0, Some("accepted".to_string())),
        };
        self.at_most(name, v, 0.0);
        if let Some(n) = note {
            if let Some(c) = self.checks.iter_mut().find(|c| c.name == name) {
                c.note.get_or_insert(n);
            }
        }
    }

    fn finish(mut self, id: u32, title: &str, start: Instant, budget: f64) -> CriterionReport {
        let seconds = start.elapsed().as_secs_f64();
        self.at_most("runtime seconds", seconds, budget);
        if let Some(c) = self.checks.last_mut() {
            c.tolerance = budget;
        }
        let checks = self.into_checks();
        let pass = checks.iter().all(|c| c.pass);
        CriterionReport { id, title: title.to_string(), checks, seconds, pass }
    }

    /// Settles pass flags and returns the recorded checks.
    pub fn into_checks(mut self) -> Vec<Check> {
        for c in &mut self.checks {
            c.pass = match c.bound {
                Bound::AtMost => c.residual <= c.tolerance,
                Bound::AtLeast => c.residual >= c.tolerance,
            };
        }
        self.checks
    }
}

fn worse_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn worse_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

pub fn rel_mat(a: &CMat, b: &CMat) -> f64 {
    frob(&(a - b)) / frob(a).max(frob(b)).max(1e-300)
}

// ---- sampling ----

pub fn rand_c(rng: &mut impl Rng, r: f64) -> C64 {
    c(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

pub fn rand_vec(rng: &mut impl Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| rand_c(rng, 1.0))
}

pub fn rand_mat(rng: &mut impl Rng, n: usize, m: usize) -> CMat {
    CMat::from_fn(n, m, |_, _| rand_c(rng, 1.0))
}

pub fn torus_point(rng: &mut impl Rng, tau: C64) -> C64 {
    rng.gen_range(0.0..1.0) + tau * rng.gen_range(0.0..1.0)
}

/// A point at lattice distance at least `sep` from every point of `avoid`.
pub fn torus_point_avoiding(rng: &mut impl Rng, t: &Torus, avoid: &[C64], sep: f64) -> C64 {
    loop {
        let p = torus_point(rng, t.tau());
        if avoid.iter().all(|&a| t.reduce(p - a).norm() >= sep) {
            return p;
        }
    }
}

/// Random bundles are kept away from the theta divisor, where kernels blow up.
pub const MIN_THETA0: f64 = 0.25;

/// A flat line bundle with `|θ[a;b](0)| > MIN_THETA0`.
pub fn rand_line(rng: &mut impl Rng, t: &Arc<Torus>) -> FlatLineBundle {
    loop {
        let (a, b) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        if let Ok(l) = FlatLineBundle::from_characteristic(t.clone(), a, b) {
            if l.theta0().norm() > MIN_THETA0 {
                return l;
            }
        }
    }
}

pub fn line_ok(l: &FlatLineBundle) -> bool {
    l.theta0().norm() > MIN_THETA0
}

pub fn rand_period2(rng: &mut impl Rng) -> PeriodMatrix {
    loop {
        let a = nalgebra::DMatrix::<f64>::from_fn(2, 2, |_, _| rng.gen_range(-0.5..0.5));
        let y = &a * a.transpose() + nalgebra::DMatrix::<f64>::identity(2, 2) * 0.6;
        let x01 = rng.gen_range(-0.5..0.5);
        let x = [rng.gen_range(-0.5..0.5), x01, x01, rng.gen_range(-0.5..0.5)];
        let omega = CMat::from_fn(2, 2, |i, j| c(x[2 * i + j], y[(i, j)]));
        if let Ok(p) = PeriodMatrix::new(omega) {
            return p;
        }
    }
}

pub const TAUS: [C64; 3] = [C64::new(0.0, 1.0), C64::new(0.0, 2.0), C64::new(0.3, 0.8)];

/// Embedding poles at fixed fractions of the period parallelogram.
pub fn default_embedding(t: &Arc<Torus>) -> Result<EmbeddingPair> {
    let tau = t.tau();
    let pts = [0.1 + 0.1 * tau, 0.45 + 0.3 * tau, 0.7 + 0.75 * tau];
    build_embedding_functions(t.clone(), pts)
}

pub fn xi_draws(rng: &mut impl Rng) -> Vec<[C64; 2]> {
    let w = c(0.7, 0.3);
    let n = (1.0 + w.norm_sqr()).sqrt();
    let r = [rand_c(rng, 1.0), rand_c(rng, 1.0)];
    let rn = (r[0].norm_sqr() + r[1].norm_sqr()).sqrt();
    vec![[c(1.0 / n, 0.0), w / n], [r[0] / rn, r[1] / rn]]
}

// ---- reference constructions ----

/// Rank-two map `T(p) = P diag(f(p), 1) D` from `χ₁ ⊕ χ̃₀` to `χ̃₀ ⊕ χ̃₀`, where `f` has
/// a single zero `λ` and pole `μ`. Its zero vector is `P⁻ᵀe₁` and its pole vector `Pe₁`.
pub struct RankTwoExample {
    pub chi: Arc<DirectSumKernel>,
    pub tilde: Arc<DirectSumKernel>,
    pub lambda: C64,
    pub mu: C64,
    pub x: CVec,
    pub u: CVec,
    pub scalar: ScalarMultiplicative,
    pub p: CMat,
    pub d: CMat,
}

impl RankTwoExample {
    pub fn new(
        tilde0: &FlatLineBundle,
        lambda: C64,
        mu: C64,
        q: C64,
        p: CMat,
        d: [C64; 2],
    ) -> Result<Self> {
        let t = tilde0.torus().clone();
        let chi1 = FlatLineBundle::from_point(t.clone(), tilde0.point() - (lambda - mu))?;
        let scalar = scalar_multiplicative(&[lambda], &[mu], &chi1, tilde0, q, c(1.0, 0.0))?;
        let (ta, tb) = (tilde0.a(), tilde0.b());
        let chi = DirectSumKernel::lines(t.clone(), &[(chi1.a(), chi1.b()), (ta, tb)])?;
        let tilde = DirectSumKernel::lines(t, &[(ta, tb), (ta, tb)])?;
        let pinv = p.clone().try_inverse().ok_or(Error::SingularBoundaryValue)?;
        let e1 = CVec::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0)]);
        Ok(Self {
            chi: Arc::new(chi),
            tilde: Arc::new(tilde),
            lambda,
            mu,
            x: pinv.transpose() * &e1,
            u: &p * e1,
            scalar,
            d: CMat::from_diagonal(&CVec::from_column_slice(&d)),
            p,
        })
    }

    pub fn data(&self) -> AbsintData {
        let v = |w: &CVec| vec![w.iter().copied().collect::<Vec<_>>()];
        AbsintData {
            zeros: vec![Node { point: self.lambda, vectors: v(&self.x) }],
            poles: vec![Node { point: self.mu, vectors: v(&self.u) }],
            couplings: Vec::new(),
        }
    }
}

impl BundleMap for RankTwoExample {
    fn rank(&self) -> usize {
        2
    }

    fn eval(&self, p: C64) -> Result<CMat> {
        let f = self.scalar.eval_scalar(p)?;
        let mid = CMat::from_diagonal(&CVec::from_column_slice(&[f, c(1.0, 0.0)]));
        Ok(&self.p * mid * &self.d)
    }
}

/// A vector orthogonal to `v` of norm `size * |v|`.
pub fn orthogonal_bump(rng: &mut impl Rng, v: &CVec, size: f64) -> CVec {
    let w = rand_vec(rng, v.len());
    let w = &w - v * (v.dotc(&w) / v.norm_squared());
    let scale = size * v.norm() / w.norm();
    w * C64::new(scale, 0.0)
}

fn well_conditioned(rng: &mut impl Rng, n: usize) -> CMat {
    loop {
        let m = rand_mat(rng, n, n);
        if crate::linalg::condition_number(&m) < 20.0 {
            return m;
        }
    }
}

// ---- criteria ----

pub const TITLES: [&str; 9] = [
    "theta engine",
    "genus-0 interpolation",
    "Cauchy kernel",
    "Fay trisecant identity",
    "product and partial-fraction forms",
    "matrix Fay identity",
    "determinantal representation",
    "concrete interpolation",
    "negative controls",
];

pub fn run_criterion(id: u32, cfg: &VerifyConfig) -> CriterionReport {
    let start = Instant::now();
    let mut ctx = Ctx::new(cfg, id as u64);
    let (budget, r) = match id {
        1 => (10.0, criterion_theta(&mut ctx)),
        2 => (5.0, criterion_genus0(&mut ctx)),
        3 => (20.0, criterion_kernel(&mut ctx)),
        4 => (30.0, criterion_fay(&mut ctx)),
        5 => (30.0, criterion_forms(&mut ctx)),
        6 => (30.0, criterion_matrix_fay(&mut ctx)),
        7 => (30.0, criterion_detrep(&mut ctx)),
        8 => (60.0, criterion_conint(&mut ctx)),
        9 => (60.0, criterion_negative(&mut ctx)),
        _ => (0.0, Err(Error::InvalidInput(format!("no criterion {id}")))),
    };
    if let Err(e) = r {
        ctx.fail("unexpected error", 0.0, e);
    }
    ctx.finish(id, TITLES.get(id as usize - 1).copied().unwrap_or("unknown"), start, budget)
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<CriterionReport> {
    (1..=9).map(|id| run_criterion(id, cfg)).collect()
}

/// `Σ_n e^{πin²τ}` summed outward until terms vanish.
pub fn theta_series_1d(tau: C64, z: C64) -> C64 {
    let term = |n: f64| (c(0.0, PI) * n * n * tau + c(0.0, 2.0 * PI) * n * z).exp();
    let mut s = term(0.0);
    for n in 1..200 {
        let t = term(n as f64) + term(-(n as f64));
        s += t;
        if t.norm() < 1e-300 {
            break;
        }
    }
    s
}

fn criterion_theta(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.samples(200);
    let mut engines: Vec<ThetaEngine> = ctx
        .taus()
        .iter()
        .map(|&t| ThetaEngine::new(PeriodMatrix::genus1(t)?, Default::default()))
        .collect::<Result<_>>()?;
    for _ in 0..2 {
        let p = rand_period2(&mut ctx.rng);
        engines.push(ThetaEngine::new(p, Default::default())?);
    }
    for s in 0..n {
        let e = &engines[s % engines.len()];
        let g = e.genus();
        let z: Vec<C64> = (0..g).map(|_| c(ctx.rng.gen_range(-1.0..1.0), ctx.rng.gen_range(-0.5..0.5))).collect();
        let m: Vec<i64> = (0..g).map(|_| ctx.rng.gen_range(-2..=2)).collect();
        let nn: Vec<i64> = (0..g).map(|_| ctx.rng.gen_range(-2..=2)).collect();
        let shift = e.period().lattice_vector(&nn, &m);
        let zs: Vec<C64> = z.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let om = e.period().omega();
        let mut quad = c(0.0, 0.0);
        let mut lin = c(0.0, 0.0);
        for i in 0..g {
            lin += nn[i] as f64 * z[i];
            for j in 0..g {
                quad += nn[i] as f64 * om[(i, j)] * nn[j] as f64;
            }
        }
        let factor = (c(0.0, -PI) * quad - c(0.0, 2.0 * PI) * lin).exp();
        match (e.theta(&zs), e.theta(&z)) {
            (Ok(a), Ok(b)) => ctx.at_most("quasi-periodicity", rel(a, factor * b), 1e-10),
            (Err(err), _) | (_, Err(err)) => ctx.fail("quasi-periodicity", 1e-10, err),
        }
    }
    let ei = &engines[0];
    let v = ei.theta(&[c(0.0, 0.0)])?;
    ctx.at_most("theta(0|i) vs direct series", rel(v, theta_series_1d(c(0.0, 1.0), c(0.0, 0.0))), 1e-9);
    let closed = PI.powf(0.25) / statrs::function::gamma::gamma(0.75);
    ctx.at_most("theta(0|i) vs closed form", rel(v, c(closed, 0.0)), 1e-9);
    let h = 1e-5;
    for s in 0..ctx.samples(20) {
        let e = &engines[s % engines.len()];
        let g = e.genus();
        let z: Vec<C64> = (0..g).map(|_| c(ctx.rng.gen_range(-1.0..1.0), ctx.rng.gen_range(-0.5..0.5))).collect();
        let (_, grad) = e.theta_and_gradient(&z)?;
        for k in 0..g {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[k] += h;
            zm[k] -= h;
            let fd = (e.theta(&zp)? - e.theta(&zm)?) / (2.0 * h);
            let scale = grad.iter().map(|d| d.norm()).fold(e.theta(&z)?.norm(), f64::max);
            ctx.at_most("gradient vs finite differences", (fd - grad[k]).norm() / scale, 1e-6);
        }
    }
    Ok(())
}

fn rand_distinct(rng: &mut impl Rng, n: usize, avoid: &[C64], sep: f64) -> Vec<C64> {
    let mut out: Vec<C64> = Vec::new();
    while out.len() < n {
        let z = rand_c(rng, 3.0);
        if avoid.iter().chain(&out).all(|a| (a - z).norm() >= sep) {
            out.push(z);
        }
    }
    out
}

fn criterion_genus0(ctx: &mut Ctx) -> Result<()> {
    let mut solved = 0;
    let target = ctx.samples(50);
    let mut attempts = 0;
    while solved < target && attempts < 20 * target {
        attempts += 1;
        let r = ctx.rng.gen_range(1..=3);
        let n = ctx.rng.gen_range(1..=4);
        let lam = rand_distinct(&mut ctx.rng, n, &[], 0.3);
        let mu = rand_distinct(&mut ctx.rng, n, &lam, 0.3);
        let problem = Genus0Problem {
            rank: r,
            zeros: lam.iter().map(|&p| ZeroDatum { point: p, x: rand_vec(&mut ctx.rng, r).iter().copied().collect() }).collect(),
            poles: mu.iter().map(|&p| PoleDatum { point: p, u: rand_vec(&mut ctx.rng, r).iter().copied().collect() }).collect(),
        };
        let t = match solve_genus0(&problem) {
            Ok(t) => t,
            Err(Error::SingularGamma { .. }) => continue,
            Err(e) => return Err(e),
        };
        if crate::genus0::gamma_condition(&problem) > 1e6 {
            continue;
        }
        solved += 1;
        for z in &problem.zeros {
            let x = CVec::from_column_slice(&z.x);
            let v = t.eval(z.point)?;
            let res = (x.transpose() * &v).norm() / (x.norm() * frob(&v).max(1.0));
            ctx.at_most("zero conditions", res, 1e-10);
        }
        for p in &problem.poles {
            let u = CVec::from_column_slice(&p.u);
            let v = t.eval_inverse(p.point)?;
            let res = (&v * &u).norm() / (u.norm() * frob(&v).max(1.0));
            ctx.at_most("pole conditions", res, 1e-10);
        }
        for _ in 0..5 {
            let z = rand_distinct(&mut ctx.rng, 1, &[lam.clone(), mu.clone()].concat(), 0.2)[0];
            let prod = t.eval(z)? * t.eval_inverse(z)?;
            ctx.at_most("T T^-1 = I", frob(&(prod - CMat::identity(r, r))), 1e-10);
        }
    }
    ctx.at_least("solvable problems drawn", solved as f64, target as f64);
    for n in 1..=4 {
        let lam = rand_distinct(&mut ctx.rng, n, &[], 0.3);
        let mu = rand_distinct(&mut ctx.rng, n, &lam, 0.3);
        let coef = sylvester_coefficients(&lam, &mu)?;
        for _ in 0..ctx.samples(50) {
            let z = rand_distinct(&mut ctx.rng, 1, &[lam.clone(), mu.clone()].concat(), 0.1)[0];
            let a = scalar_product_form(&lam, &mu, z);
            let b = scalar_partial_fraction(&mu, &coef, z);
            ctx.at_most("product form = partial fractions", rel(a, b), 1e-10);
        }
    }
    Ok(())
}

fn criterion_kernel(ctx: &mut Ctx) -> Result<()> {
    let taus = ctx.taus();
    let stencil = Stencil::default();
    for (s, &tau) in taus.iter().enumerate() {
        let t = Arc::new(Torus::new(tau)?);
        let mut kernels: Vec<(Arc<dyn CauchyKernel>, Option<C64>)> = Vec::new();
        for _ in 0..2 {
            let k = LineKernel::new(rand_line(&mut ctx.rng, &t));
            let a = k.connection_scalar()?;
            kernels.push((Arc::new(k), Some(a)));
        }
        let (l1, l2) = (rand_line(&mut ctx.rng, &t), rand_line(&mut ctx.rng, &t));
        let ds = DirectSumKernel::lines(t.clone(), &[(l1.a(), l1.b()), (l2.a(), l2.b())])?;
        kernels.push((Arc::new(ds), None));
        for (k, closed) in &kernels {
            let r = k.rank();
            for _ in 0..3 {
                let q = torus_point(&mut ctx.rng, tau);
                let res = diagonal_residue(k.as_ref(), q, &stencil)?;
                ctx.at_most("diagonal residue = I", frob(&(res - CMat::identity(r, r))), 1e-8);
                let cc = extract_laurent_coeffs(k.as_ref(), q, &stencil)?;
                ctx.at_most("A + A_l = 0", frob(&(&cc.a + &cc.a_left)), 1e-7);
                if let Some(a) = closed {
                    ctx.at_most("A vs closed form", (cc.a[(0, 0)] - a).norm(), 1e-6);
                } else if let Some(conn) = k.connection() {
                    ctx.at_most("A vs closed form", frob(&(&cc.a - conn)), 1e-6);
                }
                let p = torus_point_avoiding(&mut ctx.rng, &t, &[q], 0.1);
                ctx.at_most_res("duality", duality_residual(k.as_ref(), p, q), 1e-10);
            }
        }
        let emb = default_embedding(&t)?;
        let draws = ctx.samples(50) / taus.len() + usize::from(s < ctx.samples(50) % taus.len());
        for d in 0..draws {
            let (k, _) = &kernels[d % kernels.len()];
            let xi = [rand_c(&mut ctx.rng, 1.0), rand_c(&mut ctx.rng, 1.0)];
            let p = torus_point_avoiding(&mut ctx.rng, &t, emb.points(), 0.1);
            let q = if d % 5 == 0 {
                p
            } else {
                torus_point_avoiding(&mut ctx.rng, &t, &[emb.points().as_slice(), &[p]].concat(), 0.1)
            };
            ctx.at_most_res("collection formula", collection_residual(k.as_ref(), &emb, xi, p, q), 1e-8);
        }
    }
    Ok(())
}

fn criterion_fay(ctx: &mut Ctx) -> Result<()> {
    let taus = ctx.taus();
    let n = ctx.samples(200);
    for (s, &tau) in taus.iter().enumerate() {
        let t = Arc::new(Torus::new(tau)?);
        let surf = Surface::Torus(t.clone());
        let pt = SurfacePoint::Coord;
        let count = n / taus.len() + usize::from(s < n % taus.len());
        for _ in 0..count {
            let z = torus_point(&mut ctx.rng, tau);
            let mut pts: Vec<C64> = Vec::new();
            for _ in 0..4 {
                pts.push(torus_point_avoiding(&mut ctx.rng, &t, &pts, 0.05));
            }
            let r = fay_residual(&surf, &[z], &pt(pts[0]), &pt(pts[1]), &pt(pts[2]), &pt(pts[3]));
            ctx.at_most_res("Fay trisecant", r, 1e-9);
        }
        for _ in 0..10 {
            let z = torus_point(&mut ctx.rng, tau);
            let l = torus_point(&mut ctx.rng, tau);
            let p = torus_point_avoiding(&mut ctx.rng, &t, &[l], 0.05);
            let q = torus_point_avoiding(&mut ctx.rng, &t, &[l, p], 0.05);
            let r = fay_residual(&surf, &[z], &pt(l), &pt(l), &pt(p), &pt(q));
            ctx.at_most_res("Fay with lambda = mu", r, 1e-10);
            let r = fay_residual(&surf, &[z], &pt(l), &pt(q), &pt(l), &pt(p));
            ctx.at_most_res("Fay with p = lambda", r, 1e-10);
        }
    }
    Ok(())
}

fn criterion_forms(ctx: &mut Ctx) -> Result<()> {
    let taus = ctx.taus();
    let npts = ctx.samples(50);
    for (s, &tau) in taus.iter().enumerate() {
        let t = Arc::new(Torus::new(tau)?);
        for n in 1..=3 {
            let (tilde, chi, lam, mu, q) = loop {
                let tilde = rand_line(&mut ctx.rng, &t);
                let mut pts: Vec<C64> = Vec::new();
                for _ in 0..(2 * n + 1) {
                    pts.push(torus_point_avoiding(&mut ctx.rng, &t, &pts, 0.08));
                }
                let (lam, mu, q) = (pts[..n].to_vec(), pts[n..2 * n].to_vec(), pts[2 * n]);
                let d: C64 = lam.iter().sum::<C64>() - mu.iter().sum::<C64>();
                if let Ok(chi) = FlatLineBundle::from_point(t.clone(), tilde.point() - d) {
                    if line_ok(&chi) {
                        break (tilde, chi, lam, mu, q);
                    }
                }
            };
            let prod = scalar_multiplicative(&lam, &mu, &chi, &tilde, q, c(1.0, 0.0))?;
            let data = crate::absint::full_rank_data(&lam, &mu, 1);
            let kc: Arc<dyn CauchyKernel> = Arc::new(LineKernel::new(chi.clone()));
            let kt: Arc<dyn CauchyKernel> = Arc::new(LineKernel::new(tilde.clone()));
            let pf = build_solution(&data, q, CMat::identity(1, 1), kc, kt)?;
            let nodes = [lam.clone(), mu.clone(), vec![q]].concat();
            for _ in 0..npts {
                let p = torus_point_avoiding(&mut ctx.rng, &t, &nodes, 0.05);
                let a = prod.eval_scalar(p)?;
                let b = pf.eval(p)?[(0, 0)];
                ctx.at_most(&format!("product = partial fraction (n={n})"), rel(a, b), 1e-9);
                if n == 1 {
                    let sp = special_partial_fraction(&chi, lam[0], mu[0], q, c(1.0, 0.0), p)?;
                    ctx.at_most("single-pair term assembly", rel(a, sp), 1e-9);
                }
            }
            if s == 0 {
                let rep = verify_solution(&pf, &data)?;
                ctx.at_most("partial-fraction solution conditions", rep.max(), 1e-7);
            }
        }
    }
    Ok(())
}

fn criterion_matrix_fay(ctx: &mut Ctx) -> Result<()> {
    let taus = ctx.taus();
    let npts = ctx.samples(30);
    // genus 0, r = 2
    let sphere = SphereKernel::new(2);
    let (t0, lam, mu, x, u) = loop {
        let pts = rand_distinct(&mut ctx.rng, 2, &[], 0.5);
        let x = rand_vec(&mut ctx.rng, 2);
        let u = rand_vec(&mut ctx.rng, 2);
        let problem = Genus0Problem {
            rank: 2,
            zeros: vec![ZeroDatum { point: pts[0], x: x.iter().copied().collect() }],
            poles: vec![PoleDatum { point: pts[1], u: u.iter().copied().collect() }],
        };
        if let Ok(t) = solve_genus0(&problem) {
            if (x.transpose() * &u)[(0, 0)].norm() > 0.1 {
                break (t, pts[0], pts[1], x, u);
            }
        }
    };
    for _ in 0..npts {
        let pq = rand_distinct(&mut ctx.rng, 2, &[lam, mu], 0.2);
        let r = matrix_fay_residual(&t0, &sphere, &sphere, lam, &x, mu, &u, pq[0], pq[1]);
        ctx.at_most_res("matrix Fay, genus 0", r, 1e-10);
    }
    // genus 1, r = 2 direct sums
    for &tau in &taus {
        let t = Arc::new(Torus::new(tau)?);
        let ex = loop {
            let tilde0 = rand_line(&mut ctx.rng, &t);
            let l = torus_point(&mut ctx.rng, tau);
            let m = torus_point_avoiding(&mut ctx.rng, &t, &[l], 0.1);
            let q = torus_point_avoiding(&mut ctx.rng, &t, &[l, m], 0.1);
            let p = well_conditioned(&mut ctx.rng, 2);
            let d = [rand_c(&mut ctx.rng, 1.0) + 1.5, rand_c(&mut ctx.rng, 1.0) + 1.5];
            if let Ok(ex) = RankTwoExample::new(&tilde0, l, m, q, p, d) {
                break ex;
            }
        };
        for _ in 0..npts / taus.len() + 1 {
            let p = torus_point_avoiding(&mut ctx.rng, &t, &[ex.lambda, ex.mu], 0.08);
            let q = torus_point_avoiding(&mut ctx.rng, &t, &[ex.lambda, ex.mu, p], 0.08);
            let r = matrix_fay_residual(&ex, ex.chi.as_ref(), ex.tilde.as_ref(), ex.lambda, &ex.x, ex.mu, &ex.u, p, q);
            ctx.at_most_res("matrix Fay, genus 1 direct sum", r, 1e-8);
        }
    }
    Ok(())
}

fn criterion_detrep(ctx: &mut Ctx) -> Result<()> {
    let taus = ctx.taus();
    for &tau in &taus {
        let t = Arc::new(Torus::new(tau)?);
        let emb = default_embedding(&t)?;
        let l1 = rand_line(&mut ctx.rng, &t);
        let l2 = rand_line(&mut ctx.rng, &t);
        let kernels: Vec<Box<dyn CauchyKernel>> = vec![
            Box::new(LineKernel::new(l1.clone())),
            Box::new(DirectSumKernel::lines(t.clone(), &[(l1.a(), l1.b()), (l2.a(), l2.b())])?),
        ];
        for k in &kernels {
            let pencil = build_pencil(k.as_ref(), &emb)?;
            let r = k.rank();
            let mut xis = xi_draws(&mut ctx.rng);
            xis.push([rand_c(&mut ctx.rng, 1.0), rand_c(&mut ctx.rng, 1.0)]);
            for xi in &xis {
                for _ in 0..ctx.samples(20) {
                    let p = torus_point_avoiding(&mut ctx.rng, &t, emb.points(), 0.08);
                    let [a, b, d] = identity_residuals(&pencil, k.as_ref(), &emb, p, *xi)?;
                    ctx.at_most("U u = 0", a, 1e-7);
                    ctx.at_most("u_l U = 0", b, 1e-7);
                    ctx.at_most("u_l (xi.sigma) u = (xi.lambda') I", d, 1e-7);
                }
            }
            for _ in 0..ctx.samples(100) {
                let p = torus_point_avoiding(&mut ctx.rng, &t, emb.points(), 0.08);
                let m = curve_membership(&pencil, emb.eval(p)?);
                ctx.at_most("on-curve relative det", m.relative_det, 1e-7);
                ctx.at_most("on-curve kernel dimension mismatch", (m.kernel_dim as f64 - r as f64).abs(), 0.0);
            }
            for _ in 0..ctx.samples(20) {
                let z = generic_probe(&mut ctx.rng, &pencil, PROBE_SEPARATION);
                ctx.at_least("off-curve relative det", curve_membership(&pencil, z).relative_det, 1e-3);
            }
            for _ in 0..3 {
                let y: Vec<C64> = (0..2).map(|_| torus_point(&mut ctx.rng, tau)).collect();
                let s: C64 = emb.points().iter().sum();
                let y3 = s - y[0] - y[1];
                let all = [y[0], y[1], y3];
                let near = |a: C64| emb.points().iter().any(|&x| t.same_point(a, x, 0.05));
                if all.iter().any(|&a| near(a)) || t.same_point(y[0], y[1], 0.05) || t.same_point(y[0], y3, 0.05) || t.same_point(y[1], y3, 0.05) {
                    continue;
                }
                let cond = gamma_invertibility_check(k.as_ref(), &emb, all)?;
                ctx.at_most("line-section Gamma condition", cond, 1e10);
            }
        }
    }
    Ok(())
}

/// Roots in `z₂` of `det U(z₁, z₂)`, from the polynomial interpolated on a circle.
pub fn curve_roots_z2(pencil: &crate::detrep::Pencil, z1: C64) -> Vec<C64> {
    let m = pencil.size();
    let n = m + 1;
    let radius = 4.0;
    let w = |j: usize| C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
    let vals: Vec<C64> = (0..n).map(|j| pencil.eval([z1, w(j) * radius]).determinant()).collect();
    let mut coef: Vec<C64> = (0..n)
        .map(|k| {
            let s: C64 = (0..n).map(|j| vals[j] * w(j * k).conj()).sum();
            s / (n as f64 * radius.powi(k as i32))
        })
        .collect();
    let scale = coef.iter().enumerate().map(|(k, a)| a.norm() * radius.powi(k as i32)).fold(0.0, f64::max);
    while coef.len() > 1 && coef.last().unwrap().norm() * radius.powi(coef.len() as i32 - 1) < 1e-10 * scale {
        coef.pop();
    }
    let d = coef.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = coef[d];
    let comp = CMat::from_fn(d, d, |i, j| {
        if i == 0 {
            -coef[d - 1 - j] / lead
        } else if i == j + 1 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    comp.eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

/// Minimum `z₂`-distance of a probe from the curve.
pub const PROBE_SEPARATION: f64 = 0.25;

/// A point of the box `|Re|, |Im| < 3` whose `z₂` is at least `sep` from every curve
/// point sharing its `z₁`.
pub fn generic_probe(rng: &mut impl Rng, pencil: &crate::detrep::Pencil, sep: f64) -> [C64; 2] {
    loop {
        let z = [rand_c(rng, 3.0), rand_c(rng, 3.0)];
        if curve_roots_z2(pencil, z[0]).iter().all(|r| (r - z[1]).norm() >= sep) {
            return z;
        }
    }
}

/// Rank-two coincident data on the kernel bundles of a direct-sum pencil: `φ` from the
/// first summand and `ψ` from the second at the same point `ξ`.
pub fn coincident_data(
    k: &dyn CauchyKernel,
    emb: &EmbeddingPair,
    pencil: &crate::detrep::Pencil,
    point: C64,
    rho: C64,
) -> Result<ConintData> {
    let z = emb.eval(point)?;
    let phi = right_sections(k, emb, point)?.column(0).into_owned();
    let psi = left_sections(k, emb, point)?.row(1).transpose();
    Ok(ConintData {
        pencil: pencil.clone(),
        zeros: vec![CurveNode { coords: z, surface_point: Some(point), vectors: vec![psi] }],
        poles: vec![CurveNode { coords: z, surface_point: Some(point), vectors: vec![phi] }],
        couplings: vec![Coupling { zero: 0, pole: 0, rho: CMat::from_element(1, 1, rho) }],
    })
}

fn criterion_conint(ctx: &mut Ctx) -> Result<()> {
    let taus = ctx.taus();
    for &tau in &taus {
        let t = Arc::new(Torus::new(tau)?);
        let emb = default_embedding(&t)?;
        let xs = emb.points().to_vec();
        // scalar data, n = 2
        let (tilde, chi, lam, mu, q) = loop {
            let tilde = rand_line(&mut ctx.rng, &t);
            let mut pts: Vec<C64> = Vec::new();
            for _ in 0..5 {
                pts.push(torus_point_avoiding(&mut ctx.rng, &t, &[xs.as_slice(), &pts].concat(), 0.1));
            }
            let d = pts[0] + pts[1] - pts[2] - pts[3];
            if let Ok(chi) = FlatLineBundle::from_point(t.clone(), tilde.point() - d) {
                if line_ok(&chi) {
                    break (tilde, chi, vec![pts[0], pts[1]], vec![pts[2], pts[3]], pts[4]);
                }
            }
        };
        let kt = LineKernel::new(tilde.clone());
        let kc = LineKernel::new(chi.clone());
        let tmap = scalar_multiplicative(&lam, &mu, &chi, &tilde, q, c(1.0, 0.0))?;
        let data = crate::absint::full_rank_data(&lam, &mu, 1);
        let ex = loop {
            let tilde0 = rand_line(&mut ctx.rng, &t);
            let l = torus_point_avoiding(&mut ctx.rng, &t, &xs, 0.1);
            let m = torus_point_avoiding(&mut ctx.rng, &t, &[xs.as_slice(), &[l]].concat(), 0.1);
            let q2 = torus_point_avoiding(&mut ctx.rng, &t, &[l, m], 0.1);
            let p = well_conditioned(&mut ctx.rng, 2);
            let d = [rand_c(&mut ctx.rng, 1.0) + 1.5, rand_c(&mut ctx.rng, 1.0) + 1.5];
            if let Ok(ex) = RankTwoExample::new(&tilde0, l, m, q2, p, d) {
                break ex;
            }
        };
        type Case<'a> = (&'a dyn CauchyKernel, &'a dyn CauchyKernel, &'a dyn BundleMap, AbsintData, C64);
        let cases: Vec<Case> = vec![
            (&kt, &kc, &tmap, data, lam[0]),
            (ex.tilde.as_ref(), ex.chi.as_ref(), &ex, ex.data(), ex.lambda),
        ];
        for (ktil, kchi, tm, data, avoid) in cases {
            let reference = build_pencil(ktil, &emb)?;
            let conv = convert_absint_to_conint(&data, ktil, &emb, &reference)?;
            let xis = xi_draws(&mut ctx.rng);
            let g0a = build_gamma0(&conv, xis[0])?;
            let g0b = build_gamma0(&conv, xis[1])?;
            ctx.at_most("Gamma0 xi-independence", rel_mat(&g0a, &g0b), 1e-8);
            for xi in &xis {
                ctx.at_most_res("Gamma = Gamma0", check_gamma_equality(&data, ktil, &conv, *xi), 1e-8);
            }
            let sol = solve_conint(&conv, xis[0])?;
            let sol_b = solve_conint(&conv, xis[1])?;
            ctx.at_most("gamma update xi-independence", rel_mat(&sol.pencil.gamma, &sol_b.pencil.gamma), 1e-8);
            let beta_inv: Vec<CMat> = xs.iter().map(|&x| tm.eval(x)).collect::<Result<_>>()?;
            let r = ktil.rank();
            let nodes: Vec<C64> = [xs.as_slice(), &[avoid]].concat();
            let mut all_nodes = nodes.clone();
            for n in data.zeros.iter().chain(&data.poles) {
                all_nodes.push(n.point);
            }
            for _ in 0..ctx.samples(20) {
                let p = torus_point_avoiding(&mut ctx.rng, &t, &all_nodes, 0.08);
                let z = emb.eval(p)?;
                let m = curve_membership(&sol.pencil, z);
                ctx.at_most("updated pencil on-curve relative det", m.relative_det, 1e-7);
                ctx.at_most("updated pencil kernel dimension mismatch", (m.kernel_dim as f64 - r as f64).abs(), 0.0);
                let [right, left] = sol.kernel_mapping_residuals(z)?;
                ctx.at_most("S maps kernels", right, 1e-7);
                ctx.at_most("S_l^-1 maps left kernels", left, 1e-7);
                let v = crate::linalg::null_space(&sol.pencil.eval(z), r);
                for col in 0..r {
                    let kv = v.column(col).into_owned();
                    let a = sol.apply(z, &kv)?;
                    let b = sol_b.apply(z, &kv)?;
                    ctx.at_most("S xi-independence on kernels", (a - b).norm() / kv.norm(), 1e-8);
                }
                let res = check_intertwining(&sol, tm, kchi, ktil, &emb, &beta_inv, p);
                ctx.at_most_res("intertwining", res, 1e-7);
            }
        }
        // coupled data on a rank-two direct sum
        let l2 = rand_line(&mut ctx.rng, &t);
        let ks = DirectSumKernel::lines(t.clone(), &[(tilde.a(), tilde.b()), (l2.a(), l2.b())])?;
        let ps = build_pencil(&ks, &emb)?;
        let point = torus_point_avoiding(&mut ctx.rng, &t, &xs, 0.1);
        let rho = rand_c(&mut ctx.rng, 1.0) + c(0.5, 0.0);
        let cd = coincident_data(&ks, &emb, &ps, point, rho)?;
        let xis = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        let mut vals = Vec::new();
        for xi in xis {
            let sol = solve_conint(&cd, xi)?;
            let res = check_condition_i3(&sol, &cd, &emb, 0, 0)?;
            ctx.at_most("(I3) round trip", res[0], 1e-5);
            vals.push(res[0]);
        }
        ctx.at_most("(I3) xi-independence", (vals[0] - vals[1]).abs(), 1e-6);
    }
    Ok(())
}

fn criterion_negative(ctx: &mut Ctx) -> Result<()> {
    let shift = 1e-2;
    // genus 0: singular and non-square Gamma
    let one = vec![c(1.0, 0.0), c(0.0, 0.0)];
    let other = vec![c(0.0, 0.0), c(1.0, 0.0)];
    let singular = Genus0Problem {
        rank: 2,
        zeros: vec![ZeroDatum { point: c(0.0, 0.0), x: one.clone() }],
        poles: vec![PoleDatum { point: c(1.0, 0.0), u: other }],
    };
    ctx.rejects("genus-0 singular Gamma", solve_genus0(&singular), |e| matches!(e, Error::SingularGamma { .. }));
    let nonsquare = Genus0Problem { rank: 2, zeros: singular.zeros.clone(), poles: vec![] };
    ctx.rejects("genus-0 non-square Gamma", solve_genus0(&nonsquare), |e| matches!(e, Error::CountMismatch { .. }));

    let t = Arc::new(Torus::new(c(0.3, 0.8))?);
    let emb = default_embedding(&t)?;
    let xs = emb.points().to_vec();
    let tilde = rand_line(&mut ctx.rng, &t);
    let kt: Arc<dyn CauchyKernel> = Arc::new(LineKernel::new(tilde.clone()));
    let bad = AbsintData {
        zeros: vec![Node { point: c(0.2, 0.1), vectors: vec![vec![c(1.0, 0.0)]] }],
        poles: vec![],
        couplings: vec![],
    };
    ctx.rejects(
        "abstract solver non-square Gamma",
        build_solution(&bad, c(0.3, 0.3), CMat::identity(1, 1), kt.clone(), kt.clone()),
        |e| matches!(e, Error::CountMismatch { .. }),
    );
    // A diagonal kernel paired against orthogonal coordinate vectors gives Gamma = 0.
    let l2 = rand_line(&mut ctx.rng, &t);
    let kd: Arc<dyn CauchyKernel> =
        Arc::new(DirectSumKernel::lines(t.clone(), &[(tilde.a(), tilde.b()), (l2.a(), l2.b())])?);
    let orth = AbsintData {
        zeros: vec![Node { point: c(0.2, 0.1), vectors: vec![vec![c(1.0, 0.0), c(0.0, 0.0)]] }],
        poles: vec![Node { point: c(0.5, 0.4), vectors: vec![vec![c(0.0, 0.0), c(1.0, 0.0)]] }],
        couplings: vec![],
    };
    ctx.rejects(
        "abstract solver singular Gamma",
        build_solution(&orth, c(0.3, 0.3), CMat::identity(2, 2), kd.clone(), kd.clone()),
        |e| matches!(e, Error::SingularGamma { .. }),
    );
    let dpencil = build_pencil(kd.as_ref(), &emb)?;
    let cd = convert_absint_to_conint(&orth, kd.as_ref(), &emb, &dpencil)?;
    ctx.rejects("concrete solver singular Gamma0", solve_conint(&cd, [c(1.0, 0.0), c(0.3, 0.2)]), |e| {
        matches!(e, Error::SingularGamma0 { .. })
    });
    let pencil = build_pencil(kt.as_ref(), &emb)?;
    let mut cd_ns = convert_absint_to_conint(&crate::absint::full_rank_data(&[c(0.2, 0.1)], &[c(0.5, 0.4)], 1), kt.as_ref(), &emb, &pencil)?;
    cd_ns.poles.clear();
    ctx.rejects("concrete solver non-square Gamma0", solve_conint(&cd_ns, [c(1.0, 0.0), c(0.3, 0.2)]), |e| {
        matches!(e, Error::CountMismatch { .. })
    });

    // perturbed data: residue conditions
    let lam = vec![torus_point_avoiding(&mut ctx.rng, &t, &xs, 0.15)];
    let mu = vec![torus_point_avoiding(&mut ctx.rng, &t, &[xs.as_slice(), &lam].concat(), 0.15)];
    let q = torus_point_avoiding(&mut ctx.rng, &t, &[xs.as_slice(), &lam, &mu].concat(), 0.15);
    let chi = FlatLineBundle::from_point(t.clone(), tilde.point() - (lam[0] - mu[0]))?;
    let kc: Arc<dyn CauchyKernel> = Arc::new(LineKernel::new(chi.clone()));
    let data = crate::absint::full_rank_data(&lam, &mu, 1);
    let sol = build_solution(&data, q, CMat::identity(1, 1), kc.clone(), kt.clone())?;
    let good = verify_solution(&sol, &data)?;
    ctx.at_most("unperturbed residue conditions", good.max(), 1e-7);
    let moved = crate::absint::full_rank_data(&[lam[0] + shift], &mu, 1);
    let rep = verify_solution(&sol, &moved)?;
    ctx.at_least("residue conditions at shifted zero", rep.max(), 1e-3);
    let x = CVec::from_column_slice(&[c(1.0, 0.0)]);
    let g0 = Genus0Problem {
        rank: 1,
        zeros: vec![ZeroDatum { point: c(2.0, 0.0), x: vec![c(1.0, 0.0)] }],
        poles: vec![PoleDatum { point: c(3.0, 0.0), u: vec![c(1.0, 0.0)] }],
    };
    let t0 = solve_genus0(&g0)?;
    let v = t0.eval(c(2.0 + shift, 0.0))?;
    ctx.at_least("genus-0 zero condition at shifted point", (x.transpose() * &v).norm() / frob(&v).max(1.0), 1e-3);

    // perturbed pole vector at rank two
    let ex = loop {
        let tilde0 = rand_line(&mut ctx.rng, &t);
        let l = torus_point_avoiding(&mut ctx.rng, &t, &xs, 0.1);
        let m = torus_point_avoiding(&mut ctx.rng, &t, &[xs.as_slice(), &[l]].concat(), 0.1);
        let q2 = torus_point_avoiding(&mut ctx.rng, &t, &[l, m], 0.1);
        let p = well_conditioned(&mut ctx.rng, 2);
        if let Ok(ex) = RankTwoExample::new(&tilde0, l, m, q2, p, [c(1.0, 0.0), c(1.0, 0.0)]) {
            break ex;
        }
    };
    let exdata = ex.data();
    let q2 = torus_point_avoiding(&mut ctx.rng, &t, &[ex.lambda, ex.mu], 0.1);
    let chi: Arc<dyn CauchyKernel> = ex.chi.clone();
    let til: Arc<dyn CauchyKernel> = ex.tilde.clone();
    let big_q = ex.eval(q2)?;
    let sol = build_solution(&exdata, q2, big_q.clone(), chi.clone(), til.clone())?;
    ctx.at_most("unperturbed rank-two residue conditions", verify_solution(&sol, &exdata)?.max(), 1e-7);
    let mut moved = exdata.clone();
    let u0 = CVec::from_column_slice(&moved.poles[0].vectors[0]);
    let du = orthogonal_bump(&mut ctx.rng, &u0, shift);
    moved.poles[0].vectors[0] = (u0 + du).iter().copied().collect();
    let sol_moved = build_solution(&moved, q2, big_q, chi, til)?;
    let rep = verify_solution(&sol_moved, &exdata)?;
    ctx.at_least("residue conditions with perturbed pole vector", rep.max(), 1e-3);

    // perturbed data: intertwining and Gamma equality
    let ex = loop {
        let tilde0 = rand_line(&mut ctx.rng, &t);
        let l = torus_point_avoiding(&mut ctx.rng, &t, &xs, 0.1);
        let m = torus_point_avoiding(&mut ctx.rng, &t, &[xs.as_slice(), &[l]].concat(), 0.1);
        let q2 = torus_point_avoiding(&mut ctx.rng, &t, &[l, m], 0.1);
        let p = well_conditioned(&mut ctx.rng, 2);
        if let Ok(ex) = RankTwoExample::new(&tilde0, l, m, q2, p, [c(1.0, 0.0), c(1.3, 0.2)]) {
            break ex;
        }
    };
    let reference = build_pencil(ex.tilde.as_ref(), &emb)?;
    let exdata = ex.data();
    let conv = convert_absint_to_conint(&exdata, ex.tilde.as_ref(), &emb, &reference)?;
    let xi = [c(1.0, 0.0), c(0.4, -0.3)];
    let sol = solve_conint(&conv, xi)?;
    let beta_inv: Vec<CMat> = xs.iter().map(|&x| ex.eval(x)).collect::<Result<_>>()?;
    let bump = CMat::identity(2, 2) + CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(shift, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let perturbed = crate::absint::FnMap { rank: 2, f: |p: C64| Ok(ex.eval(p)? * &bump) };
    let nodes = [xs.as_slice(), &[ex.lambda, ex.mu]].concat();
    for _ in 0..10 {
        let p = torus_point_avoiding(&mut ctx.rng, &t, &nodes, 0.1);
        let good = check_intertwining(&sol, &ex, ex.chi.as_ref(), ex.tilde.as_ref(), &emb, &beta_inv, p)?;
        ctx.at_most("unperturbed intertwining", good, 1e-7);
        let r = check_intertwining(&sol, &perturbed, ex.chi.as_ref(), ex.tilde.as_ref(), &emb, &beta_inv, p)?;
        ctx.at_least("intertwining with perturbed Q", r, 1e-3);
    }
    let mut shifted = conv.clone();
    let psi0 = shifted.zeros[0].vectors[0].clone();
    shifted.zeros[0].vectors[0] = &psi0 + orthogonal_bump(&mut ctx.rng, &psi0, shift);
    let g = crate::absint::build_gamma(ex.tilde.as_ref(), &exdata)?;
    let g0p = build_gamma0(&shifted, xi)?;
    ctx.at_least("Gamma = Gamma0 with perturbed pairing", rel_mat(&g, &g0p), 1e-3);

    // perturbed coupling in (I3)
    let l2 = rand_line(&mut ctx.rng, &t);
    let ks = DirectSumKernel::lines(t.clone(), &[(tilde.a(), tilde.b()), (l2.a(), l2.b())])?;
    let ps = build_pencil(&ks, &emb)?;
    let point = torus_point_avoiding(&mut ctx.rng, &t, &xs, 0.1);
    let cd = coincident_data(&ks, &emb, &ps, point, c(0.8, 0.2))?;
    let sol = solve_conint(&cd, [c(1.0, 0.0), c(0.0, 0.0)])?;
    let mut wrong = cd.clone();
    wrong.couplings[0].rho[(0, 0)] += shift;
    let r = check_condition_i3(&sol, &wrong, &emb, 0, 0)?;
    ctx.at_least("(I3) with perturbed coupling", r[0], 1e-3);
    Ok(())
}
