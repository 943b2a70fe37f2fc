//! Surfaces, prime forms, flat line bundles and the plane-curve embedding of a torus.
//!
//! On the torus `C/(Z + τZ)` points are represented by a coordinate `z ∈ C`, the Abel
//! map is the identity, the global frame is `dz`, and the prime form is
//! `E(p,q) = θ[½;½](q−p) / θ[½;½]'(0)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::theta::{PeriodMatrix, ThetaCharacteristic, ThetaEngine, ThetaEvalConfig};
use crate::{CMat, C64};

/// Complex torus `C/(Z + τZ)` with a cached theta engine.
#[derive(Clone, Debug)]
pub struct Torus {
    tau: C64,
    engine: ThetaEngine,
    odd: ThetaCharacteristic,
    odd_prime: C64,
}

impl Torus {
    pub fn new(tau: C64) -> Result<Self> {
        Self::with_config(tau, ThetaEvalConfig::default())
    }

    pub fn with_config(tau: C64, cfg: ThetaEvalConfig) -> Result<Self> {
        let engine = ThetaEngine::new(PeriodMatrix::genus1(tau)?, cfg)?;
        let odd = ThetaCharacteristic::genus1(0.5, 0.5);
        let (_, d) = engine.theta_char_and_gradient(&odd, &[C64::new(0.0, 0.0)])?;
        Ok(Self { tau, engine, odd, odd_prime: d[0] })
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn engine(&self) -> &ThetaEngine {
        &self.engine
    }

    pub fn period(&self) -> &PeriodMatrix {
        self.engine.period()
    }

    pub fn same_surface(&self, other: &Torus) -> bool {
        self.tau == other.tau
    }

    pub fn theta(&self, z: C64) -> Result<C64> {
        self.engine.theta(&[z])
    }

    pub fn theta_char(&self, chi: &ThetaCharacteristic, w: C64) -> Result<C64> {
        self.engine.theta_char(chi, &[w])
    }

    /// `θ[a;b](w)` and its derivative.
    pub fn theta_char_d(&self, chi: &ThetaCharacteristic, w: C64) -> Result<(C64, C64)> {
        let (v, g) = self.engine.theta_char_and_gradient(chi, &[w])?;
        Ok((v, g[0]))
    }

    pub fn odd_theta(&self, w: C64) -> Result<C64> {
        self.theta_char(&self.odd, w)
    }

    /// `θ[½;½]'(0)`.
    pub fn odd_theta_prime(&self) -> C64 {
        self.odd_prime
    }

    /// Logarithmic derivative of `θ[½;½]` at `w`.
    pub fn odd_log_derivative(&self, w: C64) -> Result<C64> {
        let (v, d) = self.theta_char_d(&self.odd, w)?;
        if v.norm() == 0.0 {
            return Err(Error::PointOnPoleSet);
        }
        Ok(d / v)
    }

    pub fn prime_form(&self, p: C64, q: C64) -> Result<C64> {
        Ok(self.odd_theta(q - p)? / self.odd_prime)
    }

    /// Representative of `d` modulo the lattice closest to the fundamental cell at 0.
    pub fn reduce(&self, d: C64) -> C64 {
        let m = (d.im / self.tau.im).round();
        let d = d - m * self.tau;
        d - d.re.round()
    }

    pub fn same_point(&self, p: C64, q: C64, tol: f64) -> bool {
        self.reduce(p - q).norm() <= tol
    }
}

/// A point on a surface: a coordinate on the sphere or torus, or a label in a data bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfacePoint {
    Coord(C64),
    Label(String),
}

/// Externally supplied period matrix, Abel map values and prime form table.
#[derive(Clone, Debug)]
pub struct SurfaceDataBundle {
    period: PeriodMatrix,
    labels: Vec<String>,
    phi: Vec<Vec<C64>>,
    /// Strict upper triangle of `E(p_i, p_j)` in row-major order.
    prime: Vec<C64>,
    differentials: Vec<Vec<C64>>,
}

impl SurfaceDataBundle {
    pub fn new(
        period: PeriodMatrix,
        points: Vec<(String, Vec<C64>)>,
        prime: Vec<C64>,
        differentials: Vec<Vec<C64>>,
    ) -> Result<Self> {
        let g = period.genus();
        let n = points.len();
        let expected = n * n.saturating_sub(1) / 2;
        if prime.len() != expected {
            return Err(Error::InvalidInput(format!(
                "prime form table has {} entries, expected {expected}",
                prime.len()
            )));
        }
        if points.iter().any(|(_, v)| v.len() != g) {
            return Err(Error::InvalidInput("Abel map value has wrong dimension".into()));
        }
        if !(differentials.is_empty() || differentials.len() == n)
            || differentials.iter().any(|v| v.len() != g)
        {
            return Err(Error::InvalidInput("differential table has wrong shape".into()));
        }
        let mut labels = Vec::with_capacity(n);
        let mut phi = Vec::with_capacity(n);
        for (l, v) in points {
            if labels.contains(&l) {
                return Err(Error::InvalidInput(format!("duplicate label `{l}`")));
            }
            labels.push(l);
            phi.push(v);
        }
        Ok(Self { period, labels, phi, prime, differentials })
    }

    pub fn genus(&self) -> usize {
        self.period.genus()
    }

    pub fn period(&self) -> &PeriodMatrix {
        &self.period
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn phi_table(&self) -> &[Vec<C64>] {
        &self.phi
    }

    pub fn prime_table(&self) -> &[C64] {
        &self.prime
    }

    pub fn differentials(&self) -> &[Vec<C64>] {
        &self.differentials
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownPoint(label.to_string()))
    }

    pub fn phi(&self, label: &str) -> Result<&[C64]> {
        Ok(&self.phi[self.index(label)?])
    }

    pub fn prime_form(&self, p: &str, q: &str) -> Result<C64> {
        let (i, j) = (self.index(p)?, self.index(q)?);
        let n = self.labels.len();
        let slot = |i: usize, j: usize| i * n - i * (i + 1) / 2 + (j - i - 1);
        Ok(match i.cmp(&j) {
            std::cmp::Ordering::Equal => C64::new(0.0, 0.0),
            std::cmp::Ordering::Less => self.prime[slot(i, j)],
            std::cmp::Ordering::Greater => -self.prime[slot(j, i)],
        })
    }
}

#[derive(Clone, Debug)]
pub enum Surface {
    Sphere,
    Torus(Arc<Torus>),
    Data(Arc<SurfaceDataBundle>),
}

impl Surface {
    pub fn genus(&self) -> usize {
        match self {
            Surface::Sphere => 0,
            Surface::Torus(_) => 1,
            Surface::Data(d) => d.genus(),
        }
    }

    pub fn period(&self) -> Result<&PeriodMatrix> {
        match self {
            Surface::Sphere => Err(Error::UnsupportedGenus(0)),
            Surface::Torus(t) => Ok(t.period()),
            Surface::Data(d) => Ok(d.period()),
        }
    }
}

/// Abel map value `φ(p) ∈ C^g`.
pub fn abel_jacobi(surface: &Surface, p: &SurfacePoint) -> Result<Vec<C64>> {
    match (surface, p) {
        (Surface::Sphere, _) => Err(Error::UnsupportedGenus(0)),
        (Surface::Torus(_), SurfacePoint::Coord(z)) => Ok(vec![*z]),
        (Surface::Data(d), SurfacePoint::Label(l)) => Ok(d.phi(l)?.to_vec()),
        (_, SurfacePoint::Coord(z)) => Err(Error::UnknownPoint(z.to_string())),
        (_, SurfacePoint::Label(l)) => Err(Error::UnknownPoint(l.clone())),
    }
}

/// Prime form in the global frame. On the sphere this is `q − p`.
pub fn prime_form(surface: &Surface, p: &SurfacePoint, q: &SurfacePoint) -> Result<C64> {
    match (surface, p, q) {
        (Surface::Sphere, SurfacePoint::Coord(a), SurfacePoint::Coord(b)) => Ok(b - a),
        (Surface::Torus(t), SurfacePoint::Coord(a), SurfacePoint::Coord(b)) => {
            t.prime_form(*a, *b)
        }
        (Surface::Data(d), SurfacePoint::Label(a), SurfacePoint::Label(b)) => d.prime_form(a, b),
        (_, SurfacePoint::Label(l), _) | (_, _, SurfacePoint::Label(l)) => {
            Err(Error::UnknownPoint(l.clone()))
        }
        (_, SurfacePoint::Coord(z), _) => Err(Error::UnknownPoint(z.to_string())),
    }
}

/// Flat unitary line bundle on a torus, described by real characteristics `[a; b]`.
///
/// The multipliers are `exp(−2πi a)` along `z ↦ z+1` and `exp(2πi b)` along `z ↦ z+τ`.
#[derive(Clone, Debug)]
pub struct FlatLineBundle {
    torus: Arc<Torus>,
    chi: ThetaCharacteristic,
    theta0: C64,
}

pub const BUNDLE_DEGENERACY_TOL: f64 = 1e-10;

impl FlatLineBundle {
    pub fn new(torus: Arc<Torus>, chi: ThetaCharacteristic) -> Result<Self> {
        if chi.genus() != 1 {
            return Err(Error::InvalidInput(
                "torus bundles take genus-one characteristics".into(),
            ));
        }
        let theta0 = torus.theta_char(&chi, C64::new(0.0, 0.0))?;
        if theta0.norm() <= BUNDLE_DEGENERACY_TOL {
            return Err(Error::DegenerateBundle(theta0.norm()));
        }
        Ok(Self { torus, chi, theta0 })
    }

    pub fn from_characteristic(torus: Arc<Torus>, a: f64, b: f64) -> Result<Self> {
        Self::new(torus, ThetaCharacteristic::genus1(a, b))
    }

    /// Bundle whose characteristic point `τa + b` equals `z`.
    pub fn from_point(torus: Arc<Torus>, z: C64) -> Result<Self> {
        let chi = ThetaCharacteristic::from_point(torus.period(), &[z])?;
        Self::new(torus, chi)
    }

    pub fn torus(&self) -> &Arc<Torus> {
        &self.torus
    }

    pub fn characteristic(&self) -> &ThetaCharacteristic {
        &self.chi
    }

    pub fn a(&self) -> f64 {
        self.chi.a[0]
    }

    pub fn b(&self) -> f64 {
        self.chi.b[0]
    }

    /// `τa + b`.
    pub fn point(&self) -> C64 {
        self.torus.tau() * self.a() + self.b()
    }

    pub fn theta0(&self) -> C64 {
        self.theta0
    }

    pub fn dual(&self) -> Result<Self> {
        Self::new(self.torus.clone(), self.chi.negate())
    }

    /// Multipliers along the two generating cycles.
    pub fn multipliers(&self) -> (C64, C64) {
        let i2pi = C64::new(0.0, 2.0 * PI);
        ((-i2pi * self.a()).exp(), (i2pi * self.b()).exp())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LaurentConfig {
    pub radius: f64,
    pub nodes: usize,
}

impl Default for LaurentConfig {
    fn default() -> Self {
        Self { radius: 1e-2, nodes: 32 }
    }
}

/// Leading Laurent data `f(c + t) = a_{-2}/t² + a_{-1}/t + a_0 + O(t)`.
#[derive(Clone, Copy, Debug)]
pub struct Laurent {
    pub neg2: C64,
    pub residue: C64,
    pub constant: C64,
}

fn circle_moments<F>(f: &F, center: C64, r: f64, n: usize) -> Result<[CMat; 3]>
where
    F: Fn(C64) -> Result<CMat>,
{
    let mut acc: Option<[CMat; 3]> = None;
    for k in 0..n {
        let t = C64::from_polar(r, 2.0 * PI * k as f64 / n as f64);
        let v = f(center + t)?;
        let terms = [&v * (t * t), &v * t, v.clone()];
        acc = Some(match acc {
            None => terms,
            Some([a, b, c]) => [a + &terms[0], b + &terms[1], c + &terms[2]],
        });
    }
    let [a, b, c] = acc.ok_or_else(|| Error::InvalidInput("no quadrature nodes".into()))?;
    let s = C64::new(1.0 / n as f64, 0.0);
    Ok([a * s, b * s, c * s])
}

/// Laurent coefficients `(a_{-2}, a_{-1}, a_0)` of a matrix function with a simple pole,
/// by trapezoidal sampling on two concentric circles combined by Richardson extrapolation.
pub fn laurent_coeffs_matrix<F>(
    f: F,
    center: C64,
    cfg: &LaurentConfig,
) -> Result<(CMat, CMat, CMat)>
where
    F: Fn(C64) -> Result<CMat>,
{
    let big = circle_moments(&f, center, cfg.radius, cfg.nodes)?;
    let small = circle_moments(&f, center, cfg.radius / 2.0, cfg.nodes)?;
    let w = C64::new(2f64.powi(cfg.nodes as i32) - 1.0, 0.0);
    let mix = |s: &CMat, b: &CMat| s + (s - b) / w;
    let neg2 = mix(&small[0], &big[0]);
    let res = mix(&small[1], &big[1]);
    let cst = mix(&small[2], &big[2]);
    let scale = crate::linalg::frob(&res) + crate::linalg::frob(&cst) + 1.0;
    if crate::linalg::frob(&neg2) > 1e-7 * scale {
        return Err(Error::HigherOrderPole(center));
    }
    Ok((neg2, res, cst))
}

pub fn laurent_coeffs<F>(f: F, center: C64, cfg: &LaurentConfig) -> Result<Laurent>
where
    F: Fn(C64) -> Result<C64>,
{
    let (n2, r, c) =
        laurent_coeffs_matrix(|z| Ok(CMat::from_element(1, 1, f(z)?)), center, cfg)?;
    Ok(Laurent { neg2: n2[(0, 0)], residue: r[(0, 0)], constant: c[(0, 0)] })
}

/// The pair `λ_1(z) = ∂log θ[½;½](z−x¹) − ∂log θ[½;½](z−x²)` and `λ_2` likewise with
/// `x³`, mapping the torus birationally onto a smooth plane cubic.
#[derive(Clone, Debug)]
pub struct EmbeddingPair {
    torus: Arc<Torus>,
    x: [C64; 3],
    c: [[f64; 2]; 3],
    d: [[C64; 2]; 3],
}

/// `c_{ik} = −Res_{xⁱ} λ_k`.
pub const EMBEDDING_RESIDUES: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

pub fn build_embedding_functions(torus: Arc<Torus>, x: [C64; 3]) -> Result<EmbeddingPair> {
    let mut sep = f64::INFINITY;
    for i in 0..3 {
        for j in i + 1..3 {
            if torus.same_point(x[i], x[j], 1e-6) {
                return Err(Error::DegenerateEmbedding(format!(
                    "points {i} and {j} coincide modulo the lattice"
                )));
            }
            sep = sep.min(torus.reduce(x[i] - x[j]).norm());
        }
    }
    let mut pair = EmbeddingPair {
        torus,
        x,
        c: EMBEDDING_RESIDUES,
        d: [[C64::new(0.0, 0.0); 2]; 3],
    };
    let cfg = LaurentConfig { radius: (sep / 8.0).min(1e-2), nodes: 32 };
    for (i, &xi) in x.iter().enumerate() {
        for k in 0..2 {
            let l = laurent_coeffs(|z| pair.eval_k(k, z), xi, &cfg)?;
            if (l.residue + pair.c[i][k]).norm() > 1e-8 {
                return Err(Error::DegenerateEmbedding(format!(
                    "residue of lambda_{} at x{} is {}",
                    k + 1,
                    i + 1,
                    l.residue
                )));
            }
            pair.d[i][k] = -l.constant;
        }
    }
    Ok(pair)
}

impl EmbeddingPair {
    pub fn torus(&self) -> &Arc<Torus> {
        &self.torus
    }

    pub fn points(&self) -> &[C64; 3] {
        &self.x
    }

    pub fn c(&self, i: usize, k: usize) -> f64 {
        self.c[i][k]
    }

    pub fn d(&self, i: usize, k: usize) -> C64 {
        self.d[i][k]
    }

    pub fn eval_k(&self, k: usize, z: C64) -> Result<C64> {
        let other = if k == 0 { self.x[1] } else { self.x[2] };
        Ok(self.torus.odd_log_derivative(z - self.x[0])?
            - self.torus.odd_log_derivative(z - other)?)
    }

    pub fn eval(&self, z: C64) -> Result<[C64; 2]> {
        Ok([self.eval_k(0, z)?, self.eval_k(1, z)?])
    }

    /// `(λ_1', λ_2')` by Richardson-extrapolated central differences.
    pub fn derivative(&self, z: C64) -> Result<[C64; 2]> {
        let d = |h: f64| -> Result<[C64; 2]> {
            let (a, b) = (self.eval(z + h)?, self.eval(z - h)?);
            Ok([(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)])
        };
        let (d1, d2) = (d(1e-3)?, d(5e-4)?);
        Ok([d2[0] + (d2[0] - d1[0]) / 3.0, d2[1] + (d2[1] - d1[1]) / 3.0])
    }

    /// `(λ_1'', λ_2'')` by Richardson-extrapolated second differences.
    pub fn second_derivative(&self, z: C64) -> Result<[C64; 2]> {
        let f0 = self.eval(z)?;
        let d = |h: f64| -> Result<[C64; 2]> {
            let (a, b) = (self.eval(z + h)?, self.eval(z - h)?);
            Ok([
                (a[0] - 2.0 * f0[0] + b[0]) / (h * h),
                (a[1] - 2.0 * f0[1] + b[1]) / (h * h),
            ])
        };
        let (d1, d2) = (d(4e-3)?, d(2e-3)?);
        Ok([d2[0] + (d2[0] - d1[0]) / 3.0, d2[1] + (d2[1] - d1[1]) / 3.0])
    }

    /// Whether `z` sits on one of the poles `x¹, x², x³`.
    pub fn near_pole(&self, z: C64, tol: f64) -> bool {
        self.x.iter().any(|&x| self.torus.same_point(z, x, tol))
    }
}
