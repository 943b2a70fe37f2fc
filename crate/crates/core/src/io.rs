//! JSON problem formats. Complex numbers are `[re, im]` pairs; square matrices in the
//! pencil and period formats are flat row-major lists, other matrices are lists of rows.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::absint::{AbsintData, Coupling, Node};
use crate::conint::{ConintData, CurveNode};
use crate::detrep::Pencil;
use crate::error::{Error, Result};
use crate::kernel::{CauchyKernel, DirectSumKernel};
use crate::surface::{SurfaceDataBundle, Torus};
use crate::theta::PeriodMatrix;
use crate::{CMat, CVec, C64};

pub const SCHEMA_VERSION: u32 = 1;

/// Common envelope: schema version, seed and tolerance overrides around a payload.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemFile<T> {
    #[serde(default = "default_schema")]
    pub schema: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(flatten)]
    pub payload: T,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

impl<T: for<'de> Deserialize<'de>> ProblemFile<T> {
    pub fn from_json(s: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        if f.schema != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!("unsupported schema version {}", f.schema)));
        }
        Ok(f)
    }
}

pub fn flat_to_square(data: &[C64], what: &str) -> Result<CMat> {
    let n = (data.len() as f64).sqrt().round() as usize;
    if n * n != data.len() {
        return Err(Error::InvalidInput(format!("{what}: {} entries is not a square", data.len())));
    }
    Ok(CMat::from_row_slice(n, n, data))
}

pub fn square_to_flat(m: &CMat) -> Vec<C64> {
    m.transpose().iter().copied().collect()
}

pub fn rows_to_matrix(rows: &[Vec<C64>], what: &str) -> Result<CMat> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::InvalidInput(format!("{what}: ragged rows")));
    }
    Ok(CMat::from_fn(nr, nc, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &CMat) -> Vec<Vec<C64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub label: String,
    pub phi: Vec<C64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceDataFile {
    pub genus: usize,
    pub omega: Vec<C64>,
    pub points: Vec<LabeledPoint>,
    pub prime_form: Vec<C64>,
    #[serde(default)]
    pub differentials: Vec<Vec<C64>>,
}

impl SurfaceDataFile {
    pub fn into_bundle(self) -> Result<SurfaceDataBundle> {
        let omega = flat_to_square(&self.omega, "omega")?;
        if omega.nrows() != self.genus {
            return Err(Error::InvalidInput("omega does not match genus".into()));
        }
        let period = PeriodMatrix::new(omega)?;
        let points = self.points.into_iter().map(|p| (p.label, p.phi)).collect();
        SurfaceDataBundle::new(period, points, self.prime_form, self.differentials)
    }

    pub fn from_bundle(b: &SurfaceDataBundle) -> Self {
        Self {
            genus: b.genus(),
            omega: square_to_flat(b.period().omega()),
            points: b
                .labels()
                .iter()
                .zip(b.phi_table())
                .map(|(l, p)| LabeledPoint { label: l.clone(), phi: p.clone() })
                .collect(),
            prime_form: b.prime_table().to_vec(),
            differentials: b.differentials().to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PencilFile {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default = "default_rank")]
    pub rank: usize,
    pub sigma1: Vec<C64>,
    pub sigma2: Vec<C64>,
    pub gamma: Vec<C64>,
}

fn default_rank() -> usize {
    1
}

impl PencilFile {
    pub fn from_pencil(p: &Pencil) -> Self {
        Self {
            m: p.size(),
            rank: p.rank,
            sigma1: square_to_flat(&p.sigma1),
            sigma2: square_to_flat(&p.sigma2),
            gamma: square_to_flat(&p.gamma),
        }
    }

    pub fn to_pencil(&self) -> Result<Pencil> {
        let get = |v: &[C64], what: &str| -> Result<CMat> {
            let m = flat_to_square(v, what)?;
            if m.nrows() != self.m {
                return Err(Error::InvalidInput(format!("{what} is not {0}×{0}", self.m)));
            }
            Ok(m)
        };
        let p = Pencil {
            rank: self.rank,
            sigma1: get(&self.sigma1, "sigma1")?,
            sigma2: get(&self.sigma2, "sigma2")?,
            gamma: get(&self.gamma, "gamma")?,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Characteristic `(a, b)` of a flat line bundle on the torus.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LineSpec {
    pub a: f64,
    pub b: f64,
}

/// A direct sum of flat line bundles, given either as one characteristic or a list.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BundleSpec {
    Line(LineSpec),
    Sum(Vec<LineSpec>),
}

impl BundleSpec {
    pub fn lines(&self) -> Vec<(f64, f64)> {
        match self {
            BundleSpec::Line(l) => vec![(l.a, l.b)],
            BundleSpec::Sum(v) => v.iter().map(|l| (l.a, l.b)).collect(),
        }
    }

    pub fn kernel(&self, torus: &Arc<Torus>) -> Result<DirectSumKernel> {
        DirectSumKernel::lines(torus.clone(), &self.lines())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub zero: usize,
    pub pole: usize,
    pub rho: Vec<Vec<C64>>,
}

impl CouplingSpec {
    pub fn to_coupling(&self) -> Result<Coupling> {
        Ok(Coupling { zero: self.zero, pole: self.pole, rho: rows_to_matrix(&self.rho, "rho")? })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbsintProblem {
    pub tau: C64,
    pub chi: BundleSpec,
    pub chi_tilde: BundleSpec,
    pub zeros: Vec<Node>,
    pub poles: Vec<Node>,
    #[serde(default)]
    pub couplings: Vec<CouplingSpec>,
    pub base_point: C64,
    /// Defaults to the identity.
    #[serde(default)]
    pub base_value: Option<Vec<Vec<C64>>>,
}

pub struct AbsintSetup {
    pub torus: Arc<Torus>,
    pub chi: Arc<dyn CauchyKernel>,
    pub tilde: Arc<dyn CauchyKernel>,
    pub data: AbsintData,
    pub base_point: C64,
    pub base_value: CMat,
}

impl AbsintProblem {
    pub fn setup(&self) -> Result<AbsintSetup> {
        let torus = Arc::new(Torus::new(self.tau)?);
        let chi = self.chi.kernel(&torus)?;
        let tilde = self.chi_tilde.kernel(&torus)?;
        if chi.rank() != tilde.rank() {
            return Err(Error::InvalidInput("χ and χ̃ have different ranks".into()));
        }
        let r = chi.rank();
        let base_value = match &self.base_value {
            Some(rows) => rows_to_matrix(rows, "base_value")?,
            None => CMat::identity(r, r),
        };
        if base_value.shape() != (r, r) {
            return Err(Error::InvalidInput("base_value has wrong shape".into()));
        }
        let data = AbsintData {
            zeros: self.zeros.clone(),
            poles: self.poles.clone(),
            couplings: self.couplings.iter().map(|c| c.to_coupling()).collect::<Result<_>>()?,
        };
        data.validate(&tilde)?;
        Ok(AbsintSetup {
            torus,
            chi: Arc::new(chi),
            tilde: Arc::new(tilde),
            data,
            base_point: self.base_point,
            base_value,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveNodeSpec {
    pub coords: [C64; 2],
    #[serde(default)]
    pub surface_point: Option<C64>,
    pub vectors: Vec<Vec<C64>>,
}

impl CurveNodeSpec {
    fn to_node(&self) -> CurveNode {
        CurveNode {
            coords: self.coords,
            surface_point: self.surface_point,
            vectors: self.vectors.iter().map(|v| CVec::from_column_slice(v)).collect(),
        }
    }

    pub fn from_node(n: &CurveNode) -> Self {
        Self {
            coords: n.coords,
            surface_point: n.surface_point,
            vectors: n.vectors.iter().map(|v| v.iter().copied().collect()).collect(),
        }
    }
}

/// The reference pencil inline or as a path to a pencil export.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PencilRef {
    Inline(PencilFile),
    Path(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConintProblem {
    pub pencil: PencilRef,
    pub zeros: Vec<CurveNodeSpec>,
    pub poles: Vec<CurveNodeSpec>,
    #[serde(default)]
    pub couplings: Vec<CouplingSpec>,
    /// Pairing directions; a default pair is used when empty.
    #[serde(default)]
    pub xi: Vec<[C64; 2]>,
}

impl ConintProblem {
    /// `resolve` loads a pencil given by path.
    pub fn to_data(&self, resolve: impl Fn(&str) -> Result<PencilFile>) -> Result<ConintData> {
        let pencil = match &self.pencil {
            PencilRef::Inline(p) => p.to_pencil()?,
            PencilRef::Path(s) => resolve(s)?.to_pencil()?,
        };
        Ok(ConintData {
            pencil,
            zeros: self.zeros.iter().map(CurveNodeSpec::to_node).collect(),
            poles: self.poles.iter().map(CurveNodeSpec::to_node).collect(),
            couplings: self.couplings.iter().map(|c| c.to_coupling()).collect::<Result<_>>()?,
        })
    }

    pub fn from_data(d: &ConintData) -> Self {
        Self {
            pencil: PencilRef::Inline(PencilFile::from_pencil(&d.pencil)),
            zeros: d.zeros.iter().map(CurveNodeSpec::from_node).collect(),
            poles: d.poles.iter().map(CurveNodeSpec::from_node).collect(),
            couplings: d
                .couplings
                .iter()
                .map(|c| CouplingSpec { zero: c.zero, pole: c.pole, rho: matrix_to_rows(&c.rho) })
                .collect(),
            xi: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genus0::Genus0Problem;

    #[test]
    fn genus0_problem_parses() {
        let s = r#"{"rank":1,"zeros":[{"point":[2,0],"x":[[1,0]]}],"poles":[{"point":[3,0],"u":[[1,0]]}]}"#;
        let f: ProblemFile<Genus0Problem> = ProblemFile::from_json(s).unwrap();
        assert_eq!(f.payload.zeros[0].point, C64::new(2.0, 0.0));
        assert!(f.seed.is_none());
    }

    #[test]
    fn bad_schema_version() {
        let s = r#"{"schema":7,"rank":1,"zeros":[],"poles":[]}"#;
        assert!(ProblemFile::<Genus0Problem>::from_json(s).is_err());
    }

    #[test]
    fn pencil_round_trip() {
        let m = CMat::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        let p = Pencil { rank: 1, sigma1: m.clone(), sigma2: m.adjoint(), gamma: m * C64::new(0.0, 2.0) };
        let f = PencilFile::from_pencil(&p);
        let s = serde_json::to_string(&f).unwrap();
        let back: PencilFile = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_pencil().unwrap(), p);
        assert!(s.contains("\"M\":3"));
    }

    #[test]
    fn surface_data_round_trip() {
        let s = r#"{"genus":1,"omega":[[0,1]],"points":[{"label":"p","phi":[[0.1,0]]},{"label":"q","phi":[[0.2,0]]}],"prime_form":[[0.5,0.1]]}"#;
        let f: SurfaceDataFile = serde_json::from_str(s).unwrap();
        let b = f.into_bundle().unwrap();
        assert_eq!(b.prime_form("q", "p").unwrap(), C64::new(-0.5, -0.1));
        let back = SurfaceDataFile::from_bundle(&b);
        assert_eq!(back.points.len(), 2);
    }
}
