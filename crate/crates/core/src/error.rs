use thiserror::Error;

use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid period matrix: {0}")]
    InvalidPeriodMatrix(String),
    #[error("lattice sum did not converge within radius {radius}")]
    NonConvergent { radius: usize },
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("operation not supported for genus {0}")]
    UnsupportedGenus(usize),
    #[error("degenerate embedding: {0}")]
    DegenerateEmbedding(String),
    #[error("pole of order greater than one at {0}")]
    HigherOrderPole(C64),
    #[error("matrix is not square")]
    NotSquare,
    #[error("zero/pole matrix is numerically singular (condition {cond:.3e})")]
    SingularGamma { cond: f64 },
    #[error("zero and pole counts differ ({zeros} vs {poles})")]
    CountMismatch { zeros: usize, poles: usize },
    #[error("Cauchy matrix is singular")]
    SingularSylvester,
    #[error("line bundle has a nonzero holomorphic section: |theta[a;b](0)| = {0:.3e}")]
    DegenerateBundle(f64),
    #[error("kernels live on different surfaces")]
    SurfaceMismatch,
    #[error("Laurent extraction unstable (stencil disagreement {0:.3e})")]
    ExtractionUnstable(f64),
    #[error("evaluation point lies on a pole set")]
    PointOnPoleSet,
    #[error("base point collides with a zero or pole")]
    BasePointCollision,
    #[error("kernel value is singular at {0}")]
    KernelSingular(C64),
    #[error("could not locate the poles of the inverse kernel")]
    PoleLocationFailure,
    #[error("divisor is incompatible with the bundles (defect {0:.3e})")]
    NecessityViolated(f64),
    #[error("denominator vanishes")]
    DegenerateDenominator,
    #[error("interpolation data is not of full rank")]
    NotFullRank,
    #[error("value at the base point is singular")]
    SingularBoundaryValue,
    #[error("direction xi annihilates a point difference")]
    XiDenominatorZero,
    #[error("concrete zero/pole matrix is numerically singular (condition {cond:.3e})")]
    SingularGamma0 { cond: f64 },
    #[error("zero/pole compatibility violated at a coincident pair (residual {0:.3e})")]
    ZpViolated(f64),
    #[error("requested pair is not a coincidence")]
    NoCoincidence,
    #[error("point lies on an excluded set")]
    PointOnExcludedSet,
    #[error("interpolation nodes collide with the points at infinity")]
    PoleCollision,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
