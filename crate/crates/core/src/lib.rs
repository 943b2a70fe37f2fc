//! Cauchy kernels on compact Riemann surfaces, the Fay trisecant identity, and
//! zero-pole interpolation for bundle maps between flat vector bundles.
//!
//! The surfaces supported analytically are the Riemann sphere and complex tori
//! `C/(Z + τZ)`; higher genus data enters through [`surface::SurfaceDataBundle`].

pub mod absint;
pub mod conint;
pub mod detrep;
pub mod error;
pub mod genus0;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod surface;
pub mod theta;
pub mod verify;

pub use error::{Error, Result};
pub use kernel::{CauchyKernel, DirectSumKernel, LineKernel, SphereKernel};
pub use surface::{EmbeddingPair, FlatLineBundle, Surface, SurfacePoint, Torus};
pub use theta::{PeriodMatrix, ThetaCharacteristic, ThetaEngine, ThetaEvalConfig};

pub type C64 = num_complex::Complex64;
pub type CMat = nalgebra::DMatrix<C64>;
pub type CVec = nalgebra::DVector<C64>;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
