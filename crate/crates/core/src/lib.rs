//! Schwarzian tensor of locally biholomorphic maps of the polydisk, its
//! Bergman operator norm, and numerical checks of the comparison-ODE
//! bounds, covering radii and order estimates built on top of it.
//!
//! The numerical core is generic over the real scalar type ([`Real`]: `f32`
//! or `f64`); the aliases below fix it to `f64`, which every tolerance in the
//! checks is calibrated for.
//!
//! Layers, bottom to top:
//!
//! * [`jets`]: third-order Taylor jets plus a Cauchy-integral oracle.
//! * [`maps`]: map expressions (Möbius, automorphisms, normalizers, …).
//! * [`schwarzian`]: `S^k_ij`, `S^0_ij` and the identities they satisfy.
//! * [`bergman`]: Bergman norms, pointwise operator norm, grid sup-norms.
//! * [`comparison`]: ray transport, comparison envelopes, Riccati blow-up.
//! * [`order`]: order/covering experiments.
//! * [`verify`]: batch inequality suites with JSON reports.

pub mod bergman;
pub mod comparison;
pub mod error;
pub mod field;
pub mod jets;
pub mod linalg;
pub mod maps;
pub mod ode;
pub mod order;
pub mod report;
pub mod scalar;
pub mod schwarzian;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

/// Crate version, echoed in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Complex64 = Cx<f64>;
pub type Jet3 = jets::Jet3<f64>;
pub type MapExpr = maps::MapExpr<f64>;
pub type MapJet = maps::MapJet<f64>;
pub type SchwarzianTensor = schwarzian::SchwarzianTensor<f64>;
pub type NormResult = bergman::NormResult<f64>;
pub type SupNormResult = bergman::SupNormResult<f64>;
pub type BoundParams = comparison::BoundParams<f64>;
pub type OdeOutcome = comparison::OdeOutcome<f64>;

pub type Jet3F32 = jets::Jet3<f32>;
pub type MapExprF32 = maps::MapExpr<f32>;
pub type SchwarzianTensorF32 = schwarzian::SchwarzianTensor<f32>;
