//! Classical capacity quantities of finite-dimensional quantum channels.
//!
//! The crate computes the Holevo chi-function and the constrained
//! chi-capacity of channels in Kraus form, certifies optima through the
//! maximal distance property and Kuhn-Tucker conditions, builds classically
//! assisted channel extensions, and probes additivity relations at desk
//! scale, reporting gaps rather than asserting open conjectures.
//!
//! The mathematical layer (states, channels, entropies, bipartite algebra)
//! is generic over the real scalar through [`scalar::Scalar`], with `f32`
//! and `f64` both supported; the optimizers and the additivity lab work in
//! `f64`. The aliases at the crate root name the double precision types
//! that the solvers produce and consume.
//!
//! Entropies and capacities are in bits throughout.

pub mod additivity;
pub mod bipartite;
pub mod capacity;
pub mod certificate;
pub mod channel;
pub mod constraint;
pub mod eig;
pub mod entropy;
pub mod error;
pub mod kuhn_tucker;
pub mod mat;
pub mod opt;
pub mod profile;
pub mod random;
pub mod records;
pub mod scalar;
pub mod shor;
pub mod shor_cap;
pub mod state;
pub mod support;
pub mod tol;

/// Double precision matrix, the solvers' working type.
pub type ComplexMatrix64 = mat::ComplexMatrix<f64>;
/// Single precision matrix for the generic mathematical layer.
pub type ComplexMatrix32 = mat::ComplexMatrix<f32>;
pub type DensityMatrix64 = state::DensityMatrix<f64>;
pub type DensityMatrix32 = state::DensityMatrix<f32>;
pub type HermitianOperator64 = state::HermitianOperator<f64>;
pub type Ensemble64 = state::Ensemble<f64>;
pub type KrausChannel64 = channel::KrausChannel<f64>;
pub type KrausChannel32 = channel::KrausChannel<f32>;
pub type BlockChannel64 = channel::BlockChannel<f64>;
pub type ConstraintSet64 = constraint::ConstraintSet<f64>;
pub type ShorExtension64 = shor::ShorExtension<f64>;
