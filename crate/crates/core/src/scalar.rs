//! Scalar abstraction for the math layer.
//!
//! Everything below the optimizer (matrices, eigensolver, entropies, states,
//! channels, extension algebra) is generic over [`Scalar`]. The crate root
//! exports `f64` aliases, which is what the optimizer and CLI consume.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar used by the linear-algebra and entropy layer.
///
/// The associated constants are validation tolerances scaled to the
/// precision: the `f64` values are the contract (hermiticity 1e-12,
/// state/completeness slack 1e-10, spectral floor 1e-12); the `f32` values
/// are proportional so the single-precision instantiation stays usable.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Tolerance for algebraic identity residuals (hermiticity, weight sums).
    const TOL_ALGEBRA: Self;
    /// Slack for state invariants: PSD floor and trace deviation, and for
    /// Kraus completeness.
    const TOL_STATE: Self;
    /// Eigenvalues below this are treated as zero in entropies and support
    /// tests (eigensolver noise floor).
    const SPECTRAL_FLOOR: Self;

    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }
}

impl Scalar for f64 {
    const TOL_ALGEBRA: f64 = 1e-12;
    const TOL_STATE: f64 = 1e-10;
    const SPECTRAL_FLOOR: f64 = 1e-12;
}

impl Scalar for f32 {
    const TOL_ALGEBRA: f32 = 1e-5;
    const TOL_STATE: f32 = 1e-4;
    const SPECTRAL_FLOOR: f32 = 1e-6;
}

/// Complex number over the crate scalar.
pub type C<F> = Complex<F>;

/// Base-2 logarithm wrapper: the whole crate counts entropy in bits, and this
/// is the one place the base is fixed.
#[inline]
pub fn log_base<F: Scalar>(x: F) -> F {
    x.log2()
}

/// Inverse of the base constant: 1 / ln(base), used by analytic entropy
/// gradients.
#[inline]
pub fn inv_ln_base<F: Scalar>() -> F {
    F::one() / F::from_f64_c(std::f64::consts::LN_2)
}
