//! Numerical laboratory for higher-order Riesz transforms.
//!
//! The crate evaluates the truncated and maximal Riesz transforms on
//! periodic grids, the radial factorization profile relating them to the
//! full transform, rotation averaging over SO(d), the complex-space
//! extension with its directional Hilbert transforms, the restricted
//! kernels on R^d, and an experiment harness for dimension-free norm-ratio
//! sweeps.
//!
//! All numerical code is generic over the floating-point type through
//! [`scalar::Scalar`]; `f64` (the [`Real`] alias) is what the CLI and the
//! acceptance suite use.

pub mod constants;
pub mod error;
pub mod factorization;
pub mod fields;
pub mod harmonics;
pub mod quad;
pub mod riesz;
pub mod scalar;
pub mod specfun;
pub mod util;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type.
pub type Real = f64;
/// Single-precision scalar, for quick exploratory runs.
pub type Real32 = f32;

pub type GridSpec64 = fields::GridSpec<Real>;
pub type GridField64 = fields::GridField<Real>;
pub type TruncationGrid64 = riesz::TruncationGrid<Real>;
pub type RadialProfile64 = factorization::RadialProfile<Real>;
pub type ConstantValue64 = constants::ConstantValue<Real>;
