//! Floating-point abstraction shared by the numerical core.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the optics, training and risk code is written against.
///
/// Implemented for `f32` and `f64`. Tolerances are per-type because the
/// group-invariant checks that are natural in double precision are
/// unreachable in single precision.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Serialize + DeserializeOwned + Send + Sync + 'static
{
    /// Frobenius tolerance for `OᵀO = I` and `OᵀΩO = Ω`.
    const GROUP_TOL: f64;
    /// Tolerance on the block structure `[[A, B], [-B, A]]`.
    const BLOCK_TOL: f64;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    const GROUP_TOL: f64 = 1e-10;
    const BLOCK_TOL: f64 = 1e-8;
}

impl Scalar for f32 {
    const GROUP_TOL: f64 = 1e-4;
    const BLOCK_TOL: f64 = 1e-4;
}

/// `‖G†G − I‖²_F` threshold at which a complex matrix counts as unitary.
pub const UNITARITY_TOL: f64 = 1e-6;
