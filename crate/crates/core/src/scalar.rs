//! Scalar abstraction for the coefficient algebra.
//!
//! The formal-series and moment-conversion code only needs field operations
//! and division by small integers, so it is written against [`Scalar`] and
//! runs unchanged on `f32`, `f64` or exact rationals. Everything that needs
//! square roots, eigenvalues or quadrature is `f64` only.

use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Real scalar usable as the component type of complex series coefficients.
pub trait Scalar:
    Clone + Debug + PartialEq + Num + Neg<Output = Self> + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Lossy view used for tolerance checks.
    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_index(n: usize) -> Self {
        Self::from_usize(n).expect("index representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Clone + Debug + PartialEq + Num + Neg<Output = T> + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}

/// Magnitude of a complex coefficient, as an `f64`.
pub fn cabs<T: Scalar>(z: &Complex<T>) -> f64 {
    z.re.approx_f64().hypot(z.im.approx_f64())
}
