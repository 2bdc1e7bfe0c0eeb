//! Exponential transform of planar shade functions and the orthogonal
//! polynomials it induces.
//!
//! The pipeline runs from a shade function `g` to its power moments
//! `a_jk`, through the exponential transform to the Gram matrix `b_jk`,
//! and on to orthonormal polynomials, their Hessenberg matrix, finite-term
//! certificates and shape reconstruction. Banded operator models serve as
//! independent oracles for the closed forms.

pub(crate) mod dd;
pub mod error;
pub mod scalar;
pub mod quad;
pub mod series;
pub mod shapes;
pub mod exptransform;
pub mod orthopoly;
pub mod finiteterm;
pub mod operators;
pub mod reconstruct;
pub mod heleshaw;
pub mod io;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;
pub use shapes::{Rect, Shape};

pub type C64 = num_complex::Complex<f64>;
pub type BiSeries = series::BiSeries<f64>;
pub type MomentMatrix = shapes::MomentMatrix<f64>;
pub type ExpMoments = exptransform::ExpMoments<f64>;
