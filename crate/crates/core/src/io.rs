//! JSON interchange: complex matrices as `{"order", "re", "im"}` and a float
//! formatter that writes every double with 17 significant digits.

use std::io;

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exptransform::ExpMoments;
use crate::shapes::MomentMatrix;

type C64 = Complex<f64>;

/// Serialized form of a square complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub order: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        Self {
            order: n,
            re: (0..n).map(|j| (0..m.ncols()).map(|k| m[(j, k)].re).collect()).collect(),
            im: (0..n).map(|j| (0..m.ncols()).map(|k| m[(j, k)].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        let n = self.order;
        let ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !ok(&self.re) || !ok(&self.im) {
            return Err(Error::DimensionMismatch(format!("matrix document is not {n}×{n}")));
        }
        Ok(DMatrix::from_fn(n, n, |j, k| C64::new(self.re[j][k], self.im[j][k])))
    }
}

impl From<&MomentMatrix> for MatrixDoc {
    fn from(a: &MomentMatrix) -> Self {
        Self::from_matrix(a.matrix())
    }
}

impl From<&ExpMoments> for MatrixDoc {
    fn from(b: &ExpMoments) -> Self {
        Self::from_matrix(b.matrix())
    }
}

impl TryFrom<MatrixDoc> for MomentMatrix {
    type Error = Error;
    fn try_from(doc: MatrixDoc) -> Result<Self> {
        MomentMatrix::new(doc.to_matrix()?)
    }
}

impl TryFrom<MatrixDoc> for ExpMoments {
    type Error = Error;
    fn try_from(doc: MatrixDoc) -> Result<Self> {
        ExpMoments::new(doc.to_matrix()?)
    }
}

/// `#[serde(with = "cmatrix")]` adapter for `DMatrix<Complex<f64>>`.
pub mod cmatrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixDoc::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<C64>, D::Error> {
        MatrixDoc::deserialize(d)?.to_matrix().map_err(serde::de::Error::custom)
    }
}

/// Compact JSON formatter printing floats as `{:.16e}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedFloat;

impl serde_json::ser::Formatter for FixedFloat {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt_f64(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// A double with 17 significant digits.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serializes `value` with [`FixedFloat`].
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloat);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    Ok(String::from_utf8(out).expect("JSON output is UTF-8"))
}
