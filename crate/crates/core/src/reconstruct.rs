//! Shade function recovery from moments: complex to real monomial moments, a
//! moment-based bounding box, and a tensor Legendre expansion on that box.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exptransform::{b_to_a, ExpMoments};
use crate::finiteterm::{fill_from_first_column, BandCertificate};
use crate::shapes::{binomial_table, MomentMatrix, Rect};

type C64 = Complex<f64>;

/// Default relative padding of [`support_box`].
pub const DEFAULT_PAD: f64 = 0.15;

/// Default number of samples per side of a reconstructed grid.
pub const DEFAULT_SAMPLES: usize = 128;

/// Imaginary parts above this (relative) level mean the input was not Hermitian.
const IMAG_TOL: f64 = 1e-10;

/// `m[p][q] = (1/π)∫ x^p y^q g dA` for `p + q ≤ P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMoments {
    order: usize,
    m: Vec<Vec<f64>>,
}

impl RealMoments {
    pub fn new(order: usize, m: Vec<Vec<f64>>) -> Result<Self> {
        if m.len() != order + 1 || m.iter().enumerate().any(|(p, row)| row.len() != order + 1 - p) {
            return Err(Error::DimensionMismatch(format!("real moments must form a triangle of order {order}")));
        }
        Ok(Self { order, m })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.m[p][q]
    }

    /// Moments of `((x - cx)/hx, (y - cy)/hy)`.
    pub fn affine(&self, cx: f64, cy: f64, hx: f64, hy: f64) -> Self {
        let n = self.order;
        let binom = binomial_table(n);
        let mut out = vec![];
        for i in 0..=n {
            let mut row = vec![];
            for j in 0..=n - i {
                let mut acc = 0.0;
                for a in 0..=i {
                    for b in 0..=j {
                        acc += binom[i][a]
                            * binom[j][b]
                            * (-cx).powi((i - a) as i32)
                            * (-cy).powi((j - b) as i32)
                            * self.m[a][b];
                    }
                }
                row.push(acc / (hx.powi(i as i32) * hy.powi(j as i32)));
            }
            out.push(row);
        }
        Self { order: n, m: out }
    }
}

/// Real moments to total order `N - 1`.
pub fn real_moments(a: &MomentMatrix) -> Result<RealMoments> {
    real_moments_to(a, a.order().saturating_sub(1))
}

/// Real moments to total order `p`, using only `a_jk` with `j + k ≤ p`.
pub fn real_moments_to(a: &MomentMatrix, p: usize) -> Result<RealMoments> {
    if a.order() == 0 || p >= a.order() {
        return Err(Error::OutOfRange { index: p, limit: a.order() });
    }
    let binom = binomial_table(p);
    let i_pow = |e: usize| [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][e % 4];
    let mut m = vec![];
    for px in 0..=p {
        let mut row = vec![];
        for qy in 0..=p - px {
            // x^p y^q = 2^{-p-q} i^{-q} Σ C(p,s) C(q,t) (-1)^{q-t} z^{s+t} z̄^{p+q-s-t}
            let mut acc = C64::zero();
            let mut scale = 0.0;
            for s in 0..=px {
                for t in 0..=qy {
                    let sign = if (qy - t) % 2 == 0 { 1.0 } else { -1.0 };
                    let w = binom[px][s] * binom[qy][t] * sign;
                    let v = a.get(s + t, px + qy - s - t);
                    acc += v * w;
                    scale += (v * w).norm();
                }
            }
            let val = acc * i_pow(4 - qy % 4) / 2f64.powi((px + qy) as i32);
            let scale = scale / 2f64.powi((px + qy) as i32);
            if val.im.abs() > IMAG_TOL * scale.max(1.0) {
                return Err(Error::NonHermitian { defect: val.im.abs() });
            }
            row.push(val.re);
        }
        m.push(row);
    }
    RealMoments::new(p, m)
}

/// Inverse of [`real_moments`]: `a_jk` for `j + k ≤ P`, zero elsewhere, in a
/// matrix of order `P + 1`.
pub fn complex_moments(m: &RealMoments) -> Result<MomentMatrix> {
    let p = m.order();
    let binom = binomial_table(p);
    let i_pow = |e: usize| [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][e % 4];
    let mut a = DMatrix::<C64>::zeros(p + 1, p + 1);
    for j in 0..=p {
        for k in 0..=p - j {
            // (x + iy)^j (x - iy)^k
            let mut acc = C64::zero();
            for s in 0..=j {
                for t in 0..=k {
                    let phase = i_pow(j - s) * i_pow(3 * (k - t));
                    acc += phase * (binom[j][s] * binom[k][t] * m.get(s + t, j + k - s - t));
                }
            }
            a[(j, k)] = acc;
        }
    }
    for j in 0..=p {
        a[(j, j)].im = 0.0;
    }
    MomentMatrix::new(a)
}

fn catalan(k: usize) -> f64 {
    (0..k).fold(1.0, |c, i| c * 2.0 * (2 * i + 1) as f64 / (i + 2) as f64)
}

/// Bounding box centred at the centroid.
///
/// Along each axis the half-width is `max_k 2 (μ_2k / (m_00 C_k))^{1/(2k)}`
/// with `μ` the central moments and `C_k` the Catalan numbers, enlarged by
/// `1 + pad`. The estimate is exact for disks and axis-aligned ellipses
/// (semicircle marginals) and increases towards the true extent in general.
pub fn support_box(m: &RealMoments, pad: f64) -> Result<Rect> {
    let m00 = m.get(0, 0);
    if !(m00 > 0.0) {
        return Err(Error::EmptyShape);
    }
    let (cx, cy) = if m.order() == 0 {
        (0.0, 0.0)
    } else {
        (m.get(1, 0) / m00, m.get(0, 1) / m00)
    };
    let central = m.affine(cx, cy, 1.0, 1.0);
    let half = |along_x: bool| {
        let mut h = 0.0_f64;
        for k in 1..=m.order() / 2 {
            let mu = if along_x { central.get(2 * k, 0) } else { central.get(0, 2 * k) };
            if mu > 0.0 {
                h = h.max(2.0 * (mu / (m00 * catalan(k))).powf(1.0 / (2 * k) as f64));
            }
        }
        h
    };
    let (hx, hy) = (half(true), half(false));
    // too few moments to see any extent; fall back to a disk of the same mass
    let fallback = m00.sqrt();
    let hx = if hx > 0.0 { hx } else { fallback } * (1.0 + pad);
    let hy = if hy > 0.0 { hy } else { fallback } * (1.0 + pad);
    Ok(Rect {
        x0: cx - hx,
        x1: cx + hx,
        y0: cy - hy,
        y1: cy + hy,
    })
}

/// Monomial coefficients of the Legendre polynomials `P_0..=P_n` on `[-1, 1]`.
fn legendre_coefficients(n: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![vec![1.0]];
    if n >= 1 {
        out.push(vec![0.0, 1.0]);
    }
    for k in 1..n {
        // (k+1) P_{k+1} = (2k+1) s P_k - k P_{k-1}
        let mut next = vec![0.0; k + 2];
        for (i, c) in out[k].iter().enumerate() {
            next[i + 1] += (2 * k + 1) as f64 * c;
        }
        for (i, c) in out[k - 1].iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        next.iter_mut().for_each(|c| *c /= (k + 1) as f64);
        out.push(next);
    }
    out
}

fn legendre_values(n: usize, s: f64) -> Vec<f64> {
    let mut v = vec![1.0];
    if n >= 1 {
        v.push(s);
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 * s * v[k] - k as f64 * v[k - 1]) / (k + 1) as f64;
        v.push(next);
    }
    v
}

/// `ĝ(x, y) = Σ_{p+q≤P} c_pq L̃_p(x) L̃_q(y)`, `L̃` orthonormal Legendre on the box sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendreExpansion {
    pub bounds: Rect,
    pub order: usize,
    /// `coeffs[p][q]`, `p + q ≤ P`.
    pub coeffs: Vec<Vec<f64>>,
}

impl LegendreExpansion {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let b = &self.bounds;
        let s = (2.0 * x - b.x0 - b.x1) / b.width();
        let t = (2.0 * y - b.y0 - b.y1) / b.height();
        let lx = legendre_values(self.order, s);
        let ly = legendre_values(self.order, t);
        let mut acc = 0.0;
        for p in 0..=self.order {
            for q in 0..=self.order - p {
                let norm = (((2 * p + 1) * (2 * q + 1)) as f64 / b.area()).sqrt();
                acc += self.coeffs[p][q] * norm * lx[p] * ly[q];
            }
        }
        acc
    }

    /// `∫_box ĝ dA`.
    pub fn integral(&self) -> f64 {
        self.coeffs[0][0] * self.bounds.area().sqrt()
    }

    /// Samples at the centres of an `nx × ny` cell grid.
    pub fn sample(&self, nx: usize, ny: usize) -> GridFunction {
        let b = self.bounds;
        let (dx, dy) = (b.width() / nx as f64, b.height() / ny as f64);
        let values = (0..ny)
            .map(|i| {
                let y = b.y0 + (i as f64 + 0.5) * dy;
                (0..nx).map(|j| self.eval(b.x0 + (j as f64 + 0.5) * dx, y)).collect()
            })
            .collect();
        GridFunction {
            bounds: b,
            order: self.order,
            values,
        }
    }
}

/// Projection of `g` onto Legendre products of total degree `≤ P` on `bounds`.
pub fn legendre_fit(m: &RealMoments, bounds: Rect, order: usize) -> Result<LegendreExpansion> {
    if order > m.order() {
        return Err(Error::OutOfRange {
            index: order,
            limit: m.order(),
        });
    }
    if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
        return Err(Error::InvalidArgument("box must have positive width and height".into()));
    }
    let (hx, hy) = (0.5 * bounds.width(), 0.5 * bounds.height());
    let local = m.affine(0.5 * (bounds.x0 + bounds.x1), 0.5 * (bounds.y0 + bounds.y1), hx, hy);
    let leg = legendre_coefficients(order);
    let mut coeffs = vec![];
    for p in 0..=order {
        let mut row = vec![];
        for q in 0..=order - p {
            // ∫ g P_p(s) P_q(t) dA = π Σ coefficients · local moments
            let mut acc = 0.0;
            for (i, ci) in leg[p].iter().enumerate() {
                for (j, cj) in leg[q].iter().enumerate() {
                    acc += ci * cj * local.get(i, j);
                }
            }
            let norm = (((2 * p + 1) * (2 * q + 1)) as f64 / bounds.area()).sqrt();
            row.push(PI * acc * norm);
        }
        coeffs.push(row);
    }
    Ok(LegendreExpansion { bounds, order, coeffs })
}

/// Sampled reconstruction; `values[i][j]` is at the centre of cell row `i`
/// (increasing `y`), column `j` (increasing `x`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub bounds: Rect,
    pub order: usize,
    pub values: Vec<Vec<f64>>,
}

impl GridFunction {
    pub fn nx(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn ny(&self) -> usize {
        self.values.len()
    }

    pub fn cell_area(&self) -> f64 {
        self.bounds.area() / (self.nx() * self.ny()).max(1) as f64
    }

    /// Centre of cell `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        let b = &self.bounds;
        (
            b.x0 + (j as f64 + 0.5) * b.width() / self.nx() as f64,
            b.y0 + (i as f64 + 0.5) * b.height() / self.ny() as f64,
        )
    }

    /// Midpoint-rule integral.
    pub fn integral(&self) -> f64 {
        self.values.iter().flatten().sum::<f64>() * self.cell_area()
    }

    /// `(min, max)` of the samples.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Range when it leaves `[-0.1, 1.1]`; the samples are never clipped.
    pub fn clipping(&self) -> Option<(f64, f64)> {
        let (lo, hi) = self.range();
        (lo < -0.1 || hi > 1.1).then_some((lo, hi))
    }

    /// `∫ |ĝ - f|` by the midpoint rule.
    pub fn l1_distance(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.deviation(f, 1)
    }

    /// `(∫ |ĝ - f|²)^{1/2}` by the midpoint rule.
    pub fn l2_distance(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.deviation(f, 2).sqrt()
    }

    fn deviation(&self, f: impl Fn(f64, f64) -> f64, power: i32) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.ny() {
            for j in 0..self.nx() {
                let (x, y) = self.point(i, j);
                acc += (self.values[i][j] - f(x, y)).abs().powi(power);
            }
        }
        acc * self.cell_area()
    }

    /// `x,y,value` lines with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,value\n");
        for i in 0..self.ny() {
            for j in 0..self.nx() {
                let (x, y) = self.point(i, j);
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    crate::io::fmt_f64(x),
                    crate::io::fmt_f64(y),
                    crate::io::fmt_f64(self.values[i][j])
                );
            }
        }
        out
    }
}

/// Fill → `b_to_a` → real moments → box → Legendre expansion of order `p`.
pub fn reconstruct_expansion(col: &[C64], cert: &BandCertificate, n: usize, p: usize) -> Result<LegendreExpansion> {
    let filled = fill_from_first_column(col, &cert.q, n)?;
    if !filled.covers_total_order(p) {
        return Err(Error::Precondition(format!(
            "certified triangle of order {n} does not reach total degree {p}"
        )));
    }
    let mut b = filled.zero_filled();
    b = (&b + b.adjoint()) * C64::from(0.5);
    let a = b_to_a(&ExpMoments::new(b)?)?;
    let m = real_moments_to(&a, p)?;
    if m.get(0, 0) == 0.0 {
        return Ok(LegendreExpansion {
            bounds: Rect {
                x0: -1.0,
                x1: 1.0,
                y0: -1.0,
                y1: 1.0,
            },
            order: p,
            coeffs: (0..=p).map(|i| vec![0.0; p + 1 - i]).collect(),
        });
    }
    let bounds = support_box(&m, DEFAULT_PAD)?;
    legendre_fit(&m, bounds, p)
}

/// [`reconstruct_expansion`] sampled on a [`DEFAULT_SAMPLES`]² grid.
pub fn reconstruct_from_certificate(col: &[C64], cert: &BandCertificate, n: usize, p: usize) -> Result<GridFunction> {
    Ok(reconstruct_expansion(col, cert, n, p)?.sample(DEFAULT_SAMPLES, DEFAULT_SAMPLES))
}
