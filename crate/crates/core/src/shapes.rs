//! Shade-function catalog and power moments `a_jk = (1/π)∫ z^j z̄^k g dA`.
//!
//! Every built-in shape has a smooth parametrization, so moments are computed
//! with tensor rules on the parameter domain and double Cauchy integrals with
//! contour rules on the boundary, never by integrating an indicator function.
//! Off-center and rotated shapes get their moments from the centered ones
//! through exact phase and binomial transforms.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::scalar::{cabs, Scalar};

type C64 = Complex<f64>;

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    fn distance(&self, z: C64) -> f64 {
        let dx = (self.x0 - z.re).max(0.0).max(z.re - self.x1);
        let dy = (self.y0 - z.im).max(0.0).max(z.im - self.y1);
        dx.hypot(dy)
    }
}

/// A shade function `g: ℂ → [0, 1]` with compact support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Disk {
        #[serde(default)]
        center: C64,
        #[serde(rename = "R")]
        radius: f64,
    },
    Annulus {
        #[serde(default)]
        center: C64,
        #[serde(rename = "r")]
        inner: f64,
        #[serde(rename = "R")]
        outer: f64,
    },
    /// Semi-axes `p ≥ q > 0`, major axis at angle `phi` from the real axis.
    Ellipse {
        #[serde(default)]
        center: C64,
        p: f64,
        q: f64,
        #[serde(default)]
        phi: f64,
    },
    /// `t · g_base` with `0 < t ≤ 1`.
    Weighted { base: Box<Shape>, t: f64 },
    /// Sum of shades with pairwise disjoint supports.
    Sum { parts: Vec<Shape> },
    /// Piecewise constant shade on a rectangle; `values[row][col]` with rows
    /// running along `y` from `y0` and columns along `x` from `x0`.
    Grid {
        #[serde(rename = "box")]
        bounds: Rect,
        values: Vec<Vec<f64>>,
    },
}

/// Hermitian matrix of power moments `a[j][k] = a_jk`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix<T: Scalar = f64> {
    a: DMatrix<Complex<T>>,
}

/// Relative Hermitian defect tolerated when wrapping externally supplied matrices.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) fn hermitian_defect<T: Scalar>(m: &DMatrix<Complex<T>>) -> (f64, f64) {
    let n = m.nrows();
    let mut defect = 0.0_f64;
    let mut scale = 0.0_f64;
    for j in 0..n {
        for k in 0..n {
            scale = scale.max(cabs(&m[(j, k)]));
            if k >= j {
                let d = m[(j, k)].clone() - m[(k, j)].conj();
                defect = defect.max(cabs(&d));
            }
        }
    }
    (defect, scale)
}

pub(crate) fn check_hermitian<T: Scalar>(m: &DMatrix<Complex<T>>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{}×{} matrix is not square", m.nrows(), m.ncols())));
    }
    let (defect, scale) = hermitian_defect(m);
    if defect > HERMITIAN_TOL * scale.max(1.0) || defect.is_nan() {
        return Err(Error::NonHermitian { defect });
    }
    Ok(())
}

impl<T: Scalar> MomentMatrix<T> {
    /// Wraps a square matrix, checking Hermitian symmetry.
    pub fn new(a: DMatrix<Complex<T>>) -> Result<Self> {
        check_hermitian(&a)?;
        Ok(Self { a })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn get(&self, j: usize, k: usize) -> &Complex<T> {
        &self.a[(j, k)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.a
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.a
    }

    /// Harmonic moments `a_{j0}`.
    pub fn first_column(&self) -> Vec<Complex<T>> {
        (0..self.order()).map(|j| self.a[(j, 0)].clone()).collect()
    }
}

impl MomentMatrix<f64> {
    pub fn mass(&self) -> f64 {
        PI * self.a[(0, 0)].re
    }
}

/// Power moments of `s` up to order `n` with default quadrature settings.
pub fn moments(s: &Shape, n: usize) -> Result<MomentMatrix> {
    moments_with(s, n, &QuadOptions::default())
}

pub fn moments_with(s: &Shape, n: usize, opts: &QuadOptions) -> Result<MomentMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    s.validate()?;
    let mut a = raw_moments(s, n, opts)?;
    hermitize_from_lower(&mut a);
    Ok(MomentMatrix { a })
}

/// Copies the conjugate of the lower triangle onto the upper one.
pub(crate) fn hermitize_from_lower<T: Scalar>(m: &mut DMatrix<Complex<T>>) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)].im = T::zero();
        for k in j + 1..n {
            m[(j, k)] = m[(k, j)].conj();
        }
    }
}

fn raw_moments(s: &Shape, n: usize, opts: &QuadOptions) -> Result<DMatrix<C64>> {
    match s {
        Shape::Disk { center, radius } => {
            let diag = |j: usize| radius.powi(2 * j as i32 + 2) / (j as f64 + 1.0);
            Ok(translate(&diagonal(n, diag), *center))
        }
        Shape::Annulus { center, inner, outer } => {
            let diag = |j: usize| (outer.powi(2 * j as i32 + 2) - inner.powi(2 * j as i32 + 2)) / (j as f64 + 1.0);
            Ok(translate(&diagonal(n, diag), *center))
        }
        Shape::Ellipse { center, p, q, phi } => {
            let centered = ellipse_moments(*p, *q, n, opts)?;
            Ok(translate(&rotate(&centered, *phi), *center))
        }
        Shape::Weighted { base, t } => Ok(raw_moments(base, n, opts)? * C64::from(*t)),
        Shape::Sum { parts } => {
            let mut acc = DMatrix::zeros(n, n);
            for part in parts {
                acc += raw_moments(part, n, opts)?;
            }
            Ok(acc)
        }
        Shape::Grid { bounds, values } => Ok(grid_moments(bounds, values, n)),
    }
}

fn diagonal(n: usize, f: impl Fn(usize) -> f64) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |j, k| if j == k { C64::from(f(j)) } else { C64::zero() })
}

/// Moments of the shape rotated by `phi` about the origin: `a_jk ↦ e^{i(j-k)φ} a_jk`.
pub fn rotate(a: &DMatrix<C64>, phi: f64) -> DMatrix<C64> {
    if phi == 0.0 {
        return a.clone();
    }
    DMatrix::from_fn(a.nrows(), a.ncols(), |j, k| {
        a[(j, k)] * C64::from_polar(1.0, (j as f64 - k as f64) * phi)
    })
}

/// Moments of the shape translated by `c`, via the binomial expansion of
/// `(z + c)^j (z̄ + c̄)^k`.
pub fn translate(a: &DMatrix<C64>, c: C64) -> DMatrix<C64> {
    if c.is_zero() {
        return a.clone();
    }
    let n = a.nrows();
    let binom = binomial_table(n);
    let cpow: Vec<C64> = (0..n).map(|i| c.powu(i as u32)).collect();
    let cbar: Vec<C64> = cpow.iter().map(|z| z.conj()).collect();
    DMatrix::from_fn(n, n, |j, k| {
        let mut acc = C64::zero();
        for x in 0..=j {
            let left = binom[j][x] * cpow[j - x];
            for y in 0..=k {
                acc += left * binom[k][y] * cbar[k - y] * a[(x, y)];
            }
        }
        acc
    })
}

pub(crate) fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = 1.0;
        for k in 1..=i {
            t[i][k] = t[i - 1][k - 1] + if k < i { t[i - 1][k] } else { 0.0 };
        }
    }
    t
}

/// Centered, axis-aligned ellipse: `z = s(p cos θ + i q sin θ)`, `dA = p q s ds dθ`.
fn ellipse_moments(p: f64, q: f64, n: usize, opts: &QuadOptions) -> Result<DMatrix<C64>> {
    let ns0 = n + 1;
    let nt0 = 2 * n + 2;
    let grow = |base: usize, level: usize| (base as f64 * 1.5_f64.powi(level as i32)).ceil() as usize;
    quad::refine(
        opts,
        0,
        |level| grow(ns0, level) * grow(nt0, level),
        |level| {
            let srule = quad::gauss_legendre_on(grow(ns0, level), 0.0, 1.0);
            let (thetas, h) = quad::periodic_trapezoid(grow(nt0, level));
            let mut acc = DMatrix::<C64>::zeros(n, n);
            let mut zp = vec![C64::zero(); n];
            for &(s, ws) in &srule {
                for &th in &thetas {
                    let z = C64::new(p * s * th.cos(), q * s * th.sin());
                    let w = ws * h * p * q * s / PI;
                    zp[0] = C64::from(w);
                    for j in 1..n {
                        zp[j] = zp[j - 1] * z;
                    }
                    let zb = z.conj();
                    for k in 0..n {
                        // lower triangle only, mirrored afterwards
                        let mut zbk = zb.powu(k as u32);
                        if k > 0 && zbk.is_zero() {
                            zbk = C64::zero();
                        }
                        for j in k..n {
                            acc[(j, k)] += zp[j] * zbk;
                        }
                    }
                }
            }
            acc
        },
        max_change,
    )
}

pub(crate) fn max_change(a: &DMatrix<C64>, b: &DMatrix<C64>) -> (f64, f64) {
    let diff = (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (diff, scale)
}

fn grid_moments(bounds: &Rect, values: &[Vec<f64>], n: usize) -> DMatrix<C64> {
    let rows = values.len();
    let cols = values.first().map_or(0, Vec::len);
    let dx = bounds.width() / cols as f64;
    let dy = bounds.height() / rows as f64;
    let mut acc = DMatrix::<C64>::zeros(n, n);
    let mut zp = vec![C64::zero(); n];
    let mut zbp = vec![C64::zero(); n];
    for (r, row) in values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let z = C64::new(bounds.x0 + (c as f64 + 0.5) * dx, bounds.y0 + (r as f64 + 0.5) * dy);
            zp[0] = C64::from(v * dx * dy / PI);
            zbp[0] = C64::from(1.0);
            for j in 1..n {
                zp[j] = zp[j - 1] * z;
                zbp[j] = zbp[j - 1] * z.conj();
            }
            for j in 0..n {
                for k in 0..=j {
                    acc[(j, k)] += zp[j] * zbp[k];
                }
            }
        }
    }
    acc
}

/// Total mass `∫ g dA`.
pub fn mass(s: &Shape) -> f64 {
    match s {
        Shape::Disk { radius, .. } => PI * radius * radius,
        Shape::Annulus { inner, outer, .. } => PI * (outer * outer - inner * inner),
        Shape::Ellipse { p, q, .. } => PI * p * q,
        Shape::Weighted { base, t } => t * mass(base),
        Shape::Sum { parts } => parts.iter().map(mass).sum(),
        Shape::Grid { bounds, values } => {
            let rows = values.len();
            let cols = values.first().map_or(0, Vec::len);
            let cell = bounds.area() / (rows * cols).max(1) as f64;
            values.iter().flatten().sum::<f64>() * cell
        }
    }
}

/// Cauchy transforms `F_k`, `k = 0..=d`, as coefficient sequences in `u = 1/z`:
/// `F_k = Σ_j a_jk u^{j+1}`.
pub fn cauchy_columns(s: &Shape, d: usize, n: usize) -> Result<Vec<Vec<C64>>> {
    if d >= n {
        return Err(Error::OutOfRange { index: d, limit: n });
    }
    let a = moments(s, n)?;
    Ok(cauchy_columns_from(&a, d))
}

pub fn cauchy_columns_from(a: &MomentMatrix, d: usize) -> Vec<Vec<C64>> {
    (0..=d).map(|k| (0..a.order()).map(|j| a.a[(j, k)]).collect()).collect()
}

/// An ellipse traversed as `c + e^{iφ}(p cos θ + i q sin θ)`; circles have `p = q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEllipse {
    pub center: C64,
    pub p: f64,
    pub q: f64,
    pub phi: f64,
    /// `false` for boundary components traversed clockwise (holes).
    pub counterclockwise: bool,
}

impl BoundaryEllipse {
    pub fn circle(center: C64, radius: f64, counterclockwise: bool) -> Self {
        Self {
            center,
            p: radius,
            q: radius,
            phi: 0.0,
            counterclockwise,
        }
    }

    /// Point and derivative with respect to `θ`, honoring the orientation.
    pub fn point(&self, theta: f64) -> (C64, C64) {
        let th = if self.counterclockwise { theta } else { -theta };
        let rot = C64::from_polar(1.0, self.phi);
        let z = self.center + rot * C64::new(self.p * th.cos(), self.q * th.sin());
        let mut dz = rot * C64::new(-self.p * th.sin(), self.q * th.cos());
        if !self.counterclockwise {
            dz = -dz;
        }
        (z, dz)
    }
}

impl Shape {
    pub fn disk(radius: f64) -> Self {
        Shape::Disk {
            center: C64::zero(),
            radius,
        }
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        Shape::Annulus {
            center: C64::zero(),
            inner,
            outer,
        }
    }

    pub fn ellipse(p: f64, q: f64) -> Self {
        Shape::Ellipse {
            center: C64::zero(),
            p,
            q,
            phi: 0.0,
        }
    }

    pub fn weighted(base: Shape, t: f64) -> Self {
        Shape::Weighted {
            base: Box::new(base),
            t,
        }
    }

    pub fn translated(self, by: C64) -> Self {
        match self {
            Shape::Disk { center, radius } => Shape::Disk {
                center: center + by,
                radius,
            },
            Shape::Annulus { center, inner, outer } => Shape::Annulus {
                center: center + by,
                inner,
                outer,
            },
            Shape::Ellipse { center, p, q, phi } => Shape::Ellipse {
                center: center + by,
                p,
                q,
                phi,
            },
            Shape::Weighted { base, t } => Shape::weighted(base.translated(by), t),
            Shape::Sum { parts } => Shape::Sum {
                parts: parts.into_iter().map(|s| s.translated(by)).collect(),
            },
            Shape::Grid { bounds, values } => Shape::Grid {
                bounds: Rect {
                    x0: bounds.x0 + by.re,
                    x1: bounds.x1 + by.re,
                    y0: bounds.y0 + by.im,
                    y1: bounds.y1 + by.im,
                },
                values,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidShape(msg));
        match self {
            Shape::Disk { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) || !finite(*center) {
                    return bad(format!("disk radius must be positive, got {radius}"));
                }
            }
            Shape::Annulus { center, inner, outer } => {
                if !(inner.is_finite() && outer.is_finite() && 0.0 < *inner && inner < outer) || !finite(*center) {
                    return bad(format!("annulus needs 0 < r < R, got r={inner}, R={outer}"));
                }
            }
            Shape::Ellipse { center, p, q, phi } => {
                if !(p.is_finite() && q.is_finite() && phi.is_finite() && *q > 0.0 && p >= q) || !finite(*center) {
                    return bad(format!("ellipse needs p ≥ q > 0, got p={p}, q={q}"));
                }
            }
            Shape::Weighted { base, t } => {
                if !(*t > 0.0 && *t <= 1.0) {
                    return bad(format!("weight t must lie in (0, 1], got {t}"));
                }
                base.validate()?;
            }
            Shape::Sum { parts } => {
                for part in parts {
                    part.validate()?;
                }
                for (i, a) in parts.iter().enumerate() {
                    for b in &parts[i + 1..] {
                        if a.overlaps(b) {
                            return bad("sum parts must have disjoint supports".into());
                        }
                    }
                }
            }
            Shape::Grid { bounds, values } => {
                if !(bounds.x1 > bounds.x0 && bounds.y1 > bounds.y0) {
                    return bad("grid box must have positive extent".into());
                }
                let cols = values.first().map_or(0, Vec::len);
                if values.is_empty() || cols == 0 || values.iter().any(|r| r.len() != cols) {
                    return bad("grid values must be a non-empty rectangular array".into());
                }
                if values.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                    return bad("grid values must lie in [0, 1]".into());
                }
            }
        }
        Ok(())
    }

    /// Whether `z` lies in the open support.
    pub fn inside(&self, z: C64) -> bool {
        match self {
            Shape::Disk { center, radius } => (z - center).norm() < *radius,
            Shape::Annulus { center, inner, outer } => {
                let r = (z - center).norm();
                *inner < r && r < *outer
            }
            Shape::Ellipse { center, p, q, phi } => ellipse_level(z, *center, *p, *q, *phi) < 1.0,
            Shape::Weighted { base, .. } => base.inside(z),
            Shape::Sum { parts } => parts.iter().any(|s| s.inside(z)),
            Shape::Grid { bounds, values } => grid_cell(bounds, values, z).is_some_and(|v| v > 0.0),
        }
    }

    /// Lower bound on the distance from `z` to the closed support, or `None`
    /// when `z` is in the support.
    pub fn exterior_distance(&self, z: C64) -> Option<f64> {
        let d = match self {
            Shape::Disk { center, radius } => (z - center).norm() - radius,
            Shape::Annulus { center, inner, outer } => {
                let r = (z - center).norm();
                (r - outer).max(inner - r)
            }
            Shape::Ellipse { center, p, q, phi } => {
                // the level-ρ ellipse contains the unit one inflated by (ρ-1)q
                let rho = ellipse_level(z, *center, *p, *q, *phi).sqrt();
                (rho - 1.0) * q
            }
            Shape::Weighted { base, .. } => return base.exterior_distance(z),
            Shape::Sum { parts } => {
                let mut best = f64::INFINITY;
                for part in parts {
                    best = best.min(part.exterior_distance(z)?);
                }
                best
            }
            Shape::Grid { bounds, .. } => bounds.distance(z),
        };
        (d > 0.0).then_some(d)
    }

    /// Center and radius of a disk containing the support.
    pub fn bounding_disk(&self) -> (C64, f64) {
        match self {
            Shape::Disk { center, radius } => (*center, *radius),
            Shape::Annulus { center, outer, .. } => (*center, *outer),
            Shape::Ellipse { center, p, .. } => (*center, *p),
            Shape::Weighted { base, .. } => base.bounding_disk(),
            Shape::Sum { parts } => {
                let disks: Vec<_> = parts.iter().map(Shape::bounding_disk).collect();
                let c = disks.iter().map(|d| d.0).sum::<C64>() / disks.len().max(1) as f64;
                let r = disks.iter().map(|(dc, dr)| (dc - c).norm() + dr).fold(0.0, f64::max);
                (c, r)
            }
            Shape::Grid { bounds, .. } => {
                let c = C64::new(0.5 * (bounds.x0 + bounds.x1), 0.5 * (bounds.y0 + bounds.y1));
                (c, 0.5 * bounds.width().hypot(bounds.height()))
            }
        }
    }

    /// Boundary components for shapes that are indicator functions with
    /// smooth boundaries; `None` otherwise.
    pub fn boundary(&self) -> Option<Vec<BoundaryEllipse>> {
        match self {
            Shape::Disk { center, radius } => Some(vec![BoundaryEllipse {
                center: *center,
                p: *radius,
                q: *radius,
                phi: 0.0,
                counterclockwise: true,
            }]),
            Shape::Annulus { center, inner, outer } => Some(vec![
                BoundaryEllipse {
                    center: *center,
                    p: *outer,
                    q: *outer,
                    phi: 0.0,
                    counterclockwise: true,
                },
                BoundaryEllipse {
                    center: *center,
                    p: *inner,
                    q: *inner,
                    phi: 0.0,
                    counterclockwise: false,
                },
            ]),
            Shape::Ellipse { center, p, q, phi } => Some(vec![BoundaryEllipse {
                center: *center,
                p: *p,
                q: *q,
                phi: *phi,
                counterclockwise: true,
            }]),
            _ => None,
        }
    }

    fn interior_samples(&self) -> Vec<C64> {
        let polar = |center: C64, r0: f64, r1: f64, p: f64, q: f64, phi: f64| {
            let rot = C64::from_polar(1.0, phi);
            let mut pts = Vec::new();
            for i in 0..8 {
                let s = r0 + (r1 - r0) * (i as f64 + 0.5) / 8.0;
                for k in 0..48 {
                    let th = 2.0 * PI * k as f64 / 48.0;
                    pts.push(center + rot * C64::new(p * s * th.cos(), q * s * th.sin()));
                }
            }
            pts
        };
        match self {
            Shape::Disk { center, radius } => polar(*center, 0.0, 1.0, *radius, *radius, 0.0),
            Shape::Annulus { center, inner, outer } => polar(*center, *inner, *outer, 1.0, 1.0, 0.0),
            Shape::Ellipse { center, p, q, phi } => polar(*center, 0.0, 1.0, *p, *q, *phi),
            Shape::Weighted { base, .. } => base.interior_samples(),
            Shape::Sum { parts } => parts.iter().flat_map(Shape::interior_samples).collect(),
            Shape::Grid { bounds, values } => {
                let rows = values.len();
                let cols = values.first().map_or(0, Vec::len);
                let mut pts = Vec::new();
                for (r, row) in values.iter().enumerate() {
                    for (c, &v) in row.iter().enumerate() {
                        if v > 0.0 {
                            pts.push(C64::new(
                                bounds.x0 + (c as f64 + 0.5) * bounds.width() / cols as f64,
                                bounds.y0 + (r as f64 + 0.5) * bounds.height() / rows as f64,
                            ));
                        }
                    }
                }
                pts
            }
        }
    }

    /// Sampled overlap test of the open supports.
    fn overlaps(&self, other: &Shape) -> bool {
        self.interior_samples().into_iter().any(|z| other.inside(z))
            || other.interior_samples().into_iter().any(|z| self.inside(z))
    }
}

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn ellipse_level(z: C64, center: C64, p: f64, q: f64, phi: f64) -> f64 {
    let w = (z - center) * C64::from_polar(1.0, -phi);
    (w.re / p).powi(2) + (w.im / q).powi(2)
}

fn grid_cell(bounds: &Rect, values: &[Vec<f64>], z: C64) -> Option<f64> {
    if !bounds.contains(z) {
        return None;
    }
    let rows = values.len();
    let cols = values.first().map_or(0, Vec::len);
    let c = (((z.re - bounds.x0) / bounds.width()) * cols as f64).floor() as usize;
    let r = (((z.im - bounds.y0) / bounds.height()) * rows as f64).floor() as usize;
    values.get(r.min(rows - 1)).and_then(|row| row.get(c.min(cols - 1))).copied()
}

/// `(1/π)∫ g(ζ) / ((ζ - z)(ζ̄ - w̄)) dA(ζ)` for `z`, `w` off the support.
///
/// Smooth shapes are reduced to boundary integrals with Green's formula
/// `(1/π)∫_Ω ∂_ζ̄ F dA = (1/2πi)∮ F dζ`, where `F = L(ζ)/(ζ - z)` and `L` is
/// a branch of `log(ζ̄ - w̄)` that is single valued on `Ω`.
pub fn double_cauchy(s: &Shape, z: C64, w: C64, opts: &QuadOptions) -> Result<C64> {
    match s {
        Shape::Disk { center, radius } => {
            let circle = BoundaryEllipse::circle(*center, *radius, true);
            contour_cauchy(&circle, z, w, LogBranch::Anchor(*center), opts)
        }
        Shape::Annulus { center, inner, outer } => {
            let big = BoundaryEllipse::circle(*center, *outer, true);
            let small = BoundaryEllipse::circle(*center, *inner, true);
            let in_hole = |p: C64| (p - center).norm() < *inner;
            if in_hole(w) {
                let hole = BoundaryEllipse::circle(*center, *inner, false);
                Ok(contour_cauchy(&big, z, w, LogBranch::Hole(*center), opts)?
                    + contour_cauchy(&hole, z, w, LogBranch::Hole(*center), opts)?)
            } else if in_hole(z) {
                Ok(double_cauchy(s, w, z, opts)?.conj())
            } else {
                Ok(contour_cauchy(&big, z, w, LogBranch::Anchor(*center), opts)?
                    - contour_cauchy(&small, z, w, LogBranch::Anchor(*center), opts)?)
            }
        }
        Shape::Ellipse { center, p, q, phi } => {
            let curve = BoundaryEllipse {
                center: *center,
                p: *p,
                q: *q,
                phi: *phi,
                counterclockwise: true,
            };
            let branch = if (w - center).norm() > *p {
                LogBranch::Anchor(*center)
            } else {
                LogBranch::Unwrapped
            };
            contour_cauchy(&curve, z, w, branch, opts)
        }
        Shape::Weighted { base, t } => Ok(double_cauchy(base, z, w, opts)? * *t),
        Shape::Sum { parts } => {
            let mut acc = C64::zero();
            for part in parts {
                acc += double_cauchy(part, z, w, opts)?;
            }
            Ok(acc)
        }
        Shape::Grid { bounds, values } => {
            let rows = values.len();
            let cols = values.first().map_or(0, Vec::len);
            let dx = bounds.width() / cols as f64;
            let dy = bounds.height() / rows as f64;
            let mut acc = C64::zero();
            for (r, row) in values.iter().enumerate() {
                for (c, &v) in row.iter().enumerate() {
                    let zeta = C64::new(bounds.x0 + (c as f64 + 0.5) * dx, bounds.y0 + (r as f64 + 0.5) * dy);
                    acc += v / ((zeta - z) * (zeta.conj() - w.conj()));
                }
            }
            Ok(acc * dx * dy / PI)
        }
    }
}

/// Branch of `log(ζ̄ - w̄)` used on a boundary component, up to constants that
/// integrate to zero against `dζ/(ζ - z)`.
#[derive(Debug, Clone, Copy)]
enum LogBranch {
    /// `log(1 - (ζ̄ - c̄)/(w̄ - c̄))`, valid when `|ζ - c| < |w - c|` on the support.
    Anchor(C64),
    /// `log(1 - (w̄ - c̄)/(ζ̄ - c̄)) + log|ζ - c|²`, valid when `|w - c| < |ζ - c|`;
    /// its `∂_ζ̄` is still `1/(ζ̄ - w̄)`.
    Hole(C64),
    /// Principal log made continuous along the contour.
    Unwrapped,
}

fn contour_cauchy(curve: &BoundaryEllipse, z: C64, w: C64, branch: LogBranch, opts: &QuadOptions) -> Result<C64> {
    let n0 = 64usize;
    let size = |level: usize| (n0 as f64 * 1.5_f64.powi(level as i32)).ceil() as usize;
    let wbar = w.conj();
    quad::refine(
        opts,
        0,
        size,
        |level| {
            let (thetas, h) = quad::periodic_trapezoid(size(level));
            let mut acc = C64::zero();
            let mut mag = 0.0;
            let mut prev_arg: Option<f64> = None;
            let mut turns = 0.0;
            for &th in &thetas {
                let (zeta, dz) = curve.point(th);
                let log = match branch {
                    LogBranch::Anchor(c) => (1.0 - (zeta - c).conj() / (wbar - c.conj())).ln(),
                    LogBranch::Hole(c) => {
                        (1.0 - (wbar - c.conj()) / (zeta - c).conj()).ln() + (zeta - c).norm_sqr().ln()
                    }
                    LogBranch::Unwrapped => {
                        let d = zeta.conj() - wbar;
                        let arg = d.arg();
                        if let Some(p) = prev_arg {
                            let jump = arg - p;
                            if jump > PI {
                                turns -= 2.0 * PI;
                            } else if jump < -PI {
                                turns += 2.0 * PI;
                            }
                        }
                        prev_arg = Some(arg);
                        C64::new(d.norm().ln(), arg + turns)
                    }
                };
                let term = log / (zeta - z) * dz;
                mag += term.norm();
                acc += term;
            }
            let scale = h / (2.0 * PI);
            (acc * scale / C64::i(), mag * scale)
        },
        // absolute floor: the integral can vanish exactly by symmetry
        |a, b| ((a.0 - b.0).norm(), b.1),
    )
    .map(|(value, _)| value)
}
