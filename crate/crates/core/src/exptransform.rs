//! Exponential transform: the `a ↔ b` conversion
//! `exp(-Σ a_jk u^{j+1}v^{k+1}) = 1 - Σ b_jk u^{j+1}v^{k+1}`, numeric
//! evaluation of `E(z, w)` off the support, and the boundary locus `E(z, z) = 0`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::quad::QuadOptions;
use crate::scalar::Scalar;
use crate::series::BiSeries;
use crate::shapes::{self, check_hermitian, hermitize_from_lower, MomentMatrix, Shape};

type C64 = Complex<f64>;

/// Smallest eigenvalue accepted for a Gram matrix, relative to its 2-norm.
pub const PSD_TOL: f64 = 1e-9;

/// Gram matrix `b[j][k] = ⟨T*^k ξ, T*^j ξ⟩` of the exponential transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMoments<T: Scalar = f64> {
    b: DMatrix<Complex<T>>,
}

impl<T: Scalar> ExpMoments<T> {
    /// Wraps a square matrix, checking Hermitian symmetry.
    pub fn new(b: DMatrix<Complex<T>>) -> Result<Self> {
        check_hermitian(&b)?;
        Ok(Self { b })
    }

    pub fn order(&self) -> usize {
        self.b.nrows()
    }

    pub fn get(&self, j: usize, k: usize) -> &Complex<T> {
        &self.b[(j, k)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.b
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.b
    }

    pub fn first_column(&self) -> Vec<Complex<T>> {
        (0..self.order()).map(|j| self.b[(j, 0)].clone()).collect()
    }

    /// Leading `n×n` block.
    pub fn truncate(&self, n: usize) -> Self {
        let n = n.min(self.order());
        Self {
            b: self.b.view((0, 0), (n, n)).into_owned(),
        }
    }
}

impl ExpMoments<f64> {
    pub fn b00(&self) -> f64 {
        if self.order() == 0 {
            0.0
        } else {
            self.b[(0, 0)].re
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.order() == 0 {
            return 0.0;
        }
        nalgebra::linalg::SymmetricEigen::new(self.b.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether the smallest eigenvalue is at least `-tol·‖b‖₂`.
    pub fn is_psd(&self, tol: f64) -> bool {
        let norm = self.b.norm().max(f64::MIN_POSITIVE);
        self.min_eigenvalue() >= -tol * norm
    }

    /// The truncated series `1 - Σ b_jk z^{-j-1} w̄^{-k-1}`.
    pub fn eval_series(&self, z: C64, w: C64) -> C64 {
        let u = 1.0 / z;
        let v = 1.0 / w.conj();
        let n = self.order();
        let mut acc = C64::zero();
        let mut up = u;
        for j in 0..n {
            let mut vp = v;
            for k in 0..n {
                acc += self.b[(j, k)] * up * vp;
                vp *= v;
            }
            up *= u;
        }
        C64::one() - acc
    }
}

fn series_from<T: Scalar>(m: &DMatrix<Complex<T>>, constant: Complex<T>, sign: bool) -> BiSeries<T> {
    BiSeries::from_fn(m.nrows(), constant, |j, k| {
        if sign {
            -m[(j, k)].clone()
        } else {
            m[(j, k)].clone()
        }
    })
}

fn tail_matrix<T: Scalar>(s: &BiSeries<T>, negate: bool) -> DMatrix<Complex<T>> {
    let n = s.order();
    let mut m = DMatrix::from_fn(n, n, |j, k| {
        let c = s.coeff(j, k).clone();
        if negate {
            -c
        } else {
            c
        }
    });
    hermitize_from_lower(&mut m);
    m
}

/// `b` from `a`: `1 - B = exp(-A)` on kept degrees.
pub fn a_to_b<T: Scalar>(a: &MomentMatrix<T>) -> Result<ExpMoments<T>> {
    check_hermitian(a.matrix())?;
    let e = series_from(a.matrix(), Complex::zero(), false).exp_neg()?;
    Ok(ExpMoments {
        b: tail_matrix(&e, true),
    })
}

/// `a` from `b`: `A = -log(1 - B)`.
pub fn b_to_a<T: Scalar>(b: &ExpMoments<T>) -> Result<MomentMatrix<T>> {
    check_hermitian(&b.b)?;
    let a = series_from(&b.b, Complex::one(), true).log_neg()?;
    MomentMatrix::new(tail_matrix(&a, false))
}

/// Relative distance to the support below which `eval_E` refuses a point.
pub const MIN_EXTERIOR_DISTANCE: f64 = 1e-3;

/// `E(z, w) = exp(-(1/π)∫ g / ((ζ - z)(ζ̄ - w̄)) dA)` for `z`, `w` off the support.
#[allow(non_snake_case)]
pub fn eval_E(s: &Shape, z: C64, w: C64) -> Result<C64> {
    eval_E_with(s, z, w, &QuadOptions::default())
}

#[allow(non_snake_case)]
pub fn eval_E_with(s: &Shape, z: C64, w: C64, opts: &QuadOptions) -> Result<C64> {
    s.validate()?;
    let (_, radius) = s.bounding_disk();
    let min_dist = MIN_EXTERIOR_DISTANCE * radius;
    for p in [z, w] {
        match s.exterior_distance(p) {
            Some(d) if d >= min_dist => {}
            _ => return Err(Error::InsideSupport(format!("{p}"))),
        }
    }
    Ok((-shapes::double_cauchy(s, z, w, opts)?).exp())
}

/// Radius `t*` where the outward continuation of `E(t·dir, t·dir)` vanishes.
///
/// `E` is evaluated only at points a safe distance outside the support; the
/// samples are graded toward the edge of the admissible part of the ray and
/// the root is taken from the interpolating polynomial continued inward.
pub fn boundary_root(s: &Shape, direction: C64, bracket: (f64, f64)) -> Result<f64> {
    let opts = QuadOptions {
        rel_tol: 1e-11,
        ..QuadOptions::from_env()?
    };
    boundary_root_with(s, direction, bracket, &opts)
}

pub fn boundary_root_with(s: &Shape, direction: C64, bracket: (f64, f64), opts: &QuadOptions) -> Result<f64> {
    s.validate()?;
    let (lo, hi) = bracket;
    if !(lo < hi) || direction.norm() == 0.0 {
        return Err(Error::InvalidArgument(format!("bad bracket [{lo}, {hi}] or direction")));
    }
    let dir = direction / direction.norm();
    let (_, radius) = s.bounding_disk();
    let min_dist = 2.0 * MIN_EXTERIOR_DISTANCE * radius;
    let admissible = |t: f64| s.exterior_distance(dir * t).is_some_and(|d| d >= min_dist);
    if !admissible(hi) {
        return Err(Error::InsideSupport(format!("{}", dir * hi)));
    }

    // walk inward to the first inadmissible point, then bisect the edge
    let step = (hi - lo) / 256.0;
    let mut outer = hi;
    let mut inner = None;
    while outer - step >= lo {
        if admissible(outer - step) {
            outer -= step;
        } else {
            inner = Some(outer - step);
            break;
        }
    }
    let Some(mut inner) = inner else {
        return Err(Error::NoSignChange { lo, hi });
    };
    for _ in 0..40 {
        let mid = 0.5 * (inner + outer);
        if admissible(mid) {
            outer = mid;
        } else {
            inner = mid;
        }
    }
    let edge = outer;

    let offsets = [0.0, 0.005, 0.015, 0.035, 0.075, 0.155, 0.315];
    let mut ts = Vec::new();
    let mut fs = Vec::new();
    for off in offsets {
        let t = edge + off * radius;
        if t > hi + 0.5 * radius {
            break;
        }
        let z = dir * t;
        let e = eval_E_with(s, z, z, opts)?;
        ts.push(t);
        fs.push(e.re);
    }
    if ts.len() < 3 {
        return Err(Error::InvalidArgument("bracket leaves too little room outside the support".into()));
    }
    let interp = |t: f64| neville(&ts, &fs, t);

    let (mut a, mut b) = (lo, edge);
    let (fa, fb) = (interp(a), interp(b));
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoSignChange { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if interp(mid).signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

fn neville(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            p[i] = ((x - xs[i + level]) * p[i] + (xs[i] - x) * p[i + 1]) / (xs[i] - xs[i + level]);
        }
    }
    p[0]
}

/// Rotationally invariant shapes with closed-form diagonal `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotProfile {
    /// `t·χ_D` on the unit disk.
    TDisk { t: f64 },
    Annulus { inner: f64, outer: f64 },
}

/// Closed-form `b_kk` for a rotational profile.
pub fn rot_diag_b(profile: RotProfile, k: usize) -> Result<f64> {
    match profile {
        RotProfile::TDisk { t } => {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidArgument(format!("t must lie in (0, 1], got {t}")));
            }
            // t(1-t)...(k-t)/(k+1)!
            let mut v = t;
            for i in 1..=k {
                v *= (i as f64 - t) / (i as f64 + 1.0);
            }
            Ok(v)
        }
        RotProfile::Annulus { inner, outer } => {
            if !(inner > 0.0 && inner < outer) {
                return Err(Error::InvalidArgument(format!("annulus needs 0 < r < R, got r={inner}, R={outer}")));
            }
            Ok((outer * outer - inner * inner) * inner.powi(2 * k as i32))
        }
    }
}

/// Density `(sin πt / π)(1/x - 1)^t` of the measure whose moments are the `t`-disk `b_kk`.
pub fn nevanlinna_density(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) || !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < t < 1 and 0 < x < 1, got t={t}, x={x}")));
    }
    Ok((PI * t).sin() / PI * (1.0 / x - 1.0).powf(t))
}

#[cfg(test)]
fn max_abs<T: Scalar>(m: &DMatrix<Complex<T>>) -> f64 {
    m.iter().map(crate::scalar::cabs).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::moments;
    use num_rational::BigRational;

    #[test]
    fn disk_b_is_single_entry() {
        let b = a_to_b(&moments(&Shape::disk(1.0), 6).unwrap()).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                let want = if j == 0 && k == 0 { 1.0 } else { 0.0 };
                assert!((b.get(j, k) - C64::from(want)).norm() < 1e-15);
            }
        }
        let a = b_to_a(&b).unwrap();
        for j in 0..6 {
            assert!((a.get(j, j).re - 1.0 / (j as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn tdisk_and_annulus_closed_forms() {
        let b = a_to_b(&moments(&Shape::weighted(Shape::disk(1.0), 0.5), 9).unwrap()).unwrap();
        for k in 0..9 {
            let want = rot_diag_b(RotProfile::TDisk { t: 0.5 }, k).unwrap();
            assert!((b.get(k, k).re - want).abs() < 1e-13, "k={k}");
        }
        assert!((b.get(2, 2).re - 1.0 / 16.0).abs() < 1e-15);
        let b = a_to_b(&moments(&Shape::annulus(0.5, 1.0), 8).unwrap()).unwrap();
        for k in 0..8 {
            let want = rot_diag_b(
                RotProfile::Annulus {
                    inner: 0.5,
                    outer: 1.0,
                },
                k,
            )
            .unwrap();
            assert!((b.get(k, k).re - want).abs() < 1e-14);
        }
        assert!((rot_diag_b(RotProfile::Annulus { inner: 0.5, outer: 1.0 }, 3).unwrap() - 3.0 / 256.0).abs() < 1e-16);
    }

    #[test]
    fn empty_b_gives_empty_a() {
        let b = ExpMoments::new(DMatrix::<C64>::zeros(4, 4)).unwrap();
        assert!(max_abs(b_to_a(&b).unwrap().matrix()) == 0.0);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::<C64>::zeros(3, 3);
        m[(1, 0)] = C64::new(1.0, 0.0);
        assert!(matches!(ExpMoments::new(m.clone()), Err(Error::NonHermitian { .. })));
        assert!(matches!(MomentMatrix::new(m), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn exact_rational_tdisk() {
        // t = 1/2 in exact arithmetic: a_jj = t/(j+1)
        let n = 5;
        let half = BigRational::new(1.into(), 2.into());
        let a = DMatrix::from_fn(n, n, |j, k| {
            if j == k {
                Complex::new(half.clone() / BigRational::from_integer((j as i64 + 1).into()), BigRational::zero())
            } else {
                Complex::zero()
            }
        });
        let b = a_to_b(&MomentMatrix::new(a).unwrap()).unwrap();
        assert_eq!(b.get(2, 2).re, BigRational::new(1.into(), 16.into()));
        assert_eq!(b.get(1, 1).re, BigRational::new(1.into(), 8.into()));
    }

    #[test]
    fn psd_and_series_far_field() {
        let s = Shape::ellipse(1.5, 0.5);
        let b = a_to_b(&moments(&s, 10).unwrap()).unwrap();
        assert!(b.is_psd(PSD_TOL));
        let z = C64::new(6.0, 2.0);
        let w = C64::new(-3.0, 5.5);
        let exact = eval_E(&s, z, w).unwrap();
        assert!((exact - b.eval_series(z, w)).norm() < 1e-9);
    }

    #[test]
    fn eval_e_closed_forms() {
        let z = C64::new(2.0, 0.0);
        assert!((eval_E(&Shape::disk(1.0), z, z).unwrap() - 0.75).norm() < 1e-12);
        assert!((eval_E(&Shape::annulus(0.5, 1.0), z, z).unwrap() - 0.8).norm() < 1e-12);
        let far = C64::new(1e6, 0.0);
        assert!((eval_E(&Shape::ellipse(1.5, 0.5), far, far).unwrap() - 1.0).norm() < 1e-11);
        assert!(matches!(eval_E(&Shape::disk(1.0), C64::new(0.5, 0.0), z), Err(Error::InsideSupport(_))));
    }

    #[test]
    fn boundary_roots() {
        let r = boundary_root(&Shape::disk(1.0), C64::from_polar(1.0, 0.4), (0.5, 2.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-4, "{r}");
        let r = boundary_root(&Shape::annulus(0.5, 1.0), C64::new(0.0, 1.0), (0.75, 2.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-4, "{r}");
        let e = Shape::ellipse(1.5, 0.5);
        let r = boundary_root(&e, C64::new(1.0, 0.0), (1.2, 2.5)).unwrap();
        assert!((r - 1.5).abs() < 5e-3, "{r}");
        let r = boundary_root(&e, C64::new(0.0, 1.0), (0.3, 1.5)).unwrap();
        assert!((r - 0.5).abs() < 5e-3, "{r}");
    }

    #[test]
    fn nevanlinna() {
        assert!((nevanlinna_density(0.5, 0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!(nevanlinna_density(1.0, 0.5).is_err());
        assert!(nevanlinna_density(0.5, 1.0).is_err());
    }
}
