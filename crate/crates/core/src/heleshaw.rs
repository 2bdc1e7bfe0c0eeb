//! Hele-Shaw moment dynamics: squeezing and injection laws, exterior harmonic
//! moments, confocal ellipses and their mother body on the focal segment.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::shapes::{mass, Shape};

type C64 = Complex<f64>;

/// `a_{j0}(t) = a_{j0}(0) e^{-t}`; negative `t` runs the flow backwards.
pub fn squeeze(col: &[C64], t: f64) -> Vec<C64> {
    let f = (-t).exp();
    col.iter().map(|c| c * f).collect()
}

/// `a_00 += dt`, higher harmonic moments fixed.
pub fn inject(col: &[C64], dt: f64) -> Result<Vec<C64>> {
    let Some(first) = col.first() else {
        return Err(Error::InsufficientColumn { needed: 1, got: 0 });
    };
    let a00 = first.re + dt;
    if !(a00 > 0.0) {
        return Err(Error::Precondition(format!("suction empties the cell (a_00 = {a00})")));
    }
    let mut out = col.to_vec();
    out[0] = C64::from(a00);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    Squeeze,
    Inject,
}

/// First columns `a_{·0}(t)` along a flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub columns: Vec<Vec<C64>>,
}

impl MomentTrajectory {
    pub fn evolve(col: &[C64], law: Law, times: &[f64]) -> Result<Self> {
        let columns = times
            .iter()
            .map(|&t| match law {
                Law::Squeeze => Ok(squeeze(col, t)),
                Law::Inject => inject(col, t),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: times.to_vec(),
            columns,
        })
    }

    /// `t,j,re,im` lines with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,j,re,im\n");
        for (t, col) in self.times.iter().zip(&self.columns) {
            for (j, c) in col.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{j},{},{}",
                    crate::io::fmt_f64(*t),
                    crate::io::fmt_f64(c.re),
                    crate::io::fmt_f64(c.im)
                );
            }
        }
        out
    }
}

/// Exterior harmonic moments `t_k = (1/2πik) ∮ z^{-k} z̄ dz` and `t_0 = a_00`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorMoments {
    pub t0: f64,
    /// `t[k - 1] = t_k`.
    pub t: Vec<C64>,
}

impl ExteriorMoments {
    pub fn get(&self, k: usize) -> C64 {
        if k == 0 {
            C64::from(self.t0)
        } else {
            self.t[k - 1]
        }
    }
}

pub fn exterior_moments(s: &Shape, kmax: usize) -> Result<ExteriorMoments> {
    exterior_moments_with(s, kmax, &QuadOptions::default())
}

pub fn exterior_moments_with(s: &Shape, kmax: usize, opts: &QuadOptions) -> Result<ExteriorMoments> {
    let parts = s
        .boundary()
        .ok_or_else(|| Error::InvalidArgument("exterior moments need a shape with a parametrized boundary".into()))?;
    if !s.inside(C64::zero()) {
        return Err(Error::Precondition("origin must lie inside the shape".into()));
    }
    for b in &parts {
        let rot = C64::from_polar(1.0, -b.phi);
        let w = rot * (-b.center);
        let rho = (w.re / b.p).powi(2) + (w.im / b.q).powi(2);
        if (rho - 1.0).abs() < 1e-12 {
            return Err(Error::Precondition("origin lies on the boundary".into()));
        }
    }
    let rule = |level: usize| {
        let n = 64 << level;
        let (nodes, h) = quad::periodic_trapezoid(n);
        let mut vals = vec![C64::zero(); kmax];
        let mut abs = vec![0.0; kmax];
        for b in &parts {
            for &th in &nodes {
                let (z, dz) = b.point(th);
                let base = z.conj() * dz * h;
                let inv = z.inv();
                let mut p = C64::from(1.0);
                for k in 1..=kmax {
                    p *= inv;
                    let term = p * base;
                    vals[k - 1] += term;
                    abs[k - 1] += term.norm();
                }
            }
        }
        for k in 1..=kmax {
            let f = C64::new(0.0, 2.0 * PI * k as f64).inv();
            vals[k - 1] *= f;
            abs[k - 1] *= f.norm();
        }
        (vals, abs)
    };
    let (t, _) = quad::refine(opts, 0, |level| (64usize << level) * parts.len(), rule, |a, b| {
        let diff = a.0.iter().zip(&b.0).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        let scale = b.1.iter().copied().fold(0.0, f64::max);
        (diff, scale)
    })?;
    Ok(ExteriorMoments {
        t0: mass(s) / PI,
        t,
    })
}

/// Ellipse with foci `±c` and semi-axes `c cosh s`, `c sinh s`.
pub fn confocal_ellipse(c: f64, s: f64) -> Result<Shape> {
    if !(c > 0.0 && s > 0.0) {
        return Err(Error::InvalidArgument(format!("need c > 0 and s > 0, got c = {c}, s = {s}")));
    }
    Ok(Shape::ellipse(c * s.cosh(), c * s.sinh()))
}

/// Density `(2 mass / π c²) √(c² - x²)` on `[-c, c]`, total mass `mass`.
pub fn mother_body(c: f64, mass: f64, x: f64) -> Result<f64> {
    if x.abs() > c {
        return Err(Error::InvalidArgument(format!("x = {x} is outside the focal segment [-{c}, {c}]")));
    }
    Ok(2.0 * mass / (PI * c * c) * (c * c - x * x).sqrt())
}

/// `∫ x^j ρ(x) dx` for `j < n`: `mass · Cat_{j/2} (c/2)^j` for even `j`, zero for odd.
pub fn mother_body_moments(c: f64, mass: f64, n: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n);
    let mut cat = 1.0;
    for j in 0..n {
        if j % 2 == 1 {
            out.push(C64::zero());
            continue;
        }
        let k = j / 2;
        if k > 0 {
            cat *= 2.0 * (2 * k - 1) as f64 / (k + 1) as f64;
        }
        out.push(C64::from(mass * cat * (0.5 * c).powi(j as i32)));
    }
    out
}

/// Distance from `z` to the segment `[a, b]`.
pub fn distance_to_segment(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    if d.norm_sqr() == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a) * d.conj()).re / d.norm_sqr();
    (z - (a + d * t.clamp(0.0, 1.0))).norm()
}

/// `max` distance of the zeros to the focal segment `[-c, c]`; zero for no zeros.
pub fn zero_attraction(zeros: &[C64], c: f64) -> f64 {
    zero_attraction_to(zeros, C64::from(-c), C64::from(c))
}

/// [`zero_attraction`] for a segment in general position.
pub fn zero_attraction_to(zeros: &[C64], a: C64, b: C64) -> f64 {
    zeros.iter().map(|&z| distance_to_segment(z, a, b)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::moments;

    #[test]
    fn squeeze_scales() {
        let col = vec![C64::from(1.0), C64::zero(), C64::new(0.3, 0.1)];
        assert_eq!(squeeze(&col, 0.0), col);
        let half = squeeze(&col, 2f64.ln());
        assert!((half[0] - 0.5).norm() < 1e-15 && (half[2] - C64::new(0.15, 0.05)).norm() < 1e-15);
        assert!(squeeze(&col, -1.0)[0].re > 2.7);
    }

    #[test]
    fn inject_moves_mass_only() {
        let col = moments(&Shape::disk(1.0), 4).unwrap().first_column();
        assert_eq!(inject(&col, 0.0).unwrap(), col);
        let grown = inject(&col, 0.44).unwrap();
        let bigger = moments(&Shape::disk(1.2), 4).unwrap().first_column();
        for (x, y) in grown.iter().zip(&bigger) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!(matches!(inject(&col, -1.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn circle_has_no_exterior_moments() {
        let e = exterior_moments(&Shape::disk(1.3), 6).unwrap();
        assert!(e.t.iter().all(|t| t.norm() < 1e-12));
        assert!((e.t0 - 1.69).abs() < 1e-12);
    }

    #[test]
    fn ellipse_exterior_moments() {
        let (p, q) = (1.5, 0.5);
        let e = exterior_moments(&Shape::ellipse(p, q), 5).unwrap();
        for k in [1, 3, 4, 5] {
            assert!(e.get(k).norm() < 1e-10, "t_{k} = {}", e.get(k));
        }
        assert!((e.get(2).re - (p - q) / (2.0 * (p + q))).abs() < 1e-10);
        let scaled = exterior_moments(&Shape::ellipse(2.0 * p, 2.0 * q), 5).unwrap();
        assert!((scaled.get(2) - e.get(2)).norm() < 1e-10);
        assert!((scaled.get(1) - e.get(1)).norm() < 1e-10);
    }

    #[test]
    fn exterior_moments_preconditions() {
        assert!(exterior_moments(&Shape::disk(1.0).translated(C64::from(3.0)), 3).is_err());
        assert!(exterior_moments(&Shape::weighted(Shape::disk(1.0), 0.5), 3).is_err());
    }

    #[test]
    fn confocal_family() {
        let c = 1.0;
        for s in [0.3, 0.8, 1.4] {
            let Shape::Ellipse { p, q, .. } = confocal_ellipse(c, s).unwrap() else { unreachable!() };
            assert!((p * p - q * q - c * c).abs() < 1e-12);
        }
        assert!(confocal_ellipse(0.0, 1.0).is_err());
    }

    #[test]
    fn mother_body_matches_ellipse() {
        let c = 1.3;
        let shape = confocal_ellipse(c, 0.7).unwrap();
        let a = moments(&shape, 5).unwrap().first_column();
        let mb = mother_body_moments(c, a[0].re, 5);
        for j in 0..5 {
            assert!((a[j] - mb[j]).norm() < 1e-10, "j = {j}");
        }
        assert_eq!(mother_body(c, 1.0, c).unwrap(), 0.0);
        assert!(mother_body(c, 1.0, 1.5 * c).is_err());
        // ∫ρ by Gauss–Legendre after x = c sin φ
        let (x, w) = quad::gauss_legendre(40);
        let total: f64 = x
            .iter()
            .zip(&w)
            .map(|(s, w)| {
                let phi = 0.5 * PI * s;
                w * 0.5 * PI * mother_body(c, 2.0, c * phi.sin()).unwrap() * c * phi.cos()
            })
            .sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn attraction_metric() {
        assert_eq!(zero_attraction(&[C64::from(0.5), C64::from(-1.0)], 1.0), 0.0);
        assert!((zero_attraction(&[C64::new(2.0, 0.0)], 1.0) - 1.0).abs() < 1e-15);
        assert!((zero_attraction(&[C64::new(0.0, 3.0)], 1.0) - 3.0).abs() < 1e-15);
        assert_eq!(zero_attraction(&[], 1.0), 0.0);
    }

    #[test]
    fn trajectory_csv() {
        let col = vec![C64::from(1.0), C64::new(0.0, 0.5)];
        let tr = MomentTrajectory::evolve(&col, Law::Squeeze, &[0.0, 1.0]).unwrap();
        let csv = tr.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("t,j,re,im\n0.0000000000000000e0,0,1.0000000000000000e0,0.0000000000000000e0"));
        assert!(MomentTrajectory::evolve(&col, Law::Inject, &[0.0, -2.0]).is_err());
    }
}
