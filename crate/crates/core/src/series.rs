//! Truncated bivariate series in `u = 1/z`, `v = 1/w̄`.
//!
//! Every series handled here has the shape
//!
//! ```text
//! c + Σ_{0 ≤ j,k < N} t[j][k] · u^{j+1} v^{k+1}
//! ```
//!
//! i.e. no pure powers `u^{j+1}` or `v^{k+1}`. Products, exponentials and
//! logarithms of such series keep that shape, and every coefficient with both
//! exponents `≤ N` is exact (up to the arithmetic of the scalar type).
//!
//! Exponential and logarithm are computed by the formal derivative in `u`:
//! writing `F = Σ_i F_i(v) u^i`, the identity `u ∂_u E = -(u ∂_u A) E` gives a
//! triangular recursion over the `u`-degree.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct BiSeries<T: Scalar> {
    order: usize,
    constant: Complex<T>,
    // row-major, tail[j * order + k] is the coefficient of u^{j+1} v^{k+1}
    tail: Vec<Complex<T>>,
}

impl<T: Scalar> BiSeries<T> {
    pub fn zero(order: usize) -> Self {
        Self {
            order,
            constant: Complex::zero(),
            tail: vec![Complex::zero(); order * order],
        }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(order, Complex::one())
    }

    pub fn constant(order: usize, c: Complex<T>) -> Self {
        Self {
            constant: c,
            ..Self::zero(order)
        }
    }

    /// Builds a series from its constant term and the `N×N` tail, row-major.
    pub fn from_parts(order: usize, constant: Complex<T>, tail: Vec<Complex<T>>) -> Result<Self> {
        if tail.len() != order * order {
            return Err(Error::DimensionMismatch(format!(
                "tail has {} entries, expected {}",
                tail.len(),
                order * order
            )));
        }
        Ok(Self {
            order,
            constant,
            tail,
        })
    }

    /// Builds a series from a coefficient function `f(j, k)` for `u^{j+1} v^{k+1}`.
    pub fn from_fn(order: usize, constant: Complex<T>, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut tail = Vec::with_capacity(order * order);
        for j in 0..order {
            for k in 0..order {
                tail.push(f(j, k));
            }
        }
        Self {
            order,
            constant,
            tail,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn constant_term(&self) -> &Complex<T> {
        &self.constant
    }

    /// Coefficient of `u^{j+1} v^{k+1}`.
    pub fn coeff(&self, j: usize, k: usize) -> &Complex<T> {
        &self.tail[j * self.order + k]
    }

    pub fn set_coeff(&mut self, j: usize, k: usize, value: Complex<T>) {
        let n = self.order;
        self.tail[j * n + k] = value;
    }

    pub fn tail(&self) -> &[Complex<T>] {
        &self.tail
    }

    fn row(&self, j: usize) -> &[Complex<T>] {
        &self.tail[j * self.order..(j + 1) * self.order]
    }

    /// Coefficients of `u^{m+1} v¹`, `m = 0..N`.
    pub fn v1_column(&self) -> Vec<Complex<T>> {
        (0..self.order).map(|m| self.coeff(m, 0).clone()).collect()
    }

    pub fn neg(&self) -> Self {
        Self {
            order: self.order,
            constant: -self.constant.clone(),
            tail: self.tail.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let n = self.order;
        let mut out = Self::constant(n, self.constant.clone() * other.constant.clone());
        for j in 0..n {
            for k in 0..n {
                let mut acc = self.constant.clone() * other.coeff(j, k).clone()
                    + other.constant.clone() * self.coeff(j, k).clone();
                // u^{a+1}v^{b+1} · u^{c+1}v^{d+1} lands on (a+c+1, b+d+1)
                for a in 0..j {
                    let c = j - 1 - a;
                    for b in 0..k {
                        let d = k - 1 - b;
                        acc = acc + self.coeff(a, b).clone() * other.coeff(c, d).clone();
                    }
                }
                out.set_coeff(j, k, acc);
            }
        }
        Ok(out)
    }

    /// `exp(-A)` for a series with zero constant term.
    pub fn exp_neg(&self) -> Result<Self> {
        if !self.constant.is_zero() {
            return Err(Error::NonZeroConstant);
        }
        let n = self.order;
        let mut e = Self::one(n);
        let mut tmp = vec![Complex::zero(); n];
        for i in 1..=n {
            // E_i = -A_i - (1/i) Σ_{l<i} l A_l E_{i-l}
            tmp.iter_mut().for_each(|c| *c = Complex::zero());
            for l in 1..i {
                let weight = T::from_index(l);
                shifted_mul_acc(self.row(l - 1), e.row(i - l - 1), weight, &mut tmp);
            }
            let fi = T::from_index(i);
            for k in 0..n {
                let v = -self.coeff(i - 1, k).clone() - tmp[k].clone() / fi.clone();
                e.set_coeff(i - 1, k, v);
            }
        }
        Ok(e)
    }

    /// `-log(E)` for a series with constant term one; inverse of [`BiSeries::exp_neg`].
    pub fn log_neg(&self) -> Result<Self> {
        if !self.constant.is_one() {
            return Err(Error::ConstantNotOne);
        }
        let n = self.order;
        let mut a = Self::zero(n);
        let mut tmp = vec![Complex::zero(); n];
        for i in 1..=n {
            // A_i = -E_i - (1/i) Σ_{l<i} l A_l E_{i-l}
            tmp.iter_mut().for_each(|c| *c = Complex::zero());
            for l in 1..i {
                let weight = T::from_index(l);
                shifted_mul_acc(a.row(l - 1), self.row(i - l - 1), weight, &mut tmp);
            }
            let fi = T::from_index(i);
            for k in 0..n {
                let v = -self.coeff(i - 1, k).clone() - tmp[k].clone() / fi.clone();
                a.set_coeff(i - 1, k, v);
            }
        }
        Ok(a)
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        Ok(())
    }
}

/// `out += w · (f ⋆ g)` for univariate rows `Σ f[a] v^{a+1}`, truncated to `out.len()`.
fn shifted_mul_acc<T: Scalar>(f: &[Complex<T>], g: &[Complex<T>], w: T, out: &mut [Complex<T>]) {
    let n = out.len();
    for (a, fa) in f.iter().enumerate() {
        if fa.is_zero() {
            continue;
        }
        let fw = fa.clone() * w.clone();
        for (b, gb) in g.iter().enumerate().take(n.saturating_sub(a + 1)) {
            let c = a + b + 1;
            out[c] = out[c].clone() + fw.clone() * gb.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    type C = Complex<f64>;
    type Q = BigRational;

    fn q(n: i64, d: i64) -> Complex<Q> {
        Complex::new(BigRational::new(BigInt::from(n), BigInt::from(d)), Q::zero())
    }

    #[test]
    fn one_is_identity() {
        let g = BiSeries::from_fn(4, C::new(2.0, 1.0), |j, k| C::new(j as f64, k as f64 + 0.5));
        let p = BiSeries::one(4).mul(&g).unwrap();
        assert_eq!(p, g);
    }

    #[test]
    fn monomial_square() {
        let mut f = BiSeries::<f64>::zero(3);
        f.set_coeff(0, 0, C::new(3.0, 0.0));
        let p = f.mul(&f).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let want = if (j, k) == (1, 1) { 9.0 } else { 0.0 };
                assert_eq!(p.coeff(j, k).re, want);
            }
        }
    }

    #[test]
    fn geometric_identity_is_exact_in_rationals() {
        let n = 3;
        let mut f = BiSeries::<Q>::one(n);
        f.set_coeff(0, 0, q(-1, 1));
        let g = BiSeries::<Q>::from_fn(n, q(1, 1), |j, k| if j == k { q(1, 1) } else { q(0, 1) });
        assert_eq!(f.mul(&g).unwrap(), BiSeries::one(n));
    }

    #[test]
    fn exp_of_disk_moments_is_one_minus_uv_exactly() {
        let n = 7;
        let a = BiSeries::<Q>::from_fn(n, q(0, 1), |j, k| if j == k { q(1, j as i64 + 1) } else { q(0, 1) });
        let e = a.exp_neg().unwrap();
        let mut want = BiSeries::<Q>::one(n);
        want.set_coeff(0, 0, q(-1, 1));
        assert_eq!(e, want);
        assert_eq!(e.log_neg().unwrap(), a);
    }

    #[test]
    fn exp_of_single_entry() {
        // exp(-a uv): coefficient of (uv)^{k+1} is (-a)^{k+1}/(k+1)!
        let a = 0.7;
        let mut s = BiSeries::<f64>::zero(6);
        s.set_coeff(0, 0, C::new(a, 0.0));
        let e = s.exp_neg().unwrap();
        let mut fact = 1.0;
        for k in 0..6 {
            fact *= (k + 1) as f64;
            let want = (-a).powi(k as i32 + 1) / fact;
            assert!((e.coeff(k, k).re - want).abs() < 1e-15);
            for l in 0..6 {
                if l != k {
                    assert_eq!(*e.coeff(k, l), C::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn zero_exp_and_one_log() {
        assert_eq!(BiSeries::<f64>::zero(5).exp_neg().unwrap(), BiSeries::one(5));
        assert_eq!(BiSeries::<f64>::one(5).log_neg().unwrap(), BiSeries::zero(5));
    }

    #[test]
    fn constant_term_errors() {
        assert!(matches!(BiSeries::<f64>::one(3).exp_neg(), Err(Error::NonZeroConstant)));
        assert!(matches!(BiSeries::<f64>::zero(3).log_neg(), Err(Error::ConstantNotOne)));
        assert!(matches!(
            BiSeries::<f64>::zero(3).mul(&BiSeries::zero(4)),
            Err(Error::OrderMismatch { .. })
        ));
    }

    #[test]
    fn annulus_log() {
        let (r, big_r) = (0.5_f64, 1.0_f64);
        let n = 8;
        let w = big_r * big_r - r * r;
        let e = BiSeries::<f64>::from_fn(n, C::new(1.0, 0.0), |j, k| {
            if j == k {
                C::new(-w * r.powi(2 * j as i32), 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        });
        let a = e.log_neg().unwrap();
        for j in 0..n {
            let want = (big_r.powi(2 * j as i32 + 2) - r.powi(2 * j as i32 + 2)) / (j as f64 + 1.0);
            assert!((a.coeff(j, j).re - want).abs() < 1e-14);
        }
        let col = e.v1_column();
        assert_eq!(col[0].re, -w);
        assert!(col[1..].iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn first_column_equality_is_exact() {
        let n = 9;
        let a = BiSeries::<f64>::from_fn(n, C::new(0.0, 0.0), |j, k| {
            C::new(1.0 / (1.0 + j as f64 + 2.0 * k as f64), 0.1 * (j as f64 - k as f64)) / 3.0
        });
        let e = a.exp_neg().unwrap();
        let col_a = a.v1_column();
        let col_e = e.v1_column();
        for m in 0..n {
            assert_eq!(-col_e[m], col_a[m]);
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let a = BiSeries::<f32>::from_fn(5, Complex::new(0.0, 0.0), |j, k| {
            Complex::new(0.1 / (1.0 + j as f32 + k as f32), 0.0)
        });
        let back = a.exp_neg().unwrap().log_neg().unwrap();
        for (x, y) in a.tail().iter().zip(back.tail()) {
            assert!((x - y).norm() < 1e-5);
        }
    }
}
