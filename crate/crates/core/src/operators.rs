//! Finite sections of banded operator models with rank-one self-commutator
//! `[T*, T] = ξ ⊗ ξ`, used as exact oracles for `b`-matrices.
//!
//! A banded operator moves the support of a vector by at most its largest
//! offset per application, so Krylov vectors `T*^k ξ` are computed exactly as
//! long as the section is large enough.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exptransform::ExpMoments;
use crate::shapes::hermitize_from_lower;

type C64 = Complex<f64>;

/// `M×M` banded matrix. The diagonal with offset `o` holds `T[i][i+o]`, stored
/// at index `min(i, i+o)`; negative offsets lie below the main diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    size: usize,
    diagonals: BTreeMap<i64, Vec<C64>>,
    xi_index: usize,
    xi_norm_sq: f64,
}

impl BandedOperator {
    pub fn new(size: usize, diagonals: BTreeMap<i64, Vec<C64>>, xi_index: usize, xi_norm_sq: f64) -> Result<Self> {
        if xi_index >= size {
            return Err(Error::OutOfRange {
                index: xi_index,
                limit: size,
            });
        }
        if !(xi_norm_sq > 0.0) {
            return Err(Error::InvalidArgument(format!("‖ξ‖² must be positive, got {xi_norm_sq}")));
        }
        for (&o, v) in &diagonals {
            let want = size.saturating_sub(o.unsigned_abs() as usize);
            if v.len() != want {
                return Err(Error::DimensionMismatch(format!(
                    "diagonal {o} has {} entries, expected {want}",
                    v.len()
                )));
            }
        }
        Ok(Self {
            size,
            diagonals,
            xi_index,
            xi_norm_sq,
        })
    }

    /// Constant-diagonal section of size `size`.
    pub fn toeplitz(size: usize, coeffs: &[(i64, C64)], xi_index: usize, xi_norm_sq: f64) -> Result<Self> {
        let diagonals = coeffs
            .iter()
            .map(|&(o, c)| (o, vec![c; size.saturating_sub(o.unsigned_abs() as usize)]))
            .collect();
        Self::new(size, diagonals, xi_index, xi_norm_sq)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn xi_index(&self) -> usize {
        self.xi_index
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi_norm_sq.sqrt()
    }

    pub fn xi_norm_sq(&self) -> f64 {
        self.xi_norm_sq
    }

    pub fn diagonals(&self) -> &BTreeMap<i64, Vec<C64>> {
        &self.diagonals
    }

    pub fn max_offset(&self) -> usize {
        self.diagonals.keys().map(|o| o.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// `T[i][j]`.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        let o = j as i64 - i as i64;
        self.diagonals
            .get(&o)
            .and_then(|v| v.get(i.min(j)))
            .copied()
            .unwrap_or_else(C64::zero)
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::zero(); self.size];
        for (&o, v) in &self.diagonals {
            for (idx, &c) in v.iter().enumerate() {
                let (i, j) = if o >= 0 { (idx, idx + o as usize) } else { (idx + o.unsigned_abs() as usize, idx) };
                y[i] += c * x[j];
            }
        }
        y
    }

    pub fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::zero(); self.size];
        for (&o, v) in &self.diagonals {
            for (idx, &c) in v.iter().enumerate() {
                let (i, j) = if o >= 0 { (idx, idx + o as usize) } else { (idx + o.unsigned_abs() as usize, idx) };
                y[j] += c.conj() * x[i];
            }
        }
        y
    }

    /// Column `k` of `T` as sparse `(row, value)` pairs.
    fn column(&self, k: usize) -> Vec<(usize, C64)> {
        self.diagonals
            .keys()
            .filter_map(|&o| {
                let i = k as i64 - o;
                (0..self.size as i64).contains(&i).then(|| (i as usize, self.entry(i as usize, k)))
            })
            .collect()
    }

    /// Column `k` of `T*`.
    fn adjoint_column(&self, k: usize) -> Vec<(usize, C64)> {
        self.diagonals
            .keys()
            .filter_map(|&o| {
                let i = k as i64 + o;
                (0..self.size as i64).contains(&i).then(|| (i as usize, self.entry(k, i as usize).conj()))
            })
            .collect()
    }

    /// Symbol `Σ_o c_o e^{-i o θ}` of a constant-diagonal operator, read off
    /// the first entry of each diagonal.
    pub fn symbol(&self, theta: f64) -> C64 {
        self.diagonals
            .iter()
            .filter_map(|(&o, v)| v.first().map(|c| c * C64::from_polar(1.0, -(o as f64) * theta)))
            .sum()
    }

    /// Dense copy, for small sections.
    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.size, self.size, |i, j| self.entry(i, j))
    }
}

/// `T = uS + S*` on a section of size `m`; `[T*, T] = (|u|² - 1) e₀ ⊗ e₀`.
pub fn toeplitz_ellipse(u: C64, m: usize) -> Result<BandedOperator> {
    if u.norm() <= 1.0 {
        return Err(Error::InvalidArgument(format!("|u| must exceed 1, got {}", u.norm())));
    }
    if m < 4 {
        return Err(Error::InvalidArgument(format!("section size must be at least 4, got {m}")));
    }
    BandedOperator::toeplitz(m, &[(-1, u), (1, C64::from(1.0))], 0, u.norm_sqr() - 1.0)
}

/// `V = αS^{d+1} + βS*^d` with `|α| = |β|`; `[V*, V] = |α|² e_d ⊗ e_d`.
pub fn toeplitz_power(alpha: C64, beta: C64, d: usize, m: usize) -> Result<BandedOperator> {
    if d < 1 {
        return Err(Error::InvalidArgument("power d must be at least 1".into()));
    }
    if alpha.norm() == 0.0 || (alpha.norm() - beta.norm()).abs() > 1e-12 * alpha.norm() {
        return Err(Error::InvalidArgument(format!(
            "need |alpha| = |beta| > 0, got {} and {}",
            alpha.norm(),
            beta.norm()
        )));
    }
    if m < 4 * (d + 1) {
        return Err(Error::InvalidArgument(format!("section size must be at least {}, got {m}", 4 * (d + 1))));
    }
    BandedOperator::toeplitz(m, &[(-(d as i64 + 1), alpha), (d as i64, beta)], d, alpha.norm_sqr())
}

/// `S² + S*` with `ξ = e₁`.
pub fn trifoil(m: usize) -> Result<BandedOperator> {
    toeplitz_power(C64::from(1.0), C64::from(1.0), 1, m)
}

/// Radius `2|cos(3θ/2)|` of the symbol curve `e^{2iθ} + e^{-iθ}` of `S² + S*`
/// at curve parameter `θ`.
pub fn trifoil_curve(theta: f64) -> f64 {
    2.0 * (1.5 * theta).cos().abs()
}

/// Squares `A_n = a_n²`, `B_n = b_n²` of the two-diagonal construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionState {
    // a[i] = A_{i+1}
    a: Vec<f64>,
    // b[i] = B_i
    b: Vec<f64>,
    c: f64,
}

impl RecursionState {
    /// `A_n`, `n ≥ 1`.
    #[allow(non_snake_case)]
    pub fn A(&self, n: usize) -> f64 {
        self.a[n - 1]
    }

    /// `B_n`, `n ≥ 0`.
    #[allow(non_snake_case)]
    pub fn B(&self, n: usize) -> f64 {
        self.b[n]
    }

    pub fn len_a(&self) -> usize {
        self.a.len()
    }

    pub fn len_b(&self) -> usize {
        self.b.len()
    }

    /// Telescoping constant `C = (A_3 + A_1)/(1 + 1/A_2)`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sup_a(&self) -> f64 {
        self.a.iter().copied().fold(0.0, f64::max)
    }

    /// `max_n |B_n + B_{n-1} - A_{n+1} - 1|`, `n ≥ 1`.
    pub fn sum_b_residual(&self) -> f64 {
        (1..self.b.len())
            .filter(|&n| n + 1 <= self.a.len())
            .map(|n| (self.B(n) + self.B(n - 1) - self.A(n + 1) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_n |A_{n+3} + A_{n+1} - C(1 + 1/A_{n+2})|`, `n ≥ 0`.
    pub fn telescope_residual(&self) -> f64 {
        (0..self.a.len().saturating_sub(2))
            .map(|n| (self.A(n + 3) + self.A(n + 1) - self.c * (1.0 + 1.0 / self.A(n + 2))).abs())
            .fold(0.0, f64::max)
    }
}

/// Generates `A_n`, `B_n` from `A_1`, `B_1`:
/// `B_0 = A_1 + 1`, `A_2 = A_1 + B_1`, `A_3 = A_1 B_1 / B_0`, then for `n ≥ 2`
/// `B_n = A_{n+1} + 1 - B_{n-1}` and `A_{n+2} = A_n B_n / B_{n-1}`.
pub fn two_diagonal_recursion(a1: f64, b1: f64, terms: usize) -> Result<RecursionState> {
    if !(a1 > 0.0 && b1 > 0.0) {
        return Err(Error::InvalidArgument(format!("A1 and B1 must be positive, got {a1}, {b1}")));
    }
    let terms = terms.max(3);
    let b0 = a1 + 1.0;
    let a2 = a1 + b1;
    let a3 = a1 * b1 / b0;
    let mut a = vec![a1, a2, a3];
    let mut b = vec![b0, b1];
    let mut n = 2;
    while a.len() < terms {
        let bn = a[n] + 1.0 - b[n - 1];
        let an2 = a[n - 1] * bn / b[n - 1];
        if !(bn > 0.0 && an2 > 0.0) || !an2.is_finite() {
            return Err(Error::NumericalFault(format!(
                "two-diagonal recursion produced a non-positive term at n = {n}"
            )));
        }
        b.push(bn);
        a.push(an2);
        n += 1;
    }
    let c = (a3 + a1) / (1.0 + 1.0 / a2);
    Ok(RecursionState { a, b, c })
}

/// Two-diagonal operator with `a_n = √A_n` on offset `+1` and `b_n = √B_n`
/// on offset `-2`, so that `T* e_n = a_{n+1} e_{n+1} + b_{n-2} e_{n-2}` and
/// `[T*, T] = e₀ ⊗ e₀`.
pub fn two_diagonal(a1: f64, b1: f64, m: usize) -> Result<(BandedOperator, RecursionState)> {
    if m < 4 {
        return Err(Error::InvalidArgument(format!("section size must be at least 4, got {m}")));
    }
    let state = two_diagonal_recursion(a1, b1, m)?;
    let upper: Vec<C64> = (0..m - 1).map(|i| C64::from(state.A(i + 1).sqrt())).collect();
    let lower: Vec<C64> = (0..m - 2).map(|i| C64::from(state.B(i).sqrt())).collect();
    let mut diagonals = BTreeMap::new();
    diagonals.insert(1, upper);
    diagonals.insert(-2, lower);
    Ok((BandedOperator::new(m, diagonals, 0, 1.0)?, state))
}

/// `max |[T*, T] - ‖ξ‖² e_ξ ⊗ e_ξ|` over the interior block `[0, M - 2·maxoff)`.
pub fn commutator_defect(op: &BandedOperator) -> f64 {
    let interior = op.size.saturating_sub(2 * op.max_offset());
    let mut worst = 0.0_f64;
    let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
    for k in 0..interior {
        acc.clear();
        // T*T e_k - T T* e_k
        for (j, t) in op.column(k) {
            for (i, s) in op.adjoint_column(j) {
                *acc.entry(i).or_insert_with(C64::zero) += s * t;
            }
        }
        for (j, t) in op.adjoint_column(k) {
            for (i, s) in op.column(j) {
                *acc.entry(i).or_insert_with(C64::zero) -= s * t;
            }
        }
        if k == op.xi_index {
            *acc.entry(k).or_insert_with(C64::zero) -= op.xi_norm_sq;
        }
        for (&i, v) in &acc {
            if i < interior {
                worst = worst.max(v.norm());
            }
        }
    }
    worst
}

/// Section size needed for exact Krylov Gram entries up to order `n`.
pub fn required_size(op: &BandedOperator, n: usize) -> usize {
    op.xi_index + n * op.max_offset() + 2
}

/// Gram matrix `b[j][k] = ⟨T*^k ξ, T*^j ξ⟩`.
pub fn b_from_operator(op: &BandedOperator, n: usize) -> Result<ExpMoments> {
    let needed = required_size(op, n);
    if op.size < needed {
        return Err(Error::TruncationTooSmall { size: op.size, needed });
    }
    let mut v = vec![C64::zero(); op.size];
    v[op.xi_index] = C64::from(1.0);
    let scale = op.xi_norm_sq;
    let mut krylov = Vec::with_capacity(n);
    for _ in 0..n {
        let next = op.apply_adjoint(&v);
        krylov.push(v);
        v = next;
    }
    let mut b = DMatrix::from_fn(n, n, |j, k| {
        if j < k {
            return C64::zero();
        }
        krylov[k].iter().zip(&krylov[j]).map(|(x, y)| x * y.conj()).sum::<C64>() * scale
    });
    hermitize_from_lower(&mut b);
    ExpMoments::new(b)
}

/// Foci `±c` (rotated) of the ellipse traced by `u e^{iθ} + e^{-iθ}`.
pub fn ellipse_symbol_foci(u: C64) -> (C64, f64, f64) {
    // semi-axes |u| + 1 and |u| - 1 along arg(u)/2
    let major = u.norm() + 1.0;
    let minor = u.norm() - 1.0;
    let c = (major * major - minor * minor).sqrt();
    (C64::from_polar(c, 0.5 * u.arg()), major, minor)
}

/// Area enclosed by a closed curve sampled at `n` equispaced parameters.
pub fn curve_area(curve: impl Fn(f64) -> C64, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    let pts: Vec<C64> = (0..n).map(|i| curve(i as f64 * h)).collect();
    let mut acc = 0.0;
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        acc += p.re * q.im - q.re * p.im;
    }
    0.5 * acc.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_operator_commutator_and_b00() {
        let op = toeplitz_ellipse(C64::from(2.0), 50).unwrap();
        assert!(commutator_defect(&op) < 1e-14);
        let b = b_from_operator(&op, 4).unwrap();
        assert!((b.b00() - 3.0).abs() < 1e-15);
        assert!(toeplitz_ellipse(C64::from(1.0), 50).is_err());
        let area = curve_area(|t| op.symbol(t), 4096);
        assert!((area - PI * 3.0).abs() < 1e-4);
    }

    #[test]
    fn trifoil_relations() {
        let op = trifoil(40).unwrap();
        assert_eq!(op.xi_index(), 1);
        let mut xi = vec![C64::zero(); 40];
        xi[1] = C64::from(1.0);
        let t_xi = op.apply(&xi);
        let ts2_xi = op.apply_adjoint(&op.apply_adjoint(&xi));
        assert_eq!(t_xi, ts2_xi);
        assert_eq!(t_xi[0], C64::from(1.0));
        assert_eq!(t_xi[3], C64::from(1.0));
        let b = b_from_operator(&op, 4).unwrap();
        assert_eq!(*b.get(1, 0), C64::zero());
        assert!(commutator_defect(&toeplitz_power(C64::from(1.0), C64::from(1.0), 2, 60).unwrap()) < 1e-14);
    }

    #[test]
    fn trifoil_curve_values() {
        assert!((trifoil_curve(0.0) - 2.0).abs() < 1e-15);
        assert!(trifoil_curve(PI / 3.0) < 1e-15);
        assert!((trifoil_curve(2.0 * PI / 3.0) - 2.0).abs() < 1e-14);
        let op = trifoil(10).unwrap();
        for th in [0.3, 1.1, 2.5] {
            assert!((op.symbol(th).norm() - trifoil_curve(th)).abs() < 1e-14);
        }
    }

    #[test]
    fn two_diagonal_start() {
        let s = two_diagonal_recursion(1.0, 1.0, 10).unwrap();
        assert_eq!(s.B(0), 2.0);
        assert_eq!(s.A(2), 2.0);
        assert_eq!(s.A(3), 0.5);
        assert_eq!(s.c(), 1.0);
        assert!(s.sum_b_residual() < 1e-14);
        assert!(s.telescope_residual() < 1e-14);
        let (op, _) = two_diagonal(1.0, 1.0, 200).unwrap();
        assert!(commutator_defect(&op) < 1e-12);
        assert!(two_diagonal_recursion(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn truncation_guard() {
        let op = toeplitz_ellipse(C64::from(2.0), 10).unwrap();
        assert!(matches!(b_from_operator(&op, 12), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn bad_power_operator() {
        assert!(toeplitz_power(C64::from(1.0), C64::from(2.0), 1, 40).is_err());
        assert!(toeplitz_power(C64::from(1.0), C64::from(1.0), 3, 8).is_err());
    }
}
