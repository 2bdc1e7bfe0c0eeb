//! Exponential orthogonal polynomials, their Hessenberg matrix and the
//! completeness test `Σ_{k≥1} |h_0k|² - |h_10|² = b_00`.
//!
//! The inner product on polynomials is `⟨z^m, z^n⟩_b = b[n][m]`, so the Gram
//! matrix of the monomials is `bᵀ`.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::exptransform::ExpMoments;

type C64 = Complex<f64>;

/// Default relative pivot threshold for stopping the Gram–Schmidt chain.
pub const PIVOT_TOL: f64 = 1e-10;

/// Pivots below `-INDEFINITE_TOL·‖b‖` are reported as an indefinite Gram matrix.
pub const INDEFINITE_TOL: f64 = 1e-9;

/// Orthonormal polynomials `P_k(z) = Σ_{j≤k} L[k][j] z^j`, `k < D`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyBasis {
    l: DMatrix<C64>,
    // Cholesky factor of the Gram matrix, one row past `D` when available
    chol: DMatrix<Cdd>,
    gamma: Vec<f64>,
    /// Whether the chain stopped on a small pivot before exhausting `b`.
    stopped: bool,
    order: usize,
}

impl PolyBasis {
    /// Number of polynomials `D`.
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// Truncation order `N` of the Gram matrix the basis came from.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &DMatrix<C64> {
        &self.l
    }

    /// Leading coefficients `γ_k > 0`.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `true` when a vanishing pivot ended the chain at degree `D < N`, the
    /// finite-dimensional signature of a quadrature domain.
    pub fn stopped(&self) -> bool {
        self.stopped
    }

    pub fn eval(&self, k: usize, z: C64) -> C64 {
        let mut acc = C64::zero();
        for j in (0..=k).rev() {
            acc = acc * z + self.l[(k, j)];
        }
        acc
    }

    /// `max |⟨P_j, P_k⟩_b - δ_jk|`.
    pub fn orthonormality_residual(&self, b: &ExpMoments) -> f64 {
        let d = self.dim();
        let g = gram(b, d);
        let m = &self.l * g * self.l.adjoint();
        let mut worst = 0.0_f64;
        for j in 0..d {
            for k in 0..d {
                let want = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((m[(j, k)] - want).norm());
            }
        }
        worst
    }
}

/// Monomial Gram matrix `G[m][n] = ⟨z^m, z^n⟩_b = b[n][m]`, leading `d×d` block.
fn gram(b: &ExpMoments, d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |m, n| *b.get(n, m))
}

/// Cholesky-based Gram–Schmidt on the monomials.
///
/// Stops at the first pivot below `pivot_tol·b_00`; the returned basis then
/// has `D` equal to that degree. The factorization runs in double-double
/// arithmetic since the monomial Gram matrix is badly conditioned.
pub fn orthonormalize(b: &ExpMoments, pivot_tol: f64) -> Result<PolyBasis> {
    let n = b.order();
    let b00 = b.b00();
    let norm = b.matrix().norm();
    let empty = |stopped| PolyBasis {
        l: DMatrix::zeros(0, 0),
        chol: DMatrix::from_element(0, 0, Cdd::ZERO),
        gamma: Vec::new(),
        stopped,
        order: n,
    };
    if n == 0 {
        return Ok(empty(false));
    }
    if b00 <= pivot_tol * norm.max(f64::MIN_POSITIVE) || b00 <= 0.0 {
        if b00 < -INDEFINITE_TOL * norm {
            return Err(Error::Indefinite { index: 0, pivot: b00 });
        }
        return Ok(empty(true));
    }
    let g = gram(b, n);
    let mut c = DMatrix::from_element(n, n, Cdd::ZERO);
    let mut dim = n;
    for k in 0..n {
        for j in 0..k {
            let mut s = Cdd::from(g[(k, j)]);
            for i in 0..j {
                s = s - c[(k, i)] * c[(j, i)].conj();
            }
            c[(k, j)] = s.div_real(c[(j, j)].re);
        }
        let mut pivot = Dd::new(g[(k, k)].re);
        for i in 0..k {
            pivot = pivot - c[(k, i)].norm_sqr();
        }
        let p = pivot.to_f64();
        if p < -INDEFINITE_TOL * norm {
            return Err(Error::Indefinite { index: k, pivot: p });
        }
        if p < pivot_tol * b00 {
            dim = k;
            break;
        }
        c[(k, k)] = Cdd {
            re: pivot.sqrt(),
            im: Dd::ZERO,
        };
    }
    let chol = c.view((0, 0), ((dim + 1).min(n), dim)).into_owned();
    let eye = DMatrix::from_fn(dim, dim, |i, j| if i == j { Cdd::from(C64::from(1.0)) } else { Cdd::ZERO });
    let inv = forward_solve(&chol, dim, &eye);
    let l = DMatrix::from_fn(dim, dim, |i, j| if j <= i { inv[(i, j)].to_c64() } else { C64::zero() });
    let gamma = (0..dim).map(|k| 1.0 / chol[(k, k)].re.to_f64()).collect();
    Ok(PolyBasis {
        l,
        chol,
        gamma,
        stopped: dim < n,
        order: n,
    })
}

/// Solves `T x = rhs` with `T` the leading `m×m` block of the lower-triangular `c`.
fn forward_solve(c: &DMatrix<Cdd>, m: usize, rhs: &DMatrix<Cdd>) -> DMatrix<Cdd> {
    let mut x = rhs.clone();
    for col in 0..rhs.ncols() {
        for i in 0..m {
            let mut s = x[(i, col)];
            for k in 0..i {
                s = s - c[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s.div_real(c[(i, i)].re);
        }
    }
    x
}

/// `H[j][k] = h_jk = ⟨z P_k, P_j⟩_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hessenberg {
    #[serde(with = "crate::io::cmatrix")]
    h: DMatrix<C64>,
    /// Leading columns computed from available moments; trailing ones are zero filled.
    certified: usize,
}

impl Hessenberg {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.h[(j, k)]
    }

    /// Number of leading columns computed from data; columns past this are
    /// affected by truncation and stored as zeros.
    pub fn certified_cols(&self) -> usize {
        self.certified
    }

    pub fn last_column_truncated(&self) -> bool {
        self.certified < self.dim()
    }

    /// `H` wrapped without a basis, e.g. from a known operator matrix.
    pub fn from_matrix(h: DMatrix<C64>, certified: usize) -> Result<Self> {
        if h.nrows() != h.ncols() || certified > h.nrows() {
            return Err(Error::DimensionMismatch("Hessenberg matrix must be square".into()));
        }
        Ok(Self { h, certified })
    }
}

/// Hessenberg matrix of the multiplication by `z`.
///
/// The shifted moments `⟨z^{m+1}, z^n⟩_b = b[n][m+1]` form the rows of the
/// Gram matrix below the diagonal block, `G_shift = C_shift C^H` with `C` the
/// Cholesky factor, so `⟨z P_k, P_j⟩ = (C_top⁻¹ C_shift)[k][j]`. This avoids
/// multiplying by `L` twice, which loses digits once `b` is ill conditioned.
pub fn hessenberg(b: &ExpMoments, basis: &PolyBasis) -> Result<Hessenberg> {
    if basis.order() != b.order() {
        return Err(Error::DimensionMismatch(format!(
            "basis built from order {}, moments have order {}",
            basis.order(),
            b.order()
        )));
    }
    let d = basis.dim();
    // column k needs row k + 1 of the factor
    let certified = basis.chol.nrows().saturating_sub(1);
    let mut h = DMatrix::<C64>::zeros(d, d);
    if certified == 0 {
        return Ok(Hessenberg { h, certified });
    }
    let shift = basis.chol.view((1, 0), (certified, d)).into_owned();
    let x = forward_solve(&basis.chol, certified, &shift);
    for k in 0..certified {
        for j in 0..d.min(k + 2) {
            h[(j, k)] = x[(k, j)].to_c64();
        }
    }
    Ok(Hessenberg { h, certified })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithComplete,
    Incomplete,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    /// `Σ_{1≤k<K} |h_0k|² - |h_10|²` over the certified columns.
    pub lhs: f64,
    /// `b_00`.
    pub rhs: f64,
    pub gap: f64,
    /// Estimated size of the omitted terms plus rounding noise.
    pub tail_bound: f64,
    pub terms: usize,
    pub verdict: Verdict,
}

/// Relative noise floor added to the truncation estimate.
const NOISE_FLOOR: f64 = 1e-9;

/// Finite-section check of `Σ_{k≥1} |h_0k|² - |h_10|² = b_00`.
pub fn completeness_gap(h: &Hessenberg, b00: f64) -> CompletenessReport {
    let cols = h.certified_cols();
    let sub = if h.dim() > 1 && cols > 0 { h.get(1, 0).norm_sqr() } else { 0.0 };
    let terms: Vec<f64> = (1..cols).map(|k| h.get(0, k).norm_sqr()).collect();
    let acc: f64 = terms.iter().sum();
    let lhs = acc - sub;
    let gap = b00 - lhs;
    let last = terms.last().copied().unwrap_or(0.0);
    let prev = if terms.len() >= 2 { terms[terms.len() - 2] } else { 0.0 };
    let scale = b00.abs().max(acc).max(sub);
    let tail_bound = last + prev + NOISE_FLOOR * scale;
    let verdict = if cols < 2 || last > 1e-3 * acc {
        Verdict::Inconclusive
    } else if gap > 10.0 * tail_bound {
        Verdict::Incomplete
    } else if gap.abs() <= 10.0 * tail_bound {
        Verdict::ConsistentWithComplete
    } else {
        Verdict::Inconclusive
    };
    CompletenessReport {
        lhs,
        rhs: b00,
        gap,
        tail_bound,
        terms: terms.len(),
        verdict,
    }
}

/// `max_n |h_{n+1,n} - γ_n/γ_{n+1}|` over the certified block.
pub fn subdiag_check(basis: &PolyBasis, h: &Hessenberg) -> f64 {
    let g = basis.gamma();
    let cols = h.certified_cols().min(g.len().saturating_sub(1));
    (0..cols)
        .map(|n| (h.get(n + 1, n) - g[n] / g[n + 1]).norm())
        .fold(0.0, f64::max)
}

/// Zeros of `P_n` from the companion matrix of `P_n/γ_n`.
pub fn poly_zeros(basis: &PolyBasis, n: usize) -> Result<Vec<C64>> {
    if n >= basis.dim() {
        return Err(Error::OutOfRange {
            index: n,
            limit: basis.dim(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = basis.l[(n, n)];
    let mut comp = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = C64::from(1.0);
    }
    for j in 0..n {
        comp[(j, n - 1)] = -basis.l[(n, j)] / lead;
    }
    let zeros = comp
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::NumericalFault("companion eigenvalues did not converge".into()))?;
    Ok(zeros.iter().copied().collect())
}
