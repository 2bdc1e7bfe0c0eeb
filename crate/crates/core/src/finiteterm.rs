//! Finite term relations: the certificate `b_{m+1,0} = Σ_k q_k b_{m,k}`,
//! its Cauchy-transform form, the recursive fill of `b` from its first
//! column, and band profiles of Hessenberg matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exptransform::ExpMoments;
use crate::orthopoly::Hessenberg;
use crate::series::BiSeries;

type C64 = Complex<f64>;

/// Relative singular value cutoff of the least-squares fit.
const RANK_TOL: f64 = 1e-13;

/// Default decision tolerance, relative to the norm of `b`'s first column.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Coefficients of `Q(z) = q_0 + … + q_d z^d` with `Tξ = Q(T*)ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandCertificate {
    pub d: usize,
    pub q: Vec<C64>,
    /// RMS of the certificate equation residuals over the fitted rows.
    pub residual: f64,
    pub rows_used: usize,
}

impl BandCertificate {
    /// Fewer rows than unknowns; `q` is then the minimal-norm solution.
    pub fn underdetermined(&self) -> bool {
        self.rows_used < self.d + 1
    }

    /// `Q(z)`.
    pub fn eval(&self, z: C64) -> C64 {
        self.q.iter().rev().fold(C64::zero(), |acc, c| acc * z + c)
    }
}

/// `r[m] = b_{m+1,0} - Σ_k q_k b_{m,k}` for `m < rows`.
pub fn certificate_residuals(b: &ExpMoments, q: &[C64], rows: usize) -> Result<Vec<C64>> {
    let n = b.order();
    if q.is_empty() || q.len() > n {
        return Err(Error::InvalidArgument(format!(
            "certificate needs 1..={n} coefficients, got {}",
            q.len()
        )));
    }
    if rows + 1 > n {
        return Err(Error::OutOfRange { index: rows, limit: n.saturating_sub(1) });
    }
    Ok((0..rows)
        .map(|m| {
            let fit: C64 = q.iter().enumerate().map(|(k, c)| c * b.get(m, k)).sum();
            b.get(m + 1, 0) - fit
        })
        .collect())
}

fn rms(r: &[C64]) -> f64 {
    if r.is_empty() {
        return 0.0;
    }
    (r.iter().map(|c| c.norm_sqr()).sum::<f64>() / r.len() as f64).sqrt()
}

/// Least-squares certificate of degree `d` over rows `m = 0..rows`.
pub fn fit_certificate(b: &ExpMoments, d: usize, rows: usize) -> Result<BandCertificate> {
    let n = b.order();
    if d + 1 > n {
        return Err(Error::OutOfRange { index: d, limit: n.saturating_sub(1) });
    }
    if rows + 1 > n {
        return Err(Error::OutOfRange { index: rows, limit: n.saturating_sub(1) });
    }
    let q = if rows == 0 {
        vec![C64::zero(); d + 1]
    } else {
        let design = DMatrix::from_fn(rows, d + 1, |m, k| *b.get(m, k));
        let rhs = DVector::from_fn(rows, |m, _| *b.get(m + 1, 0));
        let svd = design.svd(true, true);
        let top = svd.singular_values.max();
        let sol = svd
            .solve(&rhs, RANK_TOL * top)
            .map_err(|e| Error::NumericalFault(format!("least squares failed: {e}")))?;
        sol.iter().copied().collect()
    };
    let residual = rms(&certificate_residuals(b, &q, rows)?);
    Ok(BandCertificate {
        d,
        q,
        residual,
        rows_used: rows,
    })
}

/// Smallest `d ≤ dmax` whose certificate over all `N-1` rows has residual
/// below `tol·‖b_{·,0}‖`.
pub fn detect_order(b: &ExpMoments, dmax: usize, tol: f64) -> Result<Option<BandCertificate>> {
    let n = b.order();
    if dmax >= n {
        return Err(Error::OutOfRange { index: dmax, limit: n });
    }
    let scale = b.first_column().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for d in 0..=dmax {
        let cert = fit_certificate(b, d, n - 1)?;
        if cert.residual <= tol * scale {
            return Ok(Some(cert));
        }
    }
    Ok(None)
}

/// Certificate residuals read off `E = exp(-Σ_k F_k(u) v^{k+1})`.
///
/// `cauchy[k][j]` is the coefficient of `u^{j+1}` in `F_k`, i.e. `a_jk`.
/// Only `v`-degrees up to `d + 1` enter, and those coefficients of `E` are
/// exact, so the result equals [`certificate_residuals`] on the full `b`.
pub fn certificate_from_cauchy(cauchy: &[Vec<C64>], q: &[C64], n: usize) -> Result<Vec<C64>> {
    if cauchy.len() != q.len() || q.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} Cauchy columns for {} coefficients",
            cauchy.len(),
            q.len()
        )));
    }
    if q.len() > n {
        return Err(Error::OutOfRange { index: q.len() - 1, limit: n });
    }
    if let Some(short) = cauchy.iter().find(|f| f.len() < n) {
        return Err(Error::OrderMismatch { left: short.len(), right: n });
    }
    let a = BiSeries::from_fn(n, C64::zero(), |j, k| if k < cauchy.len() { cauchy[k][j] } else { C64::zero() });
    let e = a.exp_neg()?;
    let b = |m: usize, k: usize| -*e.coeff(m, k);
    Ok((0..n - 1)
        .map(|m| b(m + 1, 0) - q.iter().enumerate().map(|(k, c)| c * b(m, k)).sum::<C64>())
        .collect())
}

/// `b` rebuilt from its first column by the finite term recursion. Entries the
/// recursion cannot reach are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct FilledMoments {
    order: usize,
    cells: Vec<Option<C64>>,
}

impl FilledMoments {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, m: usize, n: usize) -> Option<C64> {
        if m >= self.order || n >= self.order {
            return None;
        }
        self.cells[m * self.order + n]
    }

    pub fn is_certified(&self, m: usize, n: usize) -> bool {
        self.get(m, n).is_some()
    }

    /// Whether every entry with `j + k ≤ p` is present.
    pub fn covers_total_order(&self, p: usize) -> bool {
        (0..=p).all(|j| (0..=p - j).all(|k| self.is_certified(j, k)))
    }

    /// Largest `p` with [`FilledMoments::covers_total_order`].
    pub fn total_order(&self) -> Option<usize> {
        (0..self.order).take_while(|&p| self.covers_total_order(p)).last()
    }

    /// Square matrix with absent entries set to zero.
    pub fn zero_filled(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.order, self.order, |m, n| self.get(m, n).unwrap_or_default())
    }

    /// Largest leading block that is fully certified.
    pub fn certified_block(&self) -> Result<ExpMoments> {
        let k = (0..self.order)
            .take_while(|&k| (0..=k).all(|j| self.is_certified(j, k) && self.is_certified(k, j)))
            .count();
        ExpMoments::new(self.zero_filled().view((0, 0), (k, k)).into_owned())
    }
}

/// Column length after which [`fill_from_first_column`] certifies the whole
/// triangle `m + n + d < N`.
pub fn column_length_for(n: usize, d: usize) -> usize {
    let mut need = n;
    for m in 0..n {
        for k in m..n {
            if m + k + d < n {
                need = need.max(k + d * m + 1);
            }
        }
    }
    need
}

/// `b_{m+1,n} = Σ_k q_k b_{m,k+n} - Σ_{j<n} b_{m,j} b_{0,n-j-1}`, row 0 from
/// `b_{0,n} = conj(b_{n,0})`, closed under Hermitian symmetry.
///
/// Row `m` reaches `d` columns less far than row `m - 1`, so every entry of
/// `col` is used, and the result is the leading `N×N` block. With
/// [`column_length_for`] entries the triangle `m + n + d < N` is covered.
pub fn fill_from_first_column(col: &[C64], q: &[C64], n: usize) -> Result<FilledMoments> {
    if col.len() < n {
        return Err(Error::InsufficientColumn {
            needed: n,
            got: col.len(),
        });
    }
    if q.is_empty() {
        return Err(Error::InvalidArgument("certificate has no coefficients".into()));
    }
    let w = col.len();
    let mut cells = vec![None; w * w];
    let idx = |m: usize, k: usize| m * w + k;
    for m in 0..w {
        cells[idx(m, 0)] = Some(col[m]);
        cells[idx(0, m)] = Some(col[m].conj());
    }
    if w > 0 {
        cells[idx(0, 0)] = Some(C64::from(col[0].re));
    }
    loop {
        let mut changed = false;
        for m in 0..w.saturating_sub(1) {
            for k in 1..w {
                if cells[idx(m + 1, k)].is_some() {
                    continue;
                }
                let mut acc = C64::zero();
                let mut ok = true;
                for (i, c) in q.iter().enumerate() {
                    let entry = if k + i < w { cells[idx(m, k + i)] } else { None };
                    match entry {
                        Some(v) => acc += c * v,
                        None if c.is_zero() => {}
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                for j in 0..k {
                    match (cells[idx(m, j)], cells[idx(0, k - j - 1)]) {
                        (Some(x), Some(y)) => acc -= x * y,
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    cells[idx(m + 1, k)] = Some(acc);
                    if cells[idx(k, m + 1)].is_none() {
                        cells[idx(k, m + 1)] = Some(acc.conj());
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let cells = (0..n * n).map(|i| cells[idx(i / n, i % n)]).collect();
    Ok(FilledMoments { order: n, cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandProfile {
    /// Smallest `u` with `h_jk ≈ 0` whenever `j < k - u`.
    pub upper_bandwidth: usize,
    /// Largest spread of the entries along one diagonal of the band.
    pub toeplitz_deviation: f64,
    /// Number of terms in `z P_k = Σ_{j=k-u}^{k+1} h_jk P_j`.
    pub recursion_length: usize,
}

/// Band structure of the certified block of `h`.
pub fn band_profile(h: &Hessenberg, tol: f64) -> BandProfile {
    let cols = h.certified_cols();
    let rows = h.dim();
    let mut upper = 0;
    for k in 0..cols {
        for j in 0..k {
            if h.get(j, k).norm() >= tol {
                upper = upper.max(k - j);
            }
        }
    }
    let mut deviation = 0.0_f64;
    for offset in -1..=upper as i64 {
        let entries: Vec<C64> = (0..cols)
            .filter_map(|k| {
                let j = k as i64 - offset;
                (j >= 0 && (j as usize) < rows).then(|| h.get(j as usize, k))
            })
            .collect();
        for x in &entries {
            for y in &entries {
                deviation = deviation.max((x - y).norm());
            }
        }
    }
    BandProfile {
        upper_bandwidth: upper,
        toeplitz_deviation: deviation,
        recursion_length: upper + 2,
    }
}
