//! Quadrature rules shared by the moment and exponential-transform code.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default cap on the number of integrand evaluations per two-dimensional rule.
pub const DEFAULT_BUDGET: usize = 1 << 23;

/// Name of the environment variable that overrides [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "EXPOTRANS_QUAD_BUDGET";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Hard cap on nodes of a single tensor rule.
    pub budget: usize,
    /// Relative change between successive refinements accepted as converged.
    pub rel_tol: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            rel_tol: 1e-13,
        }
    }
}

impl QuadOptions {
    /// Defaults, with the budget taken from `EXPOTRANS_QUAD_BUDGET` when set.
    pub fn from_env() -> Result<Self> {
        let mut opts = Self::default();
        if let Ok(raw) = std::env::var(BUDGET_ENV) {
            opts.budget = raw
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{BUDGET_ENV}={raw:?} is not a node count")))?;
        }
        Ok(opts)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.into_iter()
        .zip(w)
        .map(|(xi, wi)| (mid + half * xi, half * wi))
        .collect()
}

/// Equispaced periodic trapezoid nodes on `[0, 2π)` with common weight.
pub fn periodic_trapezoid(n: usize) -> (Vec<f64>, f64) {
    let h = 2.0 * PI / n as f64;
    ((0..n).map(|i| i as f64 * h).collect(), h)
}

/// Refines `rule(level)` over increasing levels until two successive results agree.
///
/// `cost(level)` is the node count of a level; refinement fails with
/// [`Error::QuadratureBudget`] once the next level would exceed `opts.budget`.
/// `change(prev, next)` returns `(difference, scale)` of two successive results.
pub(crate) fn refine<T>(
    opts: &QuadOptions,
    start: usize,
    cost: impl Fn(usize) -> usize,
    mut rule: impl FnMut(usize) -> T,
    change: impl Fn(&T, &T) -> (f64, f64),
) -> Result<T> {
    if cost(start) > opts.budget {
        return Err(Error::QuadratureBudget {
            budget: opts.budget,
            change: f64::INFINITY,
        });
    }
    let mut level = start;
    let mut prev = rule(level);
    let mut last_change = f64::INFINITY;
    loop {
        level += 1;
        if cost(level) > opts.budget {
            return Err(Error::QuadratureBudget {
                budget: opts.budget,
                change: last_change,
            });
        }
        let next = rule(level);
        let (diff, scale) = change(&prev, &next);
        if diff <= opts.rel_tol * scale || diff == 0.0 {
            return Ok(next);
        }
        last_change = diff / scale.max(f64::MIN_POSITIVE);
        prev = next;
    }
}
