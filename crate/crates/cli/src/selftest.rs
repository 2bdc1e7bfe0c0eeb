//! Quick seeded self checks behind `expotrans selftest`.

use std::fmt::Write as _;

use expotrans::exptransform::{a_to_b, b_to_a};
use expotrans::finiteterm::detect_order;
use expotrans::orthopoly::{completeness_gap, hessenberg, orthonormalize, Verdict, PIVOT_TOL};
use expotrans::shapes::moments;
use expotrans::{MomentMatrix, Shape, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gallery::{OperatorSpec, Source};

pub struct Report {
    pub text: String,
    pub failures: usize,
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> MomentMatrix {
    let mut m = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        for k in 0..=j {
            let decay = 0.7_f64.powi((j + k) as i32);
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * decay;
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
        }
        m[(j, j)].im = 0.0;
    }
    MomentMatrix::new(m).expect("hermitian by construction")
}

fn round_trip(seed: u64, cases: usize) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for case in 0..cases {
        let n = rng.random_range(1..=12);
        let a = random_hermitian(&mut rng, n);
        let b = a_to_b(&a).map_err(|e| e.to_string())?;
        if (0..n).any(|j| b.get(j, 0) != a.get(j, 0)) {
            return Err(format!("case {case}: first columns differ"));
        }
        let back = b_to_a(&b).map_err(|e| e.to_string())?;
        let err = (back.matrix() - a.matrix()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        worst = worst.max(err);
    }
    if worst < 1e-10 {
        Ok(format!("{cases} cases, max error {worst:.2e}"))
    } else {
        Err(format!("max error {worst:.2e}"))
    }
}

fn annulus_diagonal() -> Result<String, String> {
    let (r, big_r) = (0.5_f64, 1.0_f64);
    let b = a_to_b(&moments(&Shape::annulus(r, big_r), 8).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    for j in 0..8 {
        for k in 0..8 {
            let want = if j == k { (big_r * big_r - r * r) * r.powi(2 * k as i32) } else { 0.0 };
            worst = worst.max((b.get(j, k) - want).norm());
        }
    }
    if worst < 1e-8 {
        Ok(format!("max error {worst:.2e}"))
    } else {
        Err(format!("max error {worst:.2e}"))
    }
}

fn ellipse_operator() -> Result<String, String> {
    let b = Source::Operator(OperatorSpec::Ellipse { u: 2.0 })
        .exp_moments(12, &Default::default())
        .map_err(|e| e.to_string())?;
    let basis = orthonormalize(&b, PIVOT_TOL).map_err(|e| e.to_string())?;
    let h = hessenberg(&b, &basis).map_err(|e| e.to_string())?;
    let report = completeness_gap(&h, b.b00());
    let cert = detect_order(&b, 3, 1e-8).map_err(|e| e.to_string())?;
    match (report.verdict, cert.map(|c| c.d)) {
        (Verdict::ConsistentWithComplete, Some(1)) => Ok(format!("gap {:.2e}, d = 1", report.gap)),
        (v, d) => Err(format!("verdict {v:?}, certificate degree {d:?}")),
    }
}

pub fn run(seed: u64, cases: usize) -> Report {
    let checks: Vec<(&str, Result<String, String>)> = vec![
        ("round-trip", round_trip(seed, cases)),
        ("annulus-diagonal", annulus_diagonal()),
        ("ellipse-operator", ellipse_operator()),
    ];
    let mut text = String::new();
    let mut failures = 0;
    for (name, result) in checks {
        match result {
            Ok(detail) => {
                let _ = writeln!(text, "PASS {name}: {detail}");
            }
            Err(detail) => {
                failures += 1;
                let _ = writeln!(text, "FAIL {name}: {detail}");
            }
        }
    }
    Report { text, failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let report = run(7, 5);
        assert_eq!(report.failures, 0, "{}", report.text);
        assert_eq!(report.text.lines().count(), 3);
    }

    #[test]
    fn seeded_cases_are_reproducible() {
        assert_eq!(round_trip(3, 4), round_trip(3, 4));
    }
}
