//! Acceptance checks. Runs without the libtest harness so every line is
//! printed; exits non-zero if any check fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use expotrans::exptransform::{a_to_b, b_to_a, boundary_root};
use expotrans::finiteterm::{band_profile, column_length_for, detect_order, fill_from_first_column, fit_certificate};
use expotrans::heleshaw::{confocal_ellipse, exterior_moments, mother_body, zero_attraction};
use expotrans::operators::{
    b_from_operator, commutator_defect, ellipse_symbol_foci, required_size, toeplitz_ellipse, toeplitz_power, trifoil,
    two_diagonal, BandedOperator,
};
use expotrans::orthopoly::{completeness_gap, hessenberg, orthonormalize, poly_zeros, Verdict, PIVOT_TOL};
use expotrans::quad::gauss_legendre_on;
use expotrans::reconstruct::{legendre_fit, real_moments, reconstruct_expansion, support_box, DEFAULT_PAD};
use expotrans::series::BiSeries;
use expotrans::shapes::moments;
use expotrans::{ExpMoments, MomentMatrix, Shape, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn sized<F>(build: F, min: usize, n: usize) -> BandedOperator
where
    F: Fn(usize) -> BandedOperator,
{
    let probe = build(min);
    build(required_size(&probe, n).max(min))
}

fn ellipse_b(n: usize) -> ExpMoments {
    let op = sized(|m| toeplitz_ellipse(C64::from(2.0), m).unwrap(), 4, n);
    b_from_operator(&op, n).unwrap()
}

fn trifoil_b(n: usize) -> ExpMoments {
    b_from_operator(&sized(|m| trifoil(m).unwrap(), 8, n), n).unwrap()
}

fn closed_forms() -> Check {
    let (r, big_r) = (0.5_f64, 1.0_f64);
    let b = a_to_b(&moments(&Shape::annulus(r, big_r), 8).map_err(err)?).map_err(err)?;
    let mut diag = 0.0_f64;
    let mut off = 0.0_f64;
    for j in 0..8 {
        for k in 0..8 {
            if j == k {
                let want = (big_r * big_r - r * r) * r.powi(2 * k as i32);
                diag = diag.max((b.get(j, k) - want).norm());
            } else {
                off = off.max(b.get(j, k).norm());
            }
        }
    }
    let t = 0.5;
    let b = a_to_b(&moments(&Shape::weighted(Shape::disk(1.0), t), 9).map_err(err)?).map_err(err)?;
    let mut tdisk = 0.0_f64;
    let mut want = t;
    for k in 0..=8 {
        if k > 0 {
            want *= (k as f64 - t) / (k as f64 + 1.0);
        }
        tdisk = tdisk.max((b.get(k, k) - want).norm());
    }
    ensure(
        diag < 1e-8 && off < 1e-10 && tdisk < 1e-8,
        format!("annulus diagonal {diag:.1e}, off-diagonal {off:.1e}; t-disk {tdisk:.1e}"),
    )
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> MomentMatrix {
    let mut m = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        for k in 0..=j {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 0.7_f64.powi((j + k) as i32);
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
        }
        m[(j, j)].im = 0.0;
    }
    MomentMatrix::new(m).unwrap()
}

fn round_trips() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut series, mut matrix) = (0.0_f64, 0.0_f64);
    let mut first_column = true;
    for _ in 0..20 {
        let n = rng.random_range(1..=12);
        let a = random_hermitian(&mut rng, n);
        let f = BiSeries::from_fn(n, C64::from(0.0), |j, k| *a.get(j, k));
        let back = f.exp_neg().map_err(err)?.log_neg().map_err(err)?;
        for j in 0..n {
            for k in 0..n {
                series = series.max((back.coeff(j, k) - f.coeff(j, k)).norm());
            }
        }
        let b = a_to_b(&a).map_err(err)?;
        first_column &= (0..n).all(|j| b.get(j, 0) == a.get(j, 0));
        let a2 = b_to_a(&b).map_err(err)?;
        matrix = matrix.max((a2.matrix() - a.matrix()).iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    ensure(
        series < 1e-10 && matrix < 1e-10 && first_column,
        format!("series {series:.1e}, matrices {matrix:.1e}, first column exact: {first_column}"),
    )
}

fn ellipse_rigidity() -> Check {
    let b = ellipse_b(12);
    let basis = orthonormalize(&b, PIVOT_TOL).map_err(err)?;
    let h = hessenberg(&b, &basis).map_err(err)?;
    let cols = h.certified_cols();
    let mut below = 0.0_f64;
    let mut above = 0.0_f64;
    for k in 0..cols {
        for j in 0..h.dim() {
            if j > k + 1 {
                below = below.max(h.get(j, k).norm());
            } else if j + 1 < k {
                above = above.max(h.get(j, k).norm());
            }
        }
    }
    let mut spread = 0.0_f64;
    for off in [-1_i64, 0, 1] {
        let entries: Vec<C64> = (0..cols)
            .filter_map(|k| {
                let j = k as i64 + off;
                (j >= 0 && (j as usize) < h.dim()).then(|| h.get(j as usize, k))
            })
            .collect();
        for e in &entries {
            spread = spread.max((e - entries[0]).norm());
        }
    }
    let cert = detect_order(&b, 3, 1e-8).map_err(err)?;
    let (d, res) = cert.map_or((None, f64::NAN), |c| (Some(c.d), c.residual));
    ensure(
        below == 0.0 && above < 1e-8 && spread < 1e-8 && d == Some(1) && res < 1e-8,
        format!("below {below:.1e}, above {above:.1e}, diagonal spread {spread:.1e}, d = {d:?}, residual {res:.1e}"),
    )
}

fn trifoil_relation() -> Check {
    let n = 12;
    let b = trifoil_b(n);
    let cert = fit_certificate(&b, 2, n - 1).map_err(err)?;
    let q_err = cert
        .q
        .iter()
        .zip([0.0, 0.0, 1.0])
        .map(|(c, w)| (c - w).norm())
        .fold(0.0, f64::max);
    let long = trifoil_b(column_length_for(n, 2)).first_column();
    let filled = fill_from_first_column(&long, &cert.q, n).map_err(err)?;
    let mut fill_err = 0.0_f64;
    let mut missing = 0;
    for m in 0..n {
        for k in 0..n {
            if m + k + 2 < n {
                match filled.get(m, k) {
                    Some(v) => fill_err = fill_err.max((v - b.get(m, k)).norm()),
                    None => missing += 1,
                }
            }
        }
    }
    let basis = orthonormalize(&b, PIVOT_TOL).map_err(err)?;
    let h = hessenberg(&b, &basis).map_err(err)?;
    let length = band_profile(&h, 1e-8).recursion_length;
    let power = b_from_operator(&sized(|m| toeplitz_power(C64::from(1.0), C64::from(1.0), 3, m).unwrap(), 16, 16), 16)
        .map_err(err)?;
    let none = detect_order(&power, 6, 1e-6).map_err(err)?.is_none();
    ensure(
        q_err < 1e-10 && cert.residual < 1e-10 && fill_err < 1e-8 && missing == 0 && length == 4 && none,
        format!(
            "q error {q_err:.1e}, residual {:.1e}, fill {fill_err:.1e} ({missing} missing), recursion length {length}, S⁴+S*³ banded: {}",
            cert.residual, !none
        ),
    )
}

fn pipeline_gap(b: &ExpMoments) -> Result<expotrans::orthopoly::CompletenessReport, String> {
    let basis = orthonormalize(b, PIVOT_TOL).map_err(err)?;
    let h = hessenberg(b, &basis).map_err(err)?;
    Ok(completeness_gap(&h, b.b00()))
}

fn completeness() -> Check {
    let r = 0.5;
    let annulus = pipeline_gap(&a_to_b(&moments(&Shape::annulus(r, 1.0), 12).map_err(err)?).map_err(err)?)?;
    let want = -1.0 / (r * r);
    let annulus_ok = (annulus.lhs - want).abs() < 1e-8 && annulus.verdict == Verdict::Incomplete;
    let ellipse = pipeline_gap(&ellipse_b(12))?;
    let ellipse_ok = ellipse.gap.abs() <= ellipse.tail_bound;

    let mut catalog: Vec<(&str, ExpMoments)> = Vec::new();
    for (name, s) in [
        ("disk", Shape::disk(1.0)),
        ("annulus", Shape::annulus(0.5, 1.0)),
        ("t-disk", Shape::weighted(Shape::disk(1.0), 0.5)),
        ("ellipse", Shape::ellipse(1.5, 0.5)),
        ("confocal", confocal_ellipse(1.0, 0.7).map_err(err)?),
        ("shifted disk", Shape::disk(0.5).translated(C64::new(0.3, -0.2))),
    ] {
        catalog.push((name, a_to_b(&moments(&s, 12).map_err(err)?).map_err(err)?));
    }
    catalog.push(("ellipse operator", ellipse_b(12)));
    catalog.push(("trifoil", trifoil_b(12)));
    catalog.push(("two-diagonal", b_from_operator(&two_diagonal(1.0, 1.0, 40).map_err(err)?.0, 12).map_err(err)?));
    let mut worst = f64::NEG_INFINITY;
    let mut worst_name = "";
    for (name, b) in &catalog {
        let rep = pipeline_gap(b)?;
        if rep.lhs - rep.rhs > worst {
            worst = rep.lhs - rep.rhs;
            worst_name = name;
        }
    }
    ensure(
        annulus_ok && ellipse_ok && worst <= 1e-6,
        format!(
            "annulus lhs {:.6} (expected {want:.6}), verdict {:?}; ellipse |gap| {:.1e} vs bound {:.1e}; max lhs - rhs {worst:.1e} ({worst_name})",
            annulus.lhs,
            annulus.verdict,
            ellipse.gap.abs(),
            ellipse.tail_bound
        ),
    )
}

fn annulus_counterexample() -> Check {
    let (r, big_r) = (0.5_f64, 1.0_f64);
    let n = 8;
    let b = a_to_b(&moments(&Shape::annulus(r, big_r), n).map_err(err)?).map_err(err)?;
    let cert = fit_certificate(&b, 0, n - 1).map_err(err)?;
    let filled = fill_from_first_column(&b.first_column(), &[C64::from(0.0)], n).map_err(err)?;
    let got = filled.get(1, 1).ok_or("b_11 not filled")?;
    let mismatch = (got - b.get(1, 1)).norm();
    let s = big_r * big_r - r * r;
    let want = (s * s + s * r * r).abs();
    ensure(
        cert.q[0].norm() < 1e-12 && cert.residual < 1e-12 && (mismatch - want).abs() < 1e-12,
        format!("residual {:.1e}, b_11 mismatch {mismatch:.12} (documented {want:.12})", cert.residual),
    )
}

fn generator() -> Check {
    let starts = [0.5, 0.75, 1.0, 1.5, 2.0];
    let mut broken = Vec::new();
    let (mut sum_b, mut tele, mut comm, mut sup, mut ops) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for &a1 in &starts {
        for &b1 in &starts {
            let (op, state) = match two_diagonal(a1, b1, 10_000) {
                Ok(v) => v,
                Err(e) => {
                    broken.push(format!("({a1}, {b1}): {e}"));
                    continue;
                }
            };
            sum_b = sum_b.max(state.sum_b_residual());
            tele = tele.max(state.telescope_residual());
            sup = sup.max(state.sup_a());
            comm = comm.max(commutator_defect(&op));

            let n = 12;
            let b = b_from_operator(&two_diagonal(a1, b1, required_size(&op, n)).map_err(err)?.0, n).map_err(err)?;
            let basis = orthonormalize(&b, PIVOT_TOL).map_err(err)?;
            let h = hessenberg(&b, &basis).map_err(err)?;
            for k in 0..h.certified_cols() {
                for j in 0..h.dim() {
                    let want = if j == k + 1 {
                        state.A(k + 1).sqrt()
                    } else if j + 2 == k {
                        state.B(j).sqrt()
                    } else {
                        0.0
                    };
                    ops = ops.max((h.get(j, k) - want).norm());
                }
            }
        }
    }
    let generated = starts.len() * starts.len() - broken.len();
    ensure(
        broken.is_empty() && sum_b < 1e-10 && tele < 1e-10 && sup.is_finite() && comm < 1e-10 && ops < 1e-8,
        format!(
            "{generated}/25 starts generate; sum-B {sum_b:.1e}, telescope {tele:.1e}, sup A {sup:.3}, commutator {comm:.1e}, OP relation {ops:.1e}; non-positive terms at [{}]",
            broken.join("; ")
        ),
    )
}

fn exterior() -> Check {
    let e = exterior_moments(&Shape::ellipse(1.5, 0.5), 5).map_err(err)?;
    let odd = [1, 3, 4, 5].iter().map(|&k| e.get(k).norm()).fold(0.0, f64::max);
    let t2 = e.get(2).norm();
    let mut homothety = 0.0_f64;
    for (p, q) in [(1.5, 0.5), (1.0, 0.8), (2.0, 1.0)] {
        let small = exterior_moments(&Shape::ellipse(p, q), 2).map_err(err)?;
        for lambda in [0.5, 2.0, 3.0] {
            let big = exterior_moments(&Shape::ellipse(lambda * p, lambda * q), 2).map_err(err)?;
            homothety = homothety.max((big.get(1) - small.get(1)).norm());
            homothety = homothety.max((big.get(2) - small.get(2)).norm());
        }
    }
    let c = exterior_moments(&Shape::disk(1.3), 8).map_err(err)?;
    let circle = (1..=8).map(|k| c.get(k).norm()).fold(0.0, f64::max);
    ensure(
        odd < 1e-10 && t2 > 1e-3 && homothety < 1e-10 && circle < 1e-12,
        format!("ellipse |t1,t3,t4,t5| {odd:.1e}, |t2| {t2:.4}; homothetic pairs {homothety:.1e}; circle {circle:.1e}"),
    )
}

fn mother_body_check() -> Check {
    let c = 1.0;
    let mut worst = 0.0_f64;
    let mut cols = Vec::new();
    for s in [0.4, 0.7, 1.1] {
        let a = moments(&confocal_ellipse(c, s).map_err(err)?, 9).map_err(err)?;
        let mass = a.get(0, 0).re;
        let nodes = gauss_legendre_on(64, -0.5 * PI, 0.5 * PI);
        for j in [0, 2, 4] {
            // x = c sin φ removes the square-root endpoints
            let density: f64 = nodes
                .iter()
                .map(|&(phi, w)| {
                    let x = c * phi.sin();
                    w * x.powi(j) * mother_body(c, mass, x).unwrap() * c * phi.cos()
                })
                .sum();
            worst = worst.max((density - a.get(j as usize, 0)).norm());
        }
        cols.push(a.first_column());
    }
    let mut spread = 0.0_f64;
    for i in 0..cols.len() {
        for k in i + 1..cols.len() {
            let ratio = cols[k][0].re / cols[i][0].re;
            for j in 0..cols[i].len() {
                spread = spread.max((cols[k][j] - cols[i][j] * ratio).norm());
            }
        }
    }
    ensure(
        worst < 1e-8 && spread < 1e-6,
        format!("a00/a20/a40 error {worst:.1e}; proportionality spread {spread:.1e}"),
    )
}

fn zeros_attraction() -> Check {
    let b = ellipse_b(13);
    let basis = orthonormalize(&b, PIVOT_TOL).map_err(err)?;
    let (_, major, minor) = ellipse_symbol_foci(C64::from(2.0));
    let c = (major * major - minor * minor).sqrt();
    let d6 = zero_attraction(&poly_zeros(&basis, 6).map_err(err)?, c);
    let d12 = zero_attraction(&poly_zeros(&basis, 12).map_err(err)?, c);
    ensure(
        d12 < 0.2 && d12 <= d6 + 1e-12,
        format!("distance to [-{c:.4}, {c:.4}]: n = 6 {d6:.2e}, n = 12 {d12:.2e}"),
    )
}

fn boundary_locus() -> Check {
    let disk = boundary_root(&Shape::disk(1.0), C64::from_polar(1.0, 0.4), (0.5, 2.0)).map_err(err)?;
    let ann = boundary_root(&Shape::annulus(0.5, 1.0), C64::new(0.0, 1.0), (0.75, 2.0)).map_err(err)?;
    let e = Shape::ellipse(1.5, 0.5);
    let px = boundary_root(&e, C64::new(1.0, 0.0), (1.2, 2.5)).map_err(err)?;
    let qy = boundary_root(&e, C64::new(0.0, 1.0), (0.3, 1.5)).map_err(err)?;
    let radius = (disk - 1.0).abs().max((ann - 1.0).abs());
    let axes = (px - 1.5).abs().max((qy - 0.5).abs());
    ensure(
        radius < 1e-4 && axes < 5e-3,
        format!("disk {disk:.6}, annulus {ann:.6}, ellipse semi-axes {px:.4} x {qy:.4}"),
    )
}

fn reconstruction() -> Check {
    let n = 12;
    let b = ellipse_b(n);
    let cert = detect_order(&b, 3, 1e-8).map_err(err)?.ok_or("no certificate")?;
    let fit = reconstruct_expansion(&b.first_column(), &cert, n, 10).map_err(err)?;
    let area = 3.0 * PI;
    let mass_err = (fit.integral() - area).abs() / area;
    let l1 = fit.sample(256, 256).l1_distance(|x, y| if x * x / 9.0 + y * y <= 1.0 { 1.0 } else { 0.0 });

    let m = real_moments(&moments(&Shape::disk(1.0), 11).map_err(err)?).map_err(err)?;
    let bounds = support_box(&m, DEFAULT_PAD).map_err(err)?;
    let mut errors = Vec::new();
    for p in [2, 4, 6, 8, 10] {
        let g = legendre_fit(&m, bounds, p).map_err(err)?.sample(256, 256);
        errors.push(g.l1_distance(|x, y| if x * x + y * y <= 1.0 { 1.0 } else { 0.0 }) / PI);
    }
    let monotone = errors.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    let listed: Vec<String> = errors.iter().map(|e| format!("{e:.3}")).collect();
    ensure(
        mass_err < 0.02 && l1 < 0.35 * area && monotone,
        format!(
            "ellipse mass error {:.2}%, L1 {:.3} area; disk errors [{}]",
            100.0 * mass_err,
            l1 / area,
            listed.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("exponential transform closed forms", closed_forms),
        ("round trips", round_trips),
        ("ellipse rigidity", ellipse_rigidity),
        ("trifoil four-term relation", trifoil_relation),
        ("completeness criterion", completeness),
        ("annulus counterexample", annulus_counterexample),
        ("two-diagonal generator", generator),
        ("exterior moments", exterior),
        ("mother body and confocal squeezing", mother_body_check),
        ("zero attraction", zeros_attraction),
        ("boundary locus", boundary_locus),
        ("reconstruction", reconstruction),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
