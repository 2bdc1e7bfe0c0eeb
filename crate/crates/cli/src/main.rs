//! `expotrans` command-line front end.

mod gallery;
mod selftest;

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use expotrans::exptransform::{a_to_b, b_to_a};
use expotrans::finiteterm::{band_profile, column_length_for, detect_order, fill_from_first_column, BandCertificate, BandProfile};
use expotrans::heleshaw::{Law, MomentTrajectory};
use expotrans::io::{to_json, MatrixDoc};
use expotrans::orthopoly::{completeness_gap, hessenberg, orthonormalize, subdiag_check, CompletenessReport, PIVOT_TOL};
use expotrans::quad::QuadOptions;
use expotrans::reconstruct::{reconstruct_expansion, DEFAULT_SAMPLES};
use expotrans::{ErrorKind, ExpMoments, MomentMatrix, Rect, Shape, C64};

use gallery::Source;

#[derive(Debug, Parser)]
#[command(name = "expotrans", version, about = "Exponential transform, exponential orthogonal polynomials and shape recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Truncation order N.
    #[arg(long, global = true, default_value_t = 12)]
    order: usize,
    /// Largest certificate degree tried by detection.
    #[arg(long, global = true, default_value_t = 6)]
    dmax: usize,
    /// Relative tolerance for certificate decisions.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Total degree of the Legendre expansion.
    #[arg(long = "legendre-order", global = true, default_value_t = 10)]
    legendre_order: usize,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moment matrix a of a shape file or gallery entry.
    Moments { shape: String },
    /// a → b of a moment matrix document (b → a with --inverse).
    Transform {
        input: PathBuf,
        #[arg(long)]
        inverse: bool,
    },
    /// Full report: moments, b, basis, Hessenberg, completeness, certificate, band profile.
    Pipeline { shape: String },
    /// Smallest certificate degree for a b-matrix document, shape file or gallery entry.
    Detect { input: String },
    /// Rebuild b from a first column and a certificate.
    Fill { column: PathBuf, cert: PathBuf },
    /// Reconstruct the shade function from a first column and a certificate (CSV grid).
    Reconstruct { column: PathBuf, cert: PathBuf },
    /// Moment trajectory under squeezing or injection (CSV).
    Evolve {
        shape: String,
        #[arg(long, value_enum)]
        law: LawArg,
        /// Comma-separated times.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        times: Vec<f64>,
    },
    /// List gallery entries, or write the first column of b for one of them.
    Gallery { name: Option<String> },
    /// Randomized and closed-form self checks.
    Selftest {
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LawArg {
    Squeeze,
    Inject,
}

/// Failure carrying the process exit status.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }

    fn stage(name: &str, e: expotrans::Error) -> Self {
        let mut err = Self::from(e);
        err.message = format!("{name}: {}", err.message);
        err
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<expotrans::Error> for CliError {
    fn from(e: expotrans::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Input => 2,
            ErrorKind::Precondition => 3,
            ErrorKind::Numerical => 4,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::input(format!("malformed JSON in {}: {e}", path.display())))
}

fn load_source(arg: &str) -> CliResult<Source> {
    if arg.starts_with(gallery::PREFIX) {
        return Ok(gallery::parse(arg)?);
    }
    let shape: Shape = read_json(Path::new(arg))?;
    shape.validate()?;
    Ok(Source::Shape(shape))
}

fn json<T: Serialize + ?Sized>(value: &T) -> CliResult<String> {
    let mut text = to_json(value)?;
    text.push('\n');
    Ok(text)
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::input(format!("cannot write output: {e}")))
        }
    }
}

#[derive(Debug, Serialize)]
struct BasisReport {
    dim: usize,
    stopped: bool,
    gamma: Vec<f64>,
    orthonormality_residual: f64,
}

#[derive(Debug, Serialize)]
struct HessenbergReport {
    matrix: MatrixDoc,
    certified_cols: usize,
    /// `h_{n+1,n}` over the certified block.
    subdiagonal: Vec<f64>,
    /// `max |h_{n+1,n} - γ_n/γ_{n+1}|`.
    subdiagonal_defect: f64,
}

#[derive(Debug, Serialize)]
struct PipelineReport {
    source: String,
    order: usize,
    b00: f64,
    min_eigenvalue: f64,
    moments: MatrixDoc,
    b: MatrixDoc,
    basis: BasisReport,
    hessenberg: HessenbergReport,
    completeness: CompletenessReport,
    certificate: Option<BandCertificate>,
    band_profile: BandProfile,
}

fn pipeline(source_arg: &str, cli: &Cli, opts: &QuadOptions) -> CliResult<PipelineReport> {
    let source = load_source(source_arg)?;
    let n = cli.order;
    let (a, b) = match &source {
        Source::Shape(s) => {
            let a = expotrans::shapes::moments_with(s, n, opts).map_err(|e| CliError::stage("moments", e))?;
            let b = a_to_b(&a).map_err(|e| CliError::stage("a_to_b", e))?;
            (a, b)
        }
        Source::Operator(_) => {
            let b = source.exp_moments(n, opts).map_err(|e| CliError::stage("operator", e))?;
            let a = b_to_a(&b).map_err(|e| CliError::stage("b_to_a", e))?;
            (a, b)
        }
    };
    let basis = orthonormalize(&b, PIVOT_TOL).map_err(|e| CliError::stage("orthonormalize", e))?;
    let h = hessenberg(&b, &basis).map_err(|e| CliError::stage("hessenberg", e))?;
    let completeness = completeness_gap(&h, b.b00());
    let dmax = cli.dmax.min(n.saturating_sub(1));
    let certificate = detect_order(&b, dmax, cli.tol).map_err(|e| CliError::stage("detect_order", e))?;
    let scale = h.matrix().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let profile = band_profile(&h, 1e-8 * scale.max(1.0));
    Ok(PipelineReport {
        source: source_arg.to_string(),
        order: n,
        b00: b.b00(),
        min_eigenvalue: b.min_eigenvalue(),
        moments: MatrixDoc::from(&a),
        b: MatrixDoc::from(&b),
        basis: BasisReport {
            dim: basis.dim(),
            stopped: basis.stopped(),
            gamma: basis.gamma().to_vec(),
            orthonormality_residual: basis.orthonormality_residual(&b),
        },
        hessenberg: HessenbergReport {
            matrix: MatrixDoc::from_matrix(h.matrix()),
            certified_cols: h.certified_cols(),
            subdiagonal: (0..h.certified_cols().min(h.dim().saturating_sub(1)))
                .map(|k| h.get(k + 1, k).re)
                .collect(),
            subdiagonal_defect: subdiag_check(&basis, &h),
        },
        completeness,
        certificate,
        band_profile: profile,
    })
}

fn load_b(input: &str, cli: &Cli, opts: &QuadOptions) -> CliResult<ExpMoments> {
    if input.starts_with(gallery::PREFIX) {
        return Ok(gallery::parse(input)?.exp_moments(cli.order, opts)?);
    }
    let text = read_text(Path::new(input))?;
    if let Ok(doc) = serde_json::from_str::<MatrixDoc>(&text) {
        return Ok(ExpMoments::try_from(doc)?);
    }
    let source = load_source(input)?;
    Ok(source.exp_moments(cli.order, opts)?)
}

/// Filled b as a matrix document with `null` for absent entries.
#[derive(Debug, Serialize)]
struct FilledDoc {
    order: usize,
    re: Vec<Vec<Option<f64>>>,
    im: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Serialize)]
struct GridHeader {
    #[serde(rename = "box")]
    bounds: Rect,
    order: usize,
    samples: [usize; 2],
    mass: f64,
    expected_mass: f64,
    min: f64,
    max: f64,
    clipped: bool,
}

fn run(cli: &Cli) -> CliResult<()> {
    let opts = QuadOptions::from_env()?;
    if cli.order == 0 {
        return Err(CliError::input("--order must be at least 1"));
    }
    if !(cli.tol > 0.0) {
        return Err(CliError::input("--tol must be positive"));
    }
    match &cli.command {
        Command::Moments { shape } => {
            let a = load_source(shape)?.moments(cli.order, &opts)?;
            emit(&cli.out, &json(&MatrixDoc::from(&a))?)
        }
        Command::Transform { input, inverse } => {
            let doc: MatrixDoc = read_json(input)?;
            let out = if *inverse {
                MatrixDoc::from(&b_to_a(&ExpMoments::try_from(doc)?)?)
            } else {
                MatrixDoc::from(&a_to_b(&MomentMatrix::try_from(doc)?)?)
            };
            emit(&cli.out, &json(&out)?)
        }
        Command::Pipeline { shape } => emit(&cli.out, &json(&pipeline(shape, cli, &opts)?)?),
        Command::Detect { input } => {
            let b = load_b(input, cli, &opts)?;
            let dmax = cli.dmax.min(b.order().saturating_sub(1));
            emit(&cli.out, &json(&detect_order(&b, dmax, cli.tol)?)?)
        }
        Command::Fill { column, cert } => {
            let col: Vec<C64> = read_json(column)?;
            let cert: BandCertificate = read_json(cert)?;
            let filled = fill_from_first_column(&col, &cert.q, cli.order)?;
            let n = filled.order();
            let part = |f: fn(C64) -> f64| {
                (0..n)
                    .map(|m| (0..n).map(|k| filled.get(m, k).map(f)).collect())
                    .collect()
            };
            let doc = FilledDoc {
                order: n,
                re: part(|c| c.re),
                im: part(|c| c.im),
            };
            emit(&cli.out, &json(&doc)?)
        }
        Command::Reconstruct { column, cert } => {
            let col: Vec<C64> = read_json(column)?;
            let cert: BandCertificate = read_json(cert)?;
            let scale = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if cert.residual > cli.tol * scale.max(f64::MIN_POSITIVE) && cert.residual > 0.0 {
                return Err(CliError::precondition(format!(
                    "certificate residual {:.3e} exceeds tolerance {:.3e}",
                    cert.residual,
                    cli.tol * scale
                )));
            }
            let expansion = reconstruct_expansion(&col, &cert, cli.order, cli.legendre_order)?;
            let grid = expansion.sample(DEFAULT_SAMPLES, DEFAULT_SAMPLES);
            let (min, max) = grid.range();
            if let Some((lo, hi)) = grid.clipping() {
                eprintln!("note: reconstruction leaves [-0.1, 1.1] (range {lo:.3} to {hi:.3}); values are not clipped");
            }
            if let Some(path) = &cli.out {
                let header = GridHeader {
                    bounds: grid.bounds,
                    order: grid.order,
                    samples: [grid.nx(), grid.ny()],
                    mass: expansion.integral(),
                    expected_mass: std::f64::consts::PI * col.first().map_or(0.0, |c| c.re),
                    min,
                    max,
                    clipped: grid.clipping().is_some(),
                };
                emit(&Some(path.with_extension("json")), &json(&header)?)?;
            }
            emit(&cli.out, &grid.to_csv())
        }
        Command::Evolve { shape, law, times } => {
            let col = load_source(shape)?.moments(cli.order, &opts)?.first_column();
            let law = match law {
                LawArg::Squeeze => Law::Squeeze,
                LawArg::Inject => Law::Inject,
            };
            if matches!(law, Law::Squeeze) && times.iter().any(|t| *t < 0.0) {
                eprintln!("note: backward squeezing is pure moment arithmetic; the flow is unstable and no domain is implied");
            }
            let traj = MomentTrajectory::evolve(&col, law, times)?;
            emit(&cli.out, &traj.to_csv())
        }
        Command::Gallery { name: None } => {
            let mut text = String::new();
            for (name, params) in gallery::ENTRIES {
                text.push_str(&format!("{name}\t{params}\n"));
            }
            emit(&cli.out, &text)
        }
        Command::Gallery { name: Some(name) } => {
            let spec = if name.starts_with(gallery::PREFIX) {
                name.clone()
            } else {
                format!("{}{name}", gallery::PREFIX)
            };
            let len = column_length_for(cli.order, cli.dmax);
            let b = gallery::parse(&spec)?.exp_moments(len, &opts)?;
            emit(&cli.out, &json(&b.first_column())?)
        }
        Command::Selftest { cases } => {
            let report = selftest::run(cli.seed, *cases);
            emit(&cli.out, &report.text)?;
            if report.failures > 0 {
                return Err(CliError::numerical(format!("{} self checks failed", report.failures)));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message.replace('\n', " "));
            ExitCode::from(e.code)
        }
    }
}
