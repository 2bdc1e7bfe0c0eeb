use thiserror::Error;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or out-of-range input.
    Input,
    /// A mathematical precondition of the requested operation does not hold.
    Precondition,
    /// A numerical procedure could not reach its tolerance.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("series must have zero constant term")]
    NonZeroConstant,

    #[error("series must have constant term one")]
    ConstantNotOne,

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NonHermitian { defect: f64 },

    #[error("Gram matrix is indefinite: pivot {pivot:.3e} at index {index}")]
    Indefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },

    #[error("point {0} is inside or too close to the support")]
    InsideSupport(String),

    #[error("no sign change in bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("first column too short: need {needed} entries, got {got}")]
    InsufficientColumn { needed: usize, got: usize },

    #[error("operator truncation {size} too small, need at least {needed}")]
    TruncationTooSmall { size: usize, needed: usize },

    #[error("quadrature budget of {budget} nodes exhausted (last change {change:.3e})")]
    QuadratureBudget { budget: usize, change: f64 },

    #[error("numerical fault: {0}")]
    NumericalFault(String),

    #[error("shape has zero mass")]
    EmptyShape,

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidShape(_)
            | Error::InvalidArgument(_)
            | Error::OrderMismatch { .. }
            | Error::DimensionMismatch(_)
            | Error::OutOfRange { .. }
            | Error::InsufficientColumn { .. }
            | Error::TruncationTooSmall { .. } => ErrorKind::Input,
            Error::NonZeroConstant
            | Error::ConstantNotOne
            | Error::NonHermitian { .. }
            | Error::Indefinite { .. }
            | Error::InsideSupport(_)
            | Error::NoSignChange { .. }
            | Error::EmptyShape
            | Error::Precondition(_) => ErrorKind::Precondition,
            Error::QuadratureBudget { .. } | Error::NumericalFault(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
