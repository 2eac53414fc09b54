use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Adaptive step size fell below the representable minimum.
    #[error("step failure at x = {x}: {reason}")]
    StepFailure { x: f64, reason: String },

    /// The integrated state overflowed; large |Im lambda| must be avoided by the caller.
    #[error("non-finite state at x = {x}")]
    NonFinite { x: f64 },

    #[error("scan exhausted: found {found} of {wanted} zeros up to lambda = {limit}")]
    ScanExhausted {
        found: usize,
        wanted: usize,
        limit: f64,
    },

    #[error("incomplete spectrum: {failed} window(s) did not converge")]
    IncompleteSpectrum { failed: usize },

    /// Argument-principle value not close to an integer.
    #[error("root on or near the contour: winding value {re} + {im}i")]
    BoundaryRoot { re: f64, im: f64 },

    #[error("problem mismatch: {0}")]
    SpecMismatch(String),

    #[error("unbounded kernel: grid max {max} exceeds guard {guard}")]
    UnboundedKernel { max: f64, guard: f64 },

    #[error("no multistart run converged ({starts} starts)")]
    AllDiverged { starts: usize },
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "ParseError",
            Error::Validation(_) => "ValidationError",
            Error::Domain(_) => "DomainError",
            Error::Io { .. } => "IoError",
            Error::StepFailure { .. } => "StepFailure",
            Error::NonFinite { .. } => "NonFinite",
            Error::ScanExhausted { .. } => "ScanExhausted",
            Error::IncompleteSpectrum { .. } => "IncompleteSpectrum",
            Error::BoundaryRoot { .. } => "BoundaryRoot",
            Error::SpecMismatch(_) => "SpecMismatch",
            Error::UnboundedKernel { .. } => "UnboundedKernel",
            Error::AllDiverged { .. } => "AllDiverged",
        }
    }
}
