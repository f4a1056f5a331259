use thiserror::Error;

/// Errors raised by the solvers, verifiers and file-format readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("embedding is not planar: {0}")]
    NonPlanarEmbedding(String),

    #[error("{what} of size {size} exceeds the cap of {cap}")]
    SizeCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("certificate not applicable: {0}")]
    CertificateNotApplicable(String),

    #[error("unsupported instance: {0}")]
    Unsupported(String),

    #[error("parity error: {0}")]
    Parity(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("integer overflow in exact arithmetic")]
    Overflow,

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("tree decomposition width {width} exceeds the cap of {cap}")]
    WidthCap { width: usize, cap: usize },

    #[error("invalid tree decomposition: {0}")]
    InvalidTreeDecomposition(String),

    #[error("invalid norm bounds: {0}")]
    InvalidBounds(String),

    #[error("a zero interaction has no dominating coupling")]
    ZeroTerm,

    #[error("component with {size} qubits exceeds the cap of {cap}; try a larger epsilon")]
    ComponentTooLarge { size: usize, cap: usize },

    #[error("invalid generator spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed or unsupported input rather than
    /// by a solver failing on valid input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. }
                | Error::InvalidInstance(_)
                | Error::NonPlanarEmbedding(_)
                | Error::InvalidBounds(_)
                | Error::Spec(_)
                | Error::Json(_)
                | Error::Io(_)
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
