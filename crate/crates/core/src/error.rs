use thiserror::Error;

/// Errors shared across the sampling, flow and diagnostics modules.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument has the wrong dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An argument is outside its admissible range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested operation is not available for this object
    /// (e.g. no exact sampler for the target).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A log importance weight came out non-finite; carries the point for
    /// diagnosis.
    #[error("non-finite log weight at x={x:?} (log target {log_target}, log proposal {log_proposal})")]
    NonFiniteWeight {
        x: Vec<f64>,
        log_target: f64,
        log_proposal: f64,
    },

    /// A transition kernel cannot make progress (e.g. every candidate weight
    /// is -inf, or a gradient blew up).
    #[error("kernel failure: {0}")]
    Kernel(String),

    /// All samples or weights were degenerate (zero spread, empty stream, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A theory calculator was handed a configuration outside the regime
    /// where its bound holds.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// Flow parameters or gradients stopped being finite.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Checkpoint or other I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A checkpoint file did not match the expected layout.
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn dim(expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { expected, got }
    }
}
