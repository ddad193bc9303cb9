use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// Structural mismatch between values that must agree (grid dims, mask
    /// length, bit-stream length, parameter array sizes).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A config or constructor argument violates its contract.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Only BPSK (modulation order 2) is supported by the channel simulator.
    #[error("unsupported modulation order {0}: only U = 2 (BPSK) is implemented")]
    UnsupportedModulation(u32),

    /// All importance weights are zero, so the integrity index is undefined.
    #[error("degenerate importance weights: total weight is zero")]
    DegenerateWeights,

    /// Curve fitting needs at least six points with distinct abscissae.
    #[error("insufficient data for rational fit: {got} distinct eta values, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    /// The fitted denominator has a real root inside the data range.
    #[error(
        "unstable rational fit: denominator root at eta = {root:.6} inside [{lo:.4}, {hi:.4}]"
    )]
    UnstableFit { root: f64, lo: f64, hi: f64 },

    /// A mapping function was evaluated outside its fitted domain.
    #[error("eta = {eta} outside mapping domain [{lo}, {hi}]")]
    DomainError { eta: f64, lo: f64, hi: f64 },

    /// A curve-fit target STII cannot be reached anywhere in the configured
    /// SNR range.
    #[error(
        "target STII {target} unreachable: 1 - BER peaks at {max_attainable:.4} over the SNR range"
    )]
    UnreachableTarget { target: f64, max_attainable: f64 },

    /// A linear solve or iterative refinement failed to produce finite values.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Training produced a non-finite loss.
    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    /// A serialized document could not be parsed or failed validation.
    #[error("malformed document: {0}")]
    MalformedDocument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
