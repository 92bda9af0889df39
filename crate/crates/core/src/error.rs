use thiserror::Error;

/// Unified error type for the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Hurst index {0} outside the open interval (0, 1)")]
    HurstOutOfRange(f64),

    #[error("{context}: {detail}")]
    Domain {
        context: &'static str,
        detail: String,
    },

    #[error("grid size {n} exceeds the Cholesky limit of {max} points")]
    GridTooLarge { n: usize, max: usize },

    #[error("circulant generator requires a power-of-two grid size, got {0}")]
    NotPowerOfTwo(usize),

    #[error("covariance matrix is not positive definite, even with 1e-12 diagonal jitter")]
    NotPositiveDefinite,

    #[error(
        "circulant embedding kept eigenvalue {min_eigenvalue:.3e} below -1e-10 after doubling"
    )]
    EmbeddingFailed { min_eigenvalue: f64 },

    #[error("quadrature error estimate {estimate:.3e} above requested tolerance {tolerance:.3e}")]
    QuadratureTolerance { estimate: f64, tolerance: f64 },

    #[error("Hermite order {0} not supported; only orders 2 and 3 are used")]
    UnsupportedHermite(u32),

    #[error("sample is empty or too small for the requested statistic")]
    EmptySample,

    #[error("sample has zero variance but its mean differs from the target")]
    DegenerateSample,

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
