use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (max asymmetry {deviation:.3e} exceeds tolerance {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix is not positive definite (pivot {pivot} has value {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("eigenvalue iteration failed to converge for a {dim}x{dim} matrix")]
    EigenNonConvergence { dim: usize },

    #[error("channel distribution produced rank-deficient realizations in {attempts} consecutive draws")]
    DegenerateDistribution { attempts: usize },

    #[error("capacity is unbounded for ideal hardware (kappa = 0)")]
    UnboundedCapacity,

    #[error("distortion covariance is singular at antenna {index}; floor the diagonal of Q (e.g. at 1e-12) before the asymptotic evaluation")]
    SingularDistortion { index: usize },

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("multiplexing-gain denominator underflowed ({denominator:.3e} bits)")]
    DegenerateRatio { denominator: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
