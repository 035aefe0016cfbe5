use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite (min eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("symmetric eigendecomposition failed to converge")]
    EigFailure,

    #[error("singular value decomposition failed")]
    SvdFailure,

    #[error("Cholesky factorization failed: {0}")]
    CholeskyFailure(String),

    #[error("eigenvalues too close for the Vandermonde gradient (gap {gap:.3e} < {threshold:.3e})")]
    NearDegenerateEigenvalues { gap: f64, threshold: f64 },

    #[error("Kronecker product of size {size} exceeds materialization cap {cap}")]
    KronTooLarge { size: usize, cap: usize },

    #[error("metric tensor of size {size} exceeds cap {cap}")]
    MetricTooLarge { size: usize, cap: usize },

    #[error("empty data")]
    EmptyData,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Gibbs sampling requires inverse-Wishart priors on both factors")]
    NonConjugatePrior,

    #[error("flip-flop iteration did not converge in {0} iterations")]
    MaxIterExceeded(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),
}
