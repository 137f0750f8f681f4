use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("total net notional is zero; weights are undefined")]
    ZeroNetNotional,
    #[error("no product in the portfolio is flagged as hedgeable")]
    EmptyHedgeUniverse,
    #[error("matrix `{0}` is not symmetric")]
    NonSymmetric(String),
    #[error("covariance matrix is not symmetric positive semidefinite: {0}")]
    NonSymmetricCov(String),
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("quadratic term is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotConvex { min_eigenvalue: f64 },
    #[error("lambda_0 = {lambda_0} is outside the admissible interval ({lower}, {upper})")]
    Lambda0OutOfRange { lambda_0: f64, lower: f64, upper: f64 },
    #[error("matrix `{0}` is not diagonal")]
    NotDiagonal(String),
    #[error("diagonal entry {index} of `{matrix}` is not strictly positive")]
    NonPositiveDiagonal { matrix: String, index: usize },
    #[error("problem is primal infeasible")]
    Infeasible,
    #[error("problem is unbounded below")]
    Unbounded,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("could not factor covariance matrix for sampling")]
    CovFactorizationFailure,
    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: String, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
