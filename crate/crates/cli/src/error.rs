use serde::{Deserialize, Serialize};
use thiserror::Error;

use hedgekit::Error as CoreError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{file}: {source}")]
    Input {
        file: String,
        #[source]
        source: CoreError,
    },
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("invalid argument `{field}`: {message}")]
    Argument { field: String, message: String },
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Machine-readable error printed on failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub exit_code: u8,
    pub kind: String,
    pub field: Option<String>,
    pub file: Option<String>,
    pub message: String,
}

fn is_solver_failure(e: &CoreError) -> bool {
    matches!(e, CoreError::Infeasible | CoreError::Unbounded | CoreError::NumericalFailure(_))
}

fn kind_and_field(e: &CoreError) -> (&'static str, Option<String>) {
    match e {
        CoreError::InvalidInput { field, .. } => ("invalid_input", Some(field.clone())),
        CoreError::DimensionMismatch(_) => ("dimension_mismatch", None),
        CoreError::ZeroNetNotional => ("zero_net_notional", Some("notionals".into())),
        CoreError::EmptyHedgeUniverse => ("empty_hedge_universe", Some("products.hedgeable".into())),
        CoreError::NonSymmetric(m) => ("non_symmetric", Some(m.clone())),
        CoreError::NonSymmetricCov(_) => ("non_symmetric_cov", Some("covariance".into())),
        CoreError::NotPositiveDefinite { .. } => ("not_positive_definite", Some("sensitivity".into())),
        CoreError::NotConvex { .. } => ("not_convex", None),
        CoreError::Lambda0OutOfRange { .. } => ("lambda0_out_of_range", Some("lambda_0".into())),
        CoreError::NotDiagonal(m) => ("not_diagonal", Some(m.clone())),
        CoreError::NonPositiveDiagonal { matrix, .. } => ("non_positive_diagonal", Some(matrix.clone())),
        CoreError::Infeasible => ("infeasible", None),
        CoreError::Unbounded => ("unbounded", None),
        CoreError::NumericalFailure(_) => ("numerical_failure", None),
        CoreError::CovFactorizationFailure => ("cov_factorization_failure", Some("covariance".into())),
    }
}

impl CliError {
    pub fn input(file: impl Into<String>, source: CoreError) -> Self {
        CliError::Input {
            file: file.into(),
            source,
        }
    }

    pub fn argument(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Argument {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input { source, .. } | CliError::Core(source) if is_solver_failure(source) => EXIT_SOLVER,
            _ => EXIT_VALIDATION,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (kind, field, file, message) = match self {
            CliError::Input { file, source } => {
                let (kind, field) = kind_and_field(source);
                (kind.to_string(), field, Some(file.clone()), source.to_string())
            }
            CliError::Core(source) => {
                let (kind, field) = kind_and_field(source);
                (kind.to_string(), field, None, source.to_string())
            }
            CliError::Io { path, message } => ("io".to_string(), None, Some(path.clone()), message.clone()),
            CliError::Argument { field, message } => {
                ("invalid_argument".to_string(), Some(field.clone()), None, message.clone())
            }
        };
        ErrorReport {
            exit_code: self.exit_code(),
            kind,
            field,
            file,
            message,
        }
    }
}
