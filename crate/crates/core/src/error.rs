use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into two families that the CLI maps onto distinct exit
/// codes: malformed input (bad parameters, schemas, files) and numerical or
/// model failures (non-monotone acceptance, degenerate estimates, no root).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("matrix `{matrix}` is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { matrix: String, min_eigenvalue: f64 },

    #[error("{path}: row {row}, column `{column}`: {message}")]
    Schema {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error(
        "expected utility is not monotone in the cash amount (acceptable at m = {acceptable_at}, \
         unacceptable at m = {unacceptable_at}); use a capped utility"
    )]
    NonMonotone {
        acceptable_at: f64,
        unacceptable_at: f64,
    },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("position is unacceptable at every cash level for every starting portfolio")]
    InfeasibleAcceptance,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// `true` for errors caused by the caller's input rather than by the model.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Input(_) | Error::Unsupported(_) | Error::NotPsd { .. } | Error::Schema { .. } | Error::Io(_) | Error::Csv(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Unsupported(_) => "unsupported",
            Error::NotPsd { .. } => "not_psd",
            Error::Schema { .. } => "schema",
            Error::NonMonotone { .. } => "non_monotone",
            Error::Degenerate(_) => "degenerate",
            Error::NoSolution(_) => "no_solution",
            Error::InfeasibleAcceptance => "infeasible_acceptance",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
