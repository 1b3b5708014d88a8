use thiserror::Error;

/// Errors raised by the replication engines, the simulation lab and the file formats.
///
/// Variants are grouped into three families (input, numeric, configuration) so
/// that a front end can map them onto stable exit codes via [`Error::kind`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid study summary `{id}`: {reason}")]
    InvalidStudy { id: String, reason: String },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("reference grid must not be empty")]
    EmptyGrid,

    #[error("gamma = 1 with omega_sq = {omega_sq} leaves phi_sq unbounded")]
    UnboundedHeterogeneity { omega_sq: f64 },

    #[error("need at least {required} studies, got {got}")]
    TooFewStudies { required: usize, got: usize },

    #[error("original effect estimate is zero; the replication/original ratio is undefined")]
    UndefinedRatio,

    #[error("all standardized regressors are identical; the regression slope is undefined")]
    DegenerateRegressor,

    #[error("numeric degeneracy: {0}")]
    Numeric(String),

    #[error("censoring infeasible: no dataset retained after {attempts} attempts")]
    InfeasibleCensoring { attempts: u64 },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Coarse error family, used for exit-code mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numeric,
    Config,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidStudy { .. } | Error::TooFewStudies { .. } | Error::Parse { .. } => {
                ErrorKind::Input
            }
            Error::UndefinedRatio | Error::DegenerateRegressor | Error::Numeric(_) => {
                ErrorKind::Numeric
            }
            Error::InvalidArgument { .. }
            | Error::EmptyGrid
            | Error::UnboundedHeterogeneity { .. }
            | Error::InfeasibleCensoring { .. }
            | Error::Config(_) => ErrorKind::Config,
        }
    }

    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
