use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A design, scenario or count table violates one of its invariants.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("sampler failure: {0}")]
    Sampler(String),

    #[error("no (N, R0) grid point has average HPD length <= {zeta}")]
    NoQualifyingDesign { zeta: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::Config(_) => 2,
            Error::Json(e) if !e.is_io() => 2,
            Error::Sampler(_) | Error::NoQualifyingDesign { .. } => 3,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
        }
    }
}
