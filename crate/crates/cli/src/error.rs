use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed run file {path}: {message}")]
    Malformed { path: String, message: String },
    #[error(transparent)]
    Solver(bundle_accel::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<bundle_accel::Error> for CliError {
    fn from(err: bundle_accel::Error) -> Self {
        use bundle_accel::Error as E;
        match err {
            E::UnknownObjective(_)
            | E::UnknownSolver(_)
            | E::InvalidParameter { .. }
            | E::EmptyDimension
            | E::DimensionMismatch { .. } => CliError::Config(err.to_string()),
            other => CliError::Solver(other),
        }
    }
}
