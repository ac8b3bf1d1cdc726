use thiserror::Error;

/// Failures of the runner, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] twistmod::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

pub(crate) fn io_error(path: impl std::fmt::Debug, source: std::io::Error) -> CliError {
    CliError::Io {
        path: format!("{path:?}"),
        source,
    }
}

impl CliError {
    /// 2 validation, 3 resource budget, 4 numerical failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use twistmod::Error as E;
        match self {
            CliError::Invalid { .. } | CliError::Parse(_) => 2,
            CliError::Core(E::Domain(_) | E::Format(_)) => 2,
            CliError::Core(E::Budget { .. } | E::BitsExhausted { .. }) => 3,
            CliError::Core(E::Numerical(_)) => 4,
            CliError::Io { .. } => 1,
        }
    }
}
