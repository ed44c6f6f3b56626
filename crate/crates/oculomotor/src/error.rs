use thiserror::Error;

/// Crate-wide error type. Configuration problems are caught at build time,
/// numeric problems abort the run.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error in {module}: {message}")]
    Config { module: String, message: String },
    #[error("input error: {message}")]
    Input { message: String },
    #[error("numeric error: {message}")]
    Numeric { message: String },
}

impl Error {
    pub fn config(module: &str, message: impl Into<String>) -> Self {
        Error::Config {
            module: module.to_string(),
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Error::Input {
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Error::Numeric {
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 2 for config/input problems, 3 for
    /// runtime numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Input { .. } => 2,
            Error::Numeric { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
