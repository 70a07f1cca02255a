use thiserror::Error;

/// Invalid scenario or component configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: unknown section `[{section}]`")]
    UnknownSection { line: usize, section: String },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("i/o error reading {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

/// Failure of a single simulation run.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(
        "packet conservation violated: sent {sent} != delivered {delivered} + dropped {dropped} + in flight {in_flight}"
    )]
    Conservation {
        sent: u64,
        delivered: u64,
        dropped: u64,
        in_flight: u64,
    },
}
