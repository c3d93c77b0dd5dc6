use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("bad override: {0}")]
    Override(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Experiment(#[from] tiltlab_core::Error),
}
