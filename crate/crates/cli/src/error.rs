use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config key `{key}`: {msg}")]
    ConfigInvalid { key: String, msg: String },
    #[error("unknown scenario `{0}` (run `collapse-spectra list`)")]
    ScenarioUnknown(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] collapse_spectra::Error),
}

impl CliError {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::ConfigInvalid {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// Config problems exit with 2; computational failures count as failed checks.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(_) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
