use cms_core::CmsError;
use thiserror::Error;

/// CLI failures, each with its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("refused: {0}")]
    Refusal(String),
    #[error("invariant breach: {0}")]
    Breach(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Refusal(_) => 3,
            CliError::Breach(_) => 4,
        }
    }
}

impl From<CmsError> for CliError {
    fn from(e: CmsError) -> Self {
        match e {
            CmsError::Spec { .. } | CmsError::Domain(_) => CliError::Config(e.to_string()),
            e => CliError::Refusal(e.to_string()),
        }
    }
}
