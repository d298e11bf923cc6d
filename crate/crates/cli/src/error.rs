use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<grayspace::Error> for CliError {
    fn from(e: grayspace::Error) -> Self {
        use grayspace::Error as E;
        match e {
            E::InvalidParameter { .. } | E::Domain(_) | E::Configuration(_) => {
                CliError::Config(e.to_string())
            }
            E::Ingest { .. } | E::Compensation { .. } | E::DimensionMismatch { .. } | E::EmptyResult => {
                CliError::Data(e.to_string())
            }
        }
    }
}
