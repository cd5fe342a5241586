use thiserror::Error;

/// CLI failures, partitioned by exit code: 2 usage, 3 data validation,
/// 4 numeric failure.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("io error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(format!("csv error: {e}"))
    }
}

impl From<awfisher_core::Error> for CliError {
    fn from(e: awfisher_core::Error) -> Self {
        use awfisher_core::Error as E;
        match e {
            // parameter-shaped problems surface as usage errors
            E::MissingNullTable
            | E::NotSingleStudy(_)
            | E::InvalidSampleSize { .. }
            | E::StudySampleTooSmall { .. }
            | E::NoStudyConfigs
            | E::InvalidStudyConfig { .. }
            | E::EmptyGrid
            | E::ZeroReps
            | E::ZeroStudies
            | E::ZeroDraws
            | E::TooManyStudies { .. } => CliError::Usage(e.to_string()),
            E::TooFewFitPoints { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
