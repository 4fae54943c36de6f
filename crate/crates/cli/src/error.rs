use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or out-of-range configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A solver or simulation failed to meet its numerical contract.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl From<tiedecay::Error> for CliError {
    fn from(e: tiedecay::Error) -> Self {
        match e {
            tiedecay::Error::Numerical { .. } => Self::Numerical(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}
