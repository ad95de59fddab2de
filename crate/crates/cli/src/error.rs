use momentbound::emm::EmmError;
use momentbound::gep::GepError;
use momentbound::moments::MomentError;
use momentbound::pade::PadeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl From<GepError> for CliError {
    fn from(e: GepError) -> Self {
        match e {
            GepError::Monotonicity { .. } | GepError::Degeneracy { .. } => {
                CliError::Invariant(e.to_string())
            }
            GepError::Moments(m) => m.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<MomentError> for CliError {
    fn from(e: MomentError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<EmmError> for CliError {
    fn from(e: EmmError) -> Self {
        match e {
            EmmError::Ordering(_) => CliError::Invariant(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<PadeError> for CliError {
    fn from(e: PadeError) -> Self {
        CliError::Numerical(e.to_string())
    }
}
