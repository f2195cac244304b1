use thiserror::Error;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const ASSUMPTION: i32 = 3;
    pub const THRESHOLD: i32 = 4;
    pub const INCONCLUSIVE: i32 = 5;
}

/// Errors that stop a command before it produces its verdict.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("assumption failure: {0}")]
    Assumption(String),

    #[error("{0}")]
    Threshold(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => exit::CONFIG,
            CliError::Assumption(_) => exit::ASSUMPTION,
            CliError::Threshold(_) => exit::THRESHOLD,
        }
    }
}

impl From<rsdp::Error> for CliError {
    fn from(e: rsdp::Error) -> Self {
        use rsdp::Error as E;
        match e {
            E::NegativeRate { .. }
            | E::UnboundedRates { .. }
            | E::NotBirthDeath { .. }
            | E::NonMonotoneWeights { .. }
            | E::NonFinite { .. } => CliError::Assumption(e.to_string()),
            E::Divergence { path, .. } => CliError::Threshold(match path {
                Some(p) => format!("divergent path indices: [{p}] ({e})"),
                None => e.to_string(),
            }),
            E::Io(io) => CliError::Io(io),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Success,
    Assumption(String),
    Threshold(String),
    Inconclusive(String),
}

impl Verdict {
    pub fn code(&self) -> i32 {
        match self {
            Verdict::Success => exit::OK,
            Verdict::Assumption(_) => exit::ASSUMPTION,
            Verdict::Threshold(_) => exit::THRESHOLD,
            Verdict::Inconclusive(_) => exit::INCONCLUSIVE,
        }
    }
}
