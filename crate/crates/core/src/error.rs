use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("Q-matrix violation: q_{from}{to}(x) = {value} < 0 at x = {x:?}")]
    NegativeRate {
        from: usize,
        to: usize,
        x: Vec<f64>,
        value: f64,
    },

    #[error("non-finite {what} at x = {x:?}, regime {regime}")]
    NonFinite {
        what: &'static str,
        x: Vec<f64>,
        regime: usize,
    },

    #[error("Q2 violation: rates appear unbounded ({detail})")]
    UnboundedRates { detail: String },

    #[error("rate structure is not birth-death: q_{from}{to} is not identically zero")]
    NotBirthDeath { from: usize, to: usize },

    #[error("weights {weights:?} are not monotone; orientation cannot be selected")]
    NonMonotoneWeights { weights: Vec<f64> },

    #[error("path diverged at t = {time}{}", path.map(|p| format!(" (path {p})")).unwrap_or_default())]
    Divergence { time: f64, path: Option<usize> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("sample count {m} exceeds the cap {cap}; subsample first")]
    SampleCapExceeded { m: usize, cap: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
