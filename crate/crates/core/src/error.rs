use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("circulant embedding failed: eigenvalue {min_eigenvalue:e} below tolerance -{tolerance:e}")]
    EmbeddingFailure { min_eigenvalue: f64, tolerance: f64 },

    #[error("duration pool exhausted after {cap} exponential draws")]
    DurationPoolExhausted { cap: u64 },

    #[error("invalid drift pair: need mu1 > 0, mu2 < 0 and mu1 + mu2 > 0 (got {mu1}, {mu2})")]
    InvalidDriftPair { mu1: f64, mu2: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate variance in {0}")]
    DegenerateVariance(&'static str),

    #[error("mean count is zero; drift and intensity are not identified")]
    ZeroCounts,

    #[error("no root found: {0}")]
    NoRoot(String),

    #[error("sample count autocovariance incompatible with the model: {0}")]
    NegativeSampleCov(String),

    #[error("assembled variance of squared returns is not positive ({0:e})")]
    NegativeVariance(f64),

    #[error("too few periodogram ordinates ({got}, need at least {need})")]
    TooFewOrdinates { got: usize, need: usize },

    /// `line` 0 means the setting came from the command line or a cross-field check.
    #[error("{}", config_message(*line, msg))]
    Config { line: usize, msg: String },

    #[error("io: {0}")]
    Io(String),
}

fn config_message(line: usize, msg: &str) -> String {
    if line == 0 {
        format!("config: {msg}")
    } else {
        format!("config line {line}: {msg}")
    }
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Config { .. } | Error::InvalidDriftPair { .. } => 2,
            Error::EmbeddingFailure { .. }
            | Error::DurationPoolExhausted { .. }
            | Error::NoRoot(_)
            | Error::NegativeVariance(_)
            | Error::NegativeSampleCov(_)
            | Error::DegenerateVariance(_) => 3,
            Error::InsufficientData(_) | Error::ZeroCounts | Error::TooFewOrdinates { .. } => 4,
            Error::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
