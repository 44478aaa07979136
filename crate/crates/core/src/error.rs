use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("covariance of {which} is not symmetric positive-definite: {reason}")]
    Covariance { which: &'static str, reason: String },

    #[error("{count} alignments for a {n}x{m} problem are too large to enumerate (limit {limit})")]
    TooLargeToEnumerate {
        n: usize,
        m: usize,
        count: u128,
        limit: u128,
    },

    #[error("degenerate test direction: eta' Sigma eta = {variance:e}")]
    DegenerateDirection { variance: f64 },

    #[error("truncation region mass underflow (log-mass {log_mass})")]
    RegionMassUnderflow { log_mass: f64 },

    #[error("observed statistic {z_obs} is not inside its truncation region {region}")]
    SelectionInconsistent { z_obs: f64, region: String },

    #[error("confidence bound search failed: {0}")]
    BracketFailure(String),

    #[error("permutation requires equal lengths (n = {n}, m = {m})")]
    UnequalLengths { n: usize, m: usize },

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("cross-check failed: {0}")]
    OracleMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDirection { .. }
                | Error::RegionMassUnderflow { .. }
                | Error::SelectionInconsistent { .. }
                | Error::BracketFailure(_)
                | Error::OracleMismatch(_)
        )
    }
}
