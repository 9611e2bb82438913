use thiserror::Error;

/// Errors returned by the lattice, decoder, oracle and simulation APIs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("exponent t must be at least 1, got {0}")]
    InvalidExponent(u32),

    #[error("dimension {0} is not a power of two >= 2")]
    InvalidDimension(usize),

    #[error("vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("vector length {0} is odd")]
    OddLength(usize),

    #[error("relative radius {delta} outside accepted range [{lo}, {hi})")]
    RadiusOutOfRange { delta: f64, lo: f64, hi: f64 },

    #[error("invalid list schedule: {0}")]
    InvalidSchedule(String),

    #[error("dimension n = {0} exceeds the oracle cap of 16")]
    OracleDimension(usize),

    #[error("squared radius {r2} exceeds the enumeration guard {limit}")]
    RadiusGuard { r2: f64, limit: f64 },

    #[error("point is not a member of the lattice")]
    NotInLattice,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite input value")]
    NonFinite,

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
