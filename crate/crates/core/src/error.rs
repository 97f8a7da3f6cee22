//! Error type shared across the crate.

use std::fmt;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    Domain(String),
    /// A truncation level was too small to certify a result.
    Truncation(String),
    /// Invalid configuration (parameter ranges, shape mismatches).
    Config(String),
    /// Requested time is not among the recorded checkpoints.
    Checkpoint(String),
    /// Position ordering violated (source must precede observation).
    Order(String),
    /// The initial sampler does not produce codeword-valued data.
    Sampler(String),
    /// Too few replicates for the requested estimator.
    InsufficientReplicates(String),
    /// Time step incompatible with the integration horizon.
    Step(String),
    /// Argument outside the validated numerical range.
    Range(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Truncation(m) => write!(f, "truncation error: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Checkpoint(m) => write!(f, "checkpoint error: {m}"),
            Error::Order(m) => write!(f, "order error: {m}"),
            Error::Sampler(m) => write!(f, "sampler error: {m}"),
            Error::InsufficientReplicates(m) => write!(f, "insufficient replicates: {m}"),
            Error::Step(m) => write!(f, "step error: {m}"),
            Error::Range(m) => write!(f, "range error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
