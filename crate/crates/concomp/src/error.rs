use thiserror::Error;

use crate::protocol::Transcript;

/// Errors raised by mechanisms, the enumeration oracle and the reduction tables.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} does not support enumeration")]
    NotEnumerable(String),

    #[error("post-processing loop exceeded {bound} round trips")]
    LoopBound { bound: usize },

    #[error("interaction exceeded {rounds} rounds")]
    RoundBound {
        rounds: usize,
        partial: Box<Transcript>,
    },

    #[error("enumeration exceeded node budget {budget} after {nodes} nodes and {leaves} leaves")]
    NodeBudget {
        budget: usize,
        nodes: usize,
        leaves: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scripted noise source exhausted")]
    NoiseExhausted,

    #[error("unknown registry id `{0}`")]
    UnknownId(String),

    #[error("infeasible constraint system at {0}")]
    Infeasible(String),

    #[error("zero denominator on reachable transcript {0}")]
    ZeroDenominator(String),

    #[error("mechanism did not halt within horizon {0}")]
    NoHalt(usize),

    #[error("adversary finished without a guess")]
    MissingGuess,

    #[error("protocol violation: {0}")]
    Protocol(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
