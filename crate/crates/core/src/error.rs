use std::path::PathBuf;

use thiserror::Error;

/// Failure categories used to pick a process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Infeasible,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },
    #[error("unsupported activation `{activation}` in layer {layer}; only ReLU converts to rate-coded IF neurons")]
    UnsupportedActivation { layer: usize, activation: String },
    #[error("unit {unit} does not fit an empty {crossbar}x{crossbar} crossbar")]
    InfeasibleUnit { unit: usize, crossbar: usize },
    #[error("scaled rate {rate} on connection {src}->{dst} exceeds the maximum {max}")]
    RateOverflow {
        src: usize,
        dst: usize,
        rate: u64,
        max: u64,
    },
    #[error("inconsistent rates: no positive repetition vector; violating channels {channels:?}")]
    Inconsistent { channels: Vec<usize> },
    #[error("graph is not homogeneous: channel {channel} has production {prod} and consumption {cons}")]
    NotHomogeneous { channel: usize, prod: u64, cons: u64 },
    #[error("deadlock: strongly connected actors {actors:?} have no channel with enough initial tokens")]
    Deadlock { actors: Vec<usize> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("actor {actor} produces {rate} tokens per firing but tile {tile} buffers only {capacity}")]
    Capacity {
        actor: usize,
        tile: usize,
        rate: u64,
        capacity: u64,
    },
    #[error("actor {actor} ({rows} rows, {cols} columns, {synapses} synapses) does not fit the {crossbar}x{crossbar} crossbar of tile {tile}")]
    Fit {
        actor: usize,
        tile: usize,
        rows: usize,
        cols: usize,
        synapses: usize,
        crossbar: usize,
    },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("runtime deadlock at tick {time}: no actor can fire")]
    RuntimeDeadlock { time: u64 },
    #[error("no periodic phase found within {budget} iterations")]
    NoPeriod { budget: usize },
    #[error("actor {actor} is missing from the single-tile order")]
    Coverage { actor: usize },
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::Io { .. }
            | Error::Invalid { .. }
            | Error::UnsupportedActivation { .. }
            | Error::RateOverflow { .. }
            | Error::Inconsistent { .. }
            | Error::NotHomogeneous { .. }
            | Error::DimensionMismatch { .. }
            | Error::Coverage { .. } => ErrorClass::Validation,
            Error::InfeasibleUnit { .. }
            | Error::Deadlock { .. }
            | Error::Capacity { .. }
            | Error::Fit { .. }
            | Error::Infeasible(_) => ErrorClass::Infeasible,
            Error::RuntimeDeadlock { .. } | Error::NoPeriod { .. } | Error::Overflow(_) => {
                ErrorClass::Internal
            }
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
