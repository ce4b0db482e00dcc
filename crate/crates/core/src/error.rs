use std::path::PathBuf;

use thiserror::Error;

use crate::model::FlowId;

#[derive(Debug, Error)]
pub enum LoftError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("packet timestamp {got_ns} ns precedes previous packet at {prev_ns} ns")]
    OutOfOrder { prev_ns: u64, got_ns: u64 },

    #[error("major cycle {requested} is not complete (current major cycle is {current})")]
    IncompleteMajorCycle { requested: u64, current: u64 },

    #[error("major cycle {0} is no longer held by the archive")]
    ArchiveEvicted(u64),

    #[error("flow table full: capacity {capacity} reached while inserting flow {flow}")]
    TableFull { capacity: usize, flow: FlowId },

    #[error("miss rate must lie in [0, 1), got {0}")]
    MissRate(f64),

    #[error("trace {path}: {reason}")]
    Trace { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T, E = LoftError> = std::result::Result<T, E>;
