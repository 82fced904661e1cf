//! Build-time wiring errors and run-time faults.

use std::fmt;

use thiserror::Error;

/// Rejected before execution: shape/type mismatches, bad wiring, unsupported
/// carrier forms. Networks are fully elaborated before they run, so every
/// shape error surfaces here.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("shape mismatch wiring {from} ({from_shape}) to {to} ({to_shape})")]
    ShapeMismatch {
        from: String,
        from_shape: String,
        to: String,
        to_shape: String,
    },
    #[error("port {0} wired more than once")]
    DoubleWired(String),
    #[error("no such port: {0}")]
    NoSuchPort(String),
    #[error("no such child process: {0}")]
    NoSuchChild(String),
    #[error("duplicate name: {0}")]
    DuplicateName(String),
    #[error("invalid path {path:?} into shape {shape}")]
    BadPath { shape: String, path: Vec<usize> },
    #[error("unsupported carrier form: {0}")]
    UnsupportedCarrier(String),
    #[error("value does not match carrier shape {shape}: {value}")]
    ValueShapeMismatch { shape: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

/// One blocked communication in a deadlock report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockedPort {
    pub process: String,
    pub port: String,
    pub channel: String,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Send,
    Recv,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Send => write!(f, "send"),
            Direction::Recv => write!(f, "recv"),
        }
    }
}

/// The network went quiescent with outputs still missing: every pending
/// communication is listed with the port it is stuck on.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeadlockReport {
    pub blocked: Vec<BlockedPort>,
    pub missing_outputs: Vec<String>,
}

impl fmt::Display for DeadlockReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "deadlock: {} blocked communication(s), missing outputs: {}",
            self.blocked.len(),
            self.missing_outputs.join(", ")
        )?;
        for b in &self.blocked {
            writeln!(
                f,
                "  {} blocked on {} at port {} (channel {})",
                b.process, b.direction, b.port, b.channel
            )?;
        }
        Ok(())
    }
}

/// Run-time failure of a network execution.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("{0}")]
    Deadlock(DeadlockReport),
    #[error("malformed stream on channel {channel}: {detail}")]
    StreamProtocol { channel: String, detail: String },
    #[error("type mismatch on channel {channel}: expected {expected}, sent {got}")]
    TypeMismatch {
        channel: String,
        expected: String,
        got: String,
    },
    #[error("process {process} faulted: {detail}")]
    Process { process: String, detail: String },
    #[error("missing input value: {0}")]
    MissingInput(String),
    #[error("unknown input: {0}")]
    UnknownInput(String),
    #[error("epoch limit {0} exceeded (livelocked network?)")]
    EpochLimit(u64),
    #[error("run aborted")]
    Aborted,
    #[error("build error: {0}")]
    Build(#[from] BuildError),
}
