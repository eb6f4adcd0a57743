use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violated a precondition (range, finiteness, normalization).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A drive schedule is self-contradictory (pulse gap, fall before rise).
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    /// No drive schedule exists for the requested storage length. Carries the
    /// first loop traversal whose retardation target cannot be met.
    #[error("infeasible schedule at traversal {traversal}: {reason}")]
    InfeasibleSchedule { traversal: u32, reason: String },

    /// A query fell outside the domain the data covers.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A state lost all amplitude, so the requested quantity is undefined.
    #[error("degenerate state: {0}")]
    DegenerateState(String),
}

pub type Result<T> = std::result::Result<T, Error>;
