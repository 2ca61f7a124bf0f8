//! Error types shared across the library.

use std::fmt;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model construction and evaluation.
///
/// Architectural infeasibility during scheduling is deliberately *not* an
/// `Error`; it is signalled through [`crate::perf::Infeasible`] because the
/// design-space search consumes it as data.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a precondition (negative area, operand out of
    /// range, empty dataset, ...).
    InvalidArgument(String),
    /// The die is too large for even a single unit to fit on the wafer.
    NoFeasibleDie { die_area_mm2: f64 },
    /// Exhaustive error characterization was requested for a width whose
    /// operand space is too large to enumerate.
    UnsupportedWidth { width: u32 },
    /// Two multiplier specs in the same library collapse to the same id.
    DuplicateId(String),
    /// A multiplier record is missing a per-node area entry.
    IncompleteRecord { id: String, node: String },
    /// A multiplier record is missing the accuracy drop for a workload.
    IncompleteLibrary { id: String, workload: String },
    /// Invalid configuration: bad tables, empty gene domains, malformed
    /// files, unknown node names.
    Config(String),
    /// A resource guard tripped (e.g. exhaustive baseline space too large).
    Guard(String),
    /// Underlying I/O failure.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NoFeasibleDie { die_area_mm2 } => {
                write!(f, "no die of {die_area_mm2} mm^2 fits on the wafer")
            }
            Error::UnsupportedWidth { width } => {
                write!(f, "unsupported multiplier width {width} (exhaustive characterization is limited to width <= 12)")
            }
            Error::DuplicateId(id) => write!(f, "duplicate multiplier id `{id}`"),
            Error::IncompleteRecord { id, node } => {
                write!(f, "multiplier `{id}` has no area entry for node `{node}`")
            }
            Error::IncompleteLibrary { id, workload } => {
                write!(
                    f,
                    "multiplier `{id}` has no accuracy drop recorded for workload `{workload}`"
                )
            }
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Guard(msg) => write!(f, "guard tripped: {msg}"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Config(err.to_string())
    }
}
