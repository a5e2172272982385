use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by model construction, inference and learning.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    Dimension {
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("`{field}` row {row} sums to {sum} (expected 1)")]
    Stochasticity { field: String, row: usize, sum: f64 },

    #[error("`{field}` row {row} column {col} holds invalid probability {value}")]
    InvalidProbability {
        field: String,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("invalid topology for chain {chain}: {reason}")]
    Topology { chain: usize, reason: String },

    #[error("invalid network structure: {0}")]
    Structure(String),

    #[error("parent graph contains a cycle through variable {var}")]
    CyclicGraph { var: usize },

    #[error("joint space of {size} exceeds the size cap of {cap}")]
    SizeCap { size: u128, cap: usize },

    #[error("enumeration over {paths} paths exceeds the limit of {limit}")]
    InstanceTooLarge { paths: u128, limit: usize },

    #[error("observation sequence is empty")]
    EmptySequence,

    #[error("symbol {symbol} at position {t} is out of range for {num_symbols} symbols")]
    SymbolOutOfRange {
        t: usize,
        symbol: usize,
        num_symbols: usize,
    },

    #[error("observation at position {t} has {found} chain symbols, expected {expected}")]
    ChainArity {
        t: usize,
        expected: usize,
        found: usize,
    },

    #[error("sequence length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{}", impossible_message(*.sequence, *.t))]
    ImpossibleObservation { sequence: Option<usize>, t: usize },

    #[error("all particle weights are zero at position {t}")]
    DegenerateWeights { t: usize },

    #[error("invalid interval [{start}, {end}]: start must be strictly before end")]
    InvalidInterval { start: f64, end: f64 },

    #[error("no training data")]
    EmptyData,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}", parse_message(.path.as_deref(), *.line, *.column, .message))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn impossible_message(sequence: Option<usize>, t: usize) -> String {
    match sequence {
        Some(s) => format!("sequence {s}: observation at position {t} has zero probability under the model"),
        None => format!("observation at position {t} has zero probability under the model"),
    }
}

fn parse_message(path: Option<&std::path::Path>, line: usize, column: usize, message: &str) -> String {
    let mut out = String::new();
    if let Some(p) = path {
        out.push_str(&format!("{}:", p.display()));
    }
    out.push_str(&format!("{line}"));
    if column > 0 {
        out.push_str(&format!(":{column}"));
    }
    out.push_str(&format!(": {message}"));
    out
}

impl Error {
    /// Attach a file path to parse errors that were produced from in-memory text.
    pub fn with_path(self, path: impl Into<PathBuf>) -> Self {
        match self {
            Error::Parse {
                path: None,
                line,
                column,
                message,
            } => Error::Parse {
                path: Some(path.into()),
                line,
                column,
                message,
            },
            other => other,
        }
    }

    pub(crate) fn in_sequence(self, index: usize) -> Self {
        match self {
            Error::ImpossibleObservation { t, .. } => Error::ImpossibleObservation {
                sequence: Some(index),
                t,
            },
            other => other,
        }
    }
}
