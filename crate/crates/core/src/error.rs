use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the simulator.
///
/// Variants are grouped by the exit code the CLI maps them to, see
/// [`Error::category`].
#[derive(Debug, Error)]
pub enum Error {
    // -- data errors --------------------------------------------------------
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("malformed record on line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("corpus contains no documents")]
    EmptyCorpus,
    #[error("keyword file contains no usable phrases")]
    EmptyKeywordList,
    #[error("corpus produced no tokens")]
    NoTokens,
    #[error("no keyword hits any document")]
    NoKeywordHits,
    #[error("control set contains no positive documents")]
    NoPositivesInControl,
    #[error("target recall unreachable: {required} positives required, {available} available")]
    TargetUnreachable { required: usize, available: usize },

    // -- config errors ------------------------------------------------------
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("configuration inconsistent: {0}")]
    ConfigInconsistent(String),

    // -- runtime errors -----------------------------------------------------
    #[error("training set contains a single class")]
    DegenerateTraining,
    #[error("training loss became non-finite at iteration {0}")]
    NonFiniteLoss(usize),
    #[error("feature position {position} out of range for model of dimension {dim}")]
    DimensionMismatch { position: usize, dim: usize },
    #[error("selection pool is empty")]
    EmptyPool,
    #[error("scored pool holds {available} positives, {required} required")]
    InsufficientPositives { required: usize, available: usize },
    #[error("trace {experiment} has no round {round}")]
    MissingRound { experiment: String, round: usize },
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Runtime,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 1,
            ErrorCategory::Data => 2,
            ErrorCategory::Runtime => 3,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            InvalidConfig(_) | ConfigInconsistent(_) => ErrorCategory::Config,
            MissingFile(_)
            | MalformedRecord { .. }
            | DuplicateId(_)
            | EmptyCorpus
            | EmptyKeywordList
            | NoTokens
            | NoKeywordHits
            | NoPositivesInControl
            | TargetUnreachable { .. }
            | Csv(_) => ErrorCategory::Data,
            _ => ErrorCategory::Runtime,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}
