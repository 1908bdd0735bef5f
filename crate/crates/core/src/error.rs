use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong in this crate.
///
/// Variant names double as the stable machine-readable error codes
/// emitted by the command-line tool (see [`Error::code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimMismatch {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("broken pairing between {left} and {right} at row {row}: {reason}")]
    BrokenPairing {
        left: String,
        right: String,
        row: usize,
        reason: String,
    },

    #[error("bad label {label} in split {split} at row {row}")]
    BadLabel { split: String, row: usize, label: i64 },

    #[error("non-finite value in split {split} at row {row}, column {col}")]
    NonFinite { split: String, row: usize, col: usize },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("row index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("row index {0} listed more than once")]
    DuplicateIndex(usize),

    #[error("no fitting pairs for the {0} direction")]
    EmptyDirection(&'static str),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("reference offset for the {0} direction has zero norm")]
    DegenerateReference(&'static str),

    #[error("invalid reference model: {0}")]
    InvalidReference(String),

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("loss became non-finite at iteration {0}")]
    NonFiniteLoss(usize),

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error("split {0} is empty")]
    EmptySplit(String),

    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("degenerate fold: {0}")]
    DegenerateFold(String),

    #[error("label {label} has {available} paired rows, {required} required")]
    InsufficientClassSamples {
        label: u8,
        available: usize,
        required: usize,
    },

    #[error("variant needs an extra pool of originals, but {0}")]
    MissingExtraPool(String),

    #[error("variant needs an external counterfactual split, none supplied")]
    MissingExternalSplit,

    #[error("bundle has no OOD sets")]
    NoOodSets,

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),

    #[error("every target dimension is constant")]
    AllTargetsConstant,

    #[error("row {0} has zero norm")]
    ZeroNormRow(usize),

    #[error("need at least {required} rows, found {found}")]
    TooFewRows { required: usize, found: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("json error in {path}: {message}")]
    Json { path: PathBuf, message: String },
}

impl Error {
    /// Stable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedHeader { .. } => "MalformedHeader",
            Error::DimMismatch { .. } => "DimMismatch",
            Error::BrokenPairing { .. } => "BrokenPairing",
            Error::BadLabel { .. } => "BadLabel",
            Error::NonFinite { .. } => "NonFinite",
            Error::Manifest(_) => "Manifest",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::DuplicateIndex(_) => "DuplicateIndex",
            Error::EmptyDirection(_) => "EmptyDirection",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::DegenerateReference(_) => "DegenerateReference",
            Error::InvalidReference(_) => "InvalidReference",
            Error::SingleClass => "SingleClass",
            Error::NonFiniteLoss(_) => "NonFiniteLoss",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::EmptySplit(_) => "EmptySplit",
            Error::TooFewSamples(_) => "TooFewSamples",
            Error::DegenerateFold(_) => "DegenerateFold",
            Error::InsufficientClassSamples { .. } => "InsufficientClassSamples",
            Error::MissingExtraPool(_) => "MissingExtraPool",
            Error::MissingExternalSplit => "MissingExternalSplit",
            Error::NoOodSets => "NoOodSets",
            Error::InvalidExperiment(_) => "InvalidExperiment",
            Error::ShapeMismatch(..) => "ShapeMismatch",
            Error::AllTargetsConstant => "AllTargetsConstant",
            Error::ZeroNormRow(_) => "ZeroNormRow",
            Error::TooFewRows { .. } => "TooFewRows",
            Error::Io { .. } => "Io",
            Error::Csv { .. } => "Csv",
            Error::Json { .. } => "Json",
        }
    }

    /// True for errors caused by invalid input data or configuration, as
    /// opposed to runtime or numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MalformedHeader { .. }
                | Error::DimMismatch { .. }
                | Error::BrokenPairing { .. }
                | Error::BadLabel { .. }
                | Error::NonFinite { .. }
                | Error::Manifest(_)
                | Error::IndexOutOfRange { .. }
                | Error::DuplicateIndex(_)
                | Error::InvalidConfig(_)
                | Error::InvalidExperiment(_)
                | Error::InsufficientClassSamples { .. }
                | Error::MissingExtraPool(_)
                | Error::MissingExternalSplit
                | Error::NoOodSets
                | Error::Csv { .. }
                | Error::Json { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
