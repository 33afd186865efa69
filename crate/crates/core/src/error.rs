use std::io;

use thiserror::Error;

/// Every failure the library can report. Variant names double as the
/// diagnostic names printed by the CLI and the codes exposed over FFI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("MalformedLine: line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("UnbalancedExit: line {line}: exit of `{function}` {detail}")]
    UnbalancedExit {
        line: usize,
        function: String,
        detail: String,
    },

    #[error("EmptyTrace: trace contains no records")]
    EmptyTrace,

    #[error("TraceTooShort: trace has {records} records, word length {l} required")]
    TraceTooShort { records: usize, l: usize },

    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),

    #[error("NonFinite: fingerprint component {0} is saturated")]
    NonFinite(usize),

    #[error("GridMismatch: {0}")]
    GridMismatch(String),

    #[error("UnsortedInput: distances must be ascending (position {0})")]
    UnsortedInput(usize),

    #[error("EmptyCorpus: no candidate traces to rank against")]
    EmptyCorpus,

    #[error("DuplicateTraceId: `{0}` already in index")]
    DuplicateTraceId(String),

    #[error("FormatVersionMismatch: expected version {expected}, found {found}")]
    FormatVersionMismatch { expected: u32, found: u32 },

    #[error("CorruptIndex: {0}")]
    CorruptIndex(String),

    #[error("RawTracesUnavailable: index was built without raw trace retention")]
    RawTracesUnavailable,

    #[error("TooFewTraces: {traces} traces cannot fill {folds} folds")]
    TooFewTraces { traces: usize, folds: usize },

    #[error("SpecNotInGrid: {0}")]
    SpecNotInGrid(String),

    #[error("Io: {0}")]
    Io(#[from] io::Error),

    #[error("Csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable name of the variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MalformedLine { .. } => "MalformedLine",
            Error::UnbalancedExit { .. } => "UnbalancedExit",
            Error::EmptyTrace => "EmptyTrace",
            Error::TraceTooShort { .. } => "TraceTooShort",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::NonFinite(_) => "NonFinite",
            Error::GridMismatch(_) => "GridMismatch",
            Error::UnsortedInput(_) => "UnsortedInput",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::DuplicateTraceId(_) => "DuplicateTraceId",
            Error::FormatVersionMismatch { .. } => "FormatVersionMismatch",
            Error::CorruptIndex(_) => "CorruptIndex",
            Error::RawTracesUnavailable => "RawTracesUnavailable",
            Error::TooFewTraces { .. } => "TooFewTraces",
            Error::SpecNotInGrid(_) => "SpecNotInGrid",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
