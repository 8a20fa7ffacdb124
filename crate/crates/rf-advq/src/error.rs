//! Crate-wide error type.

use std::fmt;

/// Errors produced by waveform synthesis, model training, attacks and artifact IO.
#[derive(Debug)]
pub enum RfError {
    /// A modulation scheme was asked for something it cannot provide
    /// (e.g. a static constellation for 2FSK).
    UnsupportedScheme(String),
    /// Bad argument to an operation (bit counts, samples-per-symbol, labels, ...).
    InvalidArg(String),
    /// Tensor or dataset shape does not match what the operation expects.
    Shape(String),
    /// Input is degenerate (all-zero window, empty dataset, zero baseline, ...).
    Degenerate(String),
    /// Training did not meet its contract; carries the final accuracy or loss.
    Training(String),
    /// On-disk artifact is malformed (bad magic, unsupported version, truncation).
    Format(String),
    /// Underlying IO failure.
    Io(std::io::Error),
    /// A pipeline stage failed; names the stage so the CLI can report it.
    Stage {
        stage: &'static str,
        source: Box<RfError>,
    },
}

impl fmt::Display for RfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RfError::UnsupportedScheme(m) => write!(f, "unsupported scheme: {m}"),
            RfError::InvalidArg(m) => write!(f, "invalid argument: {m}"),
            RfError::Shape(m) => write!(f, "shape mismatch: {m}"),
            RfError::Degenerate(m) => write!(f, "degenerate input: {m}"),
            RfError::Training(m) => write!(f, "training failed: {m}"),
            RfError::Format(m) => write!(f, "format error: {m}"),
            RfError::Io(e) => write!(f, "io error: {e}"),
            RfError::Stage { stage, source } => write!(f, "stage {stage} failed: {source}"),
        }
    }
}

impl std::error::Error for RfError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            RfError::Io(e) => Some(e),
            RfError::Stage { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}

impl From<std::io::Error> for RfError {
    fn from(e: std::io::Error) -> Self {
        RfError::Io(e)
    }
}

impl RfError {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        RfError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Name of the failing stage, if this is a stage failure.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            RfError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, RfError>;
