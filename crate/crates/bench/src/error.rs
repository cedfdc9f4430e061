use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("unknown hypothesis `{0}`")]
    UnknownHypothesis(String),

    /// Grid results contradict each other or an applicable theorem.
    #[error("numerical defect: {0}")]
    NumericalDefect(String),

    #[error(transparent)]
    Core(#[from] standby_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::ConstraintViolation(_) | Self::UnknownHypothesis(_) | Self::Io { .. } => 64,
            Self::NumericalDefect(_) | Self::Core(_) => 2,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().display().to_string(), source }
    }
}

/// Result of one check against its expected conclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Pass => 0,
            Self::Fail => 1,
            Self::Inconclusive => 2,
        }
    }

    /// A failure outranks an inconclusive check.
    pub fn combine(self, other: Self) -> Self {
        match (self, other) {
            (Self::Fail, _) | (_, Self::Fail) => Self::Fail,
            (Self::Inconclusive, _) | (_, Self::Inconclusive) => Self::Inconclusive,
            _ => Self::Pass,
        }
    }

    pub fn all(outcomes: impl IntoIterator<Item = Self>) -> Self {
        outcomes.into_iter().fold(Self::Pass, Self::combine)
    }
}
