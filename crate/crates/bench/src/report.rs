//! Reproduction reports.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{BenchError, Outcome, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// The conclusion the check is compared against.
    pub expected: String,
    pub outcome: Outcome,
    pub detail: Value,
}

/// A computed quantity reported for context; never affects the outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRecord {
    pub system: String,
    pub quantity: String,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRecord {
    pub name: String,
    pub estimate: f64,
    pub standard_error: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproReport {
    pub example: String,
    pub parameters: Value,
    pub checks: Vec<CheckRecord>,
    pub diagnostics: Vec<Diagnostic>,
    pub curves: Vec<CurveRecord>,
    pub intervals: Vec<IntervalRecord>,
    pub overall: Outcome,
}

impl ReproReport {
    pub fn new(example: impl Into<String>, parameters: Value) -> Self {
        Self {
            example: example.into(),
            parameters,
            checks: Vec::new(),
            diagnostics: Vec::new(),
            curves: Vec::new(),
            intervals: Vec::new(),
            overall: Outcome::Pass,
        }
    }

    pub fn push_check(&mut self, check: CheckRecord) {
        self.checks.push(check);
        self.overall = Outcome::all(self.checks.iter().map(|c| c.outcome));
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    std::fs::write(path, to_json(value)).map_err(|e| BenchError::io(path, e))
}
