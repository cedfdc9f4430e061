use serde::{Deserialize, Serialize};

/// Outcome of a pointwise test over a finite grid.
///
/// `Holds` means "holds at every grid point within tolerance"; it is never a
/// statement about the continuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum GridVerdict {
    Holds,
    FailsAt { t: f64, margin: f64 },
    Inconclusive { reason: String },
}

impl GridVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, GridVerdict::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self, GridVerdict::FailsAt { .. })
    }

    /// Folds a sequence of `(t, margin)` violations (margin > 0 means violated
    /// beyond tolerance) into a verdict carrying the worst witness.
    pub(crate) fn from_violations<I>(violations: I) -> Self
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        violations
            .into_iter()
            .fold(None::<(f64, f64)>, |worst, (t, m)| match worst {
                Some((_, wm)) if wm >= m => worst,
                _ => Some((t, m)),
            })
            .map_or(GridVerdict::Holds, |(t, margin)| GridVerdict::FailsAt { t, margin })
    }
}
