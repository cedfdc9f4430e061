//! Order checks listed in the config's `checks` section.

use serde::Serialize;
use standby_core::orders::{Delta2Method, Direction, OrderVerdict};
use standby_core::{check_order, sp_series_delta2, OrderKind};

use crate::config::{CheckDef, ExperimentConfig, Subject};
use crate::error::{BenchError, Outcome, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<Direction>,
    pub verdict: OrderVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
    pub outcome: Outcome,
}

/// `Both` satisfies either single direction; without an expectation only an
/// inconclusive verdict is flagged.
pub fn expectation_outcome(got: Direction, expect: Option<Direction>) -> Outcome {
    match (got, expect) {
        (Direction::Inconclusive, _) => Outcome::Inconclusive,
        (_, None) => Outcome::Pass,
        (g, Some(e)) if g == e => Outcome::Pass,
        (Direction::Both, Some(Direction::ALeB | Direction::BLeA)) => Outcome::Pass,
        _ => Outcome::Fail,
    }
}

pub fn run_check(cfg: &ExperimentConfig, def: &CheckDef) -> Result<CheckResult> {
    let (a, b) = (cfg.subject(&def.a)?, cfg.subject(&def.b)?);
    let (verdict, delta2) = if def.kind == OrderKind::Sp {
        let (Subject::System(v1), Subject::System(v2)) = (a, b) else {
            return Err(BenchError::Config(format!("sp check `{}` needs two systems", def.label())));
        };
        let r = sp_series_delta2(v1, v2, Delta2Method::Quadrature, cfg.tolerance)?;
        (r.order_verdict(), Some(r.delta2))
    } else {
        let grid = cfg.grid_with_horizon(a.horizon().max(b.horizon()))?;
        (check_order(a.lifetime(), b.lifetime(), def.kind, &grid, cfg.tolerance)?, None)
    };
    Ok(CheckResult {
        name: def.label(),
        expect: def.expect,
        outcome: expectation_outcome(verdict.direction, def.expect),
        verdict,
        delta2,
    })
}

pub fn run_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    cfg.checks.iter().map(|c| run_check(cfg, c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn both_satisfies_single_directions() {
        assert_eq!(expectation_outcome(Direction::Both, Some(Direction::BLeA)), Outcome::Pass);
        assert_eq!(expectation_outcome(Direction::ALeB, Some(Direction::BLeA)), Outcome::Fail);
        assert_eq!(expectation_outcome(Direction::Neither, None), Outcome::Pass);
        assert_eq!(expectation_outcome(Direction::Inconclusive, None), Outcome::Inconclusive);
    }

    #[test]
    fn runs_configured_checks() {
        let doc = r#"{
            "distributions": {"A": {"kind": "exponential", "rate": 2.0}, "B": {"kind": "exponential", "rate": 1.0}},
            "checks": [
                {"kind": "hr", "a": "A", "b": "B", "expect": "A_le_B"},
                {"name": "reversed", "kind": "st", "a": "B", "b": "A", "expect": "A_le_B"}
            ]
        }"#;
        let cfg = ExperimentConfig::parse(doc, Path::new(".")).unwrap();
        let r = run_checks(&cfg).unwrap();
        assert_eq!(r[0].name, "hr:A:B");
        assert_eq!(r[0].outcome, Outcome::Pass);
        assert_eq!(r[1].outcome, Outcome::Fail);
    }
}
