use serde::{Deserialize, Serialize};

use crate::error::{check_time, Error, Result};
use crate::grid::Grid;
use crate::verdict::GridVerdict;

/// Slack used by the pointwise audit of a model function.
pub const AUDIT_TOL: f64 = 1e-12;

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

/// A nondecreasing map `m` with `0 <= m(t) <= t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeMap {
    Zero,
    Identity,
    /// `a t`.
    Linear { a: f64 },
    /// `a s log(1 + t / s)`; `s` defaults to 1.
    Log {
        a: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
    /// Linear interpolation through `(t, m(t))` knots starting at `(0, 0)`,
    /// constant after the last knot.
    Table { knots: Vec<(f64, f64)> },
}

impl TimeMap {
    pub fn linear(a: f64) -> Self {
        Self::Linear { a }
    }

    pub fn log(a: f64) -> Self {
        Self::Log { a, scale: 1.0 }
    }

    /// Raw value; no bound checks.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Identity => t,
            Self::Linear { a } => a * t,
            Self::Log { a, scale } => a * scale * (t / scale).ln_1p(),
            Self::Table { knots } => {
                let last = knots[knots.len() - 1];
                if t >= last.0 {
                    return last.1;
                }
                let i = knots.partition_point(|k| k.0 <= t);
                let (t0, v0) = knots[i - 1];
                let (t1, v1) = knots[i];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Identity => 1.0,
            Self::Linear { a } => *a,
            Self::Log { a, scale } => a / (1.0 + t / scale),
            Self::Table { knots } => {
                let last = knots[knots.len() - 1];
                if t >= last.0 {
                    return 0.0;
                }
                let i = knots.partition_point(|k| k.0 <= t);
                let (t0, v0) = knots[i - 1];
                let (t1, v1) = knots[i];
                (v1 - v0) / (t1 - t0)
            }
        }
    }

    /// Generalized inverse `inf { t >= 0 : m(t) >= y }`, `+∞` when `m` stays
    /// below `y`.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Zero => f64::INFINITY,
            Self::Identity => y,
            Self::Linear { a } => {
                if *a > 0.0 {
                    y / a
                } else {
                    f64::INFINITY
                }
            }
            Self::Log { a, scale } => {
                if *a > 0.0 {
                    scale * (y / (a * scale)).exp_m1()
                } else {
                    f64::INFINITY
                }
            }
            Self::Table { knots } => {
                let i = knots.partition_point(|k| k.1 < y);
                if i == knots.len() {
                    return f64::INFINITY;
                }
                let (t1, v1) = knots[i];
                let (t0, v0) = knots[i - 1];
                t0 + (t1 - t0) * (y - v0) / (v1 - v0)
            }
        }
    }

    /// The map `u ↦ c m(u / c)` that goes with rescaling time by `c`.
    pub fn rescaled(&self, c: f64) -> Self {
        match self {
            Self::Zero | Self::Identity | Self::Linear { .. } => self.clone(),
            Self::Log { a, scale } => Self::Log { a: *a, scale: scale * c },
            Self::Table { knots } => {
                Self::Table { knots: knots.iter().map(|(t, v)| (t * c, v * c)).collect() }
            }
        }
    }

    /// Parameter-level check that the map satisfies `0 <= m(t) <= t` and is
    /// nondecreasing for every `t >= 0`.
    pub fn check_params(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModelParameters(msg));
        match self {
            Self::Zero | Self::Identity => Ok(()),
            Self::Linear { a } if !(0.0..=1.0).contains(a) => bad(format!("linear slope {a} outside [0, 1]")),
            Self::Linear { .. } => Ok(()),
            Self::Log { a, scale } => {
                if !(0.0..=1.0).contains(a) {
                    bad(format!("log coefficient {a} outside [0, 1]"))
                } else if !(*scale > 0.0 && scale.is_finite()) {
                    bad(format!("log scale {scale} must be positive"))
                } else {
                    Ok(())
                }
            }
            Self::Table { knots } => {
                if knots.is_empty() || knots[0] != (0.0, 0.0) {
                    return bad("table must start at (0, 0)".into());
                }
                for w in knots.windows(2) {
                    let ((t0, v0), (t1, v1)) = (w[0], w[1]);
                    if !t1.is_finite() || t1 <= t0 {
                        return bad(format!("table times must strictly increase (at {t1})"));
                    }
                    if v1 < v0 {
                        return bad(format!("table decreases at t={t1}"));
                    }
                    if !(0.0..=t1).contains(&v1) {
                        return bad(format!("table value {v1} at t={t1} is outside [0, t]"));
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    Cold,
    Hot,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelFunctionValues {
    pub gamma: f64,
    pub omega: f64,
    pub delta: f64,
}

/// Pointwise audit of a model function over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFunctionAudit {
    pub gamma_valid: GridVerdict,
    pub omega_valid: GridVerdict,
    pub delta_increasing: GridVerdict,
    pub omega_minus_gamma_increasing: GridVerdict,
    pub omega_equals_gamma: GridVerdict,
}

/// `gamma` maps usual-environment age to milder-environment exposure;
/// `omega` gives the virtual age at switchover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFunction {
    pub gamma: TimeMap,
    pub omega: TimeMap,
}

impl ModelFunction {
    pub fn new(gamma: TimeMap, omega: TimeMap) -> Self {
        Self { gamma, omega }
    }

    pub fn cold() -> Self {
        Self::new(TimeMap::Zero, TimeMap::Zero)
    }

    pub fn hot() -> Self {
        Self::new(TimeMap::Identity, TimeMap::Identity)
    }

    pub fn check_params(&self) -> Result<()> {
        self.gamma.check_params()?;
        self.omega.check_params()
    }

    /// `delta(u) = u - omega(u)`.
    pub fn delta(&self, u: f64) -> f64 {
        u - self.omega.value(u)
    }

    pub fn eval(&self, t: f64) -> Result<ModelFunctionValues> {
        check_time(t)?;
        let slack = 1e-15 * t.max(1.0);
        let gamma = self.gamma.value(t);
        let omega = self.omega.value(t);
        for (which, value) in [("gamma", gamma), ("omega", omega)] {
            if !(value >= -slack && value <= t + slack) {
                return Err(Error::InvalidModelFunction { which, t, value });
            }
        }
        Ok(ModelFunctionValues { gamma, omega, delta: t - omega })
    }

    pub fn reduction(&self) -> Reduction {
        match (&self.gamma, &self.omega) {
            (TimeMap::Zero, TimeMap::Zero) => Reduction::Cold,
            (TimeMap::Identity, TimeMap::Identity) => Reduction::Hot,
            _ => Reduction::General,
        }
    }

    pub fn rescaled(&self, c: f64) -> Self {
        Self::new(self.gamma.rescaled(c), self.omega.rescaled(c))
    }

    pub fn validate(&self, grid: &Grid) -> ModelFunctionAudit {
        let ts = grid.points();
        let gamma: Vec<f64> = ts.iter().map(|&t| self.gamma.value(t)).collect();
        let omega: Vec<f64> = ts.iter().map(|&t| self.omega.value(t)).collect();
        let delta: Vec<f64> = ts.iter().zip(&omega).map(|(t, w)| t - w).collect();
        let spread: Vec<f64> = omega.iter().zip(&gamma).map(|(w, g)| w - g).collect();
        ModelFunctionAudit {
            gamma_valid: bounded_and_nondecreasing(ts, &gamma),
            omega_valid: bounded_and_nondecreasing(ts, &omega),
            delta_increasing: nondecreasing(ts, &delta),
            omega_minus_gamma_increasing: nondecreasing(ts, &spread),
            omega_equals_gamma: pointwise(ts, &spread, |d| d.abs()),
        }
    }
}

fn non_finite(values: &[f64]) -> Option<GridVerdict> {
    values
        .iter()
        .any(|v| !v.is_finite())
        .then(|| GridVerdict::Inconclusive { reason: "non-finite value on grid".into() })
}

fn pointwise(ts: &[f64], values: &[f64], excess: impl Fn(f64) -> f64) -> GridVerdict {
    if let Some(v) = non_finite(values) {
        return v;
    }
    GridVerdict::from_violations(
        ts.iter().zip(values).map(|(&t, &v)| (t, excess(v))).filter(|&(_, m)| m > AUDIT_TOL),
    )
}

fn nondecreasing(ts: &[f64], values: &[f64]) -> GridVerdict {
    if let Some(v) = non_finite(values) {
        return v;
    }
    GridVerdict::from_violations(
        (1..ts.len()).map(|i| (ts[i], values[i - 1] - values[i])).filter(|&(_, m)| m > AUDIT_TOL),
    )
}

fn bounded_and_nondecreasing(ts: &[f64], values: &[f64]) -> GridVerdict {
    if let Some(v) = non_finite(values) {
        return v;
    }
    let bounds = ts
        .iter()
        .zip(values)
        .map(|(&t, &v)| (t, (-v).max(v - t)))
        .filter(|&(_, m)| m > AUDIT_TOL);
    let monotone =
        (1..ts.len()).map(|i| (ts[i], values[i - 1] - values[i])).filter(|&(_, m)| m > AUDIT_TOL);
    GridVerdict::from_violations(bounds.chain(monotone))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::default_for(10.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        let mf = ModelFunction::new(TimeMap::linear(0.2), TimeMap::linear(0.6));
        let v = mf.eval(0.0).unwrap();
        assert_eq!((v.gamma, v.omega, v.delta), (0.0, 0.0, 0.0));

        let v = ModelFunction::hot().eval(5.0).unwrap();
        assert_eq!((v.gamma, v.omega, v.delta), (5.0, 5.0, 0.0));

        let mf = ModelFunction::new(TimeMap::log(0.5), TimeMap::linear(0.7));
        let v = mf.eval(1.0).unwrap();
        assert!((v.gamma - 0.5 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((v.gamma - 0.346574).abs() < 1e-6);
        assert!((v.omega - 0.7).abs() < 1e-15);
        assert!((v.delta - 0.3).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_out_of_range_values() {
        let mf = ModelFunction::new(TimeMap::linear(1.5), TimeMap::Zero);
        assert!(matches!(mf.eval(1.0), Err(Error::InvalidModelFunction { which: "gamma", .. })));
        let mf = ModelFunction::new(TimeMap::Zero, TimeMap::log(2.0));
        assert!(matches!(mf.eval(1.0), Err(Error::InvalidModelFunction { which: "omega", .. })));
        assert!(mf.eval(-1.0).is_err());
        assert!(mf.check_params().is_err());
    }

    #[test]
    fn audit_cold() {
        let a = ModelFunction::cold().validate(&grid());
        assert!(a.gamma_valid.holds());
        assert!(a.omega_valid.holds());
        assert!(a.delta_increasing.holds());
        assert!(a.omega_equals_gamma.holds());
    }

    #[test]
    fn audit_log_gamma_linear_omega() {
        for (a, b) in [(0.3, 0.6), (0.5, 0.5), (0.1, 1.0)] {
            let audit = ModelFunction::new(TimeMap::log(a), TimeMap::linear(b)).validate(&grid());
            assert!(audit.omega_minus_gamma_increasing.holds(), "a={a} b={b}");
            assert!(audit.delta_increasing.holds(), "a={a} b={b}");
        }
    }

    #[test]
    fn audit_identity_gamma_half_omega() {
        let audit = ModelFunction::new(TimeMap::Identity, TimeMap::linear(0.5)).validate(&grid());
        assert!(audit.delta_increasing.holds());
        assert!(audit.omega_valid.holds());
        assert!(audit.gamma_valid.holds());
        assert!(audit.omega_equals_gamma.fails());
        assert!(audit.omega_minus_gamma_increasing.fails());
    }

    #[test]
    fn audit_flags_bad_slope() {
        let audit = ModelFunction::new(TimeMap::linear(1.2), TimeMap::Zero).validate(&grid());
        assert!(audit.gamma_valid.fails());
    }

    #[test]
    fn reductions() {
        assert_eq!(ModelFunction::cold().reduction(), Reduction::Cold);
        assert_eq!(ModelFunction::hot().reduction(), Reduction::Hot);
        let mf = ModelFunction::new(TimeMap::linear(0.5), TimeMap::linear(0.5));
        assert_eq!(mf.reduction(), Reduction::General);
    }

    #[test]
    fn inverses() {
        assert_eq!(TimeMap::Zero.inverse(0.3), f64::INFINITY);
        assert_eq!(TimeMap::Zero.inverse(0.0), 0.0);
        assert_eq!(TimeMap::linear(0.5).inverse(1.0), 2.0);
        let m = TimeMap::log(0.4);
        let t = m.inverse(0.7);
        assert!((m.value(t) - 0.7).abs() < 1e-14);
        let table = TimeMap::Table { knots: vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.5), (4.0, 1.0)] };
        table.check_params().unwrap();
        assert_eq!(table.inverse(0.5), 1.0);
        assert_eq!(table.inverse(0.75), 3.0);
        assert_eq!(table.inverse(1.5), f64::INFINITY);
        assert_eq!(table.value(10.0), 1.0);
    }

    #[test]
    fn table_validation() {
        assert!(TimeMap::Table { knots: vec![(0.0, 0.0), (1.0, 1.5)] }.check_params().is_err());
        assert!(TimeMap::Table { knots: vec![(0.0, 0.1)] }.check_params().is_err());
        assert!(TimeMap::Table { knots: vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.4)] }.check_params().is_err());
    }

    #[test]
    fn rescaling_commutes_with_evaluation() {
        let c = 2.0;
        for m in [TimeMap::log(0.3), TimeMap::linear(0.6), TimeMap::Table { knots: vec![(0.0, 0.0), (1.0, 0.4)] }] {
            let r = m.rescaled(c);
            for &u in &[0.0, 0.3, 1.7, 5.0] {
                assert!((r.value(u) - c * m.value(u / c)).abs() < 1e-14, "{m:?} at {u}");
            }
        }
    }

    #[test]
    fn serde_format() {
        let mf: ModelFunction = serde_json::from_str(
            r#"{"gamma": {"kind": "linear", "a": 0.2}, "omega": {"kind": "log", "a": 0.6}}"#,
        )
        .unwrap();
        assert_eq!(mf, ModelFunction::new(TimeMap::linear(0.2), TimeMap::log(0.6)));
        let json = serde_json::to_string(&mf).unwrap();
        assert_eq!(json, r#"{"gamma":{"kind":"linear","a":0.2},"omega":{"kind":"log","a":0.6}}"#);
        let cold: ModelFunction =
            serde_json::from_str(r#"{"gamma":{"kind":"zero"},"omega":{"kind":"identity"}}"#).unwrap();
        assert_eq!(cold.omega, TimeMap::Identity);
    }
}
