//! Reproduction of the worked allocation examples.

use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;
use standby_core::orders::{Delta2Method, Direction, OrderVerdict, SpVerdict};
use standby_core::standby::TimeMap;
use standby_core::systems::{empirical_survival, enumerate_allocations, q_parallel_cdf, AllocationModel, NodeDescriptor, Registry};
use standby_core::{check_order, sp_series_delta2, Grid, Lifetime, LifetimeDistribution, ModelFunction, OrderKind, SystemSpec, Topology};

use crate::config::{ExperimentConfig, OneOrMany, ReproduceParams};
use crate::curve::{sample, Curve, Quantity};
use crate::error::{BenchError, Outcome, Result};
use crate::report::{CheckRecord, CurveRecord, Diagnostic, IntervalRecord, ReproReport};

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExampleId {
    EX3_1,
    EX3_2,
    EX4_1,
    EX4_2,
}

impl ExampleId {
    pub const ALL: [ExampleId; 4] = [Self::EX3_1, Self::EX3_2, Self::EX4_1, Self::EX4_2];

    pub fn name(self) -> &'static str {
        match self {
            Self::EX3_1 => "EX3_1",
            Self::EX3_2 => "EX3_2",
            Self::EX4_1 => "EX4_1",
            Self::EX4_2 => "EX4_2",
        }
    }

    fn topology(self) -> Topology {
        match self {
            Self::EX3_1 | Self::EX3_2 => Topology::Series,
            Self::EX4_1 | Self::EX4_2 => Topology::Parallel,
        }
    }
}

impl FromStr for ExampleId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| BenchError::Config(format!("unknown example `{s}`; expected one of EX3_1, EX3_2, EX4_1, EX4_2")))
    }
}

/// Exponential rates and model-function coefficients of an example.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleParams {
    /// Component rates; entries past the second are plain components.
    pub lambda: Vec<f64>,
    pub mu: [f64; 2],
    /// `γ` coefficients, one per standby, or one shared.
    pub a: Vec<f64>,
    /// `ω` coefficients; empty where `ω = γ`.
    pub b: Vec<f64>,
}

fn violated(id: ExampleId, what: &str, detail: String) -> BenchError {
    BenchError::ConstraintViolation(format!("{} requires {what} (got {detail})", id.name()))
}

fn pair(id: ExampleId, name: &str, v: Option<&Vec<f64>>, default: [f64; 2]) -> Result<[f64; 2]> {
    match v.map(Vec::as_slice) {
        None => Ok(default),
        Some(&[p, q]) => Ok([p, q]),
        Some(other) => Err(BenchError::Config(format!("{}: `{name}` needs two values, got {}", id.name(), other.len()))),
    }
}

fn coeffs(id: ExampleId, name: &str, v: Option<&OneOrMany>, default: &[f64]) -> Result<Vec<f64>> {
    let values = v.map_or_else(|| default.to_vec(), OneOrMany::values);
    if values.len() != default.len() {
        return Err(BenchError::Config(format!(
            "{}: `{name}` needs {} value(s), got {}",
            id.name(),
            default.len(),
            values.len()
        )));
    }
    Ok(values)
}

/// Defaults merged with `overrides`, checked against the example's
/// stated constraints.
pub fn example_params(id: ExampleId, overrides: &ReproduceParams) -> Result<ExampleParams> {
    let lambda = overrides.lambda.clone().unwrap_or_else(|| vec![2.0, 1.0]);
    if lambda.len() < 2 {
        return Err(BenchError::Config(format!("{}: `lambda` needs at least two rates", id.name())));
    }
    for (name, v) in lambda.iter().map(|v| ("lambda", v)).chain(overrides.mu.iter().flatten().map(|v| ("mu", v))) {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(violated(id, &format!("{name} > 0"), format!("{name} = {v}")));
        }
    }
    let (l1, l2) = (lambda[0], lambda[1]);
    if l1 < l2 {
        return Err(violated(id, "lambda1 >= lambda2", format!("lambda1 = {l1}, lambda2 = {l2}")));
    }
    let p = match id {
        ExampleId::EX3_1 | ExampleId::EX3_2 => {
            let mu = pair(id, "mu", overrides.mu.as_ref(), [1.0, 2.0])?;
            let a = coeffs(id, "a", overrides.a.as_ref(), &[0.2, 0.4])?;
            let b = coeffs(id, "b", overrides.b.as_ref(), &[0.6, 0.8])?;
            if mu[0] > mu[1] {
                return Err(violated(id, "mu1 <= mu2", format!("mu1 = {}, mu2 = {}", mu[0], mu[1])));
            }
            let chain = [
                ("0 < a1", a[0] > 0.0),
                ("a1 <= a2", a[0] <= a[1]),
                ("a2 <= b1", a[1] <= b[0]),
                ("b1 <= b2", b[0] <= b[1]),
                ("b2 <= 1", b[1] <= 1.0),
            ];
            for (what, ok) in chain {
                if !ok {
                    return Err(violated(id, &format!("0 < a1 <= a2 <= b1 <= b2 <= 1, in particular {what}"), format!("a = {a:?}, b = {b:?}")));
                }
            }
            ExampleParams { lambda, mu, a, b }
        }
        ExampleId::EX4_1 => {
            let mu = pair(id, "mu", overrides.mu.as_ref(), [2.0, 1.0])?;
            let a = coeffs(id, "a", overrides.a.as_ref(), &[0.3])?;
            let b = coeffs(id, "b", overrides.b.as_ref(), &[0.6])?;
            if mu[0] < mu[1] {
                return Err(violated(id, "mu1 >= mu2", format!("mu1 = {}, mu2 = {}", mu[0], mu[1])));
            }
            if !(a[0] > 0.0 && a[0] <= b[0] && b[0] <= 1.0) {
                return Err(violated(id, "0 < a <= b <= 1", format!("a = {}, b = {}", a[0], b[0])));
            }
            ExampleParams { lambda, mu, a, b }
        }
        ExampleId::EX4_2 => {
            let mu = pair(id, "mu", overrides.mu.as_ref(), [2.0, 1.0])?;
            let a = coeffs(id, "a", overrides.a.as_ref(), &[0.5])?;
            if overrides.b.is_some() {
                return Err(BenchError::Config("EX4_2 uses omega = gamma; `b` does not apply".into()));
            }
            if mu[0] < mu[1] {
                return Err(violated(id, "mu1 >= mu2", format!("mu1 = {}, mu2 = {}", mu[0], mu[1])));
            }
            if !(a[0] > 0.0 && a[0] <= 1.0) {
                return Err(violated(id, "0 < a <= 1", format!("a = {}", a[0])));
            }
            ExampleParams { lambda, mu, a, b: Vec::new() }
        }
    };
    Ok(p)
}

fn component(i: usize) -> String {
    format!("X{}", i + 1)
}

fn registry(p: &ExampleParams) -> Result<Arc<Registry>> {
    let mut r = Registry::new();
    for (i, &rate) in p.lambda.iter().enumerate() {
        r.insert(component(i), LifetimeDistribution::exponential(rate)?);
    }
    r.insert("Y1".into(), LifetimeDistribution::exponential(p.mu[0])?);
    r.insert("Y2".into(), LifetimeDistribution::exponential(p.mu[1])?);
    Ok(Arc::new(r))
}

/// Model functions for the two standbys.
fn model_functions(id: ExampleId, p: &ExampleParams) -> [ModelFunction; 2] {
    match id {
        ExampleId::EX3_1 => [0, 1].map(|j| ModelFunction::new(TimeMap::linear(p.a[j]), TimeMap::linear(p.b[j]))),
        ExampleId::EX3_2 => [0, 1].map(|j| ModelFunction::new(TimeMap::log(p.a[j]), TimeMap::log(p.b[j]))),
        ExampleId::EX4_1 => {
            let m = ModelFunction::new(TimeMap::log(p.a[0]), TimeMap::linear(p.b[0]));
            [m.clone(), m]
        }
        ExampleId::EX4_2 => {
            let m = ModelFunction::new(TimeMap::linear(p.a[0]), TimeMap::linear(p.a[0]));
            [m.clone(), m]
        }
    }
}

/// The two competing systems with their labels.
pub fn build_systems(id: ExampleId, p: &ExampleParams, cfg: &ExperimentConfig) -> Result<[(String, SystemSpec); 2]> {
    let reg = registry(p)?;
    let [m1, m2] = model_functions(id, p);
    let n = p.lambda.len();
    if id == ExampleId::EX4_2 {
        let comps: Vec<String> = (0..n).map(component).collect();
        let fam = enumerate_allocations(
            AllocationModel::III,
            Topology::Parallel,
            &comps,
            &["Y1".to_string(), "Y2".to_string()],
            &[m1, m2],
            reg,
            cfg.quadrature,
        )?;
        let mut c = fam.candidates.into_iter().map(|c| (c.label, c.spec));
        return Ok([c.next().expect("Q1"), c.next().expect("Q2")]);
    }
    let layout = |slot: usize, y: &str, mf: &ModelFunction| {
        (0..n)
            .map(|i| if i == slot { NodeDescriptor::standby(component(i), y, mf.clone()) } else { NodeDescriptor::plain(component(i)) })
            .collect::<Vec<_>>()
    };
    let build = |nodes| {
        SystemSpec::with_quadrature(standby_core::systems::SystemLayout { topology: id.topology(), nodes }, reg.clone(), cfg.quadrature)
    };
    Ok([("V1".into(), build(layout(0, "Y1", &m1))?), ("V2".into(), build(layout(1, "Y2", &m2))?)])
}

fn direction_outcome(got: Direction, wanted: Direction) -> Outcome {
    match got {
        Direction::Inconclusive => Outcome::Inconclusive,
        Direction::Both => Outcome::Pass,
        d if d == wanted => Outcome::Pass,
        _ => Outcome::Fail,
    }
}

/// Smallest `f(a, t) - f(b, t)` over the grid, and where it occurs.
fn min_gap(pa: &[(f64, f64)], pb: &[(f64, f64)]) -> (f64, f64) {
    pa.iter().zip(pb).map(|(a, b)| (a.1 - b.1, a.0)).fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc })
}

fn raw_profile(d: &dyn Lifetime, grid: &Grid, q: Quantity) -> Result<Vec<(f64, f64)>> {
    grid.points()
        .iter()
        .map(|&t| Ok((t, if q == Quantity::Survival { d.survival(t)? } else { d.cdf(t)? })))
        .collect()
}

fn st_check(
    name: &str,
    expected: &str,
    systems: &[(String, SystemSpec); 2],
    wanted: Direction,
    q: Quantity,
    grid: &Grid,
    tol: f64,
) -> Result<CheckRecord> {
    let v: OrderVerdict = check_order(&systems[0].1, &systems[1].1, OrderKind::St, grid, tol)?;
    let (pa, pb) = (raw_profile(&systems[0].1, grid, q)?, raw_profile(&systems[1].1, grid, q)?);
    let (gap, at) = min_gap(&pa, &pb);
    Ok(CheckRecord {
        name: name.into(),
        expected: expected.into(),
        outcome: direction_outcome(v.direction, wanted),
        detail: json!({
            "verdict": v,
            "min_difference": gap,
            "min_difference_at": at,
            "difference": format!("{}_{} - {}_{}", q.name(), systems[0].0, q.name(), systems[1].0),
            "grid_points": grid.len(),
        }),
    })
}

/// Empirical survival against quadrature at a few times.
fn marginal_diagnostic(systems: &[(String, SystemSpec); 2], grid: &Grid, draws: u64, seed: u64) -> Result<Diagnostic> {
    let ts: Vec<f64> = [0.1, 0.25, 0.5].iter().map(|f| f * grid.t_max()).collect();
    let mut rows = Vec::new();
    for (label, spec) in systems {
        let emp = empirical_survival(spec, &ts, draws, seed);
        for (&t, &e) in ts.iter().zip(&emp) {
            let exact = spec.survival(t)?;
            let se = (exact * (1.0 - exact) / draws as f64).sqrt();
            rows.push(json!({"system": label, "t": t, "quadrature": exact, "empirical": e,
                             "z": if se > 0.0 { (e - exact) / se } else { 0.0 }}));
        }
    }
    Ok(Diagnostic { name: "monte_carlo_marginals".into(), detail: json!({"draws": draws, "points": rows}) })
}

/// Runs one example. Curves are written under `out_dir` when given.
pub fn run_reproduction(id: ExampleId, cfg: &ExperimentConfig, seed: u64, out_dir: Option<&Path>) -> Result<ReproReport> {
    let p = example_params(id, &cfg.reproduce)?;
    let systems = build_systems(id, &p, cfg)?;
    let reg = systems[0].1.registry().clone();
    let grid = cfg.grid_for(&reg)?;
    let tol = cfg.tolerance;
    let params = json!({
        "lambda": p.lambda, "mu": p.mu, "a": p.a, "b": p.b,
        "model_functions": model_functions(id, &p),
        "systems": { systems[0].0.clone(): &systems[0].1, systems[1].0.clone(): &systems[1].1 },
        "grid": grid.descriptor(), "tolerance": tol, "seed": seed,
        "monte_carlo": cfg.monte_carlo,
    });
    let mut report = ReproReport::new(id.name(), params);
    let quantity = match id.topology() {
        Topology::Series => Quantity::Survival,
        Topology::Parallel => Quantity::Cdf,
    };

    match id {
        ExampleId::EX3_1 => {
            report.push_check(st_check("st", "V2 <=st V1", &systems, Direction::BLeA, quantity, &grid, tol)?);
            report.diagnostics.push(marginal_diagnostic(&systems, &grid, cfg.monte_carlo.marginal_draws, seed)?);
        }
        ExampleId::EX3_2 => {
            let (v1, v2) = (&systems[0].1, &systems[1].1);
            let q = sp_series_delta2(v1, v2, Delta2Method::Quadrature, tol)?;
            let q_outcome = match q.verdict {
                SpVerdict::V2SpLeV1 | SpVerdict::Both => Outcome::Pass,
                SpVerdict::V1SpLeV2 => Outcome::Fail,
                SpVerdict::Inconclusive => Outcome::Inconclusive,
            };
            report.push_check(CheckRecord {
                name: "sp_quadrature".into(),
                expected: "V2 <=sp V1 (delta2 >= 0)".into(),
                outcome: q_outcome,
                detail: json!(q),
            });
            let method = Delta2Method::MonteCarlo { draws: cfg.monte_carlo.sp_draws, seed };
            let mc = sp_series_delta2(v1, v2, method, tol)?;
            let ci = mc.ci.expect("Monte Carlo results carry an interval");
            let se = mc.standard_error.expect("Monte Carlo results carry a standard error");
            let contains = ci.lower <= q.delta2 && q.delta2 <= ci.upper;
            // Consistent when the interval covers the quadrature value and is
            // not entirely negative.
            let outcome = if ci.upper < 0.0 {
                Outcome::Fail
            } else if contains {
                Outcome::Pass
            } else {
                Outcome::Inconclusive
            };
            report.push_check(CheckRecord {
                name: "sp_monte_carlo".into(),
                expected: "99% interval for delta2 not below zero and covering the quadrature value".into(),
                outcome,
                detail: json!({
                    "result": mc,
                    "contains_quadrature": contains,
                    "lower_over_se": if se > 0.0 { ci.lower / se } else { 0.0 },
                }),
            });
            report.intervals.push(IntervalRecord {
                name: "delta2".into(),
                estimate: mc.delta2,
                standard_error: se,
                lower: ci.lower,
                upper: ci.upper,
                level: ci.level,
            });
        }
        ExampleId::EX4_1 => {
            report.push_check(st_check("st", "V1 <=st V2", &systems, Direction::ALeB, quantity, &grid, tol)?);
            report.diagnostics.push(marginal_diagnostic(&systems, &grid, cfg.monte_carlo.marginal_draws, seed)?);
        }
        ExampleId::EX4_2 => {
            report.push_check(st_check("st", "Q1 <=st Q2", &systems, Direction::ALeB, quantity, &grid, tol)?);
            let comps: Vec<String> = (0..p.lambda.len()).map(component).collect();
            let [m1, m2] = model_functions(id, &p);
            let fam = enumerate_allocations(
                AllocationModel::III,
                Topology::Parallel,
                &comps,
                &["Y1".to_string(), "Y2".to_string()],
                &[m1, m2],
                reg.clone(),
                cfg.quadrature,
            )?;
            let mut worst: f64 = 0.0;
            for &t in grid.points().iter().step_by(8) {
                let (f1, f2) = q_parallel_cdf(&fam, t)?;
                worst = worst.max((f1 - systems[0].1.cdf(t)?).abs()).max((f2 - systems[1].1.cdf(t)?).abs());
            }
            report.diagnostics.push(Diagnostic {
                name: "factorized_cdf".into(),
                detail: json!({"max_abs_difference": worst, "points": grid.points().iter().step_by(8).count()}),
            });
        }
    }

    for (label, spec) in &systems {
        let curve = Curve {
            system: label.clone(),
            check: format!("{} {}", id.name(), report.checks[0].expected),
            quantity,
            points: sample(spec, &grid, quantity)?,
        };
        let path = out_dir.map(|d| d.join(format!("{}_{}_{}.csv", id.name(), label, quantity.name())));
        if let Some(path) = &path {
            curve.write_file(path)?;
        }
        report.curves.push(CurveRecord {
            system: label.clone(),
            quantity: quantity.name().into(),
            points: curve.points.len(),
            path: path.map(|p| p.display().to_string()),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overrides(json: &str) -> ReproduceParams {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn defaults_satisfy_constraints() {
        for id in ExampleId::ALL {
            example_params(id, &ReproduceParams::default()).unwrap();
        }
    }

    #[test]
    fn violations_name_the_inequality() {
        let cases = [
            (ExampleId::EX3_1, r#"{"lambda": [1, 2]}"#, "lambda1 >= lambda2"),
            (ExampleId::EX3_1, r#"{"mu": [2, 1]}"#, "mu1 <= mu2"),
            (ExampleId::EX3_1, r#"{"a": [0.5, 0.4]}"#, "a1 <= a2"),
            (ExampleId::EX3_2, r#"{"b": [0.6, 1.2]}"#, "b2 <= 1"),
            (ExampleId::EX3_1, r#"{"a": [0.0, 0.4]}"#, "0 < a1"),
            (ExampleId::EX4_1, r#"{"a": 0.7, "b": 0.6}"#, "0 < a <= b <= 1"),
            (ExampleId::EX4_1, r#"{"mu": [1, 2]}"#, "mu1 >= mu2"),
            (ExampleId::EX4_2, r#"{"a": 1.5}"#, "0 < a <= 1"),
        ];
        for (id, json, needle) in cases {
            let err = example_params(id, &overrides(json)).unwrap_err();
            assert!(matches!(err, BenchError::ConstraintViolation(_)), "{json}: {err}");
            assert!(err.to_string().contains(needle), "{json}: {err}");
        }
    }

    #[test]
    fn example_ids_parse() {
        assert_eq!("ex4_2".parse::<ExampleId>().unwrap(), ExampleId::EX4_2);
        assert!("EX5_1".parse::<ExampleId>().is_err());
    }

    #[test]
    fn degenerate_precedence_case_is_a_tie() {
        let cfg = ExperimentConfig {
            reproduce: overrides(r#"{"lambda": [1.5, 1.5], "mu": [1, 1], "a": [0.3, 0.3]}"#),
            monte_carlo: crate::config::MonteCarloSettings { sp_draws: 20_000, marginal_draws: 1_000 },
            ..ExperimentConfig::default()
        };
        let r = run_reproduction(ExampleId::EX3_2, &cfg, 1, None).unwrap();
        let q = r.check("sp_quadrature").unwrap();
        assert_eq!(q.outcome, Outcome::Pass);
        assert_eq!(q.detail["delta2"], 0.0);
        assert_eq!(q.detail["verdict"], "Both");
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = ExperimentConfig {
            monte_carlo: crate::config::MonteCarloSettings { sp_draws: 20_000, marginal_draws: 2_000 },
            ..ExperimentConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        for id in [ExampleId::EX3_1, ExampleId::EX3_2] {
            let a = run_reproduction(id, &cfg, 5, Some(dir.path())).unwrap().to_json();
            let b = run_reproduction(id, &cfg, 5, Some(dir.path())).unwrap().to_json();
            assert_eq!(a, b);
        }
        let csv = std::fs::read_to_string(dir.path().join("EX3_1_V1_survival.csv")).unwrap();
        assert!(csv.starts_with("# system=V1 quantity=survival check=EX3_1 V2 <=st V1\nt,value\n"));
    }
}
