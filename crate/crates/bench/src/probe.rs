//! Randomized search for parameterizations where an allocation result's
//! conclusion fails once one of its hypotheses is dropped.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use standby_core::orders::{Delta2Method, Direction};
use standby_core::standby::TimeMap;
use standby_core::stream::{DrawStream, UniformStream};
use standby_core::systems::{enumerate_allocations, AllocationModel, NodeDescriptor, Registry};
use standby_core::{
    check_order, sp_series_delta2, Grid, LifetimeDistribution, ModelFunction, OrderKind, SystemSpec, Topology,
};

use crate::config::registry_horizon;
use crate::error::{BenchError, Outcome, Result};
use crate::theory::{Audit, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Model II series, conclusion `V2 ≤_st V1`.
    SeriesSt,
    /// Model II parallel with a common model function, `V1 ≤_st V2`.
    ParallelSt,
    /// Model III parallel, `Q1 ≤_st Q2`.
    Model3ParallelSt,
    /// Model II series, `V2 ≤_sp V1`.
    SeriesSp,
}

impl Family {
    pub const ALL: [Family; 4] = [Self::SeriesSt, Self::ParallelSt, Self::Model3ParallelSt, Self::SeriesSp];

    pub fn name(self) -> &'static str {
        match self {
            Self::SeriesSt => "series-st",
            Self::ParallelSt => "parallel-st",
            Self::Model3ParallelSt => "model3-parallel-st",
            Self::SeriesSp => "series-sp",
        }
    }

    pub fn violations(self) -> &'static [Violation] {
        use Violation::*;
        match self {
            Self::SeriesSt => &[None, XOrder, YOrder, GammaOrder, OmegaEqual, LogConcavity],
            Self::ParallelSt => &[None, XOrder, YOrder, LogConcavity, DeltaIncreasing, SpreadIncreasing],
            Self::Model3ParallelSt => &[None, XOrder, YOrder, OmegaGammaEqual, DeltaIncreasing],
            Self::SeriesSp => &[None, XOrder, YOrder, GammaOrder],
        }
    }

    pub fn conclusion(self) -> &'static str {
        match self {
            Self::SeriesSt => "V2 <=st V1",
            Self::ParallelSt => "V1 <=st V2",
            Self::Model3ParallelSt => "Q1 <=st Q2",
            Self::SeriesSp => "V2 <=sp V1",
        }
    }
}

impl FromStr for Family {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown probe family `{s}`")))
    }
}

/// The hypothesis to drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Violation {
    None,
    /// Reverse the order between the two components.
    XOrder,
    /// Reverse the order between the two standbys.
    YOrder,
    /// `γ1 > γ2`.
    GammaOrder,
    /// `ω1 ≠ ω2` on the side that no log-concavity alternative covers.
    OmegaEqual,
    /// Standbys with strictly log-convex survival.
    LogConcavity,
    /// `ω ≠ γ`.
    OmegaGammaEqual,
    /// A virtual-age map with decreasing `δ`.
    DeltaIncreasing,
    /// `ω - γ` decreasing.
    SpreadIncreasing,
}

impl Violation {
    pub const ALL: [Violation; 9] = [
        Self::None,
        Self::XOrder,
        Self::YOrder,
        Self::GammaOrder,
        Self::OmegaEqual,
        Self::LogConcavity,
        Self::OmegaGammaEqual,
        Self::DeltaIncreasing,
        Self::SpreadIncreasing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::XOrder => "x-order",
            Self::YOrder => "y-order",
            Self::GammaOrder => "gamma-order",
            Self::OmegaEqual => "omega-equal",
            Self::LogConcavity => "log-concavity",
            Self::OmegaGammaEqual => "omega-gamma-equal",
            Self::DeltaIncreasing => "delta-increasing",
            Self::SpreadIncreasing => "spread-increasing",
        }
    }

    /// Parses `name` as a hypothesis that `family` has.
    pub fn parse(family: Family, name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == name && family.violations().contains(v))
            .ok_or_else(|| BenchError::UnknownHypothesis(format!("{name} (for {})", family.name())))
    }
}

/// One random parameterization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub laws: BTreeMap<String, LifetimeDistribution>,
    /// One model function per standby slot; equal when the family uses a
    /// common one.
    pub model_functions: [ModelFunction; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub trial: u64,
    pub parameters: Instance,
    /// Grid witness for st conclusions; absent for sp.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub family: Family,
    pub violate: Violation,
    pub conclusion: String,
    pub trials: u64,
    pub seed: u64,
    pub failures: Vec<Finding>,
    pub inconclusive: Vec<u64>,
    /// Trials whose hypotheses the grid audits did not confirm (only
    /// counted when nothing is violated).
    pub unconfirmed_hypotheses: Vec<u64>,
    pub summary: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeSpec {
    pub family: Family,
    pub violation: Violation,
    pub trials: u64,
    pub seed: u64,
    pub points: usize,
    pub tol: f64,
}

struct Draws(DrawStream);

impl Draws {
    fn u(&mut self) -> f64 {
        self.0.uniform()
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.u()
    }

    fn coin(&mut self) -> bool {
        self.u() < 0.5
    }
}

#[derive(Debug, Clone, Copy)]
enum ShapeClass {
    Any,
    LogConcave,
    LogConvex,
    /// Strictly log-convex, so not log-concave.
    StrictlyLogConvex,
    /// Strictly log-concave, so not log-convex.
    StrictlyLogConcave,
}

fn shape(d: &mut Draws, class: ShapeClass) -> f64 {
    let exponential = d.u() < 0.3;
    match class {
        ShapeClass::Any if exponential => 1.0,
        ShapeClass::LogConcave | ShapeClass::LogConvex if exponential => 1.0,
        ShapeClass::Any => d.range(0.5, 3.0),
        ShapeClass::LogConcave => d.range(1.0, 3.0),
        ShapeClass::LogConvex => d.range(0.5, 1.0),
        ShapeClass::StrictlyLogConvex => d.range(0.4, 0.85),
        ShapeClass::StrictlyLogConcave => d.range(1.2, 3.0),
    }
}

fn law(k: f64, scale: f64) -> LifetimeDistribution {
    if k == 1.0 {
        LifetimeDistribution::Exponential { rate: 1.0 / scale }
    } else {
        LifetimeDistribution::Weibull { shape: k, scale }
    }
}

/// Same-shape pair `(weak, strong)`: the first has the smaller scale, so it
/// is smaller in the lr order and hence in hr, rhr and st. `strict` keeps
/// the scales at least 20% apart.
fn ordered_pair(d: &mut Draws, class: ShapeClass, strict: bool) -> (LifetimeDistribution, LifetimeDistribution) {
    let k = shape(d, class);
    let s = d.range(0.5, 2.0);
    let ratio = if strict { d.range(1.2, 3.0) } else { d.range(1.0, 3.0) };
    (law(k, s), law(k, s * ratio))
}

/// Coefficients `(a1, a2)` with `a1 <= a2`, or `a1 > a2` by at least 20%
/// when the gamma order is violated.
fn gamma_pair(d: &mut Draws, v: Violation) -> (f64, f64) {
    if v == Violation::GammaOrder {
        let a2 = d.range(0.05, 0.8);
        (a2 * d.range(1.2, 1.0 / a2).max(1.2), a2)
    } else {
        let a2 = d.range(0.05, 1.0);
        (d.range(0.0, 1.0) * a2, a2)
    }
}

/// `a t` or `a log(1 + t)`.
fn map(log: bool, a: f64) -> TimeMap {
    if log {
        TimeMap::log(a)
    } else {
        TimeMap::linear(a)
    }
}

/// Rises with slope 2 after a flat stretch, so `δ` decreases on `(c, 2c)`.
fn stalled(c: f64) -> TimeMap {
    TimeMap::Table { knots: vec![(0.0, 0.0), (c, 0.0), (2.0 * c, 2.0 * c)] }
}

fn instance(x: (LifetimeDistribution, LifetimeDistribution), y: (LifetimeDistribution, LifetimeDistribution), m: [ModelFunction; 2]) -> Instance {
    let laws = [("X1", x.0), ("X2", x.1), ("Y1", y.0), ("Y2", y.1)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Instance { laws, model_functions: m }
}

fn draw_series_st(d: &mut Draws, v: Violation) -> Instance {
    let (weak, strong) = ordered_pair(d, ShapeClass::Any, v != Violation::None);
    let x = if v == Violation::XOrder { (strong, weak) } else { (weak, strong) };
    let (glog, wlog) = (d.coin(), d.coin());
    let (a1, a2) = gamma_pair(d, v);
    let b = d.range(0.05, 1.0);
    let lesser = d.range(0.1, 0.9) * b;
    // The omega pair and the shape class of the standbys go together.
    let (class, omega) = match v {
        Violation::OmegaEqual if d.coin() => (ShapeClass::StrictlyLogConcave, (b, lesser)),
        Violation::OmegaEqual => (ShapeClass::StrictlyLogConvex, (lesser, b)),
        Violation::LogConcavity => (ShapeClass::StrictlyLogConvex, (lesser, b)),
        _ => match (d.u() * 3.0) as u32 {
            0 => (ShapeClass::Any, (b, b)),
            1 => (ShapeClass::LogConcave, (d.range(0.0, 1.0) * b, b)),
            _ => (ShapeClass::LogConvex, (b, d.range(0.0, 1.0) * b)),
        },
    };
    let (yweak, ystrong) = ordered_pair(d, class, v != Violation::None);
    let y = if v == Violation::YOrder { (yweak, ystrong) } else { (ystrong, yweak) };
    let m1 = ModelFunction::new(map(glog, a1), map(wlog, omega.0));
    let m2 = ModelFunction::new(map(glog, a2), map(wlog, omega.1));
    instance(x, y, [m1, m2])
}

fn draw_parallel_st(d: &mut Draws, v: Violation) -> Instance {
    let (weak, strong) = ordered_pair(d, ShapeClass::Any, v != Violation::None);
    let x = if v == Violation::XOrder { (strong, weak) } else { (weak, strong) };
    let class = if v == Violation::LogConcavity { ShapeClass::StrictlyLogConvex } else { ShapeClass::LogConcave };
    let (yweak, ystrong) = ordered_pair(d, class, v != Violation::None);
    let y = if v == Violation::YOrder { (ystrong, yweak) } else { (yweak, ystrong) };
    let b = d.range(0.05, 1.0);
    let glog = d.coin();
    let mf = match v {
        Violation::DeltaIncreasing => ModelFunction::new(TimeMap::Zero, stalled(d.range(0.1, 1.0))),
        Violation::SpreadIncreasing => {
            let a = d.range(0.2, 1.0);
            ModelFunction::new(TimeMap::linear(a), TimeMap::linear(d.range(0.1, 0.8) * a))
        }
        // Keeps omega away from gamma so that the omega = gamma result does
        // not cover the log-convex case.
        Violation::LogConcavity => ModelFunction::new(map(glog, d.range(0.1, 0.9) * b), TimeMap::linear(b)),
        _ => ModelFunction::new(map(glog, d.range(0.0, 1.0) * b), TimeMap::linear(b)),
    };
    instance(x, y, [mf.clone(), mf])
}

fn draw_model3(d: &mut Draws, v: Violation) -> Instance {
    let (xw, xs) = ordered_pair(d, ShapeClass::Any, v != Violation::None);
    let (yw, ys) = ordered_pair(d, ShapeClass::Any, v != Violation::None);
    let forward = d.coin();
    let x_forward = forward != (v == Violation::XOrder);
    let y_forward = forward != (v == Violation::YOrder);
    let x = if x_forward { (xw, xs) } else { (xs, xw) };
    let y = if y_forward { (yw, ys) } else { (ys, yw) };
    let a = d.range(0.05, 1.0);
    let mf = match v {
        Violation::OmegaGammaEqual => {
            let other = d.range(0.2, 0.8) * a;
            let (g, w) = if d.coin() { (a, other) } else { (other, a) };
            ModelFunction::new(TimeMap::linear(g), TimeMap::linear(w))
        }
        Violation::DeltaIncreasing => {
            let m = stalled(d.range(0.1, 1.0));
            ModelFunction::new(m.clone(), m)
        }
        _ => {
            let m = map(d.coin(), a);
            ModelFunction::new(m.clone(), m)
        }
    };
    instance(x, y, [mf.clone(), mf])
}

fn draw_series_sp(d: &mut Draws, v: Violation) -> Instance {
    let (weak, strong) = ordered_pair(d, ShapeClass::Any, v != Violation::None);
    let x = if v == Violation::XOrder { (strong, weak) } else { (weak, strong) };
    let (yweak, ystrong) = ordered_pair(d, ShapeClass::Any, v != Violation::None);
    let y = if v == Violation::YOrder { (yweak, ystrong) } else { (ystrong, yweak) };
    let glog = d.coin();
    let (a1, a2) = gamma_pair(d, v);
    let (b1, b2) = (d.range(0.0, 1.0), d.range(0.0, 1.0));
    let m1 = ModelFunction::new(map(glog, a1), TimeMap::linear(b1));
    let m2 = ModelFunction::new(map(glog, a2), TimeMap::linear(b2));
    instance(x, y, [m1, m2])
}

pub fn draw(family: Family, violation: Violation, seed: u64, trial: u64) -> Instance {
    let mut d = Draws(DrawStream::new(seed, trial));
    match family {
        Family::SeriesSt => draw_series_st(&mut d, violation),
        Family::ParallelSt => draw_parallel_st(&mut d, violation),
        Family::Model3ParallelSt => draw_model3(&mut d, violation),
        Family::SeriesSp => draw_series_sp(&mut d, violation),
    }
}

/// The two competing systems: `(V1, V2)` or `(Q1, Q2)`.
pub fn systems(family: Family, inst: &Instance) -> Result<(SystemSpec, SystemSpec)> {
    let registry: Arc<Registry> = Arc::new(inst.laws.clone());
    let [m1, m2] = inst.model_functions.clone();
    if family == Family::Model3ParallelSt {
        let ids = |a: &str, b: &str| vec![a.to_string(), b.to_string()];
        let fam = enumerate_allocations(
            AllocationModel::III,
            Topology::Parallel,
            &ids("X1", "X2"),
            &ids("Y1", "Y2"),
            &[m1, m2],
            registry,
            Default::default(),
        )?;
        let mut c = fam.candidates.into_iter();
        let (q1, q2) = (c.next().expect("two candidates"), c.next().expect("two candidates"));
        return Ok((q1.spec, q2.spec));
    }
    let build = match family {
        Family::ParallelSt => SystemSpec::parallel,
        _ => SystemSpec::series,
    };
    let v1 = build(vec![NodeDescriptor::standby("X1", "Y1", m1), NodeDescriptor::plain("X2")], registry.clone())?;
    let v2 = build(vec![NodeDescriptor::plain("X1"), NodeDescriptor::standby("X2", "Y2", m2)], registry)?;
    Ok((v1, v2))
}

fn hypotheses_confirmed(family: Family, inst: &Instance, audit: &Audit<'_>) -> Result<bool> {
    let l = &inst.laws;
    let [m1, m2] = &inst.model_functions;
    let s1 = Slot { x: &l["X1"], y: &l["Y1"], mf: m1 };
    let s2 = Slot { x: &l["X2"], y: &l["Y2"], mf: m2 };
    Ok(match family {
        Family::SeriesSt => audit.series_st(s1, s2)?.is_some(),
        Family::ParallelSt => audit.parallel_st(s2, s1)?.is_some(),
        Family::Model3ParallelSt => audit.cross_pairing([s1, s2])?.is_some(),
        Family::SeriesSp => audit.series_sp(s1, s2)?.is_some(),
    })
}

enum Conclusion {
    Holds,
    Fails { t: Option<f64>, margin: f64 },
    Inconclusive,
}

fn conclusion(family: Family, inst: &Instance, grid: &Grid, tol: f64) -> Result<Conclusion> {
    let (s1, s2) = systems(family, inst)?;
    if family == Family::SeriesSp {
        let r = sp_series_delta2(&s1, &s2, Delta2Method::Quadrature, tol)?;
        return Ok(if r.delta2 >= -tol { Conclusion::Holds } else { Conclusion::Fails { t: None, margin: -r.delta2 } });
    }
    // (lower, upper) in the predicted order.
    let (lower, upper) = match family {
        Family::SeriesSt => (&s2, &s1),
        _ => (&s1, &s2),
    };
    let v = check_order(lower, upper, OrderKind::St, grid, tol)?;
    Ok(match v.direction {
        Direction::ALeB | Direction::Both => Conclusion::Holds,
        Direction::Inconclusive => Conclusion::Inconclusive,
        Direction::BLeA | Direction::Neither => {
            let w = v.witness.and_then(|w| w.a_le_b);
            Conclusion::Fails { t: w.map(|w| w.t), margin: w.map_or(f64::NAN, |w| w.margin) }
        }
    })
}

pub fn probe(spec: &ProbeSpec) -> Result<ProbeReport> {
    let mut failures = Vec::new();
    let mut inconclusive = Vec::new();
    let mut unconfirmed = Vec::new();
    for trial in 0..spec.trials {
        let inst = draw(spec.family, spec.violation, spec.seed, trial);
        let grid = Grid::refined(registry_horizon(&inst.laws), spec.points)?;
        if spec.violation == Violation::None {
            let audit = Audit { grid: &grid, tol: spec.tol };
            if !hypotheses_confirmed(spec.family, &inst, &audit)? {
                unconfirmed.push(trial);
            }
        }
        match conclusion(spec.family, &inst, &grid, spec.tol)? {
            Conclusion::Holds => {}
            Conclusion::Inconclusive => inconclusive.push(trial),
            Conclusion::Fails { t, margin } => failures.push(Finding { trial, parameters: inst, t, margin }),
        }
    }
    let summary = if failures.is_empty() {
        "none found in budget".to_string()
    } else {
        format!("{} of {} parameterizations break {}", failures.len(), spec.trials, spec.family.conclusion())
    };
    let outcome = if spec.violation != Violation::None {
        Outcome::Pass
    } else if !failures.is_empty() {
        Outcome::Fail
    } else if !inconclusive.is_empty() || !unconfirmed.is_empty() {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    };
    Ok(ProbeReport {
        family: spec.family,
        violate: spec.violation,
        conclusion: spec.family.conclusion().to_string(),
        trials: spec.trials,
        seed: spec.seed,
        failures,
        inconclusive,
        unconfirmed_hypotheses: unconfirmed,
        summary,
        outcome,
    })
}
