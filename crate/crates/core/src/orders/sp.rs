//! Stochastic precedence between two series systems that differ only in which
//! slot carries the standby.
//!
//! With `V1 = min(X1 ⊛ Y1, X2, H1)` and `V2 = min(X1, X2 ⊛ Y2, H1)` sharing
//! `X1`, `X2` and `H1`, `V1 > V2` happens exactly when `X1` fails first among
//! the three and `Y1` survives storage until then. So
//!
//! `Δ₂ = ∫ S_{Y1}(γ1(u)) S_{X2}(u) S_{H1}(u) dF_{X1}(u)
//!     - ∫ S_{Y2}(γ2(u)) S_{X1}(u) S_{H1}(u) dF_{X2}(u)`.

use serde::{Deserialize, Serialize};

use super::{Direction, Method, OrderKind, OrderVerdict};
use crate::error::{Error, Result};
use crate::lifetimes::LifetimeDistribution;
use crate::standby::StandbyComposite;
use crate::systems::{coupled_counts, Node, SystemSpec, Topology};

/// Each integral is truncated where the integrating law has this much mass
/// left; the integrand is at most 1, so this bounds the remainder.
pub const TRUNCATION_MASS: f64 = 1e-10;
const Z_99: f64 = 2.575_829_303_548_901;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delta2Method {
    Quadrature,
    MonteCarlo { draws: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpVerdict {
    /// `V2 ≤_sp V1`.
    #[serde(rename = "V2_sp_le_V1")]
    V2SpLeV1,
    #[serde(rename = "V1_sp_le_V2")]
    V1SpLeV2,
    Both,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Result {
    pub delta2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
    pub ci: Option<ConfidenceInterval>,
    pub verdict: SpVerdict,
    pub method: Delta2Method,
}

impl Delta2Result {
    /// As an order verdict with A = V1 and B = V2.
    pub fn order_verdict(&self) -> OrderVerdict {
        let direction = match self.verdict {
            SpVerdict::V2SpLeV1 => Direction::BLeA,
            SpVerdict::V1SpLeV2 => Direction::ALeB,
            SpVerdict::Both => Direction::Both,
            SpVerdict::Inconclusive => Direction::Inconclusive,
        };
        let method = match self.ci {
            Some(ci) => Method::MonteCarlo { lower: ci.lower, upper: ci.upper, level: ci.level },
            None => Method::Quadrature,
        };
        OrderVerdict { relation: OrderKind::Sp, direction, witness: None, method, grid: None, note: None }
    }
}

struct Reinforced<'a> {
    index: usize,
    composite: &'a StandbyComposite,
}

fn reinforced(spec: &SystemSpec) -> Result<Reinforced<'_>> {
    let mut found = spec.nodes().iter().enumerate().filter_map(|(i, n)| match n {
        Node::Standby { composite, .. } => Some(Reinforced { index: i, composite }),
        Node::Plain { .. } => None,
    });
    match (found.next(), found.next()) {
        (Some(r), None) => Ok(r),
        _ => Err(Error::Unsupported("each system must carry exactly one standby".into())),
    }
}

fn plain_law(node: &Node) -> Option<&LifetimeDistribution> {
    match node {
        Node::Plain { law, .. } => Some(law),
        Node::Standby { .. } => None,
    }
}

/// The laws of `X1`, `X2` and of the remaining components `H1`.
struct Configuration<'a> {
    v1: Reinforced<'a>,
    v2: Reinforced<'a>,
    rest: Vec<&'a LifetimeDistribution>,
}

fn configuration<'a>(v1: &'a SystemSpec, v2: &'a SystemSpec) -> Result<Configuration<'a>> {
    let mismatch = |msg: &str| Error::Unsupported(format!("not a reinforced-slot comparison: {msg}"));
    if v1.topology() != Topology::Series || v2.topology() != Topology::Series {
        return Err(mismatch("both systems must be series"));
    }
    if v1.nodes().len() != v2.nodes().len() {
        return Err(mismatch("node counts differ"));
    }
    let (r1, r2) = (reinforced(v1)?, reinforced(v2)?);
    if r1.index == r2.index {
        return Err(mismatch("both systems reinforce the same slot"));
    }
    let (n1, n2) = (&v1.nodes()[r1.index], &v2.nodes()[r2.index]);
    let (c1, c2) = (n1.component_id(), n2.component_id());
    if v2.nodes()[r1.index].component_id() != c1 || v1.nodes()[r2.index].component_id() != c2 {
        return Err(mismatch("reinforced components are not shared"));
    }
    let mut rest = Vec::new();
    for i in (0..v1.nodes().len()).filter(|&i| i != r1.index && i != r2.index) {
        let (a, b) = (&v1.nodes()[i], &v2.nodes()[i]);
        match (plain_law(a), plain_law(b)) {
            (Some(law), Some(_)) if a.component_id() == b.component_id() => rest.push(law),
            _ => return Err(mismatch("the remaining slots must hold the same plain components")),
        }
    }
    Ok(Configuration { v1: r1, v2: r2, rest })
}

/// `∫ S_Y(γ(u)) S_other(u) S_H(u) dF_X(u)` over `[0, q]` with `q` the
/// `1 - TRUNCATION_MASS` quantile of `X`.
fn win_probability(r: &Reinforced<'_>, other: &LifetimeDistribution, rest: &[&LifetimeDistribution], tol: f64) -> Result<f64> {
    let c = r.composite;
    let x = c.base();
    let horizon = x.quantile(1.0 - TRUNCATION_MASS)?;
    let remainder = x.survival_at(horizon);
    if remainder > tol {
        return Err(Error::TruncationWarning { remainder, tol });
    }
    let (y, gamma) = (c.standby(), &c.model_function().gamma);
    let others: Vec<&LifetimeDistribution> = rest.iter().copied().chain([other, y]).collect();
    x.integrate_against_graded(
        horizon,
        |u, _| {
            let log = y.log_sf(gamma.value(u)) + other.log_sf(u) + rest.iter().map(|h| h.log_sf(u)).sum::<f64>();
            log.exp()
        },
        c.quadrature(),
        &others,
    )
}

/// `Δ₂ = P(V1 > V2) - P(V2 > V1)` for series systems `v1`, `v2` that share
/// every component and differ only in which slot holds its standby.
pub fn sp_series_delta2(v1: &SystemSpec, v2: &SystemSpec, method: Delta2Method, tol: f64) -> Result<Delta2Result> {
    let cfg = configuration(v1, v2)?;
    match method {
        Delta2Method::Quadrature => {
            let (x1, x2) = (cfg.v1.composite.base(), cfg.v2.composite.base());
            let p1 = win_probability(&cfg.v1, x2, &cfg.rest, tol)?;
            let p2 = win_probability(&cfg.v2, x1, &cfg.rest, tol)?;
            let delta2 = p1 - p2;
            let verdict = if delta2.abs() <= tol {
                SpVerdict::Both
            } else if delta2 > 0.0 {
                SpVerdict::V2SpLeV1
            } else {
                SpVerdict::V1SpLeV2
            };
            Ok(Delta2Result { delta2, standard_error: None, ci: None, verdict, method })
        }
        Delta2Method::MonteCarlo { draws, seed } => {
            let counts = coupled_counts(v1, v2, draws, seed)?;
            let (delta2, se) = counts.difference();
            let ci = ConfidenceInterval { lower: delta2 - Z_99 * se, upper: delta2 + Z_99 * se, level: 0.99 };
            let verdict = if counts.a_wins == 0 && counts.b_wins == 0 {
                SpVerdict::Both
            } else if ci.lower > 0.0 {
                SpVerdict::V2SpLeV1
            } else if ci.upper < 0.0 {
                SpVerdict::V1SpLeV2
            } else {
                SpVerdict::Inconclusive
            };
            Ok(Delta2Result { delta2, standard_error: Some(se), ci: Some(ci), verdict, method })
        }
    }
}
