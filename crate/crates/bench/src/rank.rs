//! Partial ordering of allocation candidates by pairwise st checks.

use serde::Serialize;
use standby_core::orders::{Direction, Witnesses};
use standby_core::systems::{enumerate_allocations, AllocationFamily, AllocationModel, Node};
use standby_core::{check_order, Grid, OrderKind, SystemSpec, Topology};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Outcome, Result};
use crate::theory::{Audit, Slot, Theorem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairVerdict {
    pub a: String,
    pub b: String,
    pub direction: Direction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witnesses>,
}

/// A result predicting `lower ≤_st upper` whose hypotheses hold on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub upper: String,
    pub lower: String,
    pub theorem: Theorem,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub model: AllocationModel,
    pub topology: Topology,
    pub candidates: Vec<String>,
    pub pairwise: Vec<PairVerdict>,
    /// Candidates that are st-equivalent on the grid.
    pub classes: Vec<Vec<String>>,
    /// Covering pairs `(lower, upper)` between classes, named by their first member.
    pub hasse: Vec<(String, String)>,
    pub maximal: Vec<String>,
    pub incomparable: Vec<(String, String)>,
    pub predictions: Vec<Prediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub outcome: Outcome,
}

pub fn rank_allocations(cfg: &ExperimentConfig) -> Result<RankReport> {
    let a = cfg.allocation.as_ref().ok_or_else(|| BenchError::Config("no `allocation` section".into()))?;
    let family = enumerate_allocations(
        a.model,
        a.topology,
        &a.components,
        &a.standbys,
        &a.model_functions,
        cfg.registry.clone(),
        cfg.quadrature,
    )?;
    let horizon = family.candidates.iter().map(|c| c.spec.grid_horizon()).fold(0.0, f64::max);
    let grid = cfg.grid_with_horizon(horizon)?;
    rank_family(&family, &grid, cfg.tolerance)
}

fn reinforced(spec: &SystemSpec) -> Option<(usize, Slot<'_>)> {
    spec.nodes().iter().enumerate().find_map(|(i, n)| match n {
        Node::Standby { composite, .. } => {
            Some((i, Slot { x: composite.base(), y: composite.standby(), mf: composite.model_function() }))
        }
        Node::Plain { .. } => None,
    })
}

/// Results that apply to the family, as `(upper, lower, theorem)` index triples.
fn predictions(family: &AllocationFamily, audit: &Audit<'_>) -> Result<Vec<(usize, usize, Theorem)>> {
    let c = &family.candidates;
    let mut out = Vec::new();
    match (family.model, family.topology) {
        (AllocationModel::III, Topology::Parallel) => {
            // Q1 is the cross pairing, Q2 the straight one.
            let straight: Vec<Slot<'_>> = c[1]
                .spec
                .nodes()
                .iter()
                .take(2)
                .filter_map(|n| match n {
                    Node::Standby { composite, .. } => Some(Slot {
                        x: composite.base(),
                        y: composite.standby(),
                        mf: composite.model_function(),
                    }),
                    Node::Plain { .. } => None,
                })
                .collect();
            if let [s1, s2] = straight[..] {
                if let Some(th) = audit.cross_pairing([s1, s2])? {
                    out.push((1, 0, th));
                }
            }
        }
        (AllocationModel::III, Topology::Series) => {}
        (_, topology) => {
            let slots: Vec<Slot<'_>> =
                c.iter().map(|cand| reinforced(&cand.spec).expect("one standby per candidate").1).collect();
            for i in 0..c.len() {
                for j in 0..c.len() {
                    if i == j {
                        continue;
                    }
                    let th = match topology {
                        Topology::Series => audit.series_st(slots[i], slots[j])?,
                        Topology::Parallel => audit.parallel_st(slots[i], slots[j])?,
                    };
                    if let Some(th) = th {
                        out.push((i, j, th));
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn rank_family(family: &AllocationFamily, grid: &Grid, tol: f64) -> Result<RankReport> {
    let c = &family.candidates;
    let n = c.len();
    let label = |i: usize| c[i].label.clone();
    // le[i][j]: candidate i ≤_st candidate j on the grid.
    let mut le = vec![vec![false; n]; n];
    let mut pairwise = Vec::new();
    let mut inconclusive = false;
    for (i, row) in le.iter_mut().enumerate() {
        row[i] = true;
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = check_order(&c[i].spec, &c[j].spec, OrderKind::St, grid, tol)?;
            match v.direction {
                Direction::ALeB => le[i][j] = true,
                Direction::BLeA => le[j][i] = true,
                Direction::Both => {
                    le[i][j] = true;
                    le[j][i] = true;
                }
                Direction::Neither => {}
                Direction::Inconclusive => inconclusive = true,
            }
            pairwise.push(PairVerdict { a: label(i), b: label(j), direction: v.direction, witness: v.witness });
        }
    }

    // Pointwise checks with a tolerance are transitive only up to the
    // accumulated tolerance along a chain.
    let chain_tol = tol * (n.max(2) - 1) as f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if le[i][k] && le[k][j] && !le[i][j] {
                    let v = check_order(&c[i].spec, &c[j].spec, OrderKind::St, grid, chain_tol)?;
                    if !matches!(v.direction, Direction::ALeB | Direction::Both) {
                        return Err(BenchError::NumericalDefect(format!(
                            "{} <=st {} <=st {} on the grid but {} <=st {} fails: {:?}",
                            label(i),
                            label(k),
                            label(j),
                            label(i),
                            label(j),
                            v.witness
                        )));
                    }
                    le[i][j] = true;
                }
            }
        }
    }

    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if class_of[i] == usize::MAX {
            let members: Vec<usize> = (i..n).filter(|&j| le[i][j] && le[j][i]).collect();
            for &m in &members {
                class_of[m] = classes.len();
            }
            classes.push(members);
        }
    }
    let rep = |k: usize| classes[k][0];
    let below = |a: usize, b: usize| a != b && le[rep(a)][rep(b)];
    let m = classes.len();
    let mut hasse = Vec::new();
    for a in 0..m {
        for b in 0..m {
            if below(a, b) && !(0..m).any(|k| below(a, k) && below(k, b)) {
                hasse.push((label(rep(a)), label(rep(b))));
            }
        }
    }
    let maximal: Vec<String> =
        (0..m).filter(|&a| !(0..m).any(|b| below(a, b))).flat_map(|a| classes[a].iter().map(|&i| label(i))).collect();
    let mut incomparable = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !le[i][j] && !le[j][i] {
                incomparable.push((label(i), label(j)));
            }
        }
    }

    let audit = Audit { grid, tol };
    let mut predicted = Vec::new();
    for (up, low, th) in predictions(family, &audit)? {
        if !le[low][up] {
            return Err(BenchError::NumericalDefect(format!(
                "the {} predicts {} <=st {}, but the grid check disagrees",
                th.describe(),
                label(low),
                label(up)
            )));
        }
        predicted.push(Prediction { upper: label(up), lower: label(low), theorem: th });
    }
    let note = top_note(n, &predicted, &label);

    Ok(RankReport {
        model: family.model,
        topology: family.topology,
        candidates: (0..n).map(label).collect(),
        pairwise,
        classes: classes.iter().map(|cl| cl.iter().map(|&i| label(i)).collect()).collect(),
        hasse,
        maximal,
        incomparable,
        predictions: predicted,
        note,
        outcome: if inconclusive { Outcome::Inconclusive } else { Outcome::Pass },
    })
}

/// Names the results that single out one candidate as the top, if any do.
fn top_note(n: usize, predicted: &[Prediction], label: &dyn Fn(usize) -> String) -> Option<String> {
    if n == 1 {
        return Some(format!("{} is the only candidate", label(0)));
    }
    (0..n).find_map(|i| {
        let top = label(i);
        let mut theorems: Vec<Theorem> = predicted.iter().filter(|p| p.upper == top).map(|p| p.theorem).collect();
        let beaten = predicted.iter().filter(|p| p.upper == top).map(|p| &p.lower).collect::<std::collections::BTreeSet<_>>();
        (beaten.len() == n - 1).then(|| {
            theorems.sort();
            theorems.dedup();
            let names: Vec<&str> = theorems.iter().map(|t| t.describe()).collect();
            format!("{} predicts {top} is maximal", names.join(" and "))
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use standby_core::quadrature::QuadratureSettings;
    use standby_core::standby::TimeMap;
    use standby_core::systems::Registry;
    use standby_core::{LifetimeDistribution, ModelFunction};
    use std::sync::Arc;

    fn registry(rates: &[(&str, f64)]) -> Arc<Registry> {
        Arc::new(
            rates.iter().map(|(k, r)| (k.to_string(), LifetimeDistribution::exponential(*r).unwrap())).collect(),
        )
    }

    fn model_one(topology: Topology, components: &[&str]) -> RankReport {
        let reg = registry(&[("X1", 3.0), ("X2", 2.0), ("X3", 1.0), ("Y", 1.5)]);
        let mf = ModelFunction::new(TimeMap::linear(0.4), TimeMap::linear(0.4));
        let comps: Vec<String> = components.iter().map(|s| s.to_string()).collect();
        let family = enumerate_allocations(
            AllocationModel::I,
            topology,
            &comps,
            &["Y".to_string()],
            &[mf],
            reg,
            QuadratureSettings::default(),
        )
        .unwrap();
        let grid = Grid::default_for(4.0).unwrap();
        rank_family(&family, &grid, 1e-9).unwrap()
    }

    #[test]
    fn series_reinforces_the_weakest() {
        let r = model_one(Topology::Series, &["X1", "X2", "X3"]);
        assert_eq!(r.maximal, ["U1"]);
        assert_eq!(r.hasse, [("U2".to_string(), "U1".to_string()), ("U3".to_string(), "U2".to_string())]);
        assert!(r.note.as_deref().unwrap().contains("U1 is maximal"), "{:?}", r.note);
        assert!(r.incomparable.is_empty());
    }

    #[test]
    fn parallel_reinforces_the_strongest() {
        let r = model_one(Topology::Parallel, &["X1", "X2", "X3"]);
        assert_eq!(r.maximal, ["U3"]);
        assert!(r.note.as_deref().unwrap().contains("U3 is maximal"), "{:?}", r.note);
    }

    #[test]
    fn single_candidate_is_maximal() {
        let r = model_one(Topology::Series, &["X2"]);
        assert_eq!(r.candidates, ["U1"]);
        assert_eq!(r.maximal, ["U1"]);
        assert!(r.hasse.is_empty());
    }

    #[test]
    fn equal_components_form_one_class() {
        let reg = registry(&[("A", 1.0), ("B", 1.0), ("Y", 1.0)]);
        let family = enumerate_allocations(
            AllocationModel::I,
            Topology::Series,
            &["A".to_string(), "B".to_string()],
            &["Y".to_string()],
            &[ModelFunction::cold()],
            reg,
            QuadratureSettings::default(),
        )
        .unwrap();
        let r = rank_family(&family, &Grid::default_for(4.0).unwrap(), 1e-9).unwrap();
        assert_eq!(r.classes, [vec!["U1".to_string(), "U2".to_string()]]);
        assert_eq!(r.maximal.len(), 2);
    }
}
