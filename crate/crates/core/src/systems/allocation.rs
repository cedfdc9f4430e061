use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Node, NodeDescriptor, Registry, SystemLayout, SystemSpec, Topology};
use crate::error::{check_time, Error, Result};
use crate::grid::Grid;
use crate::quadrature::QuadratureSettings;
use crate::standby::ModelFunction;

/// I: one standby, tried on each slot. II: standby `Y_i` reserved for slot
/// `i`, one slot reinforced. III: two standbys on slots 1 and 2, cross or
/// straight paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AllocationModel {
    I,
    II,
    III,
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub label: String,
    pub spec: SystemSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct AllocationFamily {
    pub model: AllocationModel,
    pub topology: Topology,
    pub candidates: Vec<Candidate>,
}

fn pick<'a>(mfs: &'a [ModelFunction], i: usize, expected: usize) -> Result<&'a ModelFunction> {
    match mfs.len() {
        1 => Ok(&mfs[0]),
        n if n == expected => Ok(&mfs[i]),
        n => Err(Error::ArityMismatch(format!("expected 1 or {expected} model functions, got {n}"))),
    }
}

/// Builds the competing systems of an allocation model.
///
/// `mfs` holds either one model function shared by every pairing or one per
/// standby (Model II and III) in the order of `standbys`.
pub fn enumerate_allocations(
    model: AllocationModel,
    topology: Topology,
    components: &[String],
    standbys: &[String],
    mfs: &[ModelFunction],
    registry: Arc<Registry>,
    quadrature: QuadratureSettings,
) -> Result<AllocationFamily> {
    let n = components.len();
    if n == 0 {
        return Err(Error::ArityMismatch("no components".into()));
    }
    let build = |nodes: Vec<NodeDescriptor>| {
        SystemSpec::with_quadrature(SystemLayout { topology, nodes }, registry.clone(), quadrature)
    };
    let with_standby_at = |i: usize, y: &str, mf: &ModelFunction| {
        components
            .iter()
            .enumerate()
            .map(|(j, x)| {
                if j == i {
                    NodeDescriptor::standby(x.clone(), y, mf.clone())
                } else {
                    NodeDescriptor::plain(x.clone())
                }
            })
            .collect::<Vec<_>>()
    };
    let candidates = match model {
        AllocationModel::I => {
            if standbys.len() != 1 {
                return Err(Error::ArityMismatch(format!("Model I takes one standby, got {}", standbys.len())));
            }
            let mf = pick(mfs, 0, 1)?;
            (0..n)
                .map(|i| {
                    Ok(Candidate { label: format!("U{}", i + 1), spec: build(with_standby_at(i, &standbys[0], mf))? })
                })
                .collect::<Result<Vec<_>>>()?
        }
        AllocationModel::II => {
            if standbys.len() != n {
                return Err(Error::ArityMismatch(format!(
                    "Model II takes one standby per component ({n}), got {}",
                    standbys.len()
                )));
            }
            (0..n)
                .map(|i| {
                    let mf = pick(mfs, i, n)?;
                    Ok(Candidate { label: format!("V{}", i + 1), spec: build(with_standby_at(i, &standbys[i], mf))? })
                })
                .collect::<Result<Vec<_>>>()?
        }
        AllocationModel::III => {
            if standbys.len() != 2 || n < 2 {
                return Err(Error::ArityMismatch(format!(
                    "Model III takes two standbys and at least two components, got {} and {n}",
                    standbys.len()
                )));
            }
            let (m1, m2) = (pick(mfs, 0, 2)?, pick(mfs, 1, 2)?);
            let rest = || components[2..].iter().map(|x| NodeDescriptor::plain(x.clone()));
            let pairing = |first: (&str, &ModelFunction), second: (&str, &ModelFunction)| {
                let mut nodes = vec![
                    NodeDescriptor::standby(components[0].clone(), first.0, first.1.clone()),
                    NodeDescriptor::standby(components[1].clone(), second.0, second.1.clone()),
                ];
                nodes.extend(rest());
                build(nodes)
            };
            let (y1, y2) = (standbys[0].as_str(), standbys[1].as_str());
            vec![
                Candidate { label: "Q1".into(), spec: pairing((y2, m2), (y1, m1))? },
                Candidate { label: "Q2".into(), spec: pairing((y1, m1), (y2, m2))? },
            ]
        }
    };
    Ok(AllocationFamily { model, topology, candidates })
}

fn require_omega_equals_gamma(mf: &ModelFunction, horizon: f64) -> Result<()> {
    if mf.gamma == mf.omega {
        return Ok(());
    }
    let grid = Grid::default_for(horizon)?;
    let audit = mf.validate(&grid);
    if audit.omega_equals_gamma.holds() {
        Ok(())
    } else {
        Err(Error::ModelFunctionMismatch(format!("omega differs from gamma: {:?}", audit.omega_equals_gamma)))
    }
}

/// `(F_{Q1}(t), F_{Q2}(t))` for Model III parallel systems with `ω = γ`.
///
/// With `ω = γ` each standby node has CDF `∫₀ᵗ F_Y(t - δ(u)) dF_X(u)`, so each
/// system CDF is that single integral per reinforced slot times the CDFs of
/// the remaining components.
pub fn q_parallel_cdf(family: &AllocationFamily, t: f64) -> Result<(f64, f64)> {
    check_time(t)?;
    if family.model != AllocationModel::III || family.topology != Topology::Parallel {
        return Err(Error::Unsupported("factorized CDF needs a Model III parallel family".into()));
    }
    let cdf = |spec: &SystemSpec| -> Result<f64> {
        let horizon = spec.grid_horizon();
        let mut product = 1.0;
        for node in spec.nodes() {
            product *= match node {
                Node::Plain { law, .. } => law.cdf_at(t),
                Node::Standby { composite, .. } => {
                    let mf = composite.model_function();
                    require_omega_equals_gamma(mf, horizon.max(t))?;
                    let y = composite.standby();
                    composite
                        .base()
                        .integrate_against_graded(
                            t,
                            |u, rest| y.cdf_at(rest + mf.omega.value(u)),
                            composite.quadrature(),
                            &[y],
                        )?
                }
            };
        }
        Ok(product)
    };
    Ok((cdf(&family.candidates[0].spec)?, cdf(&family.candidates[1].spec)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifetimes::LifetimeDistribution;
    use crate::standby::TimeMap;

    fn exp(rate: f64) -> LifetimeDistribution {
        LifetimeDistribution::exponential(rate).unwrap()
    }

    fn ids(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn registry(entries: &[(&str, f64)]) -> Arc<Registry> {
        Arc::new(entries.iter().map(|(k, r)| (k.to_string(), exp(*r))).collect())
    }

    fn laws(spec: &SystemSpec) -> Vec<(LifetimeDistribution, Option<(LifetimeDistribution, ModelFunction)>)> {
        spec.nodes()
            .iter()
            .map(|n| match n {
                Node::Plain { law, .. } => (law.clone(), None),
                Node::Standby { composite, .. } => (
                    composite.base().clone(),
                    Some((composite.standby().clone(), composite.model_function().clone())),
                ),
            })
            .collect()
    }

    #[test]
    fn model_one_places_standby_on_each_slot() {
        let r = registry(&[("X1", 3.0), ("X2", 2.0), ("X3", 1.0), ("Y", 1.0)]);
        let fam = enumerate_allocations(
            AllocationModel::I,
            Topology::Series,
            &ids(&["X1", "X2", "X3"]),
            &ids(&["Y"]),
            &[ModelFunction::cold()],
            r,
            Default::default(),
        )
        .unwrap();
        assert_eq!(fam.candidates.len(), 3);
        for (i, c) in fam.candidates.iter().enumerate() {
            for (j, n) in c.spec.nodes().iter().enumerate() {
                assert_eq!(matches!(n, Node::Standby { .. }), i == j);
            }
        }
    }

    #[test]
    fn model_three_pairings() {
        let r = registry(&[("X1", 2.0), ("X2", 1.0), ("Y1", 2.0), ("Y2", 1.0)]);
        let fam = enumerate_allocations(
            AllocationModel::III,
            Topology::Parallel,
            &ids(&["X1", "X2"]),
            &ids(&["Y1", "Y2"]),
            &[ModelFunction::cold()],
            r,
            Default::default(),
        )
        .unwrap();
        let pairs = |c: &Candidate| {
            c.spec
                .layout()
                .nodes
                .iter()
                .map(|n| match n {
                    NodeDescriptor::Standby { component, standby, .. } => (component.clone(), standby.clone()),
                    NodeDescriptor::Plain { .. } => unreachable!(),
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(pairs(&fam.candidates[0]), vec![("X1".into(), "Y2".into()), ("X2".into(), "Y1".into())]);
        assert_eq!(pairs(&fam.candidates[1]), vec![("X1".into(), "Y1".into()), ("X2".into(), "Y2".into())]);
    }

    #[test]
    fn model_two_with_identical_standbys_matches_model_one() {
        let r = registry(&[("X1", 3.0), ("X2", 2.0), ("X3", 1.0), ("Y", 1.5), ("Y1", 1.5), ("Y2", 1.5), ("Y3", 1.5)]);
        let mf = [ModelFunction::new(TimeMap::linear(0.5), TimeMap::linear(0.5))];
        let xs = ids(&["X1", "X2", "X3"]);
        let one = enumerate_allocations(AllocationModel::I, Topology::Series, &xs, &ids(&["Y"]), &mf, r.clone(), Default::default()).unwrap();
        let two = enumerate_allocations(AllocationModel::II, Topology::Series, &xs, &ids(&["Y1", "Y2", "Y3"]), &mf, r, Default::default()).unwrap();
        for (a, b) in one.candidates.iter().zip(&two.candidates) {
            assert_eq!(laws(&a.spec), laws(&b.spec));
        }
    }

    #[test]
    fn arity_errors() {
        let r = registry(&[("X1", 1.0), ("X2", 1.0), ("Y1", 1.0), ("Y2", 1.0)]);
        let xs = ids(&["X1", "X2"]);
        let cases = [
            (AllocationModel::I, ids(&["Y1", "Y2"])),
            (AllocationModel::II, ids(&["Y1"])),
            (AllocationModel::III, ids(&["Y1"])),
        ];
        for (model, ys) in cases {
            let e = enumerate_allocations(model, Topology::Series, &xs, &ys, &[ModelFunction::hot()], r.clone(), Default::default());
            assert!(matches!(e, Err(Error::ArityMismatch(_))), "{model:?}");
        }
        let three = [ModelFunction::hot(), ModelFunction::hot(), ModelFunction::hot()];
        let e = enumerate_allocations(AllocationModel::II, Topology::Series, &xs, &ids(&["Y1", "Y2"]), &three, r, Default::default());
        assert!(matches!(e, Err(Error::ArityMismatch(_))));
    }

    fn model_three(mf: ModelFunction, y: (f64, f64)) -> AllocationFamily {
        let r = registry(&[("X1", 2.0), ("X2", 1.0), ("Y1", y.0), ("Y2", y.1)]);
        enumerate_allocations(
            AllocationModel::III,
            Topology::Parallel,
            &ids(&["X1", "X2"]),
            &ids(&["Y1", "Y2"]),
            &[mf],
            r,
            Default::default(),
        )
        .unwrap()
    }

    #[test]
    fn factorized_cdf_matches_system_cdf() {
        let half = ModelFunction::new(TimeMap::linear(0.5), TimeMap::linear(0.5));
        let fam = model_three(half, (2.0, 1.0));
        assert_eq!(q_parallel_cdf(&fam, 0.0).unwrap(), (0.0, 0.0));
        for &t in &[0.1, 0.5, 1.0, 2.5, 6.0] {
            let (q1, q2) = q_parallel_cdf(&fam, t).unwrap();
            assert!((q1 - fam.candidates[0].spec.system_cdf(t).unwrap()).abs() < 1e-8);
            assert!((q2 - fam.candidates[1].spec.system_cdf(t).unwrap()).abs() < 1e-8);
            assert!(q1 >= q2 - 1e-9, "t={t}");
        }
    }

    #[test]
    fn factorized_cdf_symmetric_for_identical_standbys() {
        let fam = model_three(ModelFunction::new(TimeMap::log(0.4), TimeMap::log(0.4)), (1.5, 1.5));
        let (a, b) = q_parallel_cdf(&fam, 1.2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn factorized_cdf_rejects_distinct_maps() {
        let fam = model_three(ModelFunction::new(TimeMap::log(0.3), TimeMap::linear(0.6)), (2.0, 1.0));
        assert!(matches!(q_parallel_cdf(&fam, 1.0), Err(Error::ModelFunctionMismatch(_))));
    }
}
