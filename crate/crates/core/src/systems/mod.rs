//! Series and parallel systems over plain and standby-equipped nodes.

mod allocation;
mod sampling;

pub use allocation::{enumerate_allocations, q_parallel_cdf, AllocationFamily, AllocationModel, Candidate};
pub use sampling::{coupled_counts, coupled_sample, empirical_survival, CoupledCounts};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_time, Error, Result};
use crate::lifetimes::{Lifetime, LifetimeDistribution};
use crate::quadrature::QuadratureSettings;
use crate::standby::{ModelFunction, StandbyComposite};

/// Component laws keyed by id. Sorted so that joint draws have a fixed layout.
pub type Registry = BTreeMap<String, LifetimeDistribution>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Series,
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNode", untagged)]
pub enum NodeDescriptor {
    Standby { component: String, standby: String, mf: ModelFunction },
    Plain { component: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    component: String,
    standby: Option<String>,
    mf: Option<ModelFunction>,
}

impl TryFrom<RawNode> for NodeDescriptor {
    type Error = String;

    fn try_from(raw: RawNode) -> std::result::Result<Self, String> {
        match (raw.standby, raw.mf) {
            (None, None) => Ok(Self::Plain { component: raw.component }),
            (Some(standby), Some(mf)) => Ok(Self::Standby { component: raw.component, standby, mf }),
            _ => Err(format!("node `{}` needs both `standby` and `mf`, or neither", raw.component)),
        }
    }
}

impl NodeDescriptor {
    pub fn plain(component: impl Into<String>) -> Self {
        Self::Plain { component: component.into() }
    }

    pub fn standby(component: impl Into<String>, standby: impl Into<String>, mf: ModelFunction) -> Self {
        Self::Standby { component: component.into(), standby: standby.into(), mf }
    }

    pub fn component(&self) -> &str {
        match self {
            Self::Standby { component, .. } | Self::Plain { component } => component,
        }
    }
}

/// The serializable shape of a system, without its registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemLayout {
    pub topology: Topology,
    pub nodes: Vec<NodeDescriptor>,
}

/// A resolved node, ready for evaluation.
#[derive(Debug, Clone)]
pub enum Node {
    Plain { id: String, law: LifetimeDistribution },
    Standby { component: String, standby: String, composite: StandbyComposite },
}

impl Node {
    pub fn survival(&self, t: f64) -> Result<f64> {
        match self {
            Self::Plain { law, .. } => law.survival(t),
            Self::Standby { composite, .. } => composite.warm_survival(t),
        }
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        match self {
            Self::Plain { law, .. } => law.cdf(t),
            Self::Standby { composite, .. } => composite.warm_cdf(t),
        }
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        match self {
            Self::Plain { law, .. } => law.density(t),
            Self::Standby { composite, .. } => composite.warm_density(t),
        }
    }

    pub fn component_id(&self) -> &str {
        match self {
            Self::Plain { id, .. } => id,
            Self::Standby { component, .. } => component,
        }
    }

    pub fn component_law(&self) -> &LifetimeDistribution {
        match self {
            Self::Plain { law, .. } => law,
            Self::Standby { composite, .. } => composite.base(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemSpec {
    layout: SystemLayout,
    registry: Arc<Registry>,
    nodes: Vec<Node>,
}

impl Serialize for SystemSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.layout.serialize(s)
    }
}

fn lookup(registry: &Registry, id: &str) -> Result<LifetimeDistribution> {
    registry.get(id).cloned().ok_or_else(|| Error::UnknownComponent(id.to_string()))
}

impl SystemSpec {
    pub fn new(layout: SystemLayout, registry: Arc<Registry>) -> Result<Self> {
        Self::with_quadrature(layout, registry, QuadratureSettings::default())
    }

    /// Resolves every id against `registry`. Each id may appear at most once
    /// per system, as a component or as a standby.
    pub fn with_quadrature(
        layout: SystemLayout,
        registry: Arc<Registry>,
        quadrature: QuadratureSettings,
    ) -> Result<Self> {
        if layout.nodes.is_empty() {
            return Err(Error::ArityMismatch("a system needs at least one node".into()));
        }
        let mut seen = BTreeSet::new();
        let mut nodes = Vec::with_capacity(layout.nodes.len());
        for d in &layout.nodes {
            let ids: Vec<&str> = match d {
                NodeDescriptor::Plain { component } => vec![component],
                NodeDescriptor::Standby { component, standby, .. } => vec![component, standby],
            };
            for id in ids {
                if !seen.insert(id.to_string()) {
                    return Err(Error::DuplicateComponent(id.to_string()));
                }
            }
            nodes.push(match d {
                NodeDescriptor::Plain { component } => {
                    Node::Plain { id: component.clone(), law: lookup(&registry, component)? }
                }
                NodeDescriptor::Standby { component, standby, mf } => Node::Standby {
                    component: component.clone(),
                    standby: standby.clone(),
                    composite: StandbyComposite::new(
                        lookup(&registry, component)?,
                        lookup(&registry, standby)?,
                        mf.clone(),
                    )?
                    .with_quadrature(quadrature),
                },
            });
        }
        Ok(Self { layout, registry, nodes })
    }

    pub fn series(nodes: Vec<NodeDescriptor>, registry: Arc<Registry>) -> Result<Self> {
        Self::new(SystemLayout { topology: Topology::Series, nodes }, registry)
    }

    pub fn parallel(nodes: Vec<NodeDescriptor>, registry: Arc<Registry>) -> Result<Self> {
        Self::new(SystemLayout { topology: Topology::Parallel, nodes }, registry)
    }

    pub fn topology(&self) -> Topology {
        self.layout.topology
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn node_values(&self, t: f64, f: impl Fn(&Node, f64) -> Result<f64>) -> Result<Vec<f64>> {
        self.nodes.iter().map(|n| f(n, t)).collect()
    }

    /// Series: product of node survivals. Parallel: one minus the product of
    /// node CDFs, formed as `1 - Π(1 - S_i)` in log space.
    pub fn system_survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match self.topology() {
            Topology::Series => Ok(self.node_values(t, Node::survival)?.iter().product()),
            Topology::Parallel => {
                let s = self.node_values(t, Node::survival)?;
                Ok(-s.iter().map(|s| (-s).ln_1p()).sum::<f64>().exp_m1())
            }
        }
    }

    /// Parallel: product of node CDFs. Series: `1 - Π(1 - F_i)` in log space.
    pub fn system_cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match self.topology() {
            Topology::Parallel => Ok(self.node_values(t, Node::cdf)?.iter().product()),
            Topology::Series => {
                let f = self.node_values(t, Node::cdf)?;
                Ok(-f.iter().map(|f| (-f).ln_1p()).sum::<f64>().exp_m1())
            }
        }
    }

    pub fn system_density(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let dens = self.node_values(t, Node::density)?;
        let other = match self.topology() {
            Topology::Series => self.node_values(t, Node::survival)?,
            Topology::Parallel => self.node_values(t, Node::cdf)?,
        };
        Ok((0..dens.len())
            .map(|i| {
                if dens[i] == 0.0 {
                    return 0.0;
                }
                let rest: f64 = other.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).product();
                dens[i] * rest
            })
            .sum())
    }

    /// Largest 0.999 quantile among the laws this system uses.
    pub fn grid_horizon(&self) -> f64 {
        self.nodes
            .iter()
            .flat_map(|n| match n {
                Node::Plain { law, .. } => vec![law.grid_horizon()],
                Node::Standby { composite, .. } => {
                    vec![composite.base().grid_horizon(), composite.standby().grid_horizon()]
                }
            })
            .fold(0.0, f64::max)
    }
}

impl Lifetime for SystemSpec {
    fn survival(&self, t: f64) -> Result<f64> {
        self.system_survival(t)
    }

    fn density(&self, t: f64) -> Result<f64> {
        self.system_density(t)
    }

    fn cdf(&self, t: f64) -> Result<f64> {
        self.system_cdf(t)
    }

    fn has_tabulated_density(&self) -> bool {
        self.nodes.iter().any(|n| match n {
            Node::Plain { law, .. } => law.has_tabulated_density(),
            Node::Standby { composite, .. } => composite.has_tabulated_density(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standby::TimeMap;

    fn registry(entries: &[(&str, LifetimeDistribution)]) -> Arc<Registry> {
        Arc::new(entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect())
    }

    fn exp(rate: f64) -> LifetimeDistribution {
        LifetimeDistribution::exponential(rate).unwrap()
    }

    #[test]
    fn series_of_exponentials() {
        let r = registry(&[("X1", exp(1.0)), ("X2", exp(2.0))]);
        let s = SystemSpec::series(vec![NodeDescriptor::plain("X1"), NodeDescriptor::plain("X2")], r).unwrap();
        let v = s.system_survival(1.0).unwrap();
        assert!((v - (-3.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.049787).abs() < 1e-6);
        assert!((s.system_cdf(1.0).unwrap() + v - 1.0).abs() < 1e-15);
        assert!((s.system_density(1.0).unwrap() - 3.0 * v).abs() < 1e-14);
    }

    #[test]
    fn single_parallel_node() {
        let r = registry(&[("X1", exp(1.0))]);
        let s = SystemSpec::parallel(vec![NodeDescriptor::plain("X1")], r).unwrap();
        assert!((s.system_survival(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn parallel_survival_is_one_minus_cdf_product() {
        let r = registry(&[("X1", exp(1.0)), ("X2", exp(3.0)), ("Y", exp(1.0))]);
        let mf = ModelFunction::new(TimeMap::log(0.3), TimeMap::linear(0.6));
        let s = SystemSpec::parallel(vec![NodeDescriptor::standby("X1", "Y", mf), NodeDescriptor::plain("X2")], r)
            .unwrap();
        for &t in &[0.2, 1.0, 3.0] {
            let f: f64 = s.nodes().iter().map(|n| n.cdf(t).unwrap()).product();
            assert!((s.system_survival(t).unwrap() - (1.0 - f)).abs() < 1e-9);
            assert!((s.system_cdf(t).unwrap() - f).abs() < 1e-15);
        }
    }

    #[test]
    fn resolution_errors() {
        let r = registry(&[("X1", exp(1.0)), ("Y", exp(1.0))]);
        let e = SystemSpec::series(vec![NodeDescriptor::plain("X9")], r.clone()).unwrap_err();
        assert_eq!(e, Error::UnknownComponent("X9".into()));
        let e = SystemSpec::series(
            vec![NodeDescriptor::standby("X1", "Y", ModelFunction::hot()), NodeDescriptor::plain("Y")],
            r.clone(),
        )
        .unwrap_err();
        assert_eq!(e, Error::DuplicateComponent("Y".into()));
        assert!(matches!(SystemSpec::series(vec![], r), Err(Error::ArityMismatch(_))));
    }

    #[test]
    fn layout_json_shape() {
        let json = r#"{"topology":"series","nodes":[{"component":"X1","standby":"Y1","mf":{"gamma":{"kind":"zero"},"omega":{"kind":"zero"}}},{"component":"X2"}]}"#;
        let layout: SystemLayout = serde_json::from_str(json).unwrap();
        assert_eq!(layout.nodes[0], NodeDescriptor::standby("X1", "Y1", ModelFunction::cold()));
        assert_eq!(layout.nodes[1], NodeDescriptor::plain("X2"));
        assert_eq!(serde_json::to_string(&layout).unwrap(), json);
        // A standby without a model function is rejected, not silently dropped.
        assert!(serde_json::from_str::<NodeDescriptor>(r#"{"component":"X1","standby":"Y1"}"#).is_err());
    }
}
