//! Experiment configuration: a single JSON document.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use standby_core::grid::DEFAULT_POINTS;
use standby_core::lifetimes::PiecewiseSurvival;
use standby_core::orders::Direction;
use standby_core::quadrature::QuadratureSettings;
use standby_core::systems::{AllocationModel, NodeDescriptor, Registry, SystemLayout};
use standby_core::{Grid, Lifetime, LifetimeDistribution, ModelFunction, OrderKind, SystemSpec, Topology};

use crate::error::{BenchError, Result};

pub const SEED_ENV: &str = "STANDBY_LAB_SEED";
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const MIN_MC_DRAWS: u64 = 1_000;

/// A law given inline, or a survival table read from a `t,S` CSV file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DistributionSpec {
    Law(LifetimeDistribution),
    Table { csv: PathBuf },
}

/// A model function by name or inline.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MfRef {
    Named(String),
    Inline(ModelFunction),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDef {
    pub component: String,
    #[serde(default)]
    pub standby: Option<String>,
    #[serde(default)]
    pub mf: Option<MfRef>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDef {
    pub topology: Topology,
    pub nodes: Vec<NodeDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckDef {
    #[serde(default)]
    pub name: Option<String>,
    pub kind: OrderKind,
    pub a: String,
    pub b: String,
    /// Direction the check must report; `Both` satisfies either single one.
    #[serde(default)]
    pub expect: Option<Direction>,
}

impl CheckDef {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("{}:{}:{}", self.kind.name(), self.a, self.b))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationDef {
    pub model: AllocationModel,
    pub topology: Topology,
    pub components: Vec<String>,
    pub standbys: Vec<String>,
    pub model_functions: Vec<MfRef>,
}

#[derive(Debug, Clone)]
pub struct AllocationSpec {
    pub model: AllocationModel,
    pub topology: Topology,
    pub components: Vec<String>,
    pub standbys: Vec<String>,
    pub model_functions: Vec<ModelFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::One(v) => vec![*v],
            Self::Many(v) => v.clone(),
        }
    }
}

/// Parameter overrides for the reproduced examples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<OneOrMany>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeDef {
    pub family: String,
    #[serde(default = "none_violated")]
    pub violate: String,
    #[serde(default = "default_trials")]
    pub trials: u64,
}

fn none_violated() -> String {
    "none".into()
}

fn default_trials() -> u64 {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    /// Defaults to the largest 0.999 quantile in the registry.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

impl Default for GridSettings {
    fn default() -> Self {
        Self { t_max: None, points: DEFAULT_POINTS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSettings {
    #[serde(default = "default_sp_draws")]
    pub sp_draws: u64,
    #[serde(default = "default_marginal_draws")]
    pub marginal_draws: u64,
}

fn default_sp_draws() -> u64 {
    1_000_000
}

fn default_marginal_draws() -> u64 {
    100_000
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        Self { sp_draws: default_sp_draws(), marginal_draws: default_marginal_draws() }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    /// Directory for curve files and reports.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Report path; printed to stdout when absent.
    #[serde(default)]
    pub report: Option<PathBuf>,
}

fn default_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    distributions: BTreeMap<String, DistributionSpec>,
    #[serde(default)]
    model_functions: BTreeMap<String, ModelFunction>,
    #[serde(default)]
    systems: BTreeMap<String, SystemDef>,
    #[serde(default)]
    checks: Vec<CheckDef>,
    #[serde(default)]
    allocation: Option<AllocationDef>,
    #[serde(default)]
    reproduce: ReproduceParams,
    #[serde(default)]
    probe: Option<ProbeDef>,
    #[serde(default)]
    grid: GridSettings,
    #[serde(default)]
    monte_carlo: MonteCarloSettings,
    #[serde(default = "default_tolerance")]
    tolerance: f64,
    #[serde(default)]
    quadrature: Option<QuadratureSettings>,
    #[serde(default)]
    output: OutputSettings,
    #[serde(default)]
    seed: Option<u64>,
}

/// A validated configuration: every id resolves and every system shares one
/// registry.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub registry: Arc<Registry>,
    pub model_functions: BTreeMap<String, ModelFunction>,
    pub systems: BTreeMap<String, SystemSpec>,
    pub checks: Vec<CheckDef>,
    pub allocation: Option<AllocationSpec>,
    pub reproduce: ReproduceParams,
    pub probe: Option<ProbeDef>,
    pub grid: GridSettings,
    pub monte_carlo: MonteCarloSettings,
    pub tolerance: f64,
    pub quadrature: QuadratureSettings,
    pub output: OutputSettings,
    /// Seed from the document; see [`ExperimentConfig::effective_seed`].
    pub seed: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::parse("{}", Path::new(".")).expect("empty config is valid")
    }
}

/// A distribution or a system from the config.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a> {
    Law(&'a LifetimeDistribution),
    System(&'a SystemSpec),
}

impl<'a> Subject<'a> {
    pub fn lifetime(&self) -> &'a dyn Lifetime {
        match *self {
            Subject::Law(d) => d,
            Subject::System(s) => s,
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            Subject::Law(d) => d.grid_horizon(),
            Subject::System(s) => s.grid_horizon(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses a document; relative table paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        Self::validate(raw, base)
    }

    fn validate(raw: RawConfig, base: &Path) -> Result<Self> {
        if !(raw.tolerance > 0.0 && raw.tolerance.is_finite()) {
            return Err(config_err(format!("tolerance must be positive, got {}", raw.tolerance)));
        }
        if let Some(t) = raw.grid.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(config_err(format!("grid.t_max must be positive, got {t}")));
            }
        }
        if raw.grid.points < 3 {
            return Err(config_err(format!("grid.points must be at least 3, got {}", raw.grid.points)));
        }
        for (name, n) in [("sp_draws", raw.monte_carlo.sp_draws), ("marginal_draws", raw.monte_carlo.marginal_draws)] {
            if n < MIN_MC_DRAWS {
                return Err(config_err(format!("monte_carlo.{name} must be at least {MIN_MC_DRAWS}, got {n}")));
            }
        }

        let mut registry = Registry::new();
        for (id, spec) in raw.distributions {
            let law = match spec {
                DistributionSpec::Law(law) => {
                    law.validate().map_err(|e| config_err(format!("distribution `{id}`: {e}")))?;
                    law
                }
                DistributionSpec::Table { csv } => {
                    let path = base.join(csv);
                    let file = std::fs::File::open(&path).map_err(|e| BenchError::io(&path, e))?;
                    let table = PiecewiseSurvival::from_csv(file)
                        .map_err(|e| config_err(format!("distribution `{id}`: {e}")))?;
                    LifetimeDistribution::piecewise(table.knots().collect())?
                }
            };
            registry.insert(id, law);
        }
        let registry = Arc::new(registry);

        for (name, mf) in &raw.model_functions {
            mf.check_params().map_err(|e| config_err(format!("model function `{name}`: {e}")))?;
        }
        let resolve_mf = |r: &MfRef| -> Result<ModelFunction> {
            match r {
                MfRef::Named(name) => raw
                    .model_functions
                    .get(name)
                    .cloned()
                    .ok_or_else(|| config_err(format!("unknown model function `{name}`"))),
                MfRef::Inline(mf) => {
                    mf.check_params().map_err(|e| config_err(e.to_string()))?;
                    Ok(mf.clone())
                }
            }
        };
        let quadrature = raw.quadrature.unwrap_or_default();

        let mut systems = BTreeMap::new();
        for (name, def) in &raw.systems {
            let nodes = def
                .nodes
                .iter()
                .map(|n| match (&n.standby, &n.mf) {
                    (None, None) => Ok(NodeDescriptor::plain(n.component.clone())),
                    (Some(y), Some(mf)) => Ok(NodeDescriptor::standby(n.component.clone(), y.clone(), resolve_mf(mf)?)),
                    _ => Err(config_err(format!(
                        "system `{name}`: node `{}` needs both `standby` and `mf`, or neither",
                        n.component
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            let layout = SystemLayout { topology: def.topology, nodes };
            let spec = SystemSpec::with_quadrature(layout, registry.clone(), quadrature)
                .map_err(|e| config_err(format!("system `{name}`: {e}")))?;
            systems.insert(name.clone(), spec);
        }

        let allocation = raw
            .allocation
            .as_ref()
            .map(|a| -> Result<AllocationSpec> {
                for id in a.components.iter().chain(&a.standbys) {
                    if !registry.contains_key(id) {
                        return Err(config_err(format!("allocation: unknown component `{id}`")));
                    }
                }
                Ok(AllocationSpec {
                    model: a.model,
                    topology: a.topology,
                    components: a.components.clone(),
                    standbys: a.standbys.clone(),
                    model_functions: a.model_functions.iter().map(&resolve_mf).collect::<Result<_>>()?,
                })
            })
            .transpose()?;

        let cfg = Self {
            registry,
            model_functions: raw.model_functions,
            systems,
            checks: raw.checks,
            allocation,
            reproduce: raw.reproduce,
            probe: raw.probe,
            grid: raw.grid,
            monte_carlo: raw.monte_carlo,
            tolerance: raw.tolerance,
            quadrature,
            output: raw.output,
            seed: raw.seed,
        };
        for c in &cfg.checks {
            cfg.subject(&c.a)?;
            cfg.subject(&c.b)?;
        }
        Ok(cfg)
    }

    /// Looks `id` up among the systems, then among the distributions.
    pub fn subject(&self, id: &str) -> Result<Subject<'_>> {
        if let Some(s) = self.systems.get(id) {
            return Ok(Subject::System(s));
        }
        self.registry
            .get(id)
            .map(Subject::Law)
            .ok_or_else(|| config_err(format!("unknown system or distribution `{id}`")))
    }

    /// Seed precedence: command line, then the environment variable, then
    /// the document, then [`DEFAULT_SEED`].
    pub fn effective_seed(&self, cli: Option<u64>, env: Option<&str>) -> Result<u64> {
        if let Some(s) = cli {
            return Ok(s);
        }
        if let Some(v) = env {
            return v.trim().parse().map_err(|_| config_err(format!("{SEED_ENV}=`{v}` is not an unsigned integer")));
        }
        Ok(self.seed.unwrap_or(DEFAULT_SEED))
    }

    /// The configured grid, with `t_max` defaulting to `horizon`.
    pub fn grid_with_horizon(&self, horizon: f64) -> Result<Grid> {
        let t_max = self.grid.t_max.unwrap_or(horizon);
        Ok(Grid::refined(t_max, self.grid.points)?)
    }

    /// The configured grid over the largest 0.999 quantile of `registry`.
    pub fn grid_for(&self, registry: &Registry) -> Result<Grid> {
        self.grid_with_horizon(registry_horizon(registry))
    }

    pub fn grid(&self) -> Result<Grid> {
        if self.registry.is_empty() && self.grid.t_max.is_none() {
            return Err(config_err("no distributions and no grid.t_max"));
        }
        self.grid_for(&self.registry)
    }
}

pub fn registry_horizon(registry: &Registry) -> f64 {
    registry.values().map(LifetimeDistribution::grid_horizon).fold(0.0, f64::max)
}
