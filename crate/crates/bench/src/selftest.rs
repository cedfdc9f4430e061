//! Quick end-to-end battery run by `standby-lab selftest`.

use serde::Serialize;
use standby_core::standby::TimeMap;
use standby_core::{LifetimeDistribution, ModelFunction, StandbyComposite};

use crate::config::{ExperimentConfig, MonteCarloSettings};
use crate::error::{Outcome, Result};
use crate::probe::{probe, Family, ProbeSpec, Violation};
use crate::reproduce::{run_reproduction, ExampleId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestLine {
    pub name: String,
    pub outcome: Outcome,
    pub detail: String,
}

const PROBE_TRIALS: u64 = 20;
const SELFTEST_DRAWS: u64 = 100_000;

/// Largest deviation of `S_{X⊛Y}` from `2e^{-t} - e^{-2t}` at 50 points on (0, 5].
fn reduction_error(x_rate: f64, mf: ModelFunction) -> Result<f64> {
    let x = LifetimeDistribution::exponential(x_rate)?;
    let y = LifetimeDistribution::exponential(1.0)?;
    let c = StandbyComposite::new(x, y, mf)?;
    let mut worst: f64 = 0.0;
    for i in 1..=50 {
        let t = 0.1 * i as f64;
        let exact = 2.0 * (-t).exp() - (-2.0 * t).exp();
        worst = worst.max((c.warm_survival(t)? - exact).abs());
    }
    Ok(worst)
}

fn line(name: &str, ok: bool, detail: String) -> SelftestLine {
    SelftestLine { name: name.into(), outcome: if ok { Outcome::Pass } else { Outcome::Fail }, detail }
}

pub fn selftest(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<SelftestLine>> {
    let mut out = Vec::new();
    let hot = reduction_error(1.0, ModelFunction::hot())?;
    out.push(line("hot reduction", hot <= 1e-9, format!("max error {hot:.3e}")));
    let general = reduction_error(1.0, ModelFunction::new(TimeMap::linear(1.0), TimeMap::linear(1.0)))?;
    out.push(line("hot limit through the general integral", general <= 1e-9, format!("max error {general:.3e}")));
    let cold = reduction_error(2.0, ModelFunction::cold())?;
    out.push(line("cold reduction", cold <= 1e-9, format!("max error {cold:.3e}")));

    let quick = ExperimentConfig {
        monte_carlo: MonteCarloSettings {
            sp_draws: cfg.monte_carlo.sp_draws.min(SELFTEST_DRAWS),
            marginal_draws: cfg.monte_carlo.marginal_draws.min(SELFTEST_DRAWS),
        },
        reproduce: Default::default(),
        ..cfg.clone()
    };
    for id in ExampleId::ALL {
        let r = run_reproduction(id, &quick, seed, None)?;
        let detail = r.checks.iter().map(|c| format!("{}={:?}", c.name, c.outcome)).collect::<Vec<_>>().join(", ");
        out.push(SelftestLine { name: format!("reproduce {}", id.name()), outcome: r.overall, detail });
    }
    for family in [Family::SeriesSt, Family::ParallelSt, Family::Model3ParallelSt, Family::SeriesSp] {
        let spec = ProbeSpec {
            family,
            violation: Violation::None,
            trials: PROBE_TRIALS,
            seed,
            points: cfg.grid.points,
            tol: cfg.tolerance,
        };
        let r = probe(&spec)?;
        out.push(SelftestLine { name: format!("probe {} (nothing violated)", family.name()), outcome: r.outcome, detail: r.summary });
    }
    Ok(out)
}
