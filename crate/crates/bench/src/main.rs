use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use standby_core::lifetimes::{shape_check, ShapeProperty, DEFAULT_SHAPE_TOL};
use standby_core::orders::{Delta2Method, Direction};
use standby_core::{check_order, implication_audit, sp_series_delta2, Lifetime, OrderKind, StandbyComposite};
use standby_bench::checks::run_checks;
use standby_bench::config::{Subject, SEED_ENV};
use standby_bench::curve::{sample, Curve, Quantity};
use standby_bench::probe::{probe, Family, ProbeSpec, Violation};
use standby_bench::rank::rank_allocations;
use standby_bench::report::{to_json, write_json};
use standby_bench::selftest::selftest;
use standby_bench::{run_reproduction, BenchError, ExampleId, ExperimentConfig, Outcome, Result};

/// Warm-standby allocation experiments.
///
/// Exit status: 0 when every check passes, 1 when a check contradicts its
/// expected conclusion, 2 when a result is inconclusive or numerically
/// defective, 64 on configuration errors.
#[derive(Parser)]
#[command(name = "standby-lab", version)]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed; overrides the environment and the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    Survival,
    Cdf,
    Density,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SpMethod {
    Quadrature,
    MonteCarlo,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Diagnostics for distributions in the registry.
    Eval {
        /// Distribution ids; all when omitted.
        ids: Vec<String>,
        /// Evaluation times; eight evenly spaced times when omitted.
        #[arg(long = "at", value_delimiter = ',')]
        at: Vec<f64>,
    },
    /// Writes a warm-standby or system curve as CSV.
    Compose {
        /// A system from the configuration.
        #[arg(long, conflicts_with_all = ["base", "standby", "mf"])]
        system: Option<String>,
        #[arg(long, requires_all = ["standby", "mf"])]
        base: Option<String>,
        #[arg(long)]
        standby: Option<String>,
        /// Model function name.
        #[arg(long)]
        mf: Option<String>,
        #[arg(long, value_enum, default_value = "survival")]
        quantity: QuantityArg,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks a stochastic order between two systems or distributions, or
    /// runs the configured checks when none are named.
    CheckOrder {
        a: Option<String>,
        #[arg(requires = "a")]
        b: Option<String>,
        #[arg(long, default_value = "st")]
        kind: OrderKind,
        /// Runs every grid order and audits the implications between them.
        #[arg(long)]
        audit: bool,
    },
    /// Stochastic-precedence difference between two series systems.
    Sp {
        a: String,
        b: String,
        #[arg(long, value_enum, default_value = "both")]
        method: SpMethod,
        /// Monte Carlo draws; defaults to the configured sp budget.
        #[arg(long)]
        draws: Option<u64>,
    },
    /// Partially orders the candidates of the configured allocation.
    Rank,
    /// Reproduces a worked example: EX3_1, EX3_2, EX4_1 or EX4_2.
    Reproduce {
        example: ExampleId,
        /// Curve directory; defaults to the configured output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Searches for parameterizations violating one hypothesis where the
    /// conclusion fails.
    Probe {
        /// series-st, parallel-st, model3-parallel-st or series-sp.
        #[arg(long)]
        family: Option<String>,
        /// Hypothesis to drop, or `none`.
        #[arg(long)]
        violate: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Runs a short battery of end-to-end checks.
    Selftest,
}

fn print_json<T: Serialize>(value: &T) {
    print!("{}", to_json(value));
}

fn direction_outcome(d: Direction) -> Outcome {
    if d == Direction::Inconclusive {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    }
}

fn eval(cfg: &ExperimentConfig, ids: &[String], at: &[f64]) -> Result<Outcome> {
    let ids: Vec<String> = if ids.is_empty() { cfg.registry.keys().cloned().collect() } else { ids.to_vec() };
    let mut out = Vec::new();
    for id in &ids {
        let d = cfg.registry.get(id).ok_or_else(|| BenchError::Config(format!("unknown distribution `{id}`")))?;
        let grid = cfg.grid_with_horizon(d.grid_horizon())?;
        let times: Vec<f64> =
            if at.is_empty() { (1..=8).map(|k| grid.t_max() * k as f64 / 8.0).collect() } else { at.to_vec() };
        let points = times
            .iter()
            .map(|&t| Ok(json!({"t": t, "evaluation": d.evaluate(t)?})))
            .collect::<Result<Vec<_>>>()?;
        let shape = |p| -> Result<bool> { Ok(shape_check(d, p, &grid, DEFAULT_SHAPE_TOL)?.result.holds()) };
        out.push(json!({
            "id": id,
            "law": d,
            "quantiles": {"0.5": d.quantile(0.5)?, "0.9": d.quantile(0.9)?, "0.999": d.quantile(0.999)?},
            "log_concave_survival": shape(ShapeProperty::LogConcaveSurvival)?,
            "log_convex_survival": shape(ShapeProperty::LogConvexSurvival)?,
            "points": points,
        }));
    }
    print_json(&out);
    Ok(Outcome::Pass)
}

fn write_curve(curve: &Curve, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => curve.write_file(path),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            curve.write(&mut lock)?;
            lock.flush().map_err(|e| BenchError::Io { path: "<stdout>".into(), source: e })
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let seed = cfg.effective_seed(cli.seed, env_seed.as_deref())?;

    match cli.command {
        Command::Eval { ids, at } => eval(&cfg, &ids, &at),
        Command::Compose { system, base, standby, mf, quantity, out } => {
            let quantity = match quantity {
                QuantityArg::Survival => Quantity::Survival,
                QuantityArg::Cdf => Quantity::Cdf,
                QuantityArg::Density => Quantity::Density,
            };
            let (name, lifetime, horizon): (String, Box<dyn Lifetime>, f64) = match (system, base) {
                (Some(s), _) => {
                    let spec = cfg.systems.get(&s).ok_or_else(|| BenchError::Config(format!("unknown system `{s}`")))?;
                    let h = spec.grid_horizon();
                    (s, Box::new(spec.clone()), h)
                }
                (None, Some(x)) => {
                    let (y, m) = (standby.expect("clap requires --standby"), mf.expect("clap requires --mf"));
                    let law = |id: &str| {
                        cfg.registry.get(id).cloned().ok_or_else(|| BenchError::Config(format!("unknown distribution `{id}`")))
                    };
                    let mf = cfg
                        .model_functions
                        .get(&m)
                        .cloned()
                        .ok_or_else(|| BenchError::Config(format!("unknown model function `{m}`")))?;
                    let c = StandbyComposite::new(law(&x)?, law(&y)?, mf)?.with_quadrature(cfg.quadrature);
                    let h = c.base().grid_horizon().max(c.standby().grid_horizon());
                    (format!("{x}*{y}"), Box::new(c), h)
                }
                (None, None) => return Err(BenchError::Config("compose needs --system or --base/--standby/--mf".into())),
            };
            let grid = cfg.grid_with_horizon(horizon)?;
            let curve = Curve { system: name, check: "compose".into(), quantity, points: sample(lifetime.as_ref(), &grid, quantity)? };
            write_curve(&curve, out.as_ref())?;
            Ok(Outcome::Pass)
        }
        Command::CheckOrder { a: None, .. } => {
            if cfg.checks.is_empty() {
                return Err(BenchError::Config("no A B given and the configuration has no checks".into()));
            }
            let results = run_checks(&cfg)?;
            print_json(&results);
            Ok(Outcome::all(results.iter().map(|r| r.outcome)))
        }
        Command::CheckOrder { a: Some(a), b, kind, audit } => {
            let b = b.ok_or_else(|| BenchError::Config("check-order needs two ids".into()))?;
            let (sa, sb) = (cfg.subject(&a)?, cfg.subject(&b)?);
            if kind == OrderKind::Sp {
                return Err(BenchError::Config("use the `sp` subcommand for stochastic precedence".into()));
            }
            let grid = cfg.grid_with_horizon(sa.horizon().max(sb.horizon()))?;
            if audit {
                let r = implication_audit(sa.lifetime(), sb.lifetime(), &grid, cfg.tolerance)?;
                print_json(&r);
                return Ok(if r.consistent() { Outcome::Pass } else { Outcome::Inconclusive });
            }
            let v = check_order(sa.lifetime(), sb.lifetime(), kind, &grid, cfg.tolerance)?;
            print_json(&v);
            Ok(direction_outcome(v.direction))
        }
        Command::Sp { a, b, method, draws } => {
            let (Subject::System(v1), Subject::System(v2)) = (cfg.subject(&a)?, cfg.subject(&b)?) else {
                return Err(BenchError::Config("sp compares two series systems".into()));
            };
            let mut out = serde_json::Map::new();
            let mut outcome = Outcome::Pass;
            if method != SpMethod::MonteCarlo {
                let r = sp_series_delta2(v1, v2, Delta2Method::Quadrature, cfg.tolerance)?;
                outcome = outcome.combine(direction_outcome(r.order_verdict().direction));
                out.insert("quadrature".into(), json!(r));
            }
            if method != SpMethod::Quadrature {
                let draws = draws.unwrap_or(cfg.monte_carlo.sp_draws);
                let r = sp_series_delta2(v1, v2, Delta2Method::MonteCarlo { draws, seed }, cfg.tolerance)?;
                outcome = outcome.combine(direction_outcome(r.order_verdict().direction));
                out.insert("monte_carlo".into(), json!(r));
            }
            print_json(&out);
            Ok(outcome)
        }
        Command::Rank => {
            let r = rank_allocations(&cfg)?;
            print_json(&r);
            Ok(r.outcome)
        }
        Command::Reproduce { example, out_dir, report } => {
            let dir = out_dir.or_else(|| cfg.output.dir.clone());
            let r = run_reproduction(example, &cfg, seed, dir.as_deref())?;
            match report.or_else(|| cfg.output.report.clone()) {
                Some(path) => write_json(&r, &path)?,
                None => print_json(&r),
            }
            Ok(r.overall)
        }
        Command::Probe { family, violate, trials } => {
            let def = cfg.probe.as_ref();
            let family: Family = family
                .or_else(|| def.map(|p| p.family.clone()))
                .ok_or_else(|| BenchError::Config("probe needs --family or a `probe` section".into()))?
                .parse()?;
            let violate = violate.or_else(|| def.map(|p| p.violate.clone())).unwrap_or_else(|| "none".into());
            let spec = ProbeSpec {
                family,
                violation: Violation::parse(family, &violate)?,
                trials: trials.or_else(|| def.map(|p| p.trials)).unwrap_or(100),
                seed,
                points: cfg.grid.points,
                tol: cfg.tolerance,
            };
            let r = probe(&spec)?;
            print_json(&r);
            Ok(r.outcome)
        }
        Command::Selftest => {
            let lines = selftest(&cfg, seed)?;
            for l in &lines {
                let tag = match l.outcome {
                    Outcome::Pass => "PASS",
                    Outcome::Fail => "FAIL",
                    Outcome::Inconclusive => "INCONCLUSIVE",
                };
                println!("[{tag}] {}: {}", l.name, l.detail);
            }
            Ok(Outcome::all(lines.iter().map(|l| l.outcome)))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(64);
        }
    };
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("standby-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
