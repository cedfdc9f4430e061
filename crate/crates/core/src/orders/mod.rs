//! Grid checks of stochastic-order relations.
//!
//! A verdict that holds means it holds at every grid point within tolerance.
//! It is never a statement about the continuum.

mod sp;

pub use sp::{sp_series_delta2, ConfidenceInterval, Delta2Method, Delta2Result, SpVerdict, TRUNCATION_MASS};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridDescriptor};
use crate::lifetimes::{Lifetime, SURVIVAL_FLOOR};
use crate::verdict::GridVerdict;

/// Densities below this on the grid interior make an LR check on tabulated
/// laws inconclusive.
pub const TABULATED_DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    Lr,
    Hr,
    Rhr,
    St,
    Icv,
    Sp,
}

impl OrderKind {
    pub const GRID_KINDS: [OrderKind; 5] = [Self::Lr, Self::Hr, Self::Rhr, Self::St, Self::Icv];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lr => "lr",
            Self::Hr => "hr",
            Self::Rhr => "rhr",
            Self::St => "st",
            Self::Icv => "icv",
            Self::Sp => "sp",
        }
    }
}

impl std::str::FromStr for OrderKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(Self::Lr),
            "hr" => Ok(Self::Hr),
            "rhr" => Ok(Self::Rhr),
            "st" => Ok(Self::St),
            "icv" => Ok(Self::Icv),
            "sp" => Ok(Self::Sp),
            other => Err(format!("unknown order `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "A_le_B")]
    ALeB,
    #[serde(rename = "B_le_A")]
    BLeA,
    Both,
    Neither,
    Inconclusive,
}

impl Direction {
    fn from_pair(a_le_b: &GridVerdict, b_le_a: &GridVerdict) -> Self {
        match (a_le_b, b_le_a) {
            (GridVerdict::Inconclusive { .. }, _) | (_, GridVerdict::Inconclusive { .. }) => Self::Inconclusive,
            (GridVerdict::Holds, GridVerdict::Holds) => Self::Both,
            (GridVerdict::Holds, _) => Self::ALeB,
            (_, GridVerdict::Holds) => Self::BLeA,
            _ => Self::Neither,
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            Self::ALeB => Self::BLeA,
            Self::BLeA => Self::ALeB,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub margin: f64,
}

/// Worst violation found for each direction that failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witnesses {
    pub a_le_b: Option<Witness>,
    pub b_le_a: Option<Witness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Grid,
    Quadrature,
    MonteCarlo { lower: f64, upper: f64, level: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub relation: OrderKind,
    pub direction: Direction,
    pub witness: Option<Witnesses>,
    pub method: Method,
    pub grid: Option<GridDescriptor>,
    /// Explanation when the direction is inconclusive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl OrderVerdict {
    /// The verdict with the roles of A and B exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            direction: self.direction.mirrored(),
            witness: self.witness.map(|w| Witnesses { a_le_b: w.b_le_a, b_le_a: w.a_le_b }),
            ..self.clone()
        }
    }
}

fn witness(v: &GridVerdict) -> Option<Witness> {
    match v {
        GridVerdict::FailsAt { t, margin } => Some(Witness { t: *t, margin: *margin }),
        _ => None,
    }
}

fn on_grid(d: &dyn Lifetime, ts: &[f64], f: impl Fn(&dyn Lifetime, f64) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    ts.par_iter().map(|&t| f(d, t)).collect()
}

/// Values of one law that the checks need, evaluated once per grid.
struct Profile {
    survival: Vec<f64>,
    cdf: Vec<f64>,
    density: Option<Vec<f64>>,
}

impl Profile {
    fn new(d: &dyn Lifetime, ts: &[f64], with_density: bool) -> Result<Self> {
        Ok(Self {
            survival: on_grid(d, ts, |d, t| d.survival(t))?,
            cdf: on_grid(d, ts, |d, t| d.cdf(t))?,
            density: if with_density { Some(on_grid(d, ts, |d, t| d.density(t))?) } else { None },
        })
    }
}

/// Monotonicity of a ratio over the points where it is defined. A step down
/// counts when it exceeds `tol` times the larger of the two ratios; margins
/// are these relative decreases.
fn ratio_nondecreasing(ts: &[f64], ratios: &[Option<f64>], tol: f64) -> Result<GridVerdict> {
    let kept: Vec<(f64, f64)> = ts.iter().zip(ratios).filter_map(|(&t, r)| r.map(|r| (t, r))).collect();
    if kept.len() < 2 {
        return Err(Error::NumericalUnderflow(format!(
            "{} grid points where the ratio is defined, need 2",
            kept.len()
        )));
    }
    Ok(GridVerdict::from_violations(
        kept.windows(2)
            .filter_map(|w| {
                let scale = w[0].1.abs().max(w[1].1.abs());
                (scale > 0.0).then(|| (w[1].0, (w[0].1 - w[1].1) / scale))
            })
            .filter(|&(_, m)| m > tol),
    ))
}

fn quotient(num: f64, den: f64) -> Option<f64> {
    let r = num / den;
    r.is_finite().then_some(r)
}

/// Cumulative trapezoid integral of `values` over `ts`, anchored at `t = 0`
/// where survival is 1.
fn cumulative(ts: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = if ts[0] > 0.0 { 0.5 * ts[0] * (1.0 + values[0]) } else { 0.0 };
    let mut out = Vec::with_capacity(ts.len());
    out.push(acc);
    for i in 1..ts.len() {
        acc += 0.5 * (ts[i] - ts[i - 1]) * (values[i] + values[i - 1]);
        out.push(acc);
    }
    out
}

/// `lower ≤_kind upper` on the grid.
fn precedes(kind: OrderKind, ts: &[f64], lower: &Profile, upper: &Profile, tol: f64, tabulated: bool) -> Result<GridVerdict> {
    let alive = |i: usize| lower.survival[i] > SURVIVAL_FLOOR && upper.survival[i] > SURVIVAL_FLOOR;
    match kind {
        OrderKind::St => Ok(GridVerdict::from_violations(
            ts.iter()
                .zip(lower.survival.iter().zip(&upper.survival))
                .map(|(&t, (l, u))| (t, l - u))
                .filter(|&(_, m)| m > tol),
        )),
        OrderKind::Icv => {
            let (il, iu) = (cumulative(ts, &lower.survival), cumulative(ts, &upper.survival));
            Ok(GridVerdict::from_violations(
                ts.iter().zip(il.iter().zip(&iu)).map(|(&t, (l, u))| (t, l - u)).filter(|&(_, m)| m > tol),
            ))
        }
        OrderKind::Hr => {
            let r: Vec<Option<f64>> = (0..ts.len())
                .map(|i| if alive(i) { quotient(upper.survival[i], lower.survival[i]) } else { None })
                .collect();
            ratio_nondecreasing(ts, &r, tol)
        }
        OrderKind::Rhr => {
            let r: Vec<Option<f64>> = (0..ts.len())
                .map(|i| {
                    if lower.cdf[i] > SURVIVAL_FLOOR && upper.cdf[i] > SURVIVAL_FLOOR {
                        quotient(upper.cdf[i], lower.cdf[i])
                    } else {
                        None
                    }
                })
                .collect();
            ratio_nondecreasing(ts, &r, tol)
        }
        OrderKind::Lr => {
            let (fl, fu) = (lower.density.as_ref().unwrap(), upper.density.as_ref().unwrap());
            if tabulated {
                let interior = 1..ts.len().saturating_sub(1);
                if let Some(i) = interior.clone().find(|&i| alive(i) && (fl[i] < TABULATED_DENSITY_FLOOR || fu[i] < TABULATED_DENSITY_FLOOR)) {
                    return Ok(GridVerdict::Inconclusive {
                        reason: format!("tabulated density below {TABULATED_DENSITY_FLOOR:e} at t={}", ts[i]),
                    });
                }
            }
            let r: Vec<Option<f64>> = (0..ts.len())
                .map(|i| {
                    if alive(i) && fl[i].is_finite() && fu[i].is_finite() && fl[i] > 0.0 {
                        quotient(fu[i], fl[i])
                    } else {
                        None
                    }
                })
                .collect();
            ratio_nondecreasing(ts, &r, tol)
        }
        OrderKind::Sp => Err(Error::Unsupported("sp needs coupled systems; use sp_series_delta2".into())),
    }
}

fn check_profiles(kind: OrderKind, ts: &[f64], a: &Profile, b: &Profile, tol: f64, tabulated: bool, grid: GridDescriptor) -> Result<OrderVerdict> {
    let a_le_b = precedes(kind, ts, a, b, tol, tabulated)?;
    let b_le_a = precedes(kind, ts, b, a, tol, tabulated)?;
    let direction = Direction::from_pair(&a_le_b, &b_le_a);
    let witnesses = Witnesses { a_le_b: witness(&a_le_b), b_le_a: witness(&b_le_a) };
    let note = [&a_le_b, &b_le_a].iter().find_map(|v| match v {
        GridVerdict::Inconclusive { reason } => Some(reason.clone()),
        _ => None,
    });
    Ok(OrderVerdict {
        relation: kind,
        direction,
        witness: (witnesses.a_le_b.is_some() || witnesses.b_le_a.is_some()).then_some(witnesses),
        method: Method::Grid,
        grid: Some(grid),
        note,
    })
}

fn check_grid(grid: &Grid) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::DegenerateGrid(format!("{} points, need 2", grid.len())));
    }
    Ok(())
}

/// Checks `A ≤ B` and `B ≤ A` for one of the grid orders.
pub fn check_order(a: &dyn Lifetime, b: &dyn Lifetime, kind: OrderKind, grid: &Grid, tol: f64) -> Result<OrderVerdict> {
    if kind == OrderKind::Sp {
        return Err(Error::Unsupported("sp needs coupled systems; use sp_series_delta2".into()));
    }
    check_grid(grid)?;
    let ts = grid.points();
    let lr = kind == OrderKind::Lr;
    let (pa, pb) = (Profile::new(a, ts, lr)?, Profile::new(b, ts, lr)?);
    let tabulated = a.has_tabulated_density() || b.has_tabulated_density();
    check_profiles(kind, ts, &pa, &pb, tol, tabulated, grid.descriptor())
}

/// The implications checked by [`implication_audit`], upstream first.
pub const IMPLICATIONS: [(OrderKind, OrderKind); 5] = [
    (OrderKind::Lr, OrderKind::Hr),
    (OrderKind::Lr, OrderKind::Rhr),
    (OrderKind::Hr, OrderKind::St),
    (OrderKind::Rhr, OrderKind::St),
    (OrderKind::St, OrderKind::Icv),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicationFlag {
    pub upstream: OrderKind,
    pub downstream: OrderKind,
    /// `A_le_B` or `B_le_A`.
    pub direction: Direction,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicationReport {
    pub verdicts: Vec<OrderVerdict>,
    pub flags: Vec<ImplicationFlag>,
}

impl ImplicationReport {
    pub fn consistent(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn verdict(&self, kind: OrderKind) -> Option<&OrderVerdict> {
        self.verdicts.iter().find(|v| v.relation == kind)
    }
}

fn direction_holds(v: &OrderVerdict, dir: Direction) -> bool {
    matches!((v.direction, dir), (Direction::Both, _)) || v.direction == dir
}

fn direction_witness(v: &OrderVerdict, dir: Direction) -> Option<Witness> {
    let w = v.witness?;
    if dir == Direction::ALeB {
        w.a_le_b
    } else {
        w.b_le_a
    }
}

/// Survival (at the far end) and CDF (near zero) level where the extended
/// audit grid stops.
pub const TAIL_SURVIVAL: f64 = 1e-14;
const TAIL_POINTS: usize = 256;
const HEAD_POINTS_PER_DECADE: i32 = 8;

/// `grid` continued geometrically toward zero until both CDFs are at most
/// [`TAIL_SURVIVAL`], and uniformly outward until both survivals are.
fn extended(a: &dyn Lifetime, b: &dyn Lifetime, grid: &Grid) -> Result<Grid> {
    let mut points = Vec::new();
    if let Some(&first) = grid.points().iter().find(|&&t| t > 0.0) {
        let step = 10f64.powf(-1.0 / HEAD_POINTS_PER_DECADE as f64);
        let mut t = first * step;
        while t > 1e-300 && (a.cdf(t)? > TAIL_SURVIVAL || b.cdf(t)? > TAIL_SURVIVAL) {
            points.push(t);
            t *= step;
        }
        points.push(t);
    }
    points.extend_from_slice(grid.points());
    let t_max = grid.t_max();
    let mut end = t_max.max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if a.survival(end)? <= TAIL_SURVIVAL && b.survival(end)? <= TAIL_SURVIVAL {
            break;
        }
        end *= 1.5;
    }
    if end > t_max {
        let h = (end - t_max) / TAIL_POINTS as f64;
        points.extend((1..=TAIL_POINTS).map(|i| t_max + i as f64 * h));
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    Grid::from_points(points)
}

/// Runs every grid order in both directions and flags patterns that break
/// the chain `lr ⇒ hr, rhr ⇒ st ⇒ icv`: an upstream order holding while a
/// downstream order fails by more than `10 tol`.
///
/// `lr ⇒ hr` and `rhr ⇒ st` depend on the laws beyond the end of the grid
/// and `lr ⇒ rhr` on the laws below its first point, so for those the
/// upstream order must also hold on the grid continued both ways.
pub fn implication_audit(a: &dyn Lifetime, b: &dyn Lifetime, grid: &Grid, tol: f64) -> Result<ImplicationReport> {
    check_grid(grid)?;
    let ts = grid.points();
    let (pa, pb) = (Profile::new(a, ts, true)?, Profile::new(b, ts, true)?);
    let tabulated = a.has_tabulated_density() || b.has_tabulated_density();
    let verdicts = OrderKind::GRID_KINDS
        .iter()
        .map(|&k| check_profiles(k, ts, &pa, &pb, tol, tabulated, grid.descriptor()))
        .collect::<Result<Vec<_>>>()?;
    let by_kind = |k: OrderKind| verdicts.iter().find(|v| v.relation == k).unwrap();

    let wide = extended(a, b, grid)?;
    let (lr_wide, rhr_wide) =
        (check_order(a, b, OrderKind::Lr, &wide, tol)?, check_order(a, b, OrderKind::Rhr, &wide, tol)?);

    let mut flags = Vec::new();
    for dir in [Direction::ALeB, Direction::BLeA] {
        for (up, down) in IMPLICATIONS {
            let upstream = match up {
                OrderKind::Lr => &lr_wide,
                OrderKind::Rhr if down == OrderKind::St => &rhr_wide,
                _ => by_kind(up),
            };
            if !direction_holds(by_kind(up), dir) || !direction_holds(upstream, dir) {
                continue;
            }
            if let Some(w) = direction_witness(by_kind(down), dir) {
                if w.margin > 10.0 * tol {
                    flags.push(ImplicationFlag { upstream: up, downstream: down, direction: dir, witness: w });
                }
            }
        }
    }
    Ok(ImplicationReport { verdicts, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifetimes::LifetimeDistribution;

    fn exp(rate: f64) -> LifetimeDistribution {
        LifetimeDistribution::exponential(rate).unwrap()
    }

    fn weib(k: f64, s: f64) -> LifetimeDistribution {
        LifetimeDistribution::weibull(k, s).unwrap()
    }

    fn grid_for(a: &LifetimeDistribution, b: &LifetimeDistribution) -> Grid {
        Grid::default_for(a.grid_horizon().max(b.grid_horizon())).unwrap()
    }

    fn verdict(a: &LifetimeDistribution, b: &LifetimeDistribution, k: OrderKind) -> OrderVerdict {
        check_order(a, b, k, &grid_for(a, b), 1e-9).unwrap()
    }

    #[test]
    fn exponential_pair_is_lr_ordered() {
        assert_eq!(verdict(&exp(2.0), &exp(1.0), OrderKind::Lr).direction, Direction::ALeB);
        assert_eq!(verdict(&exp(2.0), &exp(1.0), OrderKind::Icv).direction, Direction::ALeB);
    }

    #[test]
    fn identical_laws_are_both() {
        let d = weib(1.7, 0.8);
        for k in OrderKind::GRID_KINDS {
            let v = verdict(&d, &d, k);
            assert_eq!(v.direction, Direction::Both, "{k:?}");
            assert!(v.witness.is_none());
        }
    }

    #[test]
    fn crossing_hazards_are_neither() {
        let v = verdict(&weib(0.5, 1.0), &weib(2.0, 1.0), OrderKind::Hr);
        assert_eq!(v.direction, Direction::Neither);
        let w = v.witness.unwrap();
        assert!(w.a_le_b.is_some() && w.b_le_a.is_some());
    }

    #[test]
    fn verdicts_are_antisymmetric() {
        let (a, b) = (weib(0.8, 1.3), exp(1.1));
        for k in OrderKind::GRID_KINDS {
            let ab = verdict(&a, &b, k);
            let ba = verdict(&b, &a, k);
            assert_eq!(ab.mirrored(), ba, "{k:?}");
        }
    }

    #[test]
    fn json_shape() {
        let v = verdict(&exp(2.0), &exp(1.0), OrderKind::Hr);
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["relation"], "hr");
        assert_eq!(json["direction"], "A_le_B");
        assert_eq!(json["method"], "grid");
        assert_eq!(json["grid"]["points"], 512);
        // Only the failing direction carries a witness.
        assert!(json["witness"]["a_le_b"].is_null());
        assert!(json["witness"]["b_le_a"]["t"].is_number());
    }

    #[test]
    fn audit_of_ordered_exponentials() {
        let (a, b) = (exp(2.0), exp(1.0));
        let r = implication_audit(&a, &b, &grid_for(&a, &b), 1e-9).unwrap();
        assert!(r.consistent());
        for v in &r.verdicts {
            assert_eq!(v.direction, Direction::ALeB, "{:?}", v.relation);
        }
        let r = implication_audit(&a, &a, &grid_for(&a, &a), 1e-9).unwrap();
        assert!(r.verdicts.iter().all(|v| v.direction == Direction::Both));
    }

    #[test]
    fn tabulated_density_dip_is_inconclusive() {
        let p = LifetimeDistribution::piecewise(vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.5), (3.0, 0.2)]).unwrap();
        let grid = Grid::uniform(4.0, 81).unwrap();
        let v = check_order(&p, &exp(1.0), OrderKind::Lr, &grid, 1e-9).unwrap();
        assert_eq!(v.direction, Direction::Inconclusive);
        assert!(v.note.is_some());
    }

    #[test]
    fn sp_and_small_grids_are_rejected() {
        let g = Grid::from_points(vec![1.0]).unwrap();
        assert!(matches!(check_order(&exp(1.0), &exp(2.0), OrderKind::St, &g, 1e-9), Err(Error::DegenerateGrid(_))));
        let g = Grid::uniform(1.0, 10).unwrap();
        assert!(check_order(&exp(1.0), &exp(2.0), OrderKind::Sp, &g, 1e-9).is_err());
    }
}
