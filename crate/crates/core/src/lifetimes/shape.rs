use serde::{Deserialize, Serialize};

use super::Lifetime;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridDescriptor};
use crate::verdict::GridVerdict;

/// Shape checks ignore the region where survival has dropped below this.
pub const SHAPE_FLOOR: f64 = 1e-12;
pub const DEFAULT_SHAPE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeProperty {
    LogConcaveSurvival,
    LogConvexSurvival,
    ConvexSurvival,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeVerdict {
    pub property: ShapeProperty,
    pub result: GridVerdict,
    pub grid: GridDescriptor,
}

/// Tests the sign of discrete second differences over consecutive grid
/// triples. For a triple `t0 < t1 < t2` the tested quantity is the divided
/// second difference scaled by `(t1 - t0)(t2 - t1)`, which reduces to
/// `g0 - 2 g1 + g2` on a uniform grid.
pub fn shape_check(
    d: &dyn Lifetime,
    property: ShapeProperty,
    grid: &Grid,
    tol: f64,
) -> Result<ShapeVerdict> {
    let mut ts = Vec::with_capacity(grid.len());
    let mut gs = Vec::with_capacity(grid.len());
    for &t in grid.points() {
        let s = d.survival(t)?;
        if s <= SHAPE_FLOOR {
            break;
        }
        let g = match property {
            ShapeProperty::ConvexSurvival => s,
            _ => d.ln_survival(t)?,
        };
        ts.push(t);
        gs.push(g);
    }
    if ts.len() < 3 {
        return Err(Error::DegenerateGrid(format!(
            "{} grid points above the survival floor, need 3",
            ts.len()
        )));
    }
    let descriptor = grid.descriptor();
    if gs.iter().any(|g| !g.is_finite()) {
        return Ok(ShapeVerdict {
            property,
            result: GridVerdict::Inconclusive { reason: "non-finite survival on grid".into() },
            grid: descriptor,
        });
    }
    let violations = (1..ts.len() - 1).filter_map(|i| {
        let (h0, h1) = (ts[i] - ts[i - 1], ts[i + 1] - ts[i]);
        let d2 = 2.0 * ((gs[i + 1] - gs[i]) / h1 - (gs[i] - gs[i - 1]) / h0) / (h0 + h1);
        let second = d2 * h0 * h1;
        let excess = match property {
            ShapeProperty::LogConcaveSurvival => second,
            ShapeProperty::LogConvexSurvival | ShapeProperty::ConvexSurvival => -second,
        };
        (excess > tol).then_some((ts[i], excess))
    });
    Ok(ShapeVerdict { property, result: GridVerdict::from_violations(violations), grid: descriptor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifetimes::LifetimeDistribution;

    fn verdict(d: &LifetimeDistribution, p: ShapeProperty) -> GridVerdict {
        let grid = Grid::default_for(d.grid_horizon()).unwrap();
        shape_check(d, p, &grid, DEFAULT_SHAPE_TOL).unwrap().result
    }

    #[test]
    fn exponential_is_log_linear() {
        let e = LifetimeDistribution::exponential(1.0).unwrap();
        assert!(verdict(&e, ShapeProperty::LogConcaveSurvival).holds());
        assert!(verdict(&e, ShapeProperty::LogConvexSurvival).holds());
        assert!(verdict(&e, ShapeProperty::ConvexSurvival).holds());
    }

    #[test]
    fn weibull_two_is_log_concave_only() {
        let w = LifetimeDistribution::weibull(2.0, 1.0).unwrap();
        assert!(verdict(&w, ShapeProperty::LogConcaveSurvival).holds());
        assert!(verdict(&w, ShapeProperty::LogConvexSurvival).fails());
    }

    #[test]
    fn weibull_half_is_log_convex() {
        let w = LifetimeDistribution::weibull(0.5, 1.0).unwrap();
        assert!(verdict(&w, ShapeProperty::LogConvexSurvival).holds());
        assert!(verdict(&w, ShapeProperty::LogConcaveSurvival).fails());
    }

    #[test]
    fn degenerate_grid() {
        let e = LifetimeDistribution::exponential(1.0).unwrap();
        let grid = Grid::from_points(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            shape_check(&e, ShapeProperty::LogConcaveSurvival, &grid, 1e-9),
            Err(Error::DegenerateGrid(_))
        ));
    }
}
