//! Grid audits of the hypotheses behind the allocation results, and which
//! result, if any, they make applicable.

use serde::Serialize;
use standby_core::lifetimes::{shape_check, ShapeProperty, DEFAULT_SHAPE_TOL};
use standby_core::orders::Direction;
use standby_core::standby::TimeMap;
use standby_core::{check_order, Grid, Lifetime, LifetimeDistribution, ModelFunction, OrderKind};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    /// hr-ordered components, hr-ordered standbys, ordered model functions.
    SeriesHazardRate,
    /// Common model function with `ω = γ` and increasing `δ`; st-ordered standbys.
    SeriesStandbyStochastic,
    /// Common model function with increasing `δ` and `ω - γ`; log-concave standby.
    ParallelLogConcave,
    /// Common model function with `ω = γ` and increasing `δ`; st-ordered standbys.
    ParallelStandbyStochastic,
    /// Model III straight pairing beats cross pairing.
    CrossPairing,
    /// Precedence comparison of series systems.
    SeriesPrecedence,
}

impl Theorem {
    pub fn describe(self) -> &'static str {
        match self {
            Self::SeriesHazardRate => "series allocation result for hr-ordered components and standbys",
            Self::SeriesStandbyStochastic => "series allocation result for omega = gamma with st-ordered standbys",
            Self::ParallelLogConcave => "parallel allocation result for log-concave standbys",
            Self::ParallelStandbyStochastic => "parallel allocation result for omega = gamma with st-ordered standbys",
            Self::CrossPairing => "Model III parallel pairing result",
            Self::SeriesPrecedence => "series stochastic-precedence result",
        }
    }
}

/// One reinforced slot: component, its standby and their model function.
#[derive(Debug, Clone, Copy)]
pub struct Slot<'a> {
    pub x: &'a LifetimeDistribution,
    pub y: &'a LifetimeDistribution,
    pub mf: &'a ModelFunction,
}

/// Grid and tolerance shared by every audit.
#[derive(Debug, Clone, Copy)]
pub struct Audit<'a> {
    pub grid: &'a Grid,
    pub tol: f64,
}

impl Audit<'_> {
    /// `a ≤_kind b` on the grid.
    pub fn le(&self, a: &dyn Lifetime, b: &dyn Lifetime, kind: OrderKind) -> Result<bool> {
        let v = check_order(a, b, kind, self.grid, self.tol)?;
        Ok(matches!(v.direction, Direction::ALeB | Direction::Both))
    }

    pub fn map_le(&self, f: &TimeMap, g: &TimeMap) -> bool {
        f == g || self.grid.points().iter().all(|&t| f.value(t) <= g.value(t) + self.tol)
    }

    pub fn map_eq(&self, f: &TimeMap, g: &TimeMap) -> bool {
        self.map_le(f, g) && self.map_le(g, f)
    }

    pub fn mf_eq(&self, a: &ModelFunction, b: &ModelFunction) -> bool {
        self.map_eq(&a.gamma, &b.gamma) && self.map_eq(&a.omega, &b.omega)
    }

    pub fn log_concave(&self, d: &LifetimeDistribution) -> Result<bool> {
        self.shape(d, ShapeProperty::LogConcaveSurvival)
    }

    pub fn log_convex(&self, d: &LifetimeDistribution) -> Result<bool> {
        self.shape(d, ShapeProperty::LogConvexSurvival)
    }

    fn shape(&self, d: &LifetimeDistribution, p: ShapeProperty) -> Result<bool> {
        Ok(shape_check(d, p, self.grid, DEFAULT_SHAPE_TOL)?.result.holds())
    }

    /// `δ` increasing and `ω = γ`.
    pub fn storage_matches_age(&self, mf: &ModelFunction) -> bool {
        let audit = mf.validate(self.grid);
        audit.delta_increasing.holds() && (mf.gamma == mf.omega || audit.omega_equals_gamma.holds())
    }

    /// `δ` and `ω - γ` both increasing.
    pub fn spread_increasing(&self, mf: &ModelFunction) -> bool {
        let audit = mf.validate(self.grid);
        audit.delta_increasing.holds() && audit.omega_minus_gamma_increasing.holds()
    }

    /// A result implying that reinforcing slot `j` gives a series system
    /// that is st-smaller than reinforcing slot `i`.
    pub fn series_st(&self, i: Slot<'_>, j: Slot<'_>) -> Result<Option<Theorem>> {
        if !self.le(i.x, j.x, OrderKind::Hr)? {
            return Ok(None);
        }
        let gamma_ordered = self.map_le(&i.mf.gamma, &j.mf.gamma);
        if gamma_ordered && self.le(j.y, i.y, OrderKind::Hr)? {
            let (wi, wj) = (&i.mf.omega, &j.mf.omega);
            if self.map_eq(wi, wj) {
                return Ok(Some(Theorem::SeriesHazardRate));
            }
            let concave = self.log_concave(i.y)? || self.log_concave(j.y)?;
            if concave && self.map_le(wi, wj) {
                return Ok(Some(Theorem::SeriesHazardRate));
            }
            let convex = self.log_convex(i.y)? || self.log_convex(j.y)?;
            if convex && self.map_le(wj, wi) {
                return Ok(Some(Theorem::SeriesHazardRate));
            }
        }
        if self.mf_eq(i.mf, j.mf) && self.storage_matches_age(i.mf) && self.le(j.y, i.y, OrderKind::St)? {
            return Ok(Some(Theorem::SeriesStandbyStochastic));
        }
        Ok(None)
    }

    /// A result implying that reinforcing slot `j` gives a parallel system
    /// that is st-smaller than reinforcing slot `i`.
    pub fn parallel_st(&self, i: Slot<'_>, j: Slot<'_>) -> Result<Option<Theorem>> {
        if !self.mf_eq(i.mf, j.mf) || !self.le(j.x, i.x, OrderKind::Rhr)? {
            return Ok(None);
        }
        if self.spread_increasing(i.mf)
            && self.le(j.y, i.y, OrderKind::Hr)?
            && (self.log_concave(i.y)? || self.log_concave(j.y)?)
        {
            return Ok(Some(Theorem::ParallelLogConcave));
        }
        if self.storage_matches_age(i.mf) && self.le(j.y, i.y, OrderKind::St)? {
            return Ok(Some(Theorem::ParallelStandbyStochastic));
        }
        Ok(None)
    }

    /// Whether the straight pairing `(X1 ⊛ Y1, X2 ⊛ Y2)` of a parallel
    /// system is st-larger than the cross pairing. `straight` holds the two
    /// straight slots.
    pub fn cross_pairing(&self, straight: [Slot<'_>; 2]) -> Result<Option<Theorem>> {
        let [s1, s2] = straight;
        if !self.mf_eq(s1.mf, s2.mf) || !self.storage_matches_age(s1.mf) {
            return Ok(None);
        }
        let forward = self.le(s1.x, s2.x, OrderKind::Lr)? && self.le(s1.y, s2.y, OrderKind::Rhr)?;
        let backward = forward || (self.le(s2.x, s1.x, OrderKind::Lr)? && self.le(s2.y, s1.y, OrderKind::Rhr)?);
        Ok(backward.then_some(Theorem::CrossPairing))
    }

    /// A result implying that the series system reinforcing slot `j` is
    /// sp-smaller than the one reinforcing slot `i`.
    pub fn series_sp(&self, i: Slot<'_>, j: Slot<'_>) -> Result<Option<Theorem>> {
        let holds = self.map_le(&i.mf.gamma, &j.mf.gamma)
            && self.le(i.x, j.x, OrderKind::St)?
            && self.le(j.y, i.y, OrderKind::St)?;
        Ok(holds.then_some(Theorem::SeriesPrecedence))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(rate: f64) -> LifetimeDistribution {
        LifetimeDistribution::exponential(rate).unwrap()
    }

    #[test]
    fn series_hypotheses_of_the_worked_example() {
        let grid = Grid::default_for(5.0).unwrap();
        let audit = Audit { grid: &grid, tol: 1e-9 };
        let (x1, x2, y1, y2) = (exp(2.0), exp(1.0), exp(1.0), exp(2.0));
        let m1 = ModelFunction::new(TimeMap::linear(0.2), TimeMap::linear(0.6));
        let m2 = ModelFunction::new(TimeMap::linear(0.4), TimeMap::linear(0.8));
        let s1 = Slot { x: &x1, y: &y1, mf: &m1 };
        let s2 = Slot { x: &x2, y: &y2, mf: &m2 };
        assert_eq!(audit.series_st(s1, s2).unwrap(), Some(Theorem::SeriesHazardRate));
        assert_eq!(audit.series_st(s2, s1).unwrap(), None);
        assert_eq!(audit.series_sp(s1, s2).unwrap(), Some(Theorem::SeriesPrecedence));
    }

    #[test]
    fn parallel_needs_a_common_model_function() {
        let grid = Grid::default_for(5.0).unwrap();
        let audit = Audit { grid: &grid, tol: 1e-9 };
        let (x1, x2, y1, y2) = (exp(2.0), exp(1.0), exp(2.0), exp(1.0));
        let m = ModelFunction::new(TimeMap::log(0.3), TimeMap::linear(0.6));
        let other = ModelFunction::new(TimeMap::log(0.2), TimeMap::linear(0.6));
        let s1 = Slot { x: &x1, y: &y1, mf: &m };
        let s2 = Slot { x: &x2, y: &y2, mf: &m };
        assert_eq!(audit.parallel_st(s2, s1).unwrap(), Some(Theorem::ParallelLogConcave));
        assert_eq!(audit.parallel_st(s1, s2).unwrap(), None);
        let s2b = Slot { mf: &other, ..s2 };
        assert_eq!(audit.parallel_st(s2b, s1).unwrap(), None);
    }

    #[test]
    fn cross_pairing_accepts_both_orientations() {
        let grid = Grid::default_for(5.0).unwrap();
        let audit = Audit { grid: &grid, tol: 1e-9 };
        let (x1, x2, y1, y2) = (exp(2.0), exp(1.0), exp(2.0), exp(1.0));
        let m = ModelFunction::new(TimeMap::linear(0.5), TimeMap::linear(0.5));
        let s = |x, y| Slot { x, y, mf: &m };
        assert!(audit.cross_pairing([s(&x1, &y1), s(&x2, &y2)]).unwrap().is_some());
        assert!(audit.cross_pairing([s(&x2, &y2), s(&x1, &y1)]).unwrap().is_some());
        assert!(audit.cross_pairing([s(&x1, &y2), s(&x2, &y1)]).unwrap().is_none());
    }
}
