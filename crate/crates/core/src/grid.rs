//! Evaluation grids shared by shape checks, order checks and curve output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_POINTS: usize = 512;
/// Share of the default grid spent on the geometric refinement near zero.
const GEOMETRIC_POINTS: usize = 64;

/// Summary of a grid as it appears in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub points: usize,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    /// Strictly increasing, nonnegative, finite points.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateGrid("no points".into()));
        }
        if points.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::DegenerateGrid("points must be finite and nonnegative".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DegenerateGrid("points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `n` equally spaced points on `[0, t_max]`.
    pub fn uniform(t_max: f64, n: usize) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() || n < 2 {
            return Err(Error::DegenerateGrid(format!("uniform grid with t_max={t_max}, n={n}")));
        }
        let h = t_max / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        points[n - 1] = t_max;
        Self::from_points(points)
    }

    /// Default 512-point grid: uniform on `[0, t_max]` plus a geometric
    /// refinement between `1e-4 h` and the first uniform step `h`.
    pub fn default_for(t_max: f64) -> Result<Self> {
        Self::refined(t_max, DEFAULT_POINTS)
    }

    pub fn refined(t_max: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Self::uniform(t_max, n);
        }
        let n_geo = (n / 8).min(GEOMETRIC_POINTS);
        let n_uni = n - n_geo;
        let uniform = Self::uniform(t_max, n_uni)?;
        let h = uniform.points[1];
        let lo = h * 1e-4;
        let ratio = (h / lo).powf(1.0 / n_geo as f64);
        let mut points = uniform.points;
        points.extend((0..n_geo).map(|i| lo * ratio.powi(i as i32)));
        points.sort_by(f64::total_cmp);
        points.dedup();
        Self::from_points(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.points.last().expect("grid is nonempty")
    }

    pub fn descriptor(&self) -> GridDescriptor {
        GridDescriptor { points: self.len(), t_max: self.t_max() }
    }
}
