//! Curve sampling and `t,value` CSV output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use standby_core::{Grid, Lifetime};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Survival,
    Cdf,
    Density,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Self::Survival => "survival",
            Self::Cdf => "cdf",
            Self::Density => "density",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub system: String,
    pub check: String,
    pub quantity: Quantity,
    pub points: Vec<(f64, f64)>,
}

/// Samples `quantity` of `d` on `grid`.
///
/// Survival values are clamped to `[0, 1]` and passed through a running
/// minimum, CDF values through a running maximum, so that quadrature noise
/// at the `1e-12` level never shows up as a reversal in the output.
pub fn sample(d: &dyn Lifetime, grid: &Grid, quantity: Quantity) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut bound = match quantity {
        Quantity::Survival => 1.0,
        _ => 0.0,
    };
    for &t in grid.points() {
        let v = match quantity {
            Quantity::Survival => {
                bound = d.survival(t)?.clamp(0.0, 1.0).min(bound);
                bound
            }
            Quantity::Cdf => {
                bound = d.cdf(t)?.clamp(0.0, 1.0).max(bound);
                bound
            }
            Quantity::Density => d.density(t)?.max(0.0),
        };
        out.push((t, v));
    }
    Ok(out)
}

impl Curve {
    pub fn header(&self) -> String {
        format!("# system={} quantity={} check={}", self.system, self.quantity.name(), self.check)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| BenchError::io("<curve>", e);
        writeln!(w, "{}", self.header()).map_err(io)?;
        let mut csv = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| BenchError::io("<curve>", e.into());
        csv.write_record(["t", "value"]).map_err(csv_err)?;
        for &(t, v) in &self.points {
            csv.write_record([t.to_string(), v.to_string()]).map_err(csv_err)?;
        }
        csv.flush().map_err(io)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
        }
        let file = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
        self.write(std::io::BufWriter::new(file))
    }
}
