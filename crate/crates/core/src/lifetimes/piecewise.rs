//! Tabulated survival functions.
//!
//! The table is interpolated by a monotone (Fritsch–Carlson) cubic Hermite
//! spline in log-survival space, so the interpolant stays positive and
//! nonincreasing. Past the last knot log-survival continues linearly, giving
//! an exponential tail.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KnotTable {
    knots: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "KnotTable", into = "KnotTable")]
pub struct PiecewiseSurvival {
    times: Vec<f64>,
    survival: Vec<f64>,
    log_sf: Vec<f64>,
    /// Hermite slopes of log-survival at each knot.
    slopes: Vec<f64>,
    tail_slope: f64,
}

impl PartialEq for PiecewiseSurvival {
    fn eq(&self, other: &Self) -> bool {
        self.times == other.times && self.survival == other.survival
    }
}

impl TryFrom<KnotTable> for PiecewiseSurvival {
    type Error = Error;

    fn try_from(table: KnotTable) -> Result<Self> {
        Self::new(table.knots)
    }
}

impl From<PiecewiseSurvival> for KnotTable {
    fn from(p: PiecewiseSurvival) -> Self {
        KnotTable { knots: p.times.into_iter().zip(p.survival).collect() }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidDistribution(msg.into())
}

impl PiecewiseSurvival {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(invalid("survival table needs at least two knots"));
        }
        if knots[0] != (0.0, 1.0) {
            return Err(invalid("survival table must start at (0, 1)"));
        }
        for w in knots.windows(2) {
            let ((t0, s0), (t1, s1)) = (w[0], w[1]);
            if !t1.is_finite() || t1 <= t0 {
                return Err(invalid(format!("knot times must strictly increase (at t={t1})")));
            }
            if !(s1 > 0.0 && s1 <= 1.0) {
                return Err(invalid(format!("survival {s1} at t={t1} is outside (0, 1]")));
            }
            if s1 > s0 {
                return Err(invalid(format!("survival increases at t={t1}")));
            }
        }
        let (times, survival): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
        let log_sf: Vec<f64> = survival.iter().map(|s| s.ln()).collect();
        let n = times.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (log_sf[i + 1] - log_sf[i]) / (times[i + 1] - times[i]))
            .collect();

        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (d0, d1) = (secants[i - 1], secants[i]);
            if d0 == 0.0 || d1 == 0.0 || d0.signum() != d1.signum() {
                continue;
            }
            let h0 = times[i] - times[i - 1];
            let h1 = times[i + 1] - times[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            slopes[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }

        let last_secant = secants[n - 2];
        let tail_slope = if last_secant < 0.0 {
            last_secant
        } else {
            log_sf[n - 1] / times[n - 1]
        };
        if !(tail_slope < 0.0) {
            return Err(invalid("survival table never decreases; tail would not vanish"));
        }
        Ok(Self { times, survival, log_sf, slopes, tail_slope })
    }

    /// Reads a two-column CSV with header `t,S`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Table(e.to_string()))?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "S" {
            return Err(Error::Table(format!("expected header `t,S`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut knots = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Table(e.to_string()))?;
            let parse = |i: usize| {
                record[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Table(format!("row {}: {e}", line + 1)))
            };
            knots.push((parse(0)?, parse(1)?));
        }
        Self::new(knots)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.survival.iter().copied())
    }

    fn segment(&self, t: f64) -> usize {
        // Index i with times[i] <= t < times[i + 1].
        self.times.partition_point(|&x| x <= t).saturating_sub(1).min(self.times.len() - 2)
    }

    /// Log-survival and its derivative at `t >= 0`.
    pub(crate) fn log_sf_and_slope(&self, t: f64) -> (f64, f64) {
        let n = self.times.len();
        if t >= self.times[n - 1] {
            let dt = t - self.times[n - 1];
            return (self.log_sf[n - 1] + self.tail_slope * dt, self.tail_slope);
        }
        let i = self.segment(t);
        let h = self.times[i + 1] - self.times[i];
        let s = (t - self.times[i]) / h;
        let (y0, y1) = (self.log_sf[i], self.log_sf[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let y = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let dy = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        // Monotone by construction; clip rounding noise.
        (y.min(y0), dy.min(0.0))
    }

    /// Smallest `t` whose interpolated log-survival is at most `target`.
    pub(crate) fn time_at_log_sf(&self, target: f64) -> f64 {
        if target >= 0.0 {
            return 0.0;
        }
        let n = self.times.len();
        if target < self.log_sf[n - 1] {
            return self.times[n - 1] + (target - self.log_sf[n - 1]) / self.tail_slope;
        }
        let j = self.log_sf.partition_point(|&y| y > target);
        // j >= 1 since log_sf[0] = 0 > target.
        if self.log_sf[j] == target {
            return self.times[j];
        }
        let (mut lo, mut hi) = (self.times[j - 1], self.times[j]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.log_sf_and_slope(mid).0 <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub(crate) fn rescaled(&self, factor: f64) -> Self {
        let knots = self.times.iter().map(|t| t * factor).zip(self.survival.iter().copied()).collect();
        Self::new(knots).expect("rescaling keeps a valid table")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> PiecewiseSurvival {
        PiecewiseSurvival::new(vec![(0.0, 1.0), (1.0, 0.8), (2.0, 0.5), (4.0, 0.1)]).unwrap()
    }

    #[test]
    fn interpolates_knots_exactly() {
        let p = table();
        for (t, s) in p.knots().collect::<Vec<_>>() {
            assert!((p.log_sf_and_slope(t).0.exp() - s).abs() < 1e-14, "t={t}");
        }
    }

    #[test]
    fn monotone_between_knots() {
        let p = table();
        let mut prev = 0.0;
        for i in 0..=1000 {
            let t = i as f64 * 0.006;
            let (y, dy) = p.log_sf_and_slope(t);
            assert!(y <= prev + 1e-15);
            assert!(dy <= 0.0);
            prev = y;
        }
    }

    #[test]
    fn inverse_matches_forward() {
        let p = table();
        for &s in &[0.95, 0.8, 0.6, 0.3, 0.1, 0.01] {
            let t = p.time_at_log_sf(f64::ln(s));
            assert!((p.log_sf_and_slope(t).0.exp() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_segment_inverse_is_left_end() {
        let p = PiecewiseSurvival::new(vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.5), (3.0, 0.2)]).unwrap();
        let t = p.time_at_log_sf(f64::ln(0.5));
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(PiecewiseSurvival::new(vec![(0.0, 1.0)]).is_err());
        assert!(PiecewiseSurvival::new(vec![(0.0, 0.9), (1.0, 0.5)]).is_err());
        assert!(PiecewiseSurvival::new(vec![(0.0, 1.0), (1.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(PiecewiseSurvival::new(vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.6)]).is_err());
        assert!(PiecewiseSurvival::new(vec![(0.0, 1.0), (1.0, 0.0)]).is_err());
        assert!(PiecewiseSurvival::new(vec![(0.0, 1.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let data = "t,S\n0,1\n1,0.7\n3,0.2\n";
        let p = PiecewiseSurvival::from_csv(data.as_bytes()).unwrap();
        assert_eq!(p.knots().count(), 3);
        assert!(PiecewiseSurvival::from_csv("time,S\n0,1\n".as_bytes()).is_err());
        assert!(PiecewiseSurvival::from_csv("t,S\n0,1\n1,abc\n".as_bytes()).is_err());
    }
}
