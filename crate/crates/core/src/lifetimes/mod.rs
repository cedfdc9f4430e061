//! Nonnegative continuous lifetime laws.

mod piecewise;
mod shape;

pub use piecewise::PiecewiseSurvival;
pub use shape::{shape_check, ShapeProperty, ShapeVerdict, DEFAULT_SHAPE_TOL, SHAPE_FLOOR};

use serde::{Deserialize, Serialize};

use crate::error::{check_time, Error, Result};
use crate::quadrature::{graded_simpson, grading_power, QuadratureSettings};
use crate::stream::UniformStream;

/// Survival values below this are treated as zero for hazards and ratios.
pub const SURVIVAL_FLOOR: f64 = 1e-300;

/// Anything that exposes a survival function on `[0, ∞)`.
///
/// Implemented by plain distributions, warm-standby composites and whole
/// systems so that order checks can compare any two of them.
pub trait Lifetime: Send + Sync {
    fn survival(&self, t: f64) -> Result<f64>;

    fn density(&self, t: f64) -> Result<f64>;

    /// `1 - survival`, overridden where a more accurate route exists.
    fn cdf(&self, t: f64) -> Result<f64> {
        Ok(1.0 - self.survival(t)?)
    }

    fn ln_survival(&self, t: f64) -> Result<f64> {
        Ok(self.survival(t)?.ln())
    }

    /// Whether the density comes from an interpolated table.
    fn has_tabulated_density(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HazardPair {
    pub hazard: f64,
    pub reversed_hazard: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub survival: f64,
    pub cdf: f64,
    pub density: f64,
    pub hazards: HazardPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LifetimeDistribution {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    Piecewise(PiecewiseSurvival),
    /// `[X - age | X > age]`.
    Residual { base: Box<LifetimeDistribution>, age: f64 },
}

impl LifetimeDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = Self::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        let d = Self::Weibull { shape, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn piecewise(knots: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Self::Piecewise(PiecewiseSurvival::new(knots)?))
    }

    /// Checks parameters of a value built directly or deserialized.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidDistribution(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        match self {
            Self::Exponential { rate } => positive("rate", *rate),
            Self::Weibull { shape, scale } => {
                positive("shape", *shape)?;
                positive("scale", *scale)
            }
            Self::Piecewise(_) => Ok(()),
            Self::Residual { base, age } => {
                base.validate()?;
                check_time(*age)?;
                if base.log_sf(*age) < SURVIVAL_FLOOR.ln() {
                    return Err(Error::DeadAtAge(*age));
                }
                Ok(())
            }
        }
    }

    /// Log-survival at `t >= 0`.
    pub(crate) fn log_sf(&self, t: f64) -> f64 {
        match self {
            Self::Exponential { rate } => -rate * t,
            Self::Weibull { shape, scale } => -(t / scale).powf(*shape),
            Self::Piecewise(p) => p.log_sf_and_slope(t).0,
            Self::Residual { base, age } => base.log_sf(age + t) - base.log_sf(*age),
        }
    }

    /// Hazard rate `f / S`, computed without forming the quotient.
    pub fn hazard(&self, t: f64) -> f64 {
        match self {
            Self::Exponential { rate } => *rate,
            Self::Weibull { shape, scale } => {
                if t == 0.0 {
                    match shape.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => 1.0 / scale,
                        _ => 0.0,
                    }
                } else {
                    shape / scale * (t / scale).powf(shape - 1.0)
                }
            }
            Self::Piecewise(p) => -p.log_sf_and_slope(t).1,
            Self::Residual { base, age } => base.hazard(age + t),
        }
    }

    pub fn survival_at(&self, t: f64) -> f64 {
        self.log_sf(t).exp()
    }

    pub fn cdf_at(&self, t: f64) -> f64 {
        -self.log_sf(t).exp_m1()
    }

    pub fn density_at(&self, t: f64) -> f64 {
        let h = self.hazard(t);
        if h.is_infinite() {
            return h;
        }
        h * self.survival_at(t)
    }

    pub fn evaluate(&self, t: f64) -> Result<Evaluation> {
        check_time(t)?;
        let survival = self.survival_at(t);
        let density = self.density_at(t);
        let hazard = if survival > SURVIVAL_FLOOR { self.hazard(t) } else { 0.0 };
        let accurate_cdf = self.cdf_at(t);
        let reversed_hazard = if accurate_cdf > 0.0 { density / accurate_cdf } else { f64::INFINITY };
        Ok(Evaluation {
            survival,
            // Exact complement so that S + F == 1.
            cdf: 1.0 - survival,
            density,
            hazards: HazardPair { hazard, reversed_hazard },
        })
    }

    /// Smallest `t` with `log S(t) <= target` for `target <= 0`.
    pub(crate) fn time_at_log_sf(&self, target: f64) -> f64 {
        if target >= 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => -target / rate,
            Self::Weibull { shape, scale } => scale * (-target).powf(1.0 / shape),
            Self::Piecewise(p) => p.time_at_log_sf(target),
            Self::Residual { base, age } => {
                (base.time_at_log_sf(target + base.log_sf(*age)) - age).max(0.0)
            }
        }
    }

    /// `inf { t >= 0 : S(t) <= p }`.
    pub fn inverse_survival(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::OutOfRange(p));
        }
        Ok(self.time_at_log_sf(p.ln()))
    }

    /// Quantile `F^{-1}(q)` for `q` in `[0, 1)`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::OutOfRange(q));
        }
        Ok(self.time_at_log_sf((-q).ln_1p()))
    }

    /// Inverse-transform draw: one uniform from `stream`.
    pub fn sample<S: UniformStream + ?Sized>(&self, stream: &mut S) -> f64 {
        self.time_at_log_sf(stream.uniform().ln())
    }

    /// Residual life `[X - age | X > age]` drawn from a single uniform.
    pub(crate) fn residual_from_uniform(&self, age: f64, u: f64) -> f64 {
        (self.time_at_log_sf(u.ln() + self.log_sf(age)) - age).max(0.0)
    }

    /// The law of `[X - age | X > age]`.
    pub fn residual(&self, age: f64) -> Result<Self> {
        check_time(age)?;
        if age == 0.0 {
            return Ok(self.clone());
        }
        if self.log_sf(age) < SURVIVAL_FLOOR.ln() {
            return Err(Error::DeadAtAge(age));
        }
        Ok(match self {
            Self::Exponential { .. } => self.clone(),
            Self::Residual { base, age: a0 } => {
                Self::Residual { base: base.clone(), age: a0 + age }
            }
            _ => Self::Residual { base: Box::new(self.clone()), age },
        })
    }

    /// The law of `c X`.
    pub fn rescaled(&self, factor: f64) -> Self {
        match self {
            Self::Exponential { rate } => Self::Exponential { rate: rate / factor },
            Self::Weibull { shape, scale } => Self::Weibull { shape: *shape, scale: scale * factor },
            Self::Piecewise(p) => Self::Piecewise(p.rescaled(factor)),
            Self::Residual { base, age } => {
                Self::Residual { base: Box::new(base.rescaled(factor)), age: age * factor }
            }
        }
    }

    /// Survival is log-concave for every parameter value of this family member.
    pub fn is_log_concave_family(&self) -> bool {
        match self {
            Self::Exponential { .. } => true,
            Self::Weibull { shape, .. } => *shape >= 1.0,
            _ => false,
        }
    }

    /// Exponent `p` with `F(u) ∝ u^p` as `u → 0`.
    pub(crate) fn onset_exponent(&self) -> f64 {
        match self {
            Self::Weibull { shape, .. } => *shape,
            _ => 1.0,
        }
    }

    /// `∫₀ᵗ g(u) dF(u)`.
    pub fn integrate_against<G>(&self, t: f64, g: G, settings: QuadratureSettings) -> Result<f64>
    where
        G: Fn(f64) -> f64,
    {
        self.integrate_against_graded(t, |u, _| g(u), settings, &[])
    }

    /// As [`Self::integrate_against`] for `g(u, t - u)`, with the endpoints
    /// also graded for the power-law onsets of the laws `g` is built from.
    pub(crate) fn integrate_against_graded<G>(
        &self,
        t: f64,
        g: G,
        settings: QuadratureSettings,
        others: &[&LifetimeDistribution],
    ) -> Result<f64>
    where
        G: Fn(f64, f64) -> f64,
    {
        check_time(t)?;
        let m = others.iter().chain([&self]).map(|d| grading_power(d.onset_exponent())).max().unwrap_or(1);
        graded_simpson(|u, rest| g(u, rest) * self.density_at(u), 0.0, t, m, settings)
    }

    /// Upper end of the default grid: the 0.999 quantile.
    pub fn grid_horizon(&self) -> f64 {
        self.time_at_log_sf(1e-3f64.ln())
    }
}

impl Lifetime for LifetimeDistribution {
    fn survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.survival_at(t))
    }

    fn density(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.density_at(t))
    }

    fn cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.cdf_at(t))
    }

    fn ln_survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.log_sf(t))
    }

    fn has_tabulated_density(&self) -> bool {
        match self {
            Self::Piecewise(_) => true,
            Self::Residual { base, .. } => base.has_tabulated_density(),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{DrawStream, FixedStream};
    use std::f64::consts::LN_2;

    fn exp(rate: f64) -> LifetimeDistribution {
        LifetimeDistribution::exponential(rate).unwrap()
    }

    fn weib(k: f64, theta: f64) -> LifetimeDistribution {
        LifetimeDistribution::weibull(k, theta).unwrap()
    }

    #[test]
    fn evaluate_exponential_boundary() {
        let e = exp(1.0).evaluate(0.0).unwrap();
        assert_eq!(e.survival, 1.0);
        assert_eq!(e.cdf, 0.0);
    }

    #[test]
    fn evaluate_exponential_median() {
        let e = exp(1.0).evaluate(LN_2).unwrap();
        assert!((e.survival - 0.5).abs() < 1e-15);
        assert!((e.hazards.hazard - 1.0).abs() < 1e-15);
        assert!((e.density - 0.5).abs() < 1e-15);
        assert!((e.hazards.reversed_hazard - 1.0).abs() < 1e-14);
    }

    #[test]
    fn evaluate_weibull() {
        let e = weib(2.0, 1.0).evaluate(1.0).unwrap();
        assert!((e.survival - (-1.0f64).exp()).abs() < 1e-15);
        assert!((e.survival - 0.367879).abs() < 1e-6);
        assert!((e.hazards.hazard - 2.0).abs() < 1e-15);
    }

    #[test]
    fn negative_time_rejected() {
        assert_eq!(exp(1.0).evaluate(-1.0).unwrap_err(), Error::NegativeTime(-1.0));
    }

    #[test]
    fn weibull_density_at_zero() {
        assert!(weib(0.5, 1.0).density_at(0.0).is_infinite());
        assert_eq!(weib(1.0, 2.0).density_at(0.0), 0.5);
        assert_eq!(weib(2.0, 1.0).density_at(0.0), 0.0);
    }

    #[test]
    fn inverse_survival_examples() {
        assert_eq!(exp(1.0).inverse_survival(1.0).unwrap(), 0.0);
        let t = exp(2.0).inverse_survival(0.5).unwrap();
        assert!((t - LN_2 / 2.0).abs() < 1e-15);
        assert!((t - 0.346574).abs() < 1e-6);
        let t = weib(0.5, 1.0).inverse_survival((-1.0f64).exp()).unwrap();
        assert!((t - 1.0).abs() < 1e-14);
        assert_eq!(exp(1.0).inverse_survival(0.0).unwrap_err(), Error::OutOfRange(0.0));
        assert!(exp(1.0).inverse_survival(1.5).is_err());
    }

    #[test]
    fn sample_at_unit_uniform_is_zero() {
        let mut s = FixedStream::new(vec![1.0]);
        assert_eq!(exp(1.0).sample(&mut s), 0.0);
    }

    fn sample_mean(d: &LifetimeDistribution, n: u64, seed: u64) -> (f64, f64) {
        let draws: Vec<f64> = (0..n).map(|i| d.sample(&mut DrawStream::new(seed, i))).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, (var / n as f64).sqrt())
    }

    #[test]
    fn exponential_sample_mean() {
        let (mean, _) = sample_mean(&exp(1.0), 1_000_000, 11);
        assert!((mean - 1.0).abs() < 3.0 / 1000.0, "mean {mean}");
    }

    #[test]
    fn weibull_sample_mean() {
        // Γ(1.5) = √π / 2.
        let target = std::f64::consts::PI.sqrt() / 2.0;
        assert!((target - 0.886227).abs() < 1e-6);
        let (mean, se) = sample_mean(&weib(2.0, 1.0), 1_000_000, 12);
        assert!((mean - target).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn residual_examples() {
        let e = exp(1.5);
        assert_eq!(e.residual(3.0).unwrap(), e);
        let w = weib(2.0, 1.0);
        assert_eq!(w.residual(0.0).unwrap(), w);
        let r = w.residual(1.0).unwrap();
        let s = r.survival_at(1.0);
        assert!((s - (-3.0f64).exp()).abs() < 1e-15);
        assert!((s - 0.049787).abs() < 1e-6);
    }

    #[test]
    fn residual_of_dead_law() {
        assert_eq!(weib(2.0, 1.0).residual(40.0).unwrap_err(), Error::DeadAtAge(40.0));
    }

    #[test]
    fn residual_inverse_is_consistent() {
        let r = weib(1.5, 2.0).residual(0.7).unwrap();
        for &p in &[0.9, 0.5, 0.1, 1e-6] {
            let t = r.inverse_survival(p).unwrap();
            assert!((r.survival_at(t) - p).abs() < 1e-12 * p.max(1e-3));
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(LifetimeDistribution::exponential(0.0).is_err());
        assert!(LifetimeDistribution::weibull(-1.0, 1.0).is_err());
        assert!(LifetimeDistribution::weibull(1.0, f64::NAN).is_err());
    }

    #[test]
    fn integrate_against_examples() {
        let s = QuadratureSettings::default();
        // ∫₀ᵗ dF = F(t), for finite, infinite and nearly singular density at 0.
        for d in [exp(2.0), weib(0.5, 1.0), weib(2.0, 1.0), weib(1.03, 0.3), weib(0.2, 1.0)] {
            let v = d.integrate_against(1.3, |_| 1.0, s).unwrap();
            assert!((v - d.cdf_at(1.3)).abs() < 1e-9, "{d:?}: {v}");
        }
        // E[X; X <= t] for Exp(1): 1 - (1 + t) e^{-t}.
        let v = exp(1.0).integrate_against(2.0, |u| u, s).unwrap();
        assert!((v - (1.0 - 3.0 * (-2.0f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn serde_shape() {
        let d: LifetimeDistribution = serde_json::from_str(r#"{"kind":"weibull","shape":2,"scale":1}"#).unwrap();
        assert_eq!(d, weib(2.0, 1.0));
        let p: LifetimeDistribution =
            serde_json::from_str(r#"{"kind":"piecewise","knots":[[0,1],[1,0.5],[2,0.2]]}"#).unwrap();
        assert!(matches!(p, LifetimeDistribution::Piecewise(_)));
        let bad = serde_json::from_str::<LifetimeDistribution>(r#"{"kind":"piecewise","knots":[[0,1],[1,1.5]]}"#);
        assert!(bad.is_err());
    }
}
