use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::model_function::{ModelFunction, Reduction, TimeMap};
use crate::error::{check_time, Result};
use crate::lifetimes::{Lifetime, LifetimeDistribution};
use crate::quadrature::QuadratureSettings;
use crate::stream::UniformStream;

#[derive(Debug, Default)]
struct Memo {
    survival: HashMap<u64, f64>,
    cdf: HashMap<u64, f64>,
}

/// `X ⊛ Y`: primary `X` backed by a warm standby `Y` under a model function.
///
/// Survival and CDF values are memoized per evaluation time; clones share the
/// memo.
#[derive(Debug, Clone)]
pub struct StandbyComposite {
    base: LifetimeDistribution,
    standby: LifetimeDistribution,
    mf: ModelFunction,
    quadrature: QuadratureSettings,
    memo: Arc<Mutex<Memo>>,
}

impl StandbyComposite {
    pub fn new(base: LifetimeDistribution, standby: LifetimeDistribution, mf: ModelFunction) -> Result<Self> {
        base.validate()?;
        standby.validate()?;
        mf.check_params()?;
        Ok(Self { base, standby, mf, quadrature: QuadratureSettings::default(), memo: Default::default() })
    }

    pub fn with_quadrature(self, quadrature: QuadratureSettings) -> Self {
        Self { quadrature, memo: Default::default(), ..self }
    }

    /// Conditions the primary on having survived `t0`, i.e. uses `X_{t0}`.
    pub fn with_prior_age(self, t0: f64) -> Result<Self> {
        let base = self.base.residual(t0)?;
        Ok(Self { base, memo: Default::default(), ..self })
    }

    pub fn base(&self) -> &LifetimeDistribution {
        &self.base
    }

    pub fn standby(&self) -> &LifetimeDistribution {
        &self.standby
    }

    pub fn model_function(&self) -> &ModelFunction {
        &self.mf
    }

    pub fn quadrature(&self) -> QuadratureSettings {
        self.quadrature
    }

    pub fn reduction(&self) -> Reduction {
        self.mf.reduction()
    }

    /// Log of `S_Y(t - δ(u)) / S_Y(ω(u)) · S_Y(γ(u))` for `0 <= u <= t`.
    /// `rest = t - u` is passed separately, so `t - δ(u) = rest + ω(u)` stays
    /// accurate near `u = t`.
    fn log_integrand(&self, u: f64, rest: f64) -> f64 {
        let y = &self.standby;
        let omega = self.mf.omega.value(u);
        let ratio = y.log_sf(rest + omega) - y.log_sf(omega);
        debug_assert!(ratio <= 1e-9, "survival ratio above one: log ratio {ratio} at u={u}, t-u={rest}");
        ratio.min(0.0) + y.log_sf(self.mf.gamma.value(u))
    }

    /// The integrand factor `S_Y(t - δ(u)) / S_Y(ω(u)) · S_Y(γ(u))`.
    pub fn integrand_factor(&self, t: f64, u: f64) -> Result<f64> {
        check_time(t)?;
        check_time(u)?;
        Ok(self.log_integrand(u.min(t), (t - u).max(0.0)).exp())
    }

    /// Survival of `X ⊛ Y` by adaptive quadrature of the reliability integral.
    pub fn warm_survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(1.0);
        }
        let key = t.to_bits();
        if let Some(&v) = self.memo.lock().unwrap().survival.get(&key) {
            return Ok(v);
        }
        let sx = self.base.survival_at(t);
        let integral = self.base.integrate_against_graded(
            t,
            |u, rest| self.log_integrand(u, rest).exp(),
            self.quadrature,
            &[&self.standby],
        )?;
        let v = (sx + integral).clamp(sx, 1.0);
        self.memo.lock().unwrap().survival.insert(key, v);
        Ok(v)
    }

    /// `1 - warm_survival`, integrated directly so small values keep their
    /// relative accuracy.
    pub fn warm_cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let key = t.to_bits();
        if let Some(&v) = self.memo.lock().unwrap().cdf.get(&key) {
            return Ok(v);
        }
        let fx = self.base.cdf_at(t);
        let v = self
            .base
            .integrate_against_graded(t, |u, rest| -self.log_integrand(u, rest).exp_m1(), self.quadrature, &[&self.standby])?
            .clamp(0.0, fx);
        self.memo.lock().unwrap().cdf.insert(key, v);
        Ok(v)
    }

    /// Density of `X ⊛ Y`: the atom of primaries whose standby died in
    /// storage plus the failure rate of switched-in standbys.
    pub fn warm_density(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let y = &self.standby;
        let failed_in_storage = self.base.density_at(t) * y.cdf_at(self.mf.gamma.value(t));
        let switched = self.base.integrate_against_graded(
            t,
            |u, rest| y.hazard(rest + self.mf.omega.value(u)) * self.log_integrand(u, rest).exp(),
            self.quadrature,
            &[&self.standby],
        )?;
        Ok(failed_in_storage + switched)
    }

    /// Closed-form survival for the cold and hot reductions, `None` otherwise.
    ///
    /// Cold: survival of the sum `X + Y`, computed by convolving in the
    /// opposite order from the general integral, at a hundredth of the
    /// working tolerance since it serves as a reference. Hot: `1 - F_X F_Y`.
    pub fn closed_form_survival(&self, t: f64) -> Option<Result<f64>> {
        if let Err(e) = check_time(t) {
            return Some(Err(e));
        }
        let (x, y) = (&self.base, &self.standby);
        match self.reduction() {
            Reduction::Hot => Some(Ok(1.0 - x.cdf_at(t) * y.cdf_at(t))),
            Reduction::Cold => Some(
                {
                    let settings = QuadratureSettings { tol: self.quadrature.tol / 100.0, ..self.quadrature };
                    y.integrate_against_graded(t, |_, rest| x.survival_at(rest), settings, &[x])
                }
                    .map(|i| (y.survival_at(t) + i).min(1.0)),
            ),
            Reduction::General => None,
        }
    }

    /// One lifetime draw. Consumes exactly three uniforms: the primary life,
    /// the storage-survival indicator, and the residual life.
    pub fn warm_sample<S: UniformStream + ?Sized>(&self, stream: &mut S) -> f64 {
        let x = self.base.sample(stream);
        let storage = stream.uniform();
        let residual = stream.uniform();
        self.lifetime_from_draws(x, storage, residual)
    }

    /// Lifetime given a primary failure time and two standby uniforms.
    pub(crate) fn lifetime_from_draws(&self, x: f64, storage: f64, residual: f64) -> f64 {
        let y = &self.standby;
        let p_storage = y.log_sf(self.mf.gamma.value(x)).exp();
        if storage <= p_storage {
            x + y.residual_from_uniform(self.mf.omega.value(x), residual)
        } else {
            x
        }
    }

    /// The storage lifetime `Y*` with `F_{Y*}(t) = F_Y(γ(t))`.
    pub fn storage_life(&self) -> StorageLife {
        StorageLife { standby: self.standby.clone(), gamma: self.mf.gamma.clone() }
    }
}

impl Lifetime for StandbyComposite {
    fn survival(&self, t: f64) -> Result<f64> {
        self.warm_survival(t)
    }

    fn density(&self, t: f64) -> Result<f64> {
        self.warm_density(t)
    }

    fn cdf(&self, t: f64) -> Result<f64> {
        self.warm_cdf(t)
    }

    fn has_tabulated_density(&self) -> bool {
        self.base.has_tabulated_density() || self.standby.has_tabulated_density()
    }
}

/// Law of the standby's lifetime in storage, `Y* = γ⁻¹(Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageLife {
    standby: LifetimeDistribution,
    gamma: TimeMap,
}

impl StorageLife {
    pub fn survival_at(&self, t: f64) -> f64 {
        self.standby.survival_at(self.gamma.value(t))
    }

    /// Generalized inverse of `γ` applied to a draw of `Y`; `+∞` when `γ`
    /// never reaches it.
    pub fn sample<S: UniformStream + ?Sized>(&self, stream: &mut S) -> f64 {
        self.gamma.inverse(self.standby.sample(stream))
    }
}

impl Lifetime for StorageLife {
    fn survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.survival_at(t))
    }

    fn density(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let d = self.gamma.derivative(t);
        if d == 0.0 {
            return Ok(0.0);
        }
        Ok(self.standby.density_at(self.gamma.value(t)) * d)
    }

    fn cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.standby.cdf_at(self.gamma.value(t)))
    }

    fn ln_survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.standby.log_sf(self.gamma.value(t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{DrawStream, FixedStream};

    fn exp(rate: f64) -> LifetimeDistribution {
        LifetimeDistribution::exponential(rate).unwrap()
    }

    fn example_mf() -> ModelFunction {
        ModelFunction::new(TimeMap::log(0.3), TimeMap::linear(0.6))
    }

    fn hot_value(t: f64) -> f64 {
        2.0 * (-t).exp() - (-2.0 * t).exp()
    }

    #[test]
    fn survival_at_zero_is_one() {
        let c = StandbyComposite::new(exp(1.0), exp(3.0), example_mf()).unwrap();
        assert_eq!(c.warm_survival(0.0).unwrap(), 1.0);
        assert_eq!(c.warm_cdf(0.0).unwrap(), 0.0);
    }

    #[test]
    fn hot_and_cold_examples() {
        let hot = StandbyComposite::new(exp(1.0), exp(1.0), ModelFunction::hot()).unwrap();
        let v = hot.warm_survival(1.0).unwrap();
        assert!((v - hot_value(1.0)).abs() < 1e-12);
        assert!((v - 0.600424).abs() < 1e-6);

        let cold = StandbyComposite::new(exp(2.0), exp(1.0), ModelFunction::cold()).unwrap();
        let (l, m) = (2.0f64, 1.0f64);
        let exact = (m * (-l).exp() - l * (-m).exp()) / (m - l);
        assert!((cold.warm_survival(1.0).unwrap() - exact).abs() < 1e-12);
        assert!((exact - 0.600424).abs() < 1e-6);
    }

    #[test]
    fn closed_forms_agree_with_quadrature() {
        for mf in [ModelFunction::hot(), ModelFunction::cold()] {
            for (x, y) in [
                (exp(1.0), exp(2.0)),
                (LifetimeDistribution::weibull(2.0, 1.0).unwrap(), exp(1.5)),
                (LifetimeDistribution::weibull(0.7, 1.2).unwrap(), LifetimeDistribution::weibull(1.8, 0.8).unwrap()),
            ] {
                let c = StandbyComposite::new(x, y, mf.clone()).unwrap();
                for i in 1..=50 {
                    let t = 0.1 * i as f64;
                    let closed = c.closed_form_survival(t).unwrap().unwrap();
                    let general = c.warm_survival(t).unwrap();
                    assert!((closed - general).abs() < 1e-9, "{mf:?} t={t}: {closed} vs {general}");
                }
            }
        }
        let c = StandbyComposite::new(exp(1.0), exp(1.0), example_mf()).unwrap();
        assert!(c.closed_form_survival(1.0).is_none());
    }

    #[test]
    fn matches_fine_riemann_oracle() {
        // Midpoint rule with 10⁶ panels on the reliability integral, written
        // out from scratch for X = Y = Exp(1).
        let t = 1.0f64;
        let n = 1_000_000;
        let h = t / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let u = (i as f64 + 0.5) * h;
            let gamma = 0.3 * (1.0 + u).ln();
            let omega = 0.6 * u;
            let delta = u - omega;
            let ratio = (-(t - delta)).exp() / (-omega).exp();
            acc += ratio * (-gamma).exp() * (-u).exp();
        }
        let oracle = (-t).exp() + acc * h;
        let c = StandbyComposite::new(exp(1.0), exp(1.0), example_mf()).unwrap();
        let v = c.warm_survival(t).unwrap();
        assert!((v - oracle).abs() < 1e-7, "{v} vs {oracle}");
    }

    #[test]
    fn survival_and_cdf_are_complementary_and_monotone() {
        let c = StandbyComposite::new(LifetimeDistribution::weibull(0.5, 1.0).unwrap(), exp(1.0), example_mf()).unwrap();
        let mut prev = 1.0;
        for i in 1..=40 {
            let t = 0.25 * i as f64;
            let s = c.warm_survival(t).unwrap();
            let f = c.warm_cdf(t).unwrap();
            assert!((s + f - 1.0).abs() < 1e-8, "t={t}");
            assert!(s <= prev + 1e-12);
            assert!(s >= c.base().survival_at(t));
            prev = s;
        }
    }

    #[test]
    fn density_integrates_to_cdf() {
        let c = StandbyComposite::new(exp(2.0), exp(1.0), example_mf()).unwrap();
        let f = crate::quadrature::adaptive_simpson(
            |t| c.warm_density(t).unwrap(),
            0.0,
            1.5,
            QuadratureSettings { tol: 1e-8, max_depth: 30 },
        )
        .unwrap();
        assert!((f - c.warm_cdf(1.5).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn low_shape_weibull_laws_integrate() {
        let w = LifetimeDistribution::weibull(0.3, 1.0).unwrap();
        for mf in [ModelFunction::cold(), ModelFunction::hot(), example_mf()] {
            let c = StandbyComposite::new(w.clone(), w.clone(), mf).unwrap();
            for t in [0.01, 1.0, 5.0] {
                let s = c.warm_survival(t).unwrap();
                assert!((s + c.warm_cdf(t).unwrap() - 1.0).abs() < 1e-9);
                if let Some(closed) = c.closed_form_survival(t) {
                    assert!((closed.unwrap() - s).abs() < 1e-9);
                }
                assert!(c.warm_density(t).unwrap() > 0.0);
            }
        }
        let c = StandbyComposite::new(w.clone(), w, ModelFunction::cold()).unwrap();
        let settings = QuadratureSettings { tol: 1e-8, max_depth: 40 };
        let f = crate::quadrature::graded_simpson(|t, _| c.warm_density(t).unwrap(), 0.0, 2.0, 10, settings).unwrap();
        assert!((f - c.warm_cdf(2.0).unwrap()).abs() < 1e-6, "{f}");
    }

    #[test]
    fn cold_sample_is_sum() {
        let c = StandbyComposite::new(exp(1.0), exp(1.0), ModelFunction::cold()).unwrap();
        // x = -ln 0.5; the storage uniform 1.0 still succeeds since S_Y(0) = 1.
        let mut s = FixedStream::new(vec![0.5, 1.0, 0.25]);
        let v = c.warm_sample(&mut s);
        assert!((v - (2.0f64.ln() + 4.0f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn failed_storage_returns_primary_life() {
        let c = StandbyComposite::new(exp(1.0), exp(1.0), ModelFunction::hot()).unwrap();
        // x = ln 2, S_Y(γ(x)) = 0.5 < 0.9.
        let mut s = FixedStream::new(vec![0.5, 0.9, 0.3]);
        assert!((c.warm_sample(&mut s) - 2.0f64.ln()).abs() < 1e-15);
    }

    fn empirical_survival(c: &StandbyComposite, ts: &[f64], n: u64, seed: u64) -> Vec<f64> {
        let mut counts = vec![0u64; ts.len()];
        for i in 0..n {
            let v = c.warm_sample(&mut DrawStream::new(seed, i));
            for (k, &t) in ts.iter().enumerate() {
                if v > t {
                    counts[k] += 1;
                }
            }
        }
        counts.iter().map(|&k| k as f64 / n as f64).collect()
    }

    #[test]
    fn hot_sampler_matches_closed_form() {
        let c = StandbyComposite::new(exp(1.0), exp(1.0), ModelFunction::hot()).unwrap();
        let n = 1_000_000;
        let p = empirical_survival(&c, &[1.0], n, 5)[0];
        let exact = hot_value(1.0);
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((p - exact).abs() < 3.0 * se, "{p} vs {exact}");
    }

    #[test]
    fn prior_age_uses_residual_primary() {
        let w = LifetimeDistribution::weibull(2.0, 1.0).unwrap();
        let c = StandbyComposite::new(w.clone(), exp(1.0), example_mf()).unwrap().with_prior_age(0.5).unwrap();
        assert_eq!(c.base(), &w.residual(0.5).unwrap());
        assert!(c.warm_survival(1.0).unwrap() >= c.base().survival_at(1.0));
    }

    #[test]
    fn storage_life_law() {
        let c = StandbyComposite::new(exp(1.0), exp(2.0), ModelFunction::new(TimeMap::log(0.5), TimeMap::Zero)).unwrap();
        let ys = c.storage_life();
        // S_{Y*}(t) = (1 + t)^{-aμ}.
        for &t in &[0.0, 0.5, 3.0] {
            assert!((ys.survival_at(t) - (1.0 + t).powf(-1.0)).abs() < 1e-14);
        }
        let cold = StandbyComposite::new(exp(1.0), exp(1.0), ModelFunction::cold()).unwrap().storage_life();
        assert_eq!(cold.sample(&mut DrawStream::new(1, 0)), f64::INFINITY);
        let n = 200_000;
        let hits = (0..n).filter(|&i| ys.sample(&mut DrawStream::new(9, i)) > 1.0).count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }
}
