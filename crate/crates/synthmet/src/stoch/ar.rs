//! Autoregressive models of order <= 3 on optionally transformed,
//! de-seasoned, standardized series.
//!
//! Fitting is Yule-Walker via Levinson-Durbin with the order chosen by AIC.
//! Bounded quantities (wind, clearness) go through a marginal transform to
//! Gaussian space first, so simulation inverts that transform and can never
//! leave the physical support.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::stats::{least_squares, moments};
use crate::stoch::clearness::ClearnessLaw;
use crate::stoch::weibull::WeibullLaw;
use crate::weather::HOURS_PER_DAY;

/// Largest autoregressive order considered.
pub const MAX_ORDER: usize = 3;

const MIN_SAMPLES: usize = 200;
/// Steps discarded before a simulation is read, enough to forget the zero
/// initial state for any stationary order-3 model.
const WARMUP: usize = 500;
/// CDF values are kept this far from 0 and 1 before probit.
const CDF_CLAMP: f64 = 1e-9;

/// Marginal transform applied before Gaussian modelling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Weibull(WeibullLaw),
    Clearness(ClearnessLaw),
}

impl Transform {
    /// Physical value to Gaussian space, z = probit(F(x)).
    pub fn forward(&self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Weibull(law) => probit(law.cdf(x)),
            Transform::Clearness(law) => probit(law.cdf(x)),
        }
    }

    /// Gaussian space back to the physical value.
    pub fn inverse(&self, z: f64) -> f64 {
        match self {
            Transform::Identity => z,
            Transform::Weibull(law) => law.quantile(normal_cdf(z)),
            Transform::Clearness(law) => law.quantile(normal_cdf(z)),
        }
    }

    /// Range of values the inverse can emit.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Transform::Identity => (f64::NEG_INFINITY, f64::INFINITY),
            Transform::Weibull(_) => (0.0, f64::INFINITY),
            Transform::Clearness(law) => (law.kt_min, law.kt_max),
        }
    }
}

fn unit_normal() -> statrs::distribution::Normal {
    statrs::distribution::Normal::new(0.0, 1.0).expect("unit normal")
}

fn probit(p: f64) -> f64 {
    unit_normal().inverse_cdf(p.clamp(CDF_CLAMP, 1.0 - CDF_CLAMP))
}

fn normal_cdf(z: f64) -> f64 {
    unit_normal().cdf(z)
}

/// Deterministic regression part of an ARX model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogPart {
    pub names: Vec<String>,
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl ExogPart {
    fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(row).map(|(c, x)| c * x).sum::<f64>()
    }
}

/// Fitted AR(p) model, p <= 3.
///
/// The recursion runs on the standardized residual e: the series is first
/// transformed, the mean and (for hourly series) the per-hour offsets are
/// removed, and the remainder is divided by `sd`. Emission inverts those
/// steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub order: usize,
    pub phi: Vec<f64>,
    /// Innovation standard deviation in the standardized space.
    pub sigma: f64,
    /// Mean of the transformed series (of the residual for ARX).
    pub mean: f64,
    /// Standard deviation of the de-seasoned residual.
    pub sd: f64,
    /// Per-hour offsets around the mean, present for hourly series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diurnal: Option<Vec<f64>>,
    pub transform: Transform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exog: Option<ExogPart>,
    pub aic: f64,
    pub n_fit: usize,
}

/// Sample autocorrelation up to `max_lag`, biased estimator, acf[0] = 1.
pub fn sample_acf(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if n <= max_lag {
        return Err(Error::invalid(format!(
            "need more than {max_lag} values for lag-{max_lag} autocorrelation, got {n}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let c0 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return Err(Error::numeric("constant series has no autocorrelation".to_string()));
    }
    let mut acf = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let ck = values[..n - k]
            .iter()
            .zip(&values[k..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / n as f64;
        acf.push(ck / c0);
    }
    Ok(acf)
}

/// Levinson-Durbin recursion. Returns the AR(p) coefficients and the
/// innovation variance as a fraction of the series variance.
pub fn levinson_durbin(acf: &[f64], order: usize) -> Result<(Vec<f64>, f64)> {
    if acf.len() <= order {
        return Err(Error::invalid(format!(
            "autocorrelation sequence of length {} too short for order {order}",
            acf.len()
        )));
    }
    let mut phi = vec![0.0; order];
    let mut v = 1.0;
    for k in 1..=order {
        let mut num = acf[k];
        for j in 1..k {
            num -= phi[j - 1] * acf[k - j];
        }
        let kappa = num / v;
        let prev = phi.clone();
        phi[k - 1] = kappa;
        for j in 1..k {
            phi[j - 1] = prev[j - 1] - kappa * prev[k - j - 1];
        }
        v *= 1.0 - kappa * kappa;
        if v <= 0.0 {
            return Err(Error::numeric(format!(
                "degenerate autocorrelation at order {k}"
            )));
        }
    }
    Ok((phi, v))
}

/// Yule-Walker fit on the standardized series with AIC order selection over
/// 0..=max_order. Returns (phi, innovation sd, aic).
fn select_order(standardized: &[f64], max_order: usize) -> Result<(Vec<f64>, f64, f64)> {
    let max_order = max_order.min(MAX_ORDER);
    let acf = sample_acf(standardized, max_order)?;
    let n = standardized.len() as f64;
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for p in 0..=max_order {
        let (phi, v) = match levinson_durbin(&acf, p) {
            Ok(r) => r,
            Err(_) => break,
        };
        let aic = n * v.ln() + 2.0 * (p as f64 + 1.0);
        if best.as_ref().is_none_or(|(_, _, b)| aic < *b) {
            best = Some((phi, v.sqrt(), aic));
        }
    }
    best.ok_or_else(|| Error::numeric("autoregressive fit failed at every order".to_string()))
}

fn check_input(values: &[f64]) -> Result<()> {
    if values.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "autoregressive fit needs at least {MIN_SAMPLES} values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in input".to_string()));
    }
    Ok(())
}

/// Fits an AR model to a raw series (identity transform, no diurnal cycle).
pub fn fit_ar(values: &[f64], max_order: usize) -> Result<ArModel> {
    fit_ar_series(values, Transform::Identity, false, max_order)
}

/// Fits an AR model after marginal transform and, for hourly series,
/// removal of the mean diurnal cycle. Hourly input must cover whole days.
pub fn fit_ar_series(
    values: &[f64],
    transform: Transform,
    hourly: bool,
    max_order: usize,
) -> Result<ArModel> {
    check_input(values)?;
    if hourly && values.len() % HOURS_PER_DAY != 0 {
        return Err(Error::invalid(format!(
            "hourly series must cover whole days, got {} values",
            values.len()
        )));
    }
    let z: Vec<f64> = values.iter().map(|&x| transform.forward(x)).collect();
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(
            "marginal transform produced a non-finite value; check the law's support".to_string(),
        ));
    }
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let diurnal = if hourly {
        let mut sums = [0.0; HOURS_PER_DAY];
        let mut counts = [0usize; HOURS_PER_DAY];
        for (t, &v) in z.iter().enumerate() {
            sums[t % HOURS_PER_DAY] += v - mean;
            counts[t % HOURS_PER_DAY] += 1;
        }
        Some(
            sums.iter()
                .zip(counts)
                .map(|(s, c)| s / c as f64)
                .collect::<Vec<f64>>(),
        )
    } else {
        None
    };
    let residual: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(t, &v)| {
            v - mean
                - diurnal
                    .as_ref()
                    .map_or(0.0, |d| d[t % HOURS_PER_DAY])
        })
        .collect();
    let (_, sd) = moments(&residual)?;
    if sd <= 0.0 {
        return Err(Error::numeric("constant series; nothing to model".to_string()));
    }
    let standardized: Vec<f64> = residual.iter().map(|r| r / sd).collect();
    let (phi, sigma, aic) = select_order(&standardized, max_order)?;
    let model = ArModel {
        order: phi.len(),
        phi,
        sigma,
        mean,
        sd,
        diurnal,
        transform,
        exog: None,
        aic,
        n_fit: values.len(),
    };
    if !model.is_stationary() {
        return Err(Error::numeric("fitted model is not stationary".to_string()));
    }
    Ok(model)
}

/// Fits a linear regression on the exogenous inputs plus an AR model on its
/// residuals. `exog[t]` holds one value per name at step t.
pub fn fit_arx(
    values: &[f64],
    names: &[&str],
    exog: &[Vec<f64>],
    max_order: usize,
) -> Result<ArModel> {
    check_input(values)?;
    if exog.len() != values.len() {
        return Err(Error::invalid(format!(
            "{} observations but {} exogenous rows",
            values.len(),
            exog.len()
        )));
    }
    let k = names.len();
    if k == 0 || exog.iter().any(|row| row.len() != k) {
        return Err(Error::invalid(
            "every exogenous row must carry one value per input name".to_string(),
        ));
    }
    let n = values.len();
    let mut design = DMatrix::zeros(n, k + 1);
    for (t, row) in exog.iter().enumerate() {
        design[(t, 0)] = 1.0;
        for (j, &x) in row.iter().enumerate() {
            design[(t, j + 1)] = x;
        }
    }
    let y = DVector::from_column_slice(values);
    let beta = least_squares(&design, &y)?;
    let part = ExogPart {
        names: names.iter().map(|s| s.to_string()).collect(),
        intercept: beta[0],
        coef: beta.as_slice()[1..].to_vec(),
    };
    let residual: Vec<f64> = values
        .iter()
        .zip(exog)
        .map(|(&v, row)| v - part.predict(row))
        .collect();
    let mut model = fit_ar_series(&residual, Transform::Identity, false, max_order)?;
    model.exog = Some(part);
    model.n_fit = n;
    Ok(model)
}

impl ArModel {
    /// Simulates `n` steps from the given seed. Identical calls return
    /// identical series.
    pub fn simulate(&self, n: usize, seed: u64) -> Vec<f64> {
        self.simulate_shifted(n, seed, 0.0)
    }

    /// Simulation with a constant offset added in the standardized Gaussian
    /// space. The innovations depend only on the seed, so the output varies
    /// continuously and monotonically with `shift`; the conditioning search
    /// in the generation engine relies on that.
    pub fn simulate_shifted(&self, n: usize, seed: u64, shift: f64) -> Vec<f64> {
        self.standardized_path(n, seed)
            .into_iter()
            .enumerate()
            .map(|(t, e)| self.emit(t, e + shift))
            .collect()
    }

    /// Regression prediction plus simulated AR residual. The model must have
    /// been fitted with exogenous inputs.
    pub fn simulate_with_exog(&self, exog: &[Vec<f64>], seed: u64) -> Result<Vec<f64>> {
        let part = self
            .exog
            .as_ref()
            .ok_or_else(|| Error::invalid("model has no exogenous part".to_string()))?;
        if exog.iter().any(|row| row.len() != part.names.len()) {
            return Err(Error::invalid(
                "exogenous row width does not match the fitted inputs".to_string(),
            ));
        }
        Ok(self
            .standardized_path(exog.len(), seed)
            .into_iter()
            .enumerate()
            .map(|(t, e)| part.predict(&exog[t]) + self.emit(t, e))
            .collect())
    }

    /// Gaussian-space AR path with unit-scale marginals, after warmup.
    fn standardized_path(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let innov = rand_distr::Normal::new(0.0, self.sigma).expect("positive sigma");
        let mut state = vec![0.0; self.order.max(1)];
        let mut out = Vec::with_capacity(n);
        for t in 0..WARMUP + n {
            let mut e = innov.sample(&mut rng);
            for (j, &p) in self.phi.iter().enumerate() {
                e += p * state[j];
            }
            state.rotate_right(1);
            state[0] = e;
            if t >= WARMUP {
                out.push(e);
            }
        }
        out
    }

    /// Standardized value at step t back to the physical quantity.
    fn emit(&self, t: usize, e: f64) -> f64 {
        let mut z = self.mean + self.sd * e;
        if let Some(d) = &self.diurnal {
            z += d[t % HOURS_PER_DAY];
        }
        self.transform.inverse(z)
    }

    /// Lag-1 autocorrelation implied by the coefficients, from the
    /// Yule-Walker equations.
    pub fn theoretical_lag1(&self) -> f64 {
        let p = self.order;
        if p == 0 {
            return 0.0;
        }
        let mut m = DMatrix::zeros(p, p);
        let mut rhs = DVector::zeros(p);
        for i in 1..=p {
            m[(i - 1, i - 1)] += 1.0;
            for j in 1..=p {
                let lag = (i as isize - j as isize).unsigned_abs();
                if lag == 0 {
                    rhs[i - 1] += self.phi[j - 1];
                } else {
                    m[(i - 1, lag - 1)] -= self.phi[j - 1];
                }
            }
        }
        m.lu().solve(&rhs).map_or(f64::NAN, |r| r[0])
    }

    /// True when every root of the characteristic polynomial lies outside
    /// the unit circle, checked on the companion matrix.
    pub fn is_stationary(&self) -> bool {
        let p = self.order;
        if p == 0 {
            return true;
        }
        let mut companion = DMatrix::zeros(p, p);
        for (j, &phi) in self.phi.iter().enumerate() {
            companion[(0, j)] = phi;
        }
        for i in 1..p {
            companion[(i, i - 1)] = 1.0;
        }
        companion
            .complex_eigenvalues()
            .iter()
            .all(|l| l.norm() < 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stoch::clearness::{fit_clearness_law, Climate};
    use crate::stoch::weibull::tests::sample_weibull;

    /// Direct AR(1) simulation outside the model code.
    fn ar1_sample(phi: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let innov = rand_distr::Normal::new(0.0, sigma).unwrap();
        let mut x = 0.0;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n + 200 {
            x = phi * x + innov.sample(&mut rng);
            out.push(x);
        }
        out.split_off(200)
    }

    #[test]
    fn acf_of_lag_zero_is_one() {
        let acf = sample_acf(&ar1_sample(0.5, 1.0, 500, 3), 3).unwrap();
        assert_eq!(acf[0], 1.0);
        assert!(acf[1] > 0.3);
    }

    #[test]
    fn levinson_durbin_solves_ar1_autocorrelation_exactly() {
        let acf = [1.0, 0.5, 0.25, 0.125];
        let (phi, v) = levinson_durbin(&acf, 1).unwrap();
        assert!((phi[0] - 0.5).abs() < 1e-12);
        assert!((v - 0.75).abs() < 1e-12);
        // The same sequence is consistent with AR(1), so higher coefficients
        // come out zero.
        let (phi3, _) = levinson_durbin(&acf, 3).unwrap();
        assert!((phi3[0] - 0.5).abs() < 1e-12);
        assert!(phi3[1].abs() < 1e-12);
        assert!(phi3[2].abs() < 1e-12);
    }

    #[test]
    fn white_noise_selects_order_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let noise: Vec<f64> = (0..2000).map(|_| normal.sample(&mut rng)).collect();
        let model = fit_ar(&noise, 3).unwrap();
        assert_eq!(model.order, 0, "phi = {:?}", model.phi);
    }

    #[test]
    fn recovers_ar1_coefficient() {
        let series = ar1_sample(0.8, 1.0, 10_000, 9);
        let model = fit_ar(&series, 3).unwrap();
        assert!(model.order >= 1);
        assert!(
            (model.phi[0] - 0.8).abs() < 0.05,
            "phi1 = {}",
            model.phi[0]
        );
        assert!(model.is_stationary());
    }

    #[test]
    fn simulation_reproduces_moments_and_persistence() {
        let model = ArModel {
            order: 1,
            phi: vec![0.6],
            sigma: 0.8,
            mean: 10.0,
            sd: 2.0,
            diurnal: None,
            transform: Transform::Identity,
            exog: None,
            aic: 0.0,
            n_fit: 0,
        };
        let xs = model.simulate(20_000, 4);
        let (mean, sd) = moments(&xs).unwrap();
        assert!((mean - 10.0).abs() < 0.15, "mean {mean}");
        // Innovation sd 0.8 with phi 0.6 gives unit stationary variance.
        assert!((sd - 2.0).abs() < 0.1, "sd {sd}");
        let acf = sample_acf(&xs, 1).unwrap();
        assert!((acf[1] - 0.6).abs() < 0.05, "lag1 {}", acf[1]);
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let model = fit_ar(&ar1_sample(0.5, 1.0, 1000, 2), 2).unwrap();
        assert_eq!(model.simulate(300, 42), model.simulate(300, 42));
        assert_ne!(model.simulate(300, 42), model.simulate(300, 43));
    }

    #[test]
    fn shift_moves_identity_output_by_sd_times_shift() {
        let model = fit_ar(&ar1_sample(0.5, 1.0, 1000, 5), 2).unwrap();
        let base = model.simulate(200, 8);
        let moved = model.simulate_shifted(200, 8, 0.5);
        for (b, m) in base.iter().zip(&moved) {
            assert!((m - b - 0.5 * model.sd).abs() < 1e-9);
        }
    }

    #[test]
    fn theoretical_lag1_matches_yule_walker() {
        let model = ArModel {
            order: 2,
            phi: vec![0.5, 0.2],
            sigma: 1.0,
            mean: 0.0,
            sd: 1.0,
            diurnal: None,
            transform: Transform::Identity,
            exog: None,
            aic: 0.0,
            n_fit: 0,
        };
        // rho1 = phi1 / (1 - phi2)
        assert!((model.theoretical_lag1() - 0.625).abs() < 1e-12);
        let ar1 = ArModel {
            order: 1,
            phi: vec![0.7],
            ..model.clone()
        };
        assert!((ar1.theoretical_lag1() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn explosive_coefficients_are_flagged() {
        let mut model = ArModel {
            order: 1,
            phi: vec![1.2],
            sigma: 1.0,
            mean: 0.0,
            sd: 1.0,
            diurnal: None,
            transform: Transform::Identity,
            exog: None,
            aic: 0.0,
            n_fit: 0,
        };
        assert!(!model.is_stationary());
        model.phi = vec![0.9];
        assert!(model.is_stationary());
        model.order = 2;
        model.phi = vec![0.5, 0.6];
        assert!(!model.is_stationary());
    }

    #[test]
    fn weibull_transform_keeps_simulation_positive() {
        let wind = sample_weibull(2.0, 5.0, 2000, 31);
        let law = crate::stoch::weibull::fit_weibull(&wind).unwrap().law;
        let model = fit_ar_series(&wind, Transform::Weibull(law), false, 2).unwrap();
        let sim = model.simulate(5000, 7);
        assert!(sim.iter().all(|&v| v > 0.0));
        let (mean, _) = moments(&sim).unwrap();
        assert!((mean / law.mean() - 1.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn clearness_transform_respects_the_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let beta = rand_distr::Beta::new(3.0, 2.5).unwrap();
        let kt: Vec<f64> = (0..400).map(|_| 0.3 + 0.5 * beta.sample(&mut rng)).collect();
        let law = fit_clearness_law(&kt, Climate::Tropical).unwrap();
        let model = fit_ar_series(&kt, Transform::Clearness(law), false, 2).unwrap();
        let sim = model.simulate(3000, 99);
        assert!(sim
            .iter()
            .all(|&v| (law.kt_min..=law.kt_max).contains(&v)));
    }

    #[test]
    fn hourly_fit_recovers_the_diurnal_cycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let innov = rand_distr::Normal::new(0.0, 0.3).unwrap();
        let n_days = 120;
        let mut series = Vec::with_capacity(n_days * 24);
        let mut noise = 0.0;
        for t in 0..n_days * 24 {
            let hour = (t % 24) as f64;
            noise = 0.5 * noise + innov.sample(&mut rng);
            series.push(20.0 + 5.0 * (std::f64::consts::TAU * hour / 24.0).sin() + noise);
        }
        let model = fit_ar_series(&series, Transform::Identity, true, 3).unwrap();
        let diurnal = model.diurnal.as_ref().unwrap();
        for (h, d) in diurnal.iter().enumerate() {
            let expected = 5.0 * (std::f64::consts::TAU * h as f64 / 24.0).sin();
            assert!((d - expected).abs() < 0.3, "hour {h}: {d} vs {expected}");
        }
        // Simulation reproduces the per-hour means.
        let sim = model.simulate(240 * 24, 3);
        for h in 0..24 {
            let vals: Vec<f64> = sim.iter().skip(h).step_by(24).copied().collect();
            let (m, _) = moments(&vals).unwrap();
            let expected = 20.0 + 5.0 * (std::f64::consts::TAU * h as f64 / 24.0).sin();
            assert!((m - expected).abs() < 0.4, "hour {h}: {m} vs {expected}");
        }
    }

    #[test]
    fn hourly_fit_requires_whole_days() {
        let series = vec![1.0; 250];
        assert!(matches!(
            fit_ar_series(&series, Transform::Identity, true, 2),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn short_and_constant_series_are_rejected() {
        assert!(fit_ar(&vec![1.0; 50], 2).is_err());
        assert!(fit_ar(&vec![3.5; 400], 2).is_err());
    }

    #[test]
    fn arx_recovers_regression_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let innov = rand_distr::Normal::new(0.0, 0.5).unwrap();
        let n = 2000;
        let mut exog = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let mut noise = 0.0;
        for t in 0..n {
            let x1 = (t as f64 * 0.37).sin();
            let x2 = (t % 24) as f64 / 24.0;
            noise = 0.6 * noise + innov.sample(&mut rng);
            exog.push(vec![x1, x2]);
            y.push(2.0 + 1.5 * x1 - 0.8 * x2 + noise);
        }
        let model = fit_arx(&y, &["s", "frac"], &exog, 2).unwrap();
        let part = model.exog.as_ref().unwrap();
        assert!((part.intercept - 2.0).abs() < 0.1, "b0 {}", part.intercept);
        assert!((part.coef[0] - 1.5).abs() < 0.1, "b1 {}", part.coef[0]);
        assert!((part.coef[1] + 0.8).abs() < 0.2, "b2 {}", part.coef[1]);
        assert!(model.order >= 1, "residual persistence missed");

        let sim = model.simulate_with_exog(&exog[..100], 5).unwrap();
        assert_eq!(sim.len(), 100);
        assert_eq!(sim, model.simulate_with_exog(&exog[..100], 5).unwrap());
    }

    #[test]
    fn model_round_trips_through_json() {
        let model = fit_ar(&ar1_sample(0.4, 1.0, 600, 77), 3).unwrap();
        let text = serde_json::to_string(&model).unwrap();
        let back: ArModel = serde_json::from_str(&text).unwrap();
        assert_eq!(model, back);
    }
}
