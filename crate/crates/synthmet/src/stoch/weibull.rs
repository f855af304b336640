//! Two-parameter Weibull law for wind speed, fitted by maximum likelihood.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::ks_distance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullLaw {
    pub shape: f64,
    pub scale: f64,
}

impl WeibullLaw {
    pub fn new(shape: f64, scale: f64) -> Result<WeibullLaw> {
        if !(shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!(
                "Weibull parameters must be positive, got k={shape}, lambda={scale}"
            )));
        }
        Ok(WeibullLaw { shape, scale })
    }

    pub fn mean(&self) -> f64 {
        self.scale * statrs::function::gamma::gamma(1.0 + 1.0 / self.shape)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            1.0 - (-(x / self.scale).powf(self.shape)).exp()
        }
    }

    /// Inverse CDF; `p` is clamped away from 0 and 1.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(1e-12, 1.0 - 1e-12);
        self.scale * (-(1.0 - p).ln()).powf(1.0 / self.shape)
    }
}

/// A fitted law with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeibullFit {
    pub law: WeibullLaw,
    /// Strictly positive values used in the fit.
    pub n_used: usize,
    /// Share of the input that was exactly zero (excluded, reported).
    pub zero_fraction: f64,
    pub iterations: usize,
    /// Kolmogorov-Smirnov distance between the sample and the fitted CDF.
    pub ks: f64,
}

const MIN_SAMPLES: usize = 100;
const MAX_ITER: usize = 100;
const TOL: f64 = 1e-8;

/// Maximum-likelihood fit. Zeros are excluded and reported; the Newton
/// iteration on the shape runs on the profile likelihood and is started from
/// the moment estimator.
pub fn fit_weibull(values: &[f64]) -> Result<WeibullFit> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("wind speeds must be finite and non-negative".to_string()));
    }
    let positives: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    if positives.is_empty() {
        return Err(Error::invalid("all values are zero; Weibull fit undefined".to_string()));
    }
    if positives.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SAMPLES} strictly positive values, got {}",
            positives.len()
        )));
    }
    let zero_fraction = (values.len() - positives.len()) as f64 / values.len() as f64;

    // Work on x/mean: the shape is scale-invariant and powers stay tame.
    let n = positives.len() as f64;
    let raw_mean = positives.iter().sum::<f64>() / n;
    let xs: Vec<f64> = positives.iter().map(|v| v / raw_mean).collect();
    let logs: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / n;

    let sd = (positives.iter().map(|v| (v - raw_mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return Err(Error::invalid("constant sample; Weibull fit undefined".to_string()));
    }
    // Moment start (Justus): k ~ (sd/mean)^-1.086.
    let mut k = (sd / raw_mean).powf(-1.086).clamp(0.1, 30.0);

    let mut iterations = 0;
    loop {
        iterations += 1;
        // Profile-likelihood score in k and its derivative.
        let mut s0 = 0.0; // sum x^k
        let mut s1 = 0.0; // sum x^k ln x
        let mut s2 = 0.0; // sum x^k (ln x)^2
        for (&x, &lx) in xs.iter().zip(logs.iter()) {
            let xk = x.powf(k);
            s0 += xk;
            s1 += xk * lx;
            s2 += xk * lx * lx;
        }
        let g = 1.0 / k + mean_log - s1 / s0;
        let dg = -1.0 / (k * k) - (s2 * s0 - s1 * s1) / (s0 * s0);
        let mut step = g / dg;
        // Keep the iterate positive; the score is strictly decreasing so the
        // root is unique.
        while k - step <= 0.0 {
            step /= 2.0;
        }
        k -= step;
        if step.abs() < TOL {
            break;
        }
        if iterations >= MAX_ITER {
            return Err(Error::numeric(format!(
                "Weibull shape iteration did not converge after {MAX_ITER} steps (k={k:.6})"
            )));
        }
    }

    let s0: f64 = xs.iter().map(|x| x.powf(k)).sum();
    let scale = raw_mean * (s0 / n).powf(1.0 / k);
    let law = WeibullLaw::new(k, scale)?;
    let ks = ks_distance(&positives, |x| law.cdf(x))?;
    Ok(WeibullFit {
        law,
        n_used: positives.len(),
        zero_fraction,
        iterations,
        ks,
    })
}
