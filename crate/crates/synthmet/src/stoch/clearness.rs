//! Bounded daily clearness-index law: a Beta density on a padded support,
//! fitted by the method of moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Climate {
    Tropical,
    Temperate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClearnessLaw {
    pub kt_min: f64,
    pub kt_max: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Sample mean the law was fitted to.
    pub mean_kt: f64,
    pub climate: Climate,
}

/// Support padding beyond the observed range, in kt units.
const SUPPORT_PAD: f64 = 0.02;
const MIN_SAMPLES: usize = 30;

pub fn fit_clearness_law(kt: &[f64], climate: Climate) -> Result<ClearnessLaw> {
    if kt.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SAMPLES} daily kt values, got {}",
            kt.len()
        )));
    }
    if kt.iter().any(|&v| !v.is_finite() || v <= 0.0 || v >= 1.0) {
        return Err(Error::invalid("daily kt values must lie strictly inside (0, 1)".to_string()));
    }
    let lo = kt.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = kt.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let kt_min = (lo - SUPPORT_PAD).max(0.0);
    let kt_max = (hi + SUPPORT_PAD).min(1.0);
    let width = kt_max - kt_min;

    let n = kt.len() as f64;
    let mean_kt = kt.iter().sum::<f64>() / n;
    let var = kt.iter().map(|&v| (v - mean_kt).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Err(Error::invalid("zero-variance kt sample; Beta fit undefined".to_string()));
    }

    // Moments of the sample rescaled to the unit support.
    let m = (mean_kt - kt_min) / width;
    let v = var / (width * width);
    // v < m(1-m) holds because the padded support strictly contains the data.
    let common = m * (1.0 - m) / v - 1.0;
    let alpha = m * common;
    let beta = (1.0 - m) * common;
    if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
        return Err(Error::numeric(format!(
            "method of moments produced invalid Beta parameters ({alpha}, {beta})"
        )));
    }
    Ok(ClearnessLaw {
        kt_min,
        kt_max,
        alpha,
        beta,
        mean_kt,
        climate,
    })
}

impl ClearnessLaw {
    fn unit(&self) -> statrs::distribution::Beta {
        statrs::distribution::Beta::new(self.alpha, self.beta).expect("validated parameters")
    }

    /// Law mean; by the moment identity it equals the fitted sample mean.
    pub fn mean(&self) -> f64 {
        self.kt_min + (self.kt_max - self.kt_min) * self.alpha / (self.alpha + self.beta)
    }

    pub fn cdf(&self, kt: f64) -> f64 {
        use statrs::distribution::ContinuousCDF;
        if kt <= self.kt_min {
            return 0.0;
        }
        if kt >= self.kt_max {
            return 1.0;
        }
        self.unit().cdf((kt - self.kt_min) / (self.kt_max - self.kt_min))
    }

    /// Inverse CDF; `p` is clamped away from 0 and 1. Always inside the
    /// support.
    pub fn quantile(&self, p: f64) -> f64 {
        use statrs::distribution::ContinuousCDF;
        let p = p.clamp(1e-12, 1.0 - 1e-12);
        let y = self.unit().inverse_cdf(p);
        self.kt_min + (self.kt_max - self.kt_min) * y
    }

    pub fn sample(&self, rng: &mut impl rand::Rng) -> f64 {
        use rand_distr::Distribution;
        let dist = rand_distr::Beta::new(self.alpha, self.beta).expect("validated parameters");
        self.kt_min + (self.kt_max - self.kt_min) * dist.sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn uniform_sample(lo: f64, hi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    }

    #[test]
    fn uniform_data_yields_the_padded_moment_solution() {
        // Uniform on [0.3, 0.7] rescaled to the padded support [0.28, 0.72]
        // has m = 0.5 and v = (0.4/0.44)^2/12, giving alpha = beta = 1.315.
        let law = fit_clearness_law(&uniform_sample(0.3, 0.7, 10_000, 1), Climate::Tropical).unwrap();
        assert!((law.alpha - 1.315).abs() < 0.2, "alpha {}", law.alpha);
        assert!((law.beta - 1.315).abs() < 0.2, "beta {}", law.beta);
        assert!((law.alpha - law.beta).abs() < 0.1);
        assert!(law.kt_min >= 0.27 && law.kt_min <= 0.3);
        assert!(law.kt_max >= 0.7 && law.kt_max <= 0.73);
    }

    #[test]
    fn law_mean_matches_sample_mean() {
        let sample = uniform_sample(0.4, 0.9, 500, 2);
        let mean = sample.iter().sum::<f64>() / sample.len() as f64;
        let law = fit_clearness_law(&sample, Climate::Tropical).unwrap();
        assert!((law.mean() - mean).abs() < 1e-6);
        assert!((law.mean_kt - mean).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_inside_the_support() {
        let law = fit_clearness_law(&uniform_sample(0.2, 0.85, 2_000, 3), Climate::Tropical).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let kt = law.sample(&mut rng);
            assert!(kt >= law.kt_min && kt <= law.kt_max, "{kt}");
        }
        for p in [0.0, 1e-6, 0.5, 1.0 - 1e-6, 1.0] {
            let q = law.quantile(p);
            assert!(q >= law.kt_min && q <= law.kt_max);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let law = fit_clearness_law(&uniform_sample(0.3, 0.8, 1_000, 4), Climate::Temperate).unwrap();
        for kt in [0.35, 0.5, 0.62, 0.75] {
            let q = law.quantile(law.cdf(kt));
            assert!((q - kt).abs() < 1e-9, "{kt} -> {q}");
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(fit_clearness_law(&[0.5; 10], Climate::Tropical).is_err());
        assert!(fit_clearness_law(&vec![0.5; 100], Climate::Tropical).is_err());
        let mut bad = uniform_sample(0.3, 0.7, 100, 5);
        bad[0] = 1.0;
        assert!(fit_clearness_law(&bad, Climate::Tropical).is_err());
    }

    #[test]
    fn support_clamps_to_physical_bounds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let sample: Vec<f64> = (0..200).map(|_| rng.random_range(0.005..0.995)).collect();
        let law = fit_clearness_law(&sample, Climate::Tropical).unwrap();
        assert!(law.kt_min >= 0.0);
        assert!(law.kt_max <= 1.0);
    }
}
