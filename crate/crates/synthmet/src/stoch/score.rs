//! Rank-based normal-score transform linking bounded samples to Gaussian
//! autoregressive machinery.

use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};

/// Empirical quantile map to standard-normal scores.
///
/// Forward maps a value to the score of its plotting position
/// (rank + 0.5) / n, averaging ranks over ties; between data points it
/// interpolates linearly, outside them it clamps to the extreme scores.
/// Inverse interpolates the empirical quantile function on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalScore {
    /// Strictly ascending distinct sample values.
    values: Vec<f64>,
    /// Matching strictly ascending normal scores.
    scores: Vec<f64>,
}

/// Fits the transform and returns the transformed input.
pub fn normal_score(values: &[f64]) -> Result<(Vec<f64>, NormalScore)> {
    let map = NormalScore::fit(values)?;
    let transformed = values.iter().map(|&v| map.forward(v)).collect();
    Ok((transformed, map))
}

impl NormalScore {
    pub fn fit(values: &[f64]) -> Result<NormalScore> {
        if values.len() < 2 {
            return Err(Error::invalid("normal score needs at least 2 values".to_string()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite value in input".to_string()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        if sorted[0] == sorted[sorted.len() - 1] {
            return Err(Error::invalid("constant input; normal score undefined".to_string()));
        }
        let normal = statrs::distribution::Normal::new(0.0, 1.0).expect("unit normal");
        let n = sorted.len() as f64;
        let mut grid_values = Vec::new();
        let mut grid_scores = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            // Average rank of the tie group, Hazen plotting position.
            let rank = (i + j) as f64 / 2.0;
            let p = (rank + 0.5) / n;
            grid_values.push(sorted[i]);
            grid_scores.push(normal.inverse_cdf(p));
            i = j + 1;
        }
        Ok(NormalScore {
            values: grid_values,
            scores: grid_scores,
        })
    }

    pub fn forward(&self, x: f64) -> f64 {
        interpolate(&self.values, &self.scores, x)
    }

    pub fn inverse(&self, z: f64) -> f64 {
        interpolate(&self.scores, &self.values, z)
    }
}

/// Piecewise-linear map through (xs, ys), clamped outside the grid.
/// Exact at grid nodes.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.binary_search_by(|v| v.partial_cmp(&x).expect("finite grid")) {
        Ok(i) => ys[i],
        Err(0) => ys[0],
        Err(i) if i == xs.len() => ys[xs.len() - 1],
        Err(i) => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::Distribution;

    #[test]
    fn median_maps_to_zero() {
        let values = vec![3.0, 9.0, 1.0, 7.0, 5.0];
        let (_, map) = normal_score(&values).unwrap();
        assert!(map.forward(5.0).abs() < 1e-9);
    }

    #[test]
    fn round_trip_is_identity_on_inputs() {
        let values = vec![0.3, 0.1, 4.0, 2.5, 2.5, 0.9, 7.2, 2.5];
        let (transformed, map) = normal_score(&values).unwrap();
        for (&x, &z) in values.iter().zip(transformed.iter()) {
            assert_eq!(map.inverse(z), x, "round trip of {x}");
        }
    }

    #[test]
    fn ties_share_an_averaged_rank() {
        let values = vec![1.0, 2.0, 2.0, 3.0];
        let (transformed, _) = normal_score(&values).unwrap();
        assert_eq!(transformed[1], transformed[2]);
        // Tie group at ranks 1 and 2 averages to p = 0.5, score 0.
        assert!(transformed[1].abs() < 1e-9);
    }

    #[test]
    fn transformed_sample_is_standard_normal_shaped() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let exp = rand_distr::Exp::new(0.7).unwrap();
        let values: Vec<f64> = (0..10_000).map(|_| exp.sample(&mut rng)).collect();
        let (transformed, _) = normal_score(&values).unwrap();
        let n = transformed.len() as f64;
        let mean = transformed.iter().sum::<f64>() / n;
        let sd = (transformed.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((0.95..=1.05).contains(&sd), "sd {sd}");
    }

    #[test]
    fn outside_the_grid_is_clamped() {
        let (_, map) = normal_score(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(map.forward(-5.0), map.forward(1.0));
        assert_eq!(map.forward(99.0), map.forward(3.0));
        assert_eq!(map.inverse(-9.0), 1.0);
        assert_eq!(map.inverse(9.0), 3.0);
    }

    #[test]
    fn constant_input_is_rejected() {
        assert!(normal_score(&[2.0, 2.0, 2.0]).is_err());
        assert!(normal_score(&[1.0]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn round_trip_property(values in proptest::collection::vec(-1e3f64..1e3, 2..60)) {
            proptest::prop_assume!(values.iter().any(|&v| v != values[0]));
            let (transformed, map) = normal_score(&values).unwrap();
            for (&x, &z) in values.iter().zip(transformed.iter()) {
                proptest::prop_assert_eq!(map.inverse(z), x);
            }
        }
    }
}
