//! Small feed-forward network coupling temperature and relative humidity to
//! the already-generated radiation and wind.
//!
//! One tanh hidden layer, two outputs, trained by seeded minibatch gradient
//! descent on normalized inputs and outputs. Deliberately minimal: the goal
//! is a smooth nonlinear regression with a serializable parameter set, not a
//! deep-learning stack.

use chrono::Timelike;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weather::{WeatherSeries, WeatherVariable};

/// Network inputs, in order.
pub const MLP_INPUTS: [&str; 6] = [
    "hour_sin", "hour_cos", "ghi", "wind", "prev_temp", "prev_rh",
];

/// Output clamp ranges: temperature then relative humidity.
pub const OUTPUT_RANGE: [(f64, f64); 2] = [(-40.0, 60.0), (0.0, 100.0)];

const MIN_SAMPLES: usize = 1000;
const VALIDATION_SHARE: f64 = 0.2;

/// Training configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub hidden: usize,
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpSpec {
    fn default() -> Self {
        MlpSpec {
            hidden: 8,
            epochs: 300,
            batch: 32,
            learning_rate: 0.05,
            seed: 1,
        }
    }
}

/// Fitted network with its normalization constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// Hidden-layer weights, one row per hidden unit.
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    /// Output weights, one row per output (temperature, humidity).
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    pub in_mean: Vec<f64>,
    pub in_sd: Vec<f64>,
    pub out_mean: Vec<f64>,
    pub out_sd: Vec<f64>,
    /// Physical-unit RMSE per output on the held-out 20%.
    pub val_rmse: Vec<f64>,
    pub inputs: Vec<String>,
    pub n_fit: usize,
    pub seed: u64,
    pub epochs: usize,
}

impl MlpModel {
    /// Predicts (temperature, relative humidity), clamped to physical range.
    pub fn predict(&self, inputs: &[f64]) -> Result<(f64, f64)> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::invalid(format!(
                "expected {} inputs, got {}",
                self.inputs.len(),
                inputs.len()
            )));
        }
        let xn: Vec<f64> = inputs
            .iter()
            .zip(self.in_mean.iter().zip(&self.in_sd))
            .map(|(&x, (m, s))| (x - m) / s)
            .collect();
        let mut out = [0.0; 2];
        let mut hidden = vec![0.0; self.b1.len()];
        for (h, (row, b)) in self.w1.iter().zip(&self.b1).enumerate() {
            let a: f64 = row.iter().zip(&xn).map(|(w, x)| w * x).sum::<f64>() + b;
            hidden[h] = a.tanh();
        }
        for (o, (row, b)) in self.w2.iter().zip(&self.b2).enumerate() {
            let yn: f64 = row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + b;
            let y = self.out_mean[o] + self.out_sd[o] * yn;
            let (lo, hi) = OUTPUT_RANGE[o];
            out[o] = y.clamp(lo, hi);
        }
        Ok((out[0], out[1]))
    }
}

/// Network parameters as matrices, used during training.
#[derive(Debug, Clone)]
struct Params {
    w1: DMatrix<f64>,
    b1: DVector<f64>,
    w2: DMatrix<f64>,
    b2: DVector<f64>,
}

impl Params {
    fn init(n_in: usize, hidden: usize, n_out: usize, rng: &mut impl Rng) -> Params {
        let a1 = (6.0 / (n_in + hidden) as f64).sqrt();
        let w1 = DMatrix::from_fn(hidden, n_in, |_, _| rng.random_range(-a1..a1));
        let a2 = (6.0 / (hidden + n_out) as f64).sqrt();
        let w2 = DMatrix::from_fn(n_out, hidden, |_, _| rng.random_range(-a2..a2));
        Params {
            w1,
            b1: DVector::zeros(hidden),
            w2,
            b2: DVector::zeros(n_out),
        }
    }

    fn forward(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let h = (&self.w1 * x + &self.b1).map(f64::tanh);
        let y = &self.w2 * &h + &self.b2;
        (h, y)
    }

    /// Mean over the batch of half the squared error, and its gradient.
    fn loss_and_grad(&self, xs: &[DVector<f64>], ys: &[DVector<f64>]) -> (f64, Params) {
        let b = xs.len() as f64;
        let mut grad = Params {
            w1: DMatrix::zeros(self.w1.nrows(), self.w1.ncols()),
            b1: DVector::zeros(self.b1.len()),
            w2: DMatrix::zeros(self.w2.nrows(), self.w2.ncols()),
            b2: DVector::zeros(self.b2.len()),
        };
        let mut loss = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            let (h, yhat) = self.forward(x);
            let r = yhat - y;
            loss += 0.5 * r.norm_squared() / b;
            let dy = r / b;
            grad.w2 += &dy * h.transpose();
            grad.b2 += &dy;
            let dh = self.w2.transpose() * dy;
            let da = dh.zip_map(&h, |g, hv| g * (1.0 - hv * hv));
            grad.w1 += &da * x.transpose();
            grad.b1 += da;
        }
        (loss, grad)
    }

    fn step(&mut self, lr: f64, grad: &Params) {
        self.w1 -= lr * &grad.w1;
        self.b1 -= lr * &grad.b1;
        self.w2 -= lr * &grad.w2;
        self.b2 -= lr * &grad.b2;
    }
}

/// One training sample in physical units.
struct Samples {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

/// Collects (hour harmonics, ghi, wind, previous temp, previous rh) ->
/// (temp, rh) pairs wherever two consecutive hours carry all five columns.
fn collect_samples(series: &WeatherSeries) -> Samples {
    use WeatherVariable as V;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for t in 1..series.len() {
        // A day gap breaks the previous-hour link at midnight.
        if t % 24 == 0 {
            let d = t / 24;
            let prev = series.days()[d - 1];
            if prev.succ_opt() != Some(series.days()[d]) {
                continue;
            }
        }
        let needed = (
            series.value(V::GlobalHorizontal, t),
            series.value(V::WindSpeed, t),
            series.value(V::Temperature, t - 1),
            series.value(V::RelativeHumidity, t - 1),
            series.value(V::Temperature, t),
            series.value(V::RelativeHumidity, t),
        );
        if let (Some(ghi), Some(wind), Some(pt), Some(prh), Some(temp), Some(rh)) = needed {
            let hour = series.timestamp(t).hour() as f64;
            let angle = std::f64::consts::TAU * hour / 24.0;
            inputs.push(vec![angle.sin(), angle.cos(), ghi, wind, pt, prh]);
            targets.push(vec![temp, rh]);
        }
    }
    Samples { inputs, targets }
}

fn column_stats(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let width = rows[0].len();
    let mut mean = vec![0.0; width];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x / n;
        }
    }
    let mut sd = vec![0.0; width];
    for row in rows {
        for ((s, x), m) in sd.iter_mut().zip(row).zip(&mean) {
            *s += (x - m).powi(2) / n;
        }
    }
    for s in &mut sd {
        *s = s.sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    (mean, sd)
}

fn normalize(rows: &[Vec<f64>], mean: &[f64], sd: &[f64]) -> Vec<DVector<f64>> {
    rows.iter()
        .map(|row| {
            DVector::from_iterator(
                row.len(),
                row.iter()
                    .zip(mean.iter().zip(sd))
                    .map(|(&x, (m, s))| (x - m) / s),
            )
        })
        .collect()
}

/// Trains the temperature/humidity network on a weather series.
pub fn fit_mlp(series: &WeatherSeries, spec: &MlpSpec) -> Result<MlpModel> {
    if spec.hidden == 0 || spec.batch == 0 || spec.epochs == 0 {
        return Err(Error::invalid("hidden, batch and epochs must be positive".to_string()));
    }
    if !(spec.learning_rate.is_finite() && spec.learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be positive".to_string()));
    }
    let samples = collect_samples(series);
    if samples.inputs.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "network fit needs at least {MIN_SAMPLES} complete consecutive-hour samples, got {}",
            samples.inputs.len()
        )));
    }
    let (in_mean, in_sd) = column_stats(&samples.inputs);
    let (out_mean, out_sd) = column_stats(&samples.targets);
    let xs = normalize(&samples.inputs, &in_mean, &in_sd);
    let ys = normalize(&samples.targets, &out_mean, &out_sd);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((xs.len() as f64) * VALIDATION_SHARE).round() as usize;
    let (val_idx, train_idx) = order.split_at(n_val);

    let mut params = Params::init(MLP_INPUTS.len(), spec.hidden, 2, &mut rng);
    let mut train: Vec<usize> = train_idx.to_vec();
    for _ in 0..spec.epochs {
        train.shuffle(&mut rng);
        for chunk in train.chunks(spec.batch) {
            let bx: Vec<DVector<f64>> = chunk.iter().map(|&i| xs[i].clone()).collect();
            let by: Vec<DVector<f64>> = chunk.iter().map(|&i| ys[i].clone()).collect();
            let (loss, grad) = params.loss_and_grad(&bx, &by);
            if !loss.is_finite() {
                return Err(Error::numeric(
                    "training diverged; lower the learning rate".to_string(),
                ));
            }
            params.step(spec.learning_rate, &grad);
        }
    }

    // Validation RMSE per output, back in physical units.
    let mut sq = [0.0; 2];
    for &i in val_idx {
        let (_, yhat) = params.forward(&xs[i]);
        for o in 0..2 {
            sq[o] += ((yhat[o] - ys[i][o]) * out_sd[o]).powi(2);
        }
    }
    let val_rmse: Vec<f64> = sq
        .iter()
        .map(|s| (s / val_idx.len().max(1) as f64).sqrt())
        .collect();

    Ok(MlpModel {
        w1: matrix_rows(&params.w1),
        b1: params.b1.as_slice().to_vec(),
        w2: matrix_rows(&params.w2),
        b2: params.b2.as_slice().to_vec(),
        in_mean,
        in_sd,
        out_mean,
        out_sd,
        val_rmse,
        inputs: MLP_INPUTS.iter().map(|s| s.to_string()).collect(),
        n_fit: xs.len(),
        seed: spec.seed,
        epochs: spec.epochs,
    })
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}
