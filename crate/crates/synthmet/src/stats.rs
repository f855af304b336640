//! Summary tables, histograms and the chi-square independence test over
//! daily indicators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weather::{DailyIndicator, IndicatorKind, WeatherVariable};

/// Exact sample statistics of one daily indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub variable: WeatherVariable,
    pub kind: IndicatorKind,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Standard deviation with the n-1 denominator; 0 for a single value.
    pub sd: f64,
    pub count: usize,
}

pub fn summarize(indicator: &DailyIndicator) -> Result<SummaryTable> {
    let (mean, sd) = moments(&indicator.values)?;
    let min = indicator.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = indicator.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(SummaryTable {
        variable: indicator.variable,
        kind: indicator.kind,
        mean,
        min,
        max,
        sd,
        count: indicator.values.len(),
    })
}

/// Mean and n-1 standard deviation. Errors on empty or non-finite input.
pub fn moments(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::invalid("no values to summarize".to_string()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in input".to_string()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok((mean, sd))
}

/// How to bin a sample.
#[derive(Debug, Clone)]
pub enum Bins {
    /// Equal-width bins spanning the data range.
    Count(usize),
    /// Explicit strictly ascending edges; every value must fall inside.
    Edges(Vec<f64>),
}

/// Binned sample. Bins are right-open `[e_i, e_{i+1})`, the last is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub frequencies: Vec<f64>,
}

pub fn histogram(values: &[f64], bins: Bins) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::invalid("no values to bin".to_string()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in input".to_string()));
    }
    let edges = match bins {
        Bins::Count(0) => return Err(Error::invalid("need at least one bin".to_string())),
        Bins::Count(k) => {
            let mut lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                // A constant sample has no natural width; give it one.
                lo -= 0.5;
                hi += 0.5;
            }
            let mut edges = (0..=k)
                .map(|i| lo + (hi - lo) * i as f64 / k as f64)
                .collect::<Vec<f64>>();
            // Rounding in the interpolation can land the outer edges inside
            // the data range; pin them so min and max always bin.
            edges[0] = lo;
            edges[k] = hi;
            edges
        }
        Bins::Edges(edges) => {
            if edges.len() < 2 {
                return Err(Error::invalid("need at least two bin edges".to_string()));
            }
            if edges.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid(
                    "bin edges must be strictly ascending (zero-width range)".to_string(),
                ));
            }
            edges
        }
    };
    let k = edges.len() - 1;
    let mut counts = vec![0usize; k];
    for &x in values {
        if x < edges[0] || x > edges[k] {
            return Err(Error::invalid(format!(
                "value {x} outside binning range [{}, {}]",
                edges[0], edges[k]
            )));
        }
        counts[bin_index(&edges, x)] += 1;
    }
    let n = values.len() as f64;
    let frequencies = counts.iter().map(|&c| c as f64 / n).collect();
    Ok(Histogram {
        edges,
        counts,
        frequencies,
    })
}

/// Index of the right-open bin containing `x`; the last bin is closed.
/// Caller guarantees `edges[0] <= x <= edges[last]`.
fn bin_index(edges: &[f64], x: f64) -> usize {
    let k = edges.len() - 1;
    if x >= edges[k] {
        return k - 1;
    }
    // partition_point gives the first edge > x, so the bin is one less.
    edges.partition_point(|&e| e <= x).saturating_sub(1).min(k - 1)
}

/// Contingency table with its chi-square independence statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyResult {
    pub table: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-square statistic of an r x c count table, expected counts from the
/// margins.
pub fn chi2_from_table(table: &[Vec<f64>]) -> Result<ContingencyResult> {
    let r = table.len();
    if r < 2 || table[0].len() < 2 {
        return Err(Error::invalid("contingency table needs at least 2x2 cells".to_string()));
    }
    let c = table[0].len();
    if table.iter().any(|row| row.len() != c) {
        return Err(Error::invalid("ragged contingency table".to_string()));
    }
    if table.iter().flatten().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::invalid("counts must be non-negative".to_string()));
    }
    let row_sum: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_sum: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    let total: f64 = row_sum.iter().sum();
    if row_sum.iter().any(|&s| s <= 0.0) || col_sum.iter().any(|&s| s <= 0.0) {
        return Err(Error::invalid("contingency table has an empty row or column".to_string()));
    }
    let mut chi2 = 0.0;
    for i in 0..r {
        for j in 0..c {
            let expected = row_sum[i] * col_sum[j] / total;
            chi2 += (table[i][j] - expected).powi(2) / expected;
        }
    }
    let dof = (r - 1) * (c - 1);
    Ok(ContingencyResult {
        table: table.to_vec(),
        chi2,
        dof,
        p_value: chi2_p_value(chi2, dof),
    })
}

/// Upper tail probability of the chi-square distribution:
/// Q(dof/2, chi2/2), the regularized upper incomplete gamma function.
pub fn chi2_p_value(chi2: f64, dof: usize) -> f64 {
    if chi2 <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(dof as f64 / 2.0, chi2 / 2.0)
}

/// Bins two indicators over their shared days and tests independence.
///
/// Margin bins left empty by the equal-width binning are merged into their
/// successor (the trailing bin into its predecessor) so every margin level
/// has observations.
pub fn chi2_independence(
    a: &DailyIndicator,
    b: &DailyIndicator,
    bins_a: usize,
    bins_b: usize,
) -> Result<ContingencyResult> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let b_by_day: std::collections::BTreeMap<_, _> =
        b.days.iter().zip(b.values.iter()).collect();
    for (day, &x) in a.days.iter().zip(a.values.iter()) {
        if let Some(&&y) = b_by_day.get(day) {
            xs.push(x);
            ys.push(y);
        }
    }
    if xs.len() < 4 {
        return Err(Error::invalid(format!(
            "only {} shared days between the two indicators",
            xs.len()
        )));
    }
    let ex = merged_edges(&xs, bins_a)?;
    let ey = merged_edges(&ys, bins_b)?;
    let mut table = vec![vec![0.0; ey.len() - 1]; ex.len() - 1];
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        table[bin_index(&ex, x)][bin_index(&ey, y)] += 1.0;
    }
    chi2_from_table(&table)
}

/// Equal-width edges over the data range with empty bins merged away.
fn merged_edges(values: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::invalid("need at least 2 bins per margin".to_string()));
    }
    let h = histogram(values, Bins::Count(bins))?;
    let mut edges = h.edges;
    let mut counts = h.counts;
    // Merge any empty bin into its successor; a trailing empty bin merges
    // backwards. Deterministic left-to-right sweep.
    let mut i = 0;
    while i < counts.len() {
        if counts[i] == 0 {
            if i + 1 < counts.len() {
                counts[i + 1] += counts[i];
                counts.remove(i);
                edges.remove(i + 1);
            } else {
                counts[i - 1] += counts[i];
                counts.remove(i);
                edges.remove(i);
            }
        } else {
            i += 1;
        }
    }
    if counts.len() < 2 {
        return Err(Error::invalid(
            "fewer than 2 occupied bins in a margin after merging".to_string(),
        ));
    }
    Ok(edges)
}

/// Pearson correlation of two equal-length samples.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid("correlation needs two samples of equal length >= 2".to_string()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::invalid("correlation undefined for a constant sample".to_string()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Ordinary least squares via SVD with an explicit rank check.
pub fn least_squares(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if design.nrows() != y.len() || design.nrows() < design.ncols() {
        return Err(Error::invalid(format!(
            "design matrix {}x{} incompatible with {} observations",
            design.nrows(),
            design.ncols(),
            y.len()
        )));
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax <= 0.0 || smin / smax < 1e-10 {
        return Err(Error::numeric(
            "design matrix is rank deficient (collinear or constant inputs)".to_string(),
        ));
    }
    svd.solve(y, 0.0)
        .map_err(|e| Error::numeric(format!("SVD solve failed: {e}")))
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("empty sample".to_string()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}
