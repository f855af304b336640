//! Representative-day extraction and criterion-driven sequence search.
//!
//! Each variable's daily 24-hour profiles go through a principal component
//! analysis; the retained factor scores are grouped by agglomerative (Ward)
//! clustering; every class then names a real calendar day closest to its
//! centroid. A joint mode concatenates factor scores across variables so
//! days are classed on their whole weather, not one quantity at a time.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weather::{IndicatorKind, WeatherSeries, WeatherVariable};

/// Share of variance the retained components must reach.
pub const VARIANCE_THRESHOLD: f64 = 0.90;

/// Automatic class counts are cut in this range.
pub const AUTO_CLASS_RANGE: (usize, usize) = (2, 8);

/// Column treatment before the eigendecomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scaling {
    /// Center and divide by the standard deviation (correlation matrix).
    Correlation,
    /// Center only (covariance matrix).
    Covariance,
}

/// One variable's day-by-hour value matrix, restricted to complete days.
#[derive(Debug, Clone, PartialEq)]
pub struct DayProfileMatrix {
    pub variable: WeatherVariable,
    /// Calendar date of each row.
    pub days: Vec<NaiveDate>,
    /// Index of each row's day in the source series.
    pub day_indices: Vec<usize>,
    /// One row per day, 24 hourly values.
    pub rows: Vec<Vec<f64>>,
}

/// Collects the complete days of one variable as profile rows.
pub fn day_profile_matrix(series: &WeatherSeries, variable: WeatherVariable) -> Result<DayProfileMatrix> {
    if !series.has_data(variable) {
        return Err(Error::NotFound(format!("series has no {} data", variable.column())));
    }
    let mut days = Vec::new();
    let mut day_indices = Vec::new();
    let mut rows = Vec::new();
    for (d, &date) in series.days().iter().enumerate() {
        let slice = series.day_slice(variable, d);
        if slice.iter().all(|v| v.is_some()) {
            days.push(date);
            day_indices.push(d);
            rows.push(slice.iter().map(|&v| v.unwrap()).collect());
        }
    }
    if rows.is_empty() {
        return Err(Error::invalid(format!(
            "no complete day of {} to classify",
            variable.column()
        )));
    }
    Ok(DayProfileMatrix {
        variable,
        days,
        day_indices,
        rows,
    })
}

/// Principal component decomposition of a day-profile matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// Orthonormal component directions, strongest first, one per row.
    pub directions: Vec<Vec<f64>>,
    /// Explained-variance fractions, non-increasing.
    pub explained: Vec<f64>,
    /// Per-day factor scores, all components.
    pub scores: Vec<Vec<f64>>,
    /// Smallest component count whose fractions reach the threshold.
    pub retained: usize,
    /// Column means removed before the decomposition.
    pub mean: Vec<f64>,
    /// Column scale divided out (1 everywhere in covariance mode and for
    /// zero-variance columns).
    pub scale: Vec<f64>,
}

/// PCA of a day-profile matrix. See [`pca_matrix`].
pub fn pca(matrix: &DayProfileMatrix, variance_threshold: f64, scaling: Scaling) -> Result<PcaResult> {
    pca_matrix(&matrix.rows, variance_threshold, scaling)
}

/// PCA of an arbitrary rows-by-columns matrix.
///
/// Columns are centered, and in correlation mode scaled to unit variance;
/// zero-variance columns are left centered but unscaled. Component signs
/// follow the convention that the largest-magnitude loading is positive,
/// so results do not depend on eigensolver sign choices.
pub fn pca_matrix(rows: &[Vec<f64>], variance_threshold: f64, scaling: Scaling) -> Result<PcaResult> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid("principal components need at least 2 days".to_string()));
    }
    let width = rows[0].len();
    if width == 0 || rows.iter().any(|r| r.len() != width) {
        return Err(Error::invalid("ragged profile matrix".to_string()));
    }
    if !(0.0 < variance_threshold && variance_threshold <= 1.0) {
        return Err(Error::invalid(format!(
            "variance threshold must be in (0, 1], got {variance_threshold}"
        )));
    }
    let mut mean = vec![0.0; width];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x / n as f64;
        }
    }
    let mut scale = vec![1.0; width];
    if scaling == Scaling::Correlation {
        for (j, s) in scale.iter_mut().enumerate() {
            let var = rows
                .iter()
                .map(|r| (r[j] - mean[j]).powi(2))
                .sum::<f64>()
                / (n - 1) as f64;
            if var > 0.0 {
                *s = var.sqrt();
            }
        }
    }
    let centered = DMatrix::from_fn(n, width, |i, j| (rows[i][j] - mean[j]) / scale[j]);
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    let total: f64 = cov.diagonal().iter().sum();
    if total <= 0.0 {
        return Err(Error::numeric("zero-variance matrix; nothing to decompose".to_string()));
    }
    let eigen = nalgebra::SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..width).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });

    let mut directions = Vec::with_capacity(width);
    let mut explained = Vec::with_capacity(width);
    for &idx in &order {
        let mut dir: Vec<f64> = eigen.eigenvectors.column(idx).iter().copied().collect();
        // Largest-magnitude loading positive.
        let dominant = dir
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite"))
            .map(|(i, _)| i)
            .expect("nonempty direction");
        if dir[dominant] < 0.0 {
            dir.iter_mut().for_each(|v| *v = -*v);
        }
        directions.push(dir);
        explained.push(eigen.eigenvalues[idx].max(0.0) / total);
    }

    let mut retained = 0;
    let mut cumulative = 0.0;
    for f in &explained {
        retained += 1;
        cumulative += f;
        if cumulative >= variance_threshold - 1e-12 {
            break;
        }
    }

    let scores = (0..n)
        .map(|i| {
            directions
                .iter()
                .map(|dir| centered.row(i).iter().zip(dir).map(|(x, d)| x * d).sum())
                .collect()
        })
        .collect();

    Ok(PcaResult {
        directions,
        explained,
        scores,
        retained,
        mean,
        scale,
    })
}

impl PcaResult {
    /// Retained leading entries of one day's score vector.
    pub fn retained_scores(&self, day: usize) -> &[f64] {
        &self.scores[day][..self.retained]
    }

    /// Rebuilds the original rows from all components (exact up to
    /// floating-point error).
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        self.scores
            .iter()
            .map(|score| {
                (0..self.mean.len())
                    .map(|j| {
                        let centered: f64 = score
                            .iter()
                            .zip(&self.directions)
                            .map(|(s, dir)| s * dir[j])
                            .sum();
                        centered * self.scale[j] + self.mean[j]
                    })
                    .collect()
            })
            .collect()
    }
}

/// One class of days in factor space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayClass {
    /// Row indices of the member days, ascending.
    pub members: Vec<usize>,
    /// Mean of the member score vectors.
    pub centroid: Vec<f64>,
    /// Member share of all classified days.
    pub frequency: f64,
    /// Row index of the member nearest the centroid.
    pub representative: usize,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Agglomerative hierarchical clustering with Ward linkage.
///
/// `k` fixes the class count; `None` cuts at the largest relative gap in
/// the merge-height sequence, constrained to 2..=8 classes. Tied merge
/// candidates resolve to the lexicographically smallest cluster-index pair,
/// so results are deterministic.
pub fn ascending_classification(scores: &[Vec<f64>], k: Option<usize>) -> Result<Vec<DayClass>> {
    let n = scores.len();
    if n == 0 {
        return Err(Error::invalid("no days to classify".to_string()));
    }
    let dim = scores[0].len();
    if dim == 0 || scores.iter().any(|s| s.len() != dim) {
        return Err(Error::invalid("ragged factor scores".to_string()));
    }
    if let Some(k) = k {
        if k == 0 || k > n {
            return Err(Error::invalid(format!("cannot cut {n} days into {k} classes")));
        }
    } else if n < 4 {
        return Err(Error::invalid(format!(
            "automatic class count needs at least 4 days, got {n}"
        )));
    }

    // Ward's method via the Lance-Williams recurrence on squared Euclidean
    // distances. `clusters[i]` is None once i has been merged away; a merged
    // pair keeps the smaller index.
    let mut clusters: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    let mut dist: Vec<Vec<f64>> = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = squared_distance(&scores[i], &scores[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut heights = Vec::with_capacity(n - 1);
    // memberships after each merge, so any cut can be replayed.
    let mut snapshots: Vec<Vec<Option<Vec<usize>>>> = Vec::with_capacity(n);
    snapshots.push(clusters.clone());
    for _ in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if clusters[i].is_none() {
                continue;
            }
            for j in i + 1..n {
                if clusters[j].is_none() {
                    continue;
                }
                if best.is_none_or(|(d, _, _)| dist[i][j] < d) {
                    best = Some((dist[i][j], i, j));
                }
            }
        }
        let (height, a, b) = best.expect("at least two clusters remain");
        heights.push(height);
        let na = clusters[a].as_ref().unwrap().len() as f64;
        let nb = clusters[b].as_ref().unwrap().len() as f64;
        for m in 0..n {
            if m == a || m == b || clusters[m].is_none() {
                continue;
            }
            let nm = clusters[m].as_ref().unwrap().len() as f64;
            let d = ((na + nm) * dist[a][m] + (nb + nm) * dist[b][m] - nm * height)
                / (na + nb + nm);
            dist[a][m] = d;
            dist[m][a] = d;
        }
        let moved = clusters[b].take().unwrap();
        clusters[a].as_mut().unwrap().extend(moved);
        snapshots.push(clusters.clone());
    }

    let classes_at = |k: usize| -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = snapshots[n - k]
            .iter()
            .filter_map(|c| c.clone())
            .collect();
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.sort_by_key(|g| g[0]);
        groups
    };

    let chosen = match k {
        Some(k) => k,
        None => {
            let (lo, hi) = AUTO_CLASS_RANGE;
            let hi = hi.min(n - 1);
            // Cutting to k classes happens after n-k merges; the gap for k
            // compares the next merge height against the last one taken.
            let mut best = (lo, f64::NEG_INFINITY);
            for cand in lo..=hi {
                let prev = heights[n - cand - 1];
                let next = heights[n - cand];
                let gap = if prev > 0.0 {
                    next / prev
                } else if next > 0.0 {
                    f64::INFINITY
                } else {
                    continue;
                };
                if gap > best.1 {
                    best = (cand, gap);
                }
            }
            best.0
        }
    };

    let total = n as f64;
    Ok(classes_at(chosen)
        .into_iter()
        .map(|members| {
            let mut centroid = vec![0.0; dim];
            for &m in &members {
                for (c, s) in centroid.iter_mut().zip(&scores[m]) {
                    *c += s / members.len() as f64;
                }
            }
            let representative = *members
                .iter()
                .min_by(|&&a, &&b| {
                    squared_distance(&scores[a], &centroid)
                        .partial_cmp(&squared_distance(&scores[b], &centroid))
                        .expect("finite distances")
                        .then(a.cmp(&b))
                })
                .expect("nonempty class");
            DayClass {
                frequency: members.len() as f64 / total,
                members,
                centroid,
                representative,
            }
        })
        .collect())
}

/// Classes of one variable, with the calendar mapping of the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableClasses {
    pub variable: WeatherVariable,
    /// Calendar date of each classified row.
    pub days: Vec<NaiveDate>,
    pub classes: Vec<DayClass>,
    pub retained: usize,
    pub explained: Vec<f64>,
}

impl VariableClasses {
    /// Representative calendar dates, one per class.
    pub fn representative_dates(&self) -> Vec<NaiveDate> {
        self.classes.iter().map(|c| self.days[c.representative]).collect()
    }
}

/// Joint classification over the days complete for every chosen variable.
#[derive(Debug, Clone, PartialEq)]
pub struct JointClasses {
    pub variables: Vec<WeatherVariable>,
    pub days: Vec<NaiveDate>,
    /// Day index of each row in the source series.
    pub day_indices: Vec<usize>,
    pub classes: Vec<DayClass>,
}

/// Result of [`representative_days`].
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeDays {
    pub per_variable: Vec<VariableClasses>,
    pub joint: JointClasses,
}

/// Concatenated retained factor scores over the days complete for every
/// variable, each variable's block scaled to unit total variance so no
/// quantity dominates the metric.
fn joint_scores(
    series: &WeatherSeries,
    variables: &[WeatherVariable],
) -> Result<(Vec<usize>, Vec<NaiveDate>, Vec<Vec<f64>>)> {
    let matrices: Vec<DayProfileMatrix> = variables
        .iter()
        .map(|&v| day_profile_matrix(series, v))
        .collect::<Result<_>>()?;
    // Intersection of complete-day index sets, in calendar order.
    let mut common: Vec<usize> = matrices[0].day_indices.clone();
    for m in &matrices[1..] {
        common.retain(|d| m.day_indices.contains(d));
    }
    if common.len() < 2 {
        return Err(Error::invalid(
            "fewer than 2 days are complete for every requested variable".to_string(),
        ));
    }
    let mut rows = vec![Vec::new(); common.len()];
    for m in &matrices {
        let sub: Vec<Vec<f64>> = common
            .iter()
            .map(|d| {
                let pos = m.day_indices.iter().position(|x| x == d).expect("in common set");
                m.rows[pos].clone()
            })
            .collect();
        let pca = pca_matrix(&sub, VARIANCE_THRESHOLD, Scaling::Correlation)?;
        // Total variance of the retained block.
        let mut var = 0.0;
        for dim in 0..pca.retained {
            let mean: f64 =
                pca.scores.iter().map(|s| s[dim]).sum::<f64>() / pca.scores.len() as f64;
            var += pca
                .scores
                .iter()
                .map(|s| (s[dim] - mean).powi(2))
                .sum::<f64>()
                / (pca.scores.len() - 1) as f64;
        }
        let block_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        for (row, score) in rows.iter_mut().zip(&pca.scores) {
            row.extend(score[..pca.retained].iter().map(|s| s / block_scale));
        }
    }
    let days = common.iter().map(|&d| series.days()[d]).collect();
    Ok((common, days, rows))
}

/// Per-variable and joint representative-day extraction.
pub fn representative_days(
    series: &WeatherSeries,
    variables: &[WeatherVariable],
    k: Option<usize>,
) -> Result<RepresentativeDays> {
    if variables.is_empty() {
        return Err(Error::invalid("no variables selected".to_string()));
    }
    let minimum = 2 * k.unwrap_or(AUTO_CLASS_RANGE.0);
    let mut per_variable = Vec::with_capacity(variables.len());
    for &variable in variables {
        let matrix = day_profile_matrix(series, variable)?;
        if matrix.rows.len() < minimum {
            return Err(Error::invalid(format!(
                "{} has {} complete days; classification needs at least {minimum}",
                variable.column(),
                matrix.rows.len()
            )));
        }
        let pca = pca(&matrix, VARIANCE_THRESHOLD, Scaling::Correlation)?;
        let retained_rows: Vec<Vec<f64>> = (0..matrix.rows.len())
            .map(|i| pca.retained_scores(i).to_vec())
            .collect();
        let classes = ascending_classification(&retained_rows, k)?;
        per_variable.push(VariableClasses {
            variable,
            days: matrix.days,
            classes,
            retained: pca.retained,
            explained: pca.explained,
        });
    }

    let (day_indices, days, rows) = joint_scores(series, variables)?;
    if rows.len() < minimum {
        return Err(Error::invalid(format!(
            "{} days are complete for every variable; classification needs at least {minimum}",
            rows.len()
        )));
    }
    let classes = ascending_classification(&rows, k)?;
    Ok(RepresentativeDays {
        per_variable,
        joint: JointClasses {
            variables: variables.to_vec(),
            days,
            day_indices,
            classes,
        },
    })
}

/// One bound on a daily indicator. Infinite bounds are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub variable: WeatherVariable,
    pub kind: IndicatorKind,
    pub min: f64,
    pub max: f64,
}

/// What to look for: a window length plus numeric predicates, or (when no
/// predicate is given) variables whose classification picks typical windows.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceCriteria {
    pub length: usize,
    pub predicates: Vec<Predicate>,
    /// Fallback classification variables when `predicates` is empty.
    pub class_variables: Vec<WeatherVariable>,
    /// Keep only the best window of any set that overlaps.
    pub suppress_overlaps: bool,
}

/// One matching window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMatch {
    pub start: NaiveDate,
    /// Day index of the window start in the source series.
    pub start_index: usize,
    pub length: usize,
    /// Window mean of each predicate's indicator, in predicate order.
    pub achieved: Vec<f64>,
    /// Normalized distance from the predicate midpoints; lower is closer to
    /// the center of every requested interval.
    pub score: f64,
}

/// Sliding-window search over complete consecutive days.
///
/// Windows where every predicate holds are returned ranked by `score`
/// ascending. Without predicates, the selected variables are classified and
/// each class contributes the window starting at a day of its profile,
/// ranked by class frequency.
pub fn search_sequences(series: &WeatherSeries, criteria: &SequenceCriteria) -> Result<Vec<SequenceMatch>> {
    if criteria.length == 0 {
        return Err(Error::invalid("window length must be at least 1 day".to_string()));
    }
    if criteria.predicates.is_empty() {
        return class_windows(series, criteria);
    }
    for p in &criteria.predicates {
        if p.min > p.max {
            return Err(Error::invalid(format!(
                "empty predicate interval [{}, {}]",
                p.min, p.max
            )));
        }
    }
    // Daily indicator values keyed by date, one map per predicate.
    let mut daily: Vec<BTreeMap<NaiveDate, f64>> = Vec::with_capacity(criteria.predicates.len());
    for p in &criteria.predicates {
        let ind = series.daily_indicators(p.variable, p.kind)?;
        daily.push(ind.days.iter().copied().zip(ind.values.iter().copied()).collect());
    }

    let days = series.days();
    let l = criteria.length;
    let mut matches = Vec::new();
    if days.len() < l {
        return Ok(matches);
    }
    'window: for start in 0..=days.len() - l {
        // The window must be consecutive calendar days...
        for off in 1..l {
            if days[start + off - 1].succ_opt() != Some(days[start + off]) {
                continue 'window;
            }
        }
        // ...with every indicator available on every day.
        let mut achieved = Vec::with_capacity(criteria.predicates.len());
        let mut score = 0.0;
        for (p, map) in criteria.predicates.iter().zip(&daily) {
            let mut sum = 0.0;
            for off in 0..l {
                match map.get(&days[start + off]) {
                    Some(v) => sum += v,
                    None => continue 'window,
                }
            }
            let mean = sum / l as f64;
            if mean < p.min || mean > p.max {
                continue 'window;
            }
            achieved.push(mean);
            if p.min.is_finite() && p.max.is_finite() && p.max > p.min {
                let mid = 0.5 * (p.min + p.max);
                let half = 0.5 * (p.max - p.min);
                score += ((mean - mid) / half).abs();
            }
        }
        matches.push(SequenceMatch {
            start: days[start],
            start_index: start,
            length: l,
            achieved,
            score: score / criteria.predicates.len() as f64,
        });
    }
    matches.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .expect("finite scores")
            .then(a.start_index.cmp(&b.start_index))
    });
    if criteria.suppress_overlaps {
        matches = drop_overlaps(matches, l);
    }
    Ok(matches)
}

/// Classification fallback: windows are classed on the concatenated factor
/// scores of their days, and each class returns its representative window.
fn class_windows(series: &WeatherSeries, criteria: &SequenceCriteria) -> Result<Vec<SequenceMatch>> {
    if criteria.class_variables.is_empty() {
        return Err(Error::invalid(
            "sequence search needs numeric predicates or classification variables".to_string(),
        ));
    }
    let (day_indices, days, rows) = joint_scores(series, criteria.class_variables.as_slice())?;
    let l = criteria.length;
    // Windows of L consecutive calendar days that are all classified.
    let mut starts = Vec::new();
    let mut features = Vec::new();
    if days.len() >= l {
        'window: for start in 0..=days.len() - l {
            let mut feature = Vec::with_capacity(l * rows[0].len());
            for off in 0..l {
                if off > 0
                    && (day_indices[start + off] != day_indices[start + off - 1] + 1
                        || days[start + off - 1].succ_opt() != Some(days[start + off]))
                {
                    continue 'window;
                }
                feature.extend_from_slice(&rows[start + off]);
            }
            starts.push(start);
            features.push(feature);
        }
    }
    if features.len() < 2 {
        return Ok(Vec::new());
    }
    let k = if features.len() < 4 { Some(2) } else { None };
    let classes = ascending_classification(&features, k)?;
    let mut out: Vec<SequenceMatch> = classes
        .iter()
        .map(|c| {
            let start = starts[c.representative];
            SequenceMatch {
                start: days[start],
                start_index: day_indices[start],
                length: l,
                achieved: Vec::new(),
                // Frequent classes first once sorted by ascending score.
                score: 1.0 - c.frequency,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .expect("finite scores")
            .then(a.start_index.cmp(&b.start_index))
    });
    if criteria.suppress_overlaps {
        out = drop_overlaps(out, l);
    }
    Ok(out)
}

/// Keeps the first (best-ranked) window of every overlapping group.
fn drop_overlaps(ranked: Vec<SequenceMatch>, length: usize) -> Vec<SequenceMatch> {
    let mut kept: Vec<SequenceMatch> = Vec::new();
    for m in ranked {
        if kept
            .iter()
            .all(|k| m.start_index + length <= k.start_index || k.start_index + length <= m.start_index)
        {
            kept.push(m);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Distribution;

    use crate::weather::Site;

    fn site() -> Site {
        Site::new("test", -21.0, 55.5, 50.0).unwrap()
    }

    fn day(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn toy_two_column_covariance_eigenstructure() {
        // Four points whose sample covariance is [[2,1],[1,2]]: eigenvalues
        // 3 and 1, first direction along (1,1)/sqrt(2).
        let a = 1.5;
        let b = 0.75f64.sqrt();
        let rows = vec![
            vec![a, a],
            vec![-a, -a],
            vec![b, -b],
            vec![-b, b],
        ];
        let cxx: f64 = rows.iter().map(|r| r[0] * r[0]).sum::<f64>() / 3.0;
        let cxy: f64 = rows.iter().map(|r| r[0] * r[1]).sum::<f64>() / 3.0;
        assert!((cxx - 2.0).abs() < 1e-12 && (cxy - 1.0).abs() < 1e-12);

        let pca = pca_matrix(&rows, 0.90, Scaling::Covariance).unwrap();
        let total = 4.0;
        assert!((pca.explained[0] - 3.0 / total).abs() < 1e-9);
        assert!((pca.explained[1] - 1.0 / total).abs() < 1e-9);
        let inv = 1.0 / 2.0f64.sqrt();
        assert!((pca.directions[0][0] - inv).abs() < 1e-9);
        assert!((pca.directions[0][1] - inv).abs() < 1e-9);
    }

    #[test]
    fn rank_one_data_loads_on_a_single_component() {
        // Days on a line in profile space.
        let base: Vec<f64> = (0..24).map(|h| (h as f64 / 24.0).sin()).collect();
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| base.iter().map(|b| b * (i as f64 + 1.0)).collect())
            .collect();
        let pca = pca_matrix(&rows, 0.90, Scaling::Covariance).unwrap();
        assert!((pca.explained[0] - 1.0).abs() < 1e-9);
        assert_eq!(pca.retained, 1);
    }

    #[test]
    fn explained_fractions_are_non_increasing_and_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let rows: Vec<Vec<f64>> = (0..30)
                .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let pca = pca_matrix(&rows, 0.90, Scaling::Correlation).unwrap();
            for w in pca.explained.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
            let sum: f64 = pca.explained.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn reconstruction_from_all_components_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..24).map(|_| rng.random_range(0.0..100.0)).collect())
            .collect();
        for scaling in [Scaling::Correlation, Scaling::Covariance] {
            let pca = pca_matrix(&rows, 0.90, scaling).unwrap();
            let back = pca.reconstruct();
            let mut num = 0.0;
            let mut den = 0.0;
            for (orig, rec) in rows.iter().zip(&back) {
                for (o, r) in orig.iter().zip(rec) {
                    num += (o - r).powi(2);
                    den += o.powi(2);
                }
            }
            assert!((num / den).sqrt() < 1e-8);
        }
    }

    #[test]
    fn zero_variance_column_is_tolerated_and_zero_matrix_rejected() {
        let rows = vec![
            vec![1.0, 7.0, 2.0],
            vec![2.0, 7.0, 1.0],
            vec![3.0, 7.0, 3.0],
        ];
        let pca = pca_matrix(&rows, 0.90, Scaling::Correlation).unwrap();
        assert_eq!(pca.scale[1], 1.0);
        let flat = vec![vec![5.0, 5.0], vec![5.0, 5.0]];
        assert!(matches!(
            pca_matrix(&flat, 0.90, Scaling::Correlation),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn two_separated_clouds_cut_automatically_into_two_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut scores = Vec::new();
        for i in 0..30 {
            let center = if i < 15 { 0.0 } else { 10.0 };
            scores.push(vec![
                center + rng.random_range(-0.5..0.5),
                center + rng.random_range(-0.5..0.5),
            ]);
        }
        let classes = ascending_classification(&scores, None).unwrap();
        assert_eq!(classes.len(), 2);
        let mut sizes: Vec<usize> = classes.iter().map(|c| c.members.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![15, 15]);
        for class in &classes {
            let first_cloud = class.members[0] < 15;
            assert!(class.members.iter().all(|&m| (m < 15) == first_cloud));
            assert!(class.members.contains(&class.representative));
        }
        let freq: f64 = classes.iter().map(|c| c.frequency).sum();
        assert!((freq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_cut_gives_uniform_frequencies() {
        let scores: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let classes = ascending_classification(&scores, Some(6)).unwrap();
        assert_eq!(classes.len(), 6);
        for c in &classes {
            assert!((c.frequency - 1.0 / 6.0).abs() < 1e-12);
            assert_eq!(c.members.len(), 1);
            assert_eq!(c.representative, c.members[0]);
        }
    }

    #[test]
    fn three_blobs_recovered_over_many_seeds() {
        let centers = [[0.0, 0.0], [1.0, 0.0], [0.5, 3.0f64.sqrt() / 2.0]];
        let mut agree_total = 0usize;
        let mut n_total = 0usize;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = rand_distr::Normal::new(0.0, 0.1).unwrap();
            let mut scores = Vec::new();
            let mut truth = Vec::new();
            for (label, c) in centers.iter().enumerate() {
                for _ in 0..20 {
                    scores.push(vec![c[0] + normal.sample(&mut rng), c[1] + normal.sample(&mut rng)]);
                    truth.push(label);
                }
            }
            let classes = ascending_classification(&scores, Some(3)).unwrap();
            for class in classes {
                // Majority label of the class.
                let mut counts = [0usize; 3];
                for &m in &class.members {
                    counts[truth[m]] += 1;
                }
                agree_total += counts.iter().max().unwrap();
                n_total += class.members.len();
            }
        }
        let agreement = agree_total as f64 / n_total as f64;
        assert!(agreement >= 0.95, "agreement {agreement}");
    }

    #[test]
    fn classification_is_invariant_to_uniform_score_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let scores: Vec<Vec<f64>> = (0..25)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let scaled: Vec<Vec<f64>> = scores
            .iter()
            .map(|s| s.iter().map(|v| v * 37.0).collect())
            .collect();
        let a = ascending_classification(&scores, Some(4)).unwrap();
        let b = ascending_classification(&scaled, Some(4)).unwrap();
        let members: Vec<&Vec<usize>> = a.iter().map(|c| &c.members).collect();
        let members_scaled: Vec<&Vec<usize>> = b.iter().map(|c| &c.members).collect();
        assert_eq!(members, members_scaled);
    }

    /// Radiation series with three planted day shapes, cycling with mild
    /// amplitude noise.
    fn planted_radiation_series(n_days: usize, seed: u64) -> (WeatherSeries, Vec<usize>, [Vec<f64>; 3]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bell = |h: f64, peak: f64| -> f64 {
            let x = (h - 12.0) / 3.5;
            peak * (-0.5 * x * x).exp()
        };
        // Overcast flat-ish day, morning-loaded day, clear day.
        let shapes: [Vec<f64>; 3] = [
            (0..24)
                .map(|h| if (7..=17).contains(&h) { 150.0 } else { 0.0 })
                .collect(),
            (0..24)
                .map(|h| {
                    let hf = h as f64;
                    if (6..=17).contains(&h) {
                        bell(hf - 2.5, 700.0)
                    } else {
                        0.0
                    }
                })
                .collect(),
            (0..24)
                .map(|h| {
                    let hf = h as f64;
                    if (6..=18).contains(&h) {
                        bell(hf, 1000.0)
                    } else {
                        0.0
                    }
                })
                .collect(),
        ];
        let mut series =
            WeatherSeries::with_consecutive_days(site(), day(2003, 1, 1), n_days).unwrap();
        let mut labels = Vec::with_capacity(n_days);
        let mut ghi = Vec::with_capacity(n_days * 24);
        for d in 0..n_days {
            let label = d % 3;
            labels.push(label);
            let amp = 1.0 + rng.random_range(-0.05..0.05);
            for h in 0..24 {
                ghi.push((shapes[label][h] * amp).min(1500.0));
            }
        }
        series
            .set_column_full(WeatherVariable::GlobalHorizontal, ghi)
            .unwrap();
        (series, labels, shapes)
    }

    #[test]
    fn planted_radiation_shapes_have_matching_representatives() {
        let (series, labels, shapes) = planted_radiation_series(90, 7);
        let result =
            representative_days(&series, &[WeatherVariable::GlobalHorizontal], Some(3)).unwrap();
        let var = &result.per_variable[0];
        assert_eq!(var.classes.len(), 3);
        let freq: f64 = var.classes.iter().map(|c| c.frequency).sum();
        assert!((freq - 1.0).abs() < 1e-12);

        let matrix = day_profile_matrix(&series, WeatherVariable::GlobalHorizontal).unwrap();
        let mut seen = [false; 3];
        for class in &var.classes {
            let rep_profile = &matrix.rows[class.representative];
            // Representative must correlate > 0.95 with exactly its planted
            // shape; membership must agree with the plant labels.
            let rep_label = labels[class.representative];
            let r = crate::stats::pearson(rep_profile, &shapes[rep_label]).unwrap();
            assert!(r > 0.95, "correlation {r}");
            assert!(class.members.iter().all(|&m| labels[m] == rep_label));
            seen[rep_label] = true;
        }
        assert_eq!(seen, [true; 3]);
    }

    #[test]
    fn joint_mode_classifies_common_days() {
        let (mut series, _, _) = planted_radiation_series(60, 8);
        let n = series.len();
        // Day-to-day drift so the profile matrix is not rank-deficient.
        let temp: Vec<f64> = (0..n)
            .map(|i| {
                24.0 + 0.05 * (i / 24) as f64
                    + 3.0 * (std::f64::consts::TAU * (i % 24) as f64 / 24.0).sin()
            })
            .collect();
        series.set_column_full(WeatherVariable::Temperature, temp).unwrap();
        // Punch a hole in the temperature of day 5: joint mode must skip it.
        series.set_value(WeatherVariable::Temperature, 5 * 24 + 3, None).unwrap();
        let result = representative_days(
            &series,
            &[WeatherVariable::GlobalHorizontal, WeatherVariable::Temperature],
            Some(3),
        )
        .unwrap();
        assert_eq!(result.joint.days.len(), 59);
        assert!(!result.joint.day_indices.contains(&5));
        let freq: f64 = result.joint.classes.iter().map(|c| c.frequency).sum();
        assert!((freq - 1.0).abs() < 1e-12);
    }

    /// Temperature series with one hot 5-day stretch centered on mean 31.
    fn heatwave_series() -> WeatherSeries {
        let n_days = 40;
        let mut series =
            WeatherSeries::with_consecutive_days(site(), day(2003, 1, 1), n_days).unwrap();
        let mut temp = Vec::with_capacity(n_days * 24);
        for d in 0..n_days {
            let base = if (20..25).contains(&d) { 31.0 } else { 25.0 };
            for h in 0..24 {
                temp.push(base + 2.0 * (std::f64::consts::TAU * h as f64 / 24.0).sin());
            }
        }
        series.set_column_full(WeatherVariable::Temperature, temp).unwrap();
        series
    }

    #[test]
    fn unique_hot_window_is_found_exactly() {
        let series = heatwave_series();
        let criteria = SequenceCriteria {
            length: 5,
            predicates: vec![Predicate {
                variable: WeatherVariable::Temperature,
                kind: IndicatorKind::Mean,
                min: 30.0,
                max: 32.0,
            }],
            class_variables: Vec::new(),
            suppress_overlaps: false,
        };
        let found = search_sequences(&series, &criteria).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].start, day(2003, 1, 21));
        assert!((found[0].achieved[0] - 31.0).abs() < 1e-9);
        assert!(found[0].score < 1e-9);
    }

    #[test]
    fn unbounded_predicates_match_every_window() {
        let series = heatwave_series();
        let criteria = SequenceCriteria {
            length: 5,
            predicates: vec![Predicate {
                variable: WeatherVariable::Temperature,
                kind: IndicatorKind::Mean,
                min: f64::NEG_INFINITY,
                max: f64::INFINITY,
            }],
            class_variables: Vec::new(),
            suppress_overlaps: false,
        };
        let found = search_sequences(&series, &criteria).unwrap();
        assert_eq!(found.len(), 40 - 5 + 1);
    }

    #[test]
    fn stricter_criteria_return_a_subset() {
        let series = heatwave_series();
        let loose = SequenceCriteria {
            length: 3,
            predicates: vec![Predicate {
                variable: WeatherVariable::Temperature,
                kind: IndicatorKind::Mean,
                min: 24.0,
                max: 32.0,
            }],
            class_variables: Vec::new(),
            suppress_overlaps: false,
        };
        let mut strict = loose.clone();
        strict.predicates[0].min = 30.0;
        let loose_found = search_sequences(&series, &loose).unwrap();
        let strict_found = search_sequences(&series, &strict).unwrap();
        assert!(!strict_found.is_empty());
        let loose_starts: Vec<usize> = loose_found.iter().map(|m| m.start_index).collect();
        for m in &strict_found {
            assert!(loose_starts.contains(&m.start_index));
        }
    }

    #[test]
    fn overlap_suppression_keeps_disjoint_windows() {
        let series = heatwave_series();
        let criteria = SequenceCriteria {
            length: 5,
            predicates: vec![Predicate {
                variable: WeatherVariable::Temperature,
                kind: IndicatorKind::Mean,
                min: f64::NEG_INFINITY,
                max: f64::INFINITY,
            }],
            class_variables: Vec::new(),
            suppress_overlaps: true,
        };
        let found = search_sequences(&series, &criteria).unwrap();
        for (i, a) in found.iter().enumerate() {
            for b in &found[i + 1..] {
                let disjoint = a.start_index + 5 <= b.start_index
                    || b.start_index + 5 <= a.start_index;
                assert!(disjoint);
            }
        }
        assert_eq!(found.len(), 8);
    }

    #[test]
    fn day_gap_breaks_windows() {
        let days = vec![day(2003, 1, 1), day(2003, 1, 2), day(2003, 1, 5), day(2003, 1, 6)];
        let mut series = WeatherSeries::new(site(), days).unwrap();
        let n = series.len();
        series
            .set_column_full(WeatherVariable::Temperature, vec![25.0; n])
            .unwrap();
        let criteria = SequenceCriteria {
            length: 2,
            predicates: vec![Predicate {
                variable: WeatherVariable::Temperature,
                kind: IndicatorKind::Mean,
                min: 0.0,
                max: 50.0,
            }],
            class_variables: Vec::new(),
            suppress_overlaps: false,
        };
        let found = search_sequences(&series, &criteria).unwrap();
        let starts: Vec<NaiveDate> = found.iter().map(|m| m.start).collect();
        assert_eq!(starts, vec![day(2003, 1, 1), day(2003, 1, 5)]);
    }

    #[test]
    fn classification_fallback_returns_typical_windows() {
        let (series, labels, _) = planted_radiation_series(60, 10);
        let criteria = SequenceCriteria {
            length: 1,
            predicates: Vec::new(),
            class_variables: vec![WeatherVariable::GlobalHorizontal],
            suppress_overlaps: false,
        };
        let found = search_sequences(&series, &criteria).unwrap();
        // The three planted shapes alternate, so the class representatives
        // cover all three labels.
        let mut seen: Vec<usize> = found.iter().map(|m| labels[m.start_index]).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen, vec![0, 1, 2]);
    }
}
