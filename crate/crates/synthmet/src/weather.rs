//! Hourly multivariate weather series and their CSV encoding.
//!
//! A series holds whole days only. Days are strictly ascending but need not
//! be contiguous, so a seasonal subset of a measurement campaign keeps its
//! real calendar dates. Within a day all 24 hours are present as slots;
//! individual values may be missing.
//!
//! The file format is plain UTF-8 CSV with LF line endings:
//!
//! ```text
//! #site,Saint-Pierre,lat,-21.32,lon,55.48,alt,25
//! #start,2003-01-01T00:00
//! #step,1h
//! timestamp,temp_C,rh_pct,wind_ms,winddir_deg,ghi_Whm2,dhi_Whm2,bni_Whm2,sunfrac,okta
//! 2003-01-01T00:00,25.1,82,3.4,120,0,0,0,,
//! ```
//!
//! An empty field is a missing value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation site. Altitude is metres above sea level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

impl Site {
    pub fn new(name: &str, latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Result<Site> {
        let site = Site {
            name: name.to_string(),
            latitude_deg,
            longitude_deg,
            altitude_m,
        };
        site.validate()?;
        Ok(site)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(',') || self.name.contains('\n') {
            return Err(Error::invalid(format!(
                "site name {:?} must be non-empty and free of commas and newlines",
                self.name
            )));
        }
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(Error::invalid(format!(
                "latitude {} out of [-90, 90]",
                self.latitude_deg
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude_deg) {
            return Err(Error::invalid(format!(
                "longitude {} out of [-180, 180]",
                self.longitude_deg
            )));
        }
        if !(-500.0..=9000.0).contains(&self.altitude_m) {
            return Err(Error::invalid(format!(
                "altitude {} m out of [-500, 9000]",
                self.altitude_m
            )));
        }
        Ok(())
    }
}

/// The weather quantities a series can carry, in file column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WeatherVariable {
    #[serde(rename = "temp_C")]
    Temperature,
    #[serde(rename = "rh_pct")]
    RelativeHumidity,
    #[serde(rename = "wind_ms")]
    WindSpeed,
    #[serde(rename = "winddir_deg")]
    WindDirection,
    #[serde(rename = "ghi_Whm2")]
    GlobalHorizontal,
    #[serde(rename = "dhi_Whm2")]
    DiffuseHorizontal,
    #[serde(rename = "bni_Whm2")]
    BeamNormal,
    #[serde(rename = "sunfrac")]
    SunshineFraction,
    #[serde(rename = "okta")]
    Okta,
}

impl WeatherVariable {
    pub const ALL: [WeatherVariable; 9] = [
        WeatherVariable::Temperature,
        WeatherVariable::RelativeHumidity,
        WeatherVariable::WindSpeed,
        WeatherVariable::WindDirection,
        WeatherVariable::GlobalHorizontal,
        WeatherVariable::DiffuseHorizontal,
        WeatherVariable::BeamNormal,
        WeatherVariable::SunshineFraction,
        WeatherVariable::Okta,
    ];

    /// Column name in the CSV format.
    pub fn column(&self) -> &'static str {
        match self {
            WeatherVariable::Temperature => "temp_C",
            WeatherVariable::RelativeHumidity => "rh_pct",
            WeatherVariable::WindSpeed => "wind_ms",
            WeatherVariable::WindDirection => "winddir_deg",
            WeatherVariable::GlobalHorizontal => "ghi_Whm2",
            WeatherVariable::DiffuseHorizontal => "dhi_Whm2",
            WeatherVariable::BeamNormal => "bni_Whm2",
            WeatherVariable::SunshineFraction => "sunfrac",
            WeatherVariable::Okta => "okta",
        }
    }

    pub fn from_column(name: &str) -> Option<WeatherVariable> {
        WeatherVariable::ALL
            .iter()
            .copied()
            .find(|v| v.column() == name)
    }

    /// Inclusive physical range a stored value must lie in.
    ///
    /// Radiation is hour-integrated (Wh/m² per hour slot), so the upper
    /// bounds sit slightly above the solar constant to leave headroom for
    /// cloud-edge enhancement.
    pub fn range(&self) -> (f64, f64) {
        match self {
            WeatherVariable::Temperature => (-90.0, 60.0),
            WeatherVariable::RelativeHumidity => (0.0, 100.0),
            WeatherVariable::WindSpeed => (0.0, 120.0),
            WeatherVariable::WindDirection => (0.0, 360.0),
            WeatherVariable::GlobalHorizontal => (0.0, 1500.0),
            WeatherVariable::DiffuseHorizontal => (0.0, 1200.0),
            WeatherVariable::BeamNormal => (0.0, 1500.0),
            WeatherVariable::SunshineFraction => (0.0, 1.0),
            WeatherVariable::Okta => (0.0, 8.0),
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        let (lo, hi) = self.range();
        value.is_finite() && value >= lo && value <= hi
    }
}

impl fmt::Display for WeatherVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for WeatherVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<WeatherVariable> {
        WeatherVariable::from_column(s)
            .ok_or_else(|| Error::invalid(format!("unknown weather variable {s:?}")))
    }
}

/// Hourly multivariate series over whole days.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    pub site: Site,
    days: Vec<NaiveDate>,
    columns: BTreeMap<WeatherVariable, Vec<Option<f64>>>,
}

pub const HOURS_PER_DAY: usize = 24;

impl WeatherSeries {
    /// Empty series with all-missing columns for `days`.
    ///
    /// `days` must be strictly ascending.
    pub fn new(site: Site, days: Vec<NaiveDate>) -> Result<WeatherSeries> {
        site.validate()?;
        for pair in days.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::invalid(format!(
                    "days must be strictly ascending, got {} after {}",
                    pair[1], pair[0]
                )));
            }
        }
        let n = days.len() * HOURS_PER_DAY;
        let columns = WeatherVariable::ALL
            .iter()
            .map(|&v| (v, vec![None; n]))
            .collect();
        Ok(WeatherSeries {
            site,
            days,
            columns,
        })
    }

    /// Consecutive days starting at `start`.
    pub fn with_consecutive_days(site: Site, start: NaiveDate, n_days: usize) -> Result<WeatherSeries> {
        let days = (0..n_days)
            .map(|i| start + chrono::Duration::days(i as i64))
            .collect();
        WeatherSeries::new(site, days)
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn n_days(&self) -> usize {
        self.days.len()
    }

    /// Number of hourly slots (24 per day).
    pub fn len(&self) -> usize {
        self.days.len() * HOURS_PER_DAY
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn column(&self, var: WeatherVariable) -> &[Option<f64>] {
        &self.columns[&var]
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        let day = self.days[index / HOURS_PER_DAY];
        let hour = (index % HOURS_PER_DAY) as u32;
        day.and_hms_opt(hour, 0, 0).expect("hour < 24")
    }

    pub fn timestamps(&self) -> impl Iterator<Item = NaiveDateTime> + '_ {
        (0..self.len()).map(|i| self.timestamp(i))
    }

    /// Replaces a whole column. Values must be in range or missing.
    pub fn set_column(&mut self, var: WeatherVariable, values: Vec<Option<f64>>) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::invalid(format!(
                "column {var} has {} values, series has {} slots",
                values.len(),
                self.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if let Some(x) = v {
                if !var.contains(*x) {
                    return Err(Error::invalid(format!(
                        "{var} value {x} at {} outside physical range {:?}",
                        self.timestamp(i),
                        var.range()
                    )));
                }
            }
        }
        self.columns.insert(var, values);
        Ok(())
    }

    /// Replaces a column with fully present values.
    pub fn set_column_full(&mut self, var: WeatherVariable, values: Vec<f64>) -> Result<()> {
        self.set_column(var, values.into_iter().map(Some).collect())
    }

    pub fn value(&self, var: WeatherVariable, index: usize) -> Option<f64> {
        self.columns[&var][index]
    }

    pub fn set_value(&mut self, var: WeatherVariable, index: usize, value: Option<f64>) -> Result<()> {
        if let Some(x) = value {
            if !var.contains(x) {
                return Err(Error::invalid(format!(
                    "{var} value {x} outside physical range {:?}",
                    var.range()
                )));
            }
        }
        self.columns.get_mut(&var).expect("all columns exist")[index] = value;
        Ok(())
    }

    /// True when `var` has at least one present value.
    pub fn has_data(&self, var: WeatherVariable) -> bool {
        self.columns[&var].iter().any(|v| v.is_some())
    }

    /// The 24 slots of day `d` for `var`.
    pub fn day_slice(&self, var: WeatherVariable, d: usize) -> &[Option<f64>] {
        &self.columns[&var][d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY]
    }

    /// Days with `first <= day <= last`, keeping their calendar dates.
    pub fn slice_dates(&self, first: NaiveDate, last: NaiveDate) -> Result<WeatherSeries> {
        if last < first {
            return Err(Error::invalid(format!("empty date range {first}..{last}")));
        }
        let keep: Vec<usize> = (0..self.days.len())
            .filter(|&d| self.days[d] >= first && self.days[d] <= last)
            .collect();
        self.subset(&keep)
    }

    /// Days whose calendar month is in `months` (1-12). Order of `months`
    /// does not matter; a season crossing the new year keeps chronology.
    pub fn slice_months(&self, months: &[u32]) -> Result<WeatherSeries> {
        for &m in months {
            if !(1..=12).contains(&m) {
                return Err(Error::invalid(format!("month {m} out of 1..=12")));
            }
        }
        let keep: Vec<usize> = (0..self.days.len())
            .filter(|&d| months.contains(&self.days[d].month()))
            .collect();
        self.subset(&keep)
    }

    /// New series made of the given day indices (must be strictly ascending).
    pub fn subset(&self, day_indices: &[usize]) -> Result<WeatherSeries> {
        if day_indices.is_empty() {
            return Err(Error::invalid("selection contains no days".to_string()));
        }
        let days: Vec<NaiveDate> = day_indices.iter().map(|&d| self.days[d]).collect();
        let mut out = WeatherSeries::new(self.site.clone(), days)?;
        for (&var, col) in &self.columns {
            let mut values = Vec::with_capacity(day_indices.len() * HOURS_PER_DAY);
            for &d in day_indices {
                values.extend_from_slice(&col[d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY]);
            }
            out.columns.insert(var, values);
        }
        Ok(out)
    }

    /// Parses the CSV format described in the module docs.
    pub fn parse_csv(text: &str, origin: &Path) -> Result<WeatherSeries> {
        let mut lines = text.lines().enumerate();
        let perr = |line: usize, msg: String| Error::parse(origin, line, msg);

        let (lno, site_line) = lines
            .next()
            .ok_or_else(|| perr(0, "empty file".to_string()))?;
        let site = parse_site_line(site_line).map_err(|m| perr(lno + 1, m))?;

        let (lno, start_line) = lines
            .next()
            .ok_or_else(|| perr(0, "missing #start line".to_string()))?;
        let declared_start = parse_tagged_line(start_line, "#start")
            .and_then(|s| parse_hour_timestamp(s))
            .map_err(|m| perr(lno + 1, m))?;

        let (lno, step_line) = lines
            .next()
            .ok_or_else(|| perr(0, "missing #step line".to_string()))?;
        let step = parse_tagged_line(step_line, "#step").map_err(|m| perr(lno + 1, m))?;
        if step != "1h" {
            return Err(perr(lno + 1, format!("unsupported step {step:?}, only 1h")));
        }

        let (lno, header) = lines
            .next()
            .ok_or_else(|| perr(0, "missing column header".to_string()))?;
        let mut fields = header.split(',');
        if fields.next() != Some("timestamp") {
            return Err(perr(lno + 1, "first column must be timestamp".to_string()));
        }
        let vars: Vec<WeatherVariable> = fields
            .map(|name| {
                WeatherVariable::from_column(name)
                    .ok_or_else(|| perr(lno + 1, format!("unknown column {name:?}")))
            })
            .collect::<Result<_>>()?;
        {
            let mut seen = std::collections::BTreeSet::new();
            for v in &vars {
                if !seen.insert(*v) {
                    return Err(perr(lno + 1, format!("duplicate column {v}")));
                }
            }
        }

        let mut days: Vec<NaiveDate> = Vec::new();
        let mut cols: Vec<Vec<Option<f64>>> = vec![Vec::new(); vars.len()];
        let mut expected: Option<NaiveDateTime> = None;

        for (lno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let ts_text = fields.next().unwrap_or("");
            let ts = parse_hour_timestamp(ts_text).map_err(|m| perr(lno + 1, m))?;

            match expected {
                Some(want) => {
                    if ts != want {
                        if want.hour() == 0 && ts.hour() == 0 && ts.date() > want.date() {
                            // Gap of whole days is allowed between complete days.
                        } else {
                            return Err(perr(
                                lno + 1,
                                format!("expected {want}, got {ts}; days must be complete and in order"),
                            ));
                        }
                    }
                }
                None => {
                    if ts != declared_start {
                        return Err(perr(
                            lno + 1,
                            format!("first row {ts} does not match #start {declared_start}"),
                        ));
                    }
                    if ts.hour() != 0 {
                        return Err(perr(lno + 1, format!("series must start at 00:00, got {ts}")));
                    }
                }
            }
            if ts.hour() == 0 {
                if let Some(last) = days.last() {
                    if ts.date() <= *last {
                        return Err(perr(lno + 1, format!("day {} repeats or goes backwards", ts.date())));
                    }
                }
                days.push(ts.date());
            }
            expected = Some(ts + chrono::Duration::hours(1));

            let mut count = 0;
            for (k, field) in fields.enumerate() {
                if k >= vars.len() {
                    count = k + 1;
                    break;
                }
                count = k + 1;
                let value = if field.is_empty() {
                    None
                } else {
                    let x: f64 = field
                        .parse()
                        .map_err(|_| perr(lno + 1, format!("bad number {field:?} in column {}", vars[k])))?;
                    if !vars[k].contains(x) {
                        return Err(perr(
                            lno + 1,
                            format!("{} value {x} outside physical range {:?}", vars[k], vars[k].range()),
                        ));
                    }
                    Some(x)
                };
                cols[k].push(value);
            }
            if count != vars.len() {
                return Err(perr(
                    lno + 1,
                    format!("expected {} data fields, got {count}", vars.len()),
                ));
            }
        }

        if days.is_empty() {
            return Err(perr(0, "no data rows".to_string()));
        }
        let expect_len = days.len() * HOURS_PER_DAY;
        if cols[0].len() != expect_len {
            return Err(perr(
                0,
                format!(
                    "last day is incomplete: {} rows, days must have all 24 hours",
                    cols[0].len()
                ),
            ));
        }

        let mut series = WeatherSeries::new(site, days)?;
        for (k, var) in vars.iter().enumerate() {
            series.columns.insert(*var, std::mem::take(&mut cols[k]));
        }
        Ok(series)
    }

    pub fn read_csv(path: &Path) -> Result<WeatherSeries> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        WeatherSeries::parse_csv(&text, path)
    }

    /// Serialises to the CSV format. Writing then parsing reproduces the
    /// series exactly, and the bytes are a pure function of the content.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "#site,{},lat,{},lon,{},alt,{}\n",
            self.site.name,
            fmt_num(self.site.latitude_deg),
            fmt_num(self.site.longitude_deg),
            fmt_num(self.site.altitude_m)
        ));
        out.push_str(&format!("#start,{}\n", fmt_ts(self.timestamp(0))));
        out.push_str("#step,1h\n");
        out.push_str("timestamp");
        for var in WeatherVariable::ALL {
            out.push(',');
            out.push_str(var.column());
        }
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&fmt_ts(self.timestamp(i)));
            for var in WeatherVariable::ALL {
                out.push(',');
                if let Some(x) = self.columns[&var][i] {
                    out.push_str(&fmt_num(x));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Per-day reduction of one hourly variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndicatorKind {
    Mean,
    Min,
    Max,
    /// Daily max minus daily min.
    Amplitude,
    /// Plain sum over the 24 hours; only meaningful for hour-integrated
    /// energy (radiation) and sunshine duration.
    DailyTotal,
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IndicatorKind::Mean => "mean",
            IndicatorKind::Min => "min",
            IndicatorKind::Max => "max",
            IndicatorKind::Amplitude => "amplitude",
            IndicatorKind::DailyTotal => "daily-total",
        };
        f.write_str(s)
    }
}

/// One value per complete day. Days with any missing hour are excluded and
/// reported in `excluded_days` instead of being interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyIndicator {
    pub variable: WeatherVariable,
    pub kind: IndicatorKind,
    pub days: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub excluded_days: Vec<NaiveDate>,
}

impl WeatherSeries {
    pub fn daily_indicators(&self, var: WeatherVariable, kind: IndicatorKind) -> Result<DailyIndicator> {
        if !self.has_data(var) {
            return Err(Error::NotFound(format!("series has no {var} data")));
        }
        if kind == IndicatorKind::DailyTotal
            && !matches!(
                var,
                WeatherVariable::GlobalHorizontal
                    | WeatherVariable::DiffuseHorizontal
                    | WeatherVariable::BeamNormal
                    | WeatherVariable::SunshineFraction
            )
        {
            return Err(Error::invalid(format!(
                "daily-total is only defined for radiation and sunshine, not {var}"
            )));
        }
        let mut out = DailyIndicator {
            variable: var,
            kind,
            days: Vec::new(),
            values: Vec::new(),
            excluded_days: Vec::new(),
        };
        for d in 0..self.n_days() {
            let slice = self.day_slice(var, d);
            if slice.iter().any(|v| v.is_none()) {
                out.excluded_days.push(self.days[d]);
                continue;
            }
            let vals: Vec<f64> = slice.iter().map(|v| v.unwrap()).collect();
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let value = match kind {
                IndicatorKind::Mean => vals.iter().sum::<f64>() / vals.len() as f64,
                IndicatorKind::Min => min,
                IndicatorKind::Max => max,
                IndicatorKind::Amplitude => max - min,
                IndicatorKind::DailyTotal => vals.iter().sum::<f64>(),
            };
            out.days.push(self.days[d]);
            out.values.push(value);
        }
        if out.values.is_empty() {
            return Err(Error::invalid(format!("no complete day of {var} data")));
        }
        Ok(out)
    }

    /// Joins series over disjoint, ordered day sets at the same site.
    pub fn concat(parts: &[&WeatherSeries]) -> Result<WeatherSeries> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::invalid("nothing to concatenate".to_string()))?;
        let mut days = Vec::new();
        let mut cols: BTreeMap<WeatherVariable, Vec<Option<f64>>> = WeatherVariable::ALL
            .iter()
            .map(|&v| (v, Vec::new()))
            .collect();
        for part in parts {
            if part.site != first.site {
                return Err(Error::invalid(format!(
                    "site mismatch: {} vs {}",
                    part.site.name, first.site.name
                )));
            }
            days.extend_from_slice(&part.days);
            for (&var, col) in &part.columns {
                cols.get_mut(&var).expect("all columns exist").extend_from_slice(col);
            }
        }
        let mut out = WeatherSeries::new(first.site.clone(), days)?;
        out.columns = cols;
        Ok(out)
    }
}

/// Canonical number formatting: round to 1e-6, then shortest decimal form.
pub fn fmt_num(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        // Avoid "-0".
        return "0".to_string();
    }
    format!("{r}")
}

fn fmt_ts(ts: NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M").to_string()
}

fn parse_hour_timestamp(s: &str) -> std::result::Result<NaiveDateTime, String> {
    let ts = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M")
        .map_err(|_| format!("bad timestamp {s:?}, want YYYY-MM-DDTHH:MM"))?;
    if ts.minute() != 0 {
        return Err(format!("timestamp {s} not on the hour"));
    }
    Ok(ts)
}

fn parse_tagged_line<'a>(line: &'a str, tag: &str) -> std::result::Result<&'a str, String> {
    let mut fields = line.split(',');
    if fields.next() != Some(tag) {
        return Err(format!("expected {tag} line, got {line:?}"));
    }
    fields.next().ok_or_else(|| format!("{tag} line has no value"))
}

fn parse_site_line(line: &str) -> std::result::Result<Site, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 8
        || fields[0] != "#site"
        || fields[2] != "lat"
        || fields[4] != "lon"
        || fields[6] != "alt"
    {
        return Err(format!(
            "site line must be #site,<name>,lat,<deg>,lon,<deg>,alt,<m>, got {line:?}"
        ));
    }
    let num = |s: &str, what: &str| -> std::result::Result<f64, String> {
        s.parse().map_err(|_| format!("bad {what} {s:?}"))
    };
    Site::new(
        fields[1],
        num(fields[3], "latitude")?,
        num(fields[5], "longitude")?,
        num(fields[7], "altitude")?,
    )
    .map_err(|e| e.to_string())
}

/// Day selection for fitting and description, also used as the period tag
/// stored in model library entries.
///
/// Text forms: `all`, `2003-01-01..2003-12-31` (inclusive dates) or
/// `months:11,12,1,2,3,4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PeriodSelector {
    All,
    Dates { first: NaiveDate, last: NaiveDate },
    Months(Vec<u32>),
}

impl PeriodSelector {
    pub fn apply(&self, series: &WeatherSeries) -> Result<WeatherSeries> {
        match self {
            PeriodSelector::All => Ok(series.clone()),
            PeriodSelector::Dates { first, last } => series.slice_dates(*first, *last),
            PeriodSelector::Months(months) => series.slice_months(months),
        }
    }
}

impl fmt::Display for PeriodSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeriodSelector::All => f.write_str("all"),
            PeriodSelector::Dates { first, last } => write!(f, "{first}..{last}"),
            PeriodSelector::Months(months) => {
                let list: Vec<String> = months.iter().map(|m| m.to_string()).collect();
                write!(f, "months:{}", list.join(","))
            }
        }
    }
}

impl FromStr for PeriodSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<PeriodSelector> {
        if s == "all" {
            return Ok(PeriodSelector::All);
        }
        if let Some(list) = s.strip_prefix("months:") {
            let months: Vec<u32> = list
                .split(',')
                .map(|m| {
                    m.parse::<u32>()
                        .ok()
                        .filter(|m| (1..=12).contains(m))
                        .ok_or_else(|| Error::invalid(format!("bad month {m:?} in period {s:?}")))
                })
                .collect::<Result<_>>()?;
            if months.is_empty() {
                return Err(Error::invalid(format!("period {s:?} lists no months")));
            }
            return Ok(PeriodSelector::Months(months));
        }
        if let Some((a, b)) = s.split_once("..") {
            let first = NaiveDate::parse_from_str(a, "%Y-%m-%d")
                .map_err(|_| Error::invalid(format!("bad date {a:?} in period {s:?}")))?;
            let last = NaiveDate::parse_from_str(b, "%Y-%m-%d")
                .map_err(|_| Error::invalid(format!("bad date {b:?} in period {s:?}")))?;
            if last < first {
                return Err(Error::invalid(format!("period {s:?} is empty")));
            }
            return Ok(PeriodSelector::Dates { first, last });
        }
        Err(Error::invalid(format!(
            "bad period {s:?}: want all, YYYY-MM-DD..YYYY-MM-DD or months:M,M,..."
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_site() -> Site {
        Site::new("Saint-Pierre", -21.32, 55.48, 25.0).unwrap()
    }

    fn day(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn filled_series(n_days: usize) -> WeatherSeries {
        let mut s =
            WeatherSeries::with_consecutive_days(test_site(), day(2003, 1, 1), n_days).unwrap();
        let n = s.len();
        s.set_column_full(
            WeatherVariable::Temperature,
            (0..n).map(|i| 24.0 + 0.125 * (i % 24) as f64).collect(),
        )
        .unwrap();
        s.set_column_full(
            WeatherVariable::WindSpeed,
            (0..n).map(|i| 2.0 + (i % 7) as f64 * 0.5).collect(),
        )
        .unwrap();
        s
    }

    #[test]
    fn site_rejects_bad_coordinates() {
        assert!(Site::new("x", 91.0, 0.0, 0.0).is_err());
        assert!(Site::new("x", 0.0, 200.0, 0.0).is_err());
        assert!(Site::new("a,b", 0.0, 0.0, 0.0).is_err());
        assert!(Site::new("x", -21.0, 55.0, 10000.0).is_err());
    }

    #[test]
    fn variable_roundtrips_column_names() {
        for v in WeatherVariable::ALL {
            assert_eq!(WeatherVariable::from_column(v.column()), Some(v));
        }
        assert_eq!(WeatherVariable::from_column("bogus"), None);
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let mut s = filled_series(1);
        assert!(s
            .set_value(WeatherVariable::RelativeHumidity, 0, Some(101.0))
            .is_err());
        assert!(s
            .set_value(WeatherVariable::WindSpeed, 0, Some(-0.1))
            .is_err());
        assert!(s
            .set_value(WeatherVariable::Temperature, 0, Some(f64::NAN))
            .is_err());
        assert!(s
            .set_value(WeatherVariable::Okta, 3, Some(8.0))
            .is_ok());
    }

    #[test]
    fn csv_roundtrip_preserves_values_and_missing() {
        let mut s = filled_series(2);
        s.set_value(WeatherVariable::Temperature, 5, None).unwrap();
        s.set_value(WeatherVariable::Okta, 30, Some(3.0)).unwrap();
        let text = s.to_csv();
        let back = WeatherSeries::parse_csv(&text, Path::new("mem")).unwrap();
        assert_eq!(s, back);
        // Writing again yields identical bytes.
        assert_eq!(text, back.to_csv());
    }

    #[test]
    fn csv_write_is_stable_after_one_rounding() {
        // Values finer than 1e-6 are rounded on the first write; after that
        // the text representation is a fixed point.
        let mut s = filled_series(1);
        s.set_value(WeatherVariable::Temperature, 0, Some(25.0 + 1.0 / 3.0))
            .unwrap();
        let text = s.to_csv();
        assert!(text.contains("25.333333"));
        let back = WeatherSeries::parse_csv(&text, Path::new("mem")).unwrap();
        assert_eq!(
            back.value(WeatherVariable::Temperature, 0),
            Some(25.333333)
        );
        assert_eq!(text, back.to_csv());
    }

    #[test]
    fn csv_roundtrip_with_day_gap() {
        let days = vec![day(2003, 1, 1), day(2003, 1, 2), day(2003, 2, 10)];
        let mut s = WeatherSeries::new(test_site(), days).unwrap();
        let n = s.len();
        s.set_column_full(WeatherVariable::WindSpeed, vec![3.0; n]).unwrap();
        let back = WeatherSeries::parse_csv(&s.to_csv(), Path::new("mem")).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn parse_rejects_intra_day_gap() {
        let s = filled_series(1);
        let text = s.to_csv();
        let mut lines: Vec<&str> = text.lines().collect();
        // Remove the 10:00 row (4 header lines, then one row per hour).
        lines.remove(14);
        let err = WeatherSeries::parse_csv(&lines.join("\n"), Path::new("mem")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mem:15"), "error should name the row: {msg}");
        assert!(msg.contains("expected 2003-01-01 10:00"), "{msg}");
    }

    #[test]
    fn parse_rejects_partial_last_day() {
        let s = filled_series(1);
        let text = s.to_csv();
        let cut: Vec<&str> = text.lines().take(4 + 23).collect();
        let err = WeatherSeries::parse_csv(&cut.join("\n"), Path::new("mem")).unwrap_err();
        assert!(err.to_string().contains("incomplete"));
    }

    #[test]
    fn parse_rejects_out_of_range_and_bad_numbers() {
        let s = filled_series(1);
        let text = s.to_csv();
        let bad = text.replace("2003-01-01T03:00,24.375,", "2003-01-01T03:00,999,");
        let err = WeatherSeries::parse_csv(&bad, Path::new("mem")).unwrap_err();
        assert!(err.to_string().contains("physical range"), "{err}");

        let bad = text.replace("2003-01-01T03:00,24.375,", "2003-01-01T03:00,abc,");
        let err = WeatherSeries::parse_csv(&bad, Path::new("mem")).unwrap_err();
        assert!(err.to_string().contains("bad number"), "{err}");
    }

    #[test]
    fn parse_rejects_wrong_start_declaration() {
        let s = filled_series(1);
        let text = s.to_csv().replace("#start,2003-01-01T00:00", "#start,2003-01-02T00:00");
        let err = WeatherSeries::parse_csv(&text, Path::new("mem")).unwrap_err();
        assert!(err.to_string().contains("does not match #start"), "{err}");
    }

    #[test]
    fn slice_dates_keeps_calendar_dates() {
        let s = filled_series(31);
        let cut = s.slice_dates(day(2003, 1, 10), day(2003, 1, 12)).unwrap();
        assert_eq!(cut.days(), &[day(2003, 1, 10), day(2003, 1, 11), day(2003, 1, 12)]);
        assert_eq!(
            cut.value(WeatherVariable::Temperature, 0),
            s.value(WeatherVariable::Temperature, 9 * 24)
        );
    }

    #[test]
    fn slice_months_selects_season_across_year_end() {
        let mut days = Vec::new();
        for d in 0..365 {
            days.push(day(2003, 1, 1) + chrono::Duration::days(d));
        }
        let s = WeatherSeries::new(test_site(), days).unwrap();
        let humid = s.slice_months(&[11, 12, 1, 2, 3, 4]).unwrap();
        assert!(humid.days().iter().all(|d| {
            let m = d.month();
            m >= 11 || m <= 4
        }));
        assert_eq!(
            humid.n_days(),
            31 + 28 + 31 + 30 + 30 + 31 // J F M A N D of 2003
        );
    }

    #[test]
    fn period_selector_roundtrip() {
        for text in ["all", "2003-01-01..2003-12-31", "months:11,12,1,2,3,4"] {
            let p: PeriodSelector = text.parse().unwrap();
            assert_eq!(p.to_string(), text);
        }
        assert!("months:13".parse::<PeriodSelector>().is_err());
        assert!("2003-02-01..2003-01-01".parse::<PeriodSelector>().is_err());
        assert!("junk".parse::<PeriodSelector>().is_err());
    }

    #[test]
    fn daily_indicators_reduce_per_day() {
        let mut s = filled_series(3);
        let n = s.len();
        s.set_column_full(WeatherVariable::Temperature, vec![27.0; n]).unwrap();
        let mean = s
            .daily_indicators(WeatherVariable::Temperature, IndicatorKind::Mean)
            .unwrap();
        assert_eq!(mean.values, vec![27.0, 27.0, 27.0]);
        assert!(mean.excluded_days.is_empty());

        // Ramp 20 -> 30 within one day: amplitude 10.
        let ramp: Vec<f64> = (0..24).map(|h| 20.0 + 10.0 * h as f64 / 23.0).collect();
        let mut one = filled_series(1);
        one.set_column_full(WeatherVariable::Temperature, ramp).unwrap();
        let amp = one
            .daily_indicators(WeatherVariable::Temperature, IndicatorKind::Amplitude)
            .unwrap();
        assert!((amp.values[0] - 10.0).abs() < 1e-12);

        // Amplitude = max - min elementwise.
        let s = filled_series(5);
        let amp = s
            .daily_indicators(WeatherVariable::Temperature, IndicatorKind::Amplitude)
            .unwrap();
        let max = s
            .daily_indicators(WeatherVariable::Temperature, IndicatorKind::Max)
            .unwrap();
        let min = s
            .daily_indicators(WeatherVariable::Temperature, IndicatorKind::Min)
            .unwrap();
        for i in 0..5 {
            assert!((amp.values[i] - (max.values[i] - min.values[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn daily_total_sums_radiation_and_rejects_temperature() {
        let mut s = filled_series(2);
        // 12 daylight hours at 491.666.. Wh each sum to 5900 Wh/day.
        let mut ghi = vec![0.0; 48];
        for d in 0..2 {
            for h in 6..18 {
                ghi[d * 24 + h] = 5900.0 / 12.0;
            }
        }
        s.set_column_full(WeatherVariable::GlobalHorizontal, ghi).unwrap();
        let total = s
            .daily_indicators(WeatherVariable::GlobalHorizontal, IndicatorKind::DailyTotal)
            .unwrap();
        assert!((total.values[0] - 5900.0).abs() < 1e-9);
        assert!(s
            .daily_indicators(WeatherVariable::Temperature, IndicatorKind::DailyTotal)
            .is_err());
    }

    #[test]
    fn days_with_missing_hours_are_excluded_and_reported() {
        let mut s = filled_series(3);
        s.set_value(WeatherVariable::Temperature, 24 + 7, None).unwrap();
        let ind = s
            .daily_indicators(WeatherVariable::Temperature, IndicatorKind::Mean)
            .unwrap();
        assert_eq!(ind.values.len(), 2);
        assert_eq!(ind.excluded_days, vec![day(2003, 1, 2)]);
        assert_eq!(ind.days, vec![day(2003, 1, 1), day(2003, 1, 3)]);

        assert!(matches!(
            s.daily_indicators(WeatherVariable::Okta, IndicatorKind::Mean),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn month_slices_concatenate_back_to_the_original() {
        let mut days = Vec::new();
        for d in 0..365 {
            days.push(day(2003, 1, 1) + chrono::Duration::days(d));
        }
        let mut s = WeatherSeries::new(test_site(), days).unwrap();
        let n = s.len();
        s.set_column_full(
            WeatherVariable::Temperature,
            (0..n).map(|i| 20.0 + (i % 100) as f64 * 0.1).collect(),
        )
        .unwrap();
        let parts: Vec<WeatherSeries> = (1..=12).map(|m| s.slice_months(&[m]).unwrap()).collect();
        let refs: Vec<&WeatherSeries> = parts.iter().collect();
        let joined = WeatherSeries::concat(&refs).unwrap();
        assert_eq!(joined, s);

        // All twelve months at once is the identity.
        let all = s.slice_months(&(1..=12).collect::<Vec<_>>()).unwrap();
        assert_eq!(all, s);

        // Disjoint-month selection errors when empty.
        let january = s.slice_months(&[1]).unwrap();
        assert!(january.slice_months(&[6]).is_err());
    }

    #[test]
    fn canonical_number_format_is_stable() {
        assert_eq!(fmt_num(25.0), "25");
        assert_eq!(fmt_num(25.1), "25.1");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(0.1234567), "0.123457");
        assert_eq!(fmt_num(1367.0), "1367");
    }
}
