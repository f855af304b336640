//! Solar geometry, clearness index, daily-to-hourly radiation profiles and
//! the registry of fitted radiation correlations.
//!
//! Conventions: hour slots are local standard time; solar time adds the
//! longitude offset to the nearest 15-degree reference meridian (no equation
//! of time). Radiation is hour-integrated energy in Wh/m².

use chrono::Datelike;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::least_squares;
use crate::weather::{DailyIndicator, IndicatorKind, Site, WeatherSeries, WeatherVariable};

pub const SOLAR_CONSTANT_WM2: f64 = 1367.0;

/// Per-day solar position summary for one site.
#[derive(Debug, Clone, PartialEq)]
pub struct SolarGeometry {
    pub day_of_year: u32,
    pub declination_deg: f64,
    pub sunset_hour_angle_rad: f64,
    pub day_length_hours: f64,
    /// Daily extraterrestrial irradiation on a horizontal plane, Wh/m².
    pub h0_daily_whm2: f64,
    /// Hour-slot integrals of the same quantity; sums to `h0_daily_whm2`.
    pub h0_hourly_whm2: [f64; 24],
    latitude_rad: f64,
    /// Solar time minus local standard time, hours.
    solar_offset_hours: f64,
}

/// Cooper's declination, degrees.
fn declination_deg(day_of_year: u32) -> f64 {
    23.45 * (2.0 * std::f64::consts::PI * (284 + day_of_year) as f64 / 365.0).sin()
}

/// Eccentricity correction of the solar constant.
fn eccentricity(day_of_year: u32) -> f64 {
    1.0 + 0.033 * (2.0 * std::f64::consts::PI * day_of_year as f64 / 365.0).cos()
}

/// Solar time minus standard time from the longitude offset to the nearest
/// reference meridian.
fn solar_offset_hours(longitude_deg: f64) -> f64 {
    let reference = 15.0 * (longitude_deg / 15.0).round();
    (longitude_deg - reference) * 4.0 / 60.0
}

pub fn solar_geometry(site: &Site, day_of_year: u32) -> Result<SolarGeometry> {
    site.validate()?;
    if !(1..=366).contains(&day_of_year) {
        return Err(Error::invalid(format!("day_of_year {day_of_year} out of 1..=366")));
    }
    // Day 366 only occurs in leap years; the 365-day formulas treat it as 365.
    let n = day_of_year.min(365);
    let decl_deg = declination_deg(n);
    let decl = decl_deg.to_radians();
    let lat = site.latitude_deg.to_radians();
    let cos_ws = (-lat.tan() * decl.tan()).clamp(-1.0, 1.0);
    let ws = cos_ws.acos();
    let e0 = eccentricity(n);
    let offset = solar_offset_hours(site.longitude_deg);

    // Hour-angle integral of cos(zenith) over [a, b], scaled to Wh/m².
    let segment = |a: f64, b: f64| -> f64 {
        if b <= a {
            return 0.0;
        }
        (12.0 / std::f64::consts::PI)
            * SOLAR_CONSTANT_WM2
            * e0
            * (lat.cos() * decl.cos() * (b.sin() - a.sin()) + (b - a) * lat.sin() * decl.sin())
    };

    let mut hourly = [0.0; 24];
    for (h, slot) in hourly.iter_mut().enumerate() {
        // Slot h covers solar hours [h + offset, h + 1 + offset].
        let w1 = (h as f64 + offset - 12.0) * 15.0f64.to_radians();
        let w2 = w1 + 15.0f64.to_radians();
        *slot = segment(w1.max(-ws), w2.min(ws)).max(0.0);
    }
    let h0_daily = segment(-ws, ws);

    Ok(SolarGeometry {
        day_of_year,
        declination_deg: decl_deg,
        sunset_hour_angle_rad: ws,
        day_length_hours: ws * 24.0 / std::f64::consts::PI,
        h0_daily_whm2: h0_daily,
        h0_hourly_whm2: hourly,
        latitude_rad: lat,
        solar_offset_hours: offset,
    })
}

impl SolarGeometry {
    /// Sine of the solar altitude at the centre of hour slot `h` (0..24),
    /// 0 when the sun is below the horizon.
    pub fn sin_altitude(&self, hour: usize) -> f64 {
        let w = (hour as f64 + 0.5 + self.solar_offset_hours - 12.0) * 15.0f64.to_radians();
        if w.abs() >= self.sunset_hour_angle_rad {
            return 0.0;
        }
        let decl = self.declination_deg.to_radians();
        (self.latitude_rad.sin() * decl.sin() + self.latitude_rad.cos() * decl.cos() * w.cos())
            .max(0.0)
    }
}

/// A daily clearness value with its clamp indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clearness {
    pub kt: f64,
    pub clamped: bool,
}

/// kt = daily global over daily extraterrestrial, clamped to [0, 1].
pub fn clearness_index(ghi_daily: f64, h0_daily: f64) -> Result<Clearness> {
    if h0_daily <= 0.0 {
        return Err(Error::invalid(
            "extraterrestrial radiation is zero (polar night); kt undefined".to_string(),
        ));
    }
    if ghi_daily < 0.0 {
        return Err(Error::invalid(format!("negative daily radiation {ghi_daily}")));
    }
    let raw = ghi_daily / h0_daily;
    Ok(Clearness {
        kt: raw.clamp(0.0, 1.0),
        clamped: raw > 1.0,
    })
}

/// Daily kt for every complete-GHI day of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyClearness {
    pub days: Vec<chrono::NaiveDate>,
    pub values: Vec<f64>,
    pub excluded_days: Vec<chrono::NaiveDate>,
    /// Days whose raw ratio exceeded 1 and were clamped.
    pub clamped: usize,
}

pub fn daily_clearness(series: &WeatherSeries) -> Result<DailyClearness> {
    let totals = series.daily_indicators(WeatherVariable::GlobalHorizontal, IndicatorKind::DailyTotal)?;
    let mut out = DailyClearness {
        days: Vec::new(),
        values: Vec::new(),
        excluded_days: totals.excluded_days.clone(),
        clamped: 0,
    };
    for (day, &total) in totals.days.iter().zip(totals.values.iter()) {
        let geom = solar_geometry(&series.site, day.ordinal())?;
        if geom.h0_daily_whm2 <= 0.0 {
            out.excluded_days.push(*day);
            continue;
        }
        let c = clearness_index(total, geom.h0_daily_whm2)?;
        if c.clamped {
            out.clamped += 1;
        }
        out.days.push(*day);
        out.values.push(c.kt);
    }
    if out.values.is_empty() {
        return Err(Error::invalid("no day with complete radiation and daylight".to_string()));
    }
    Ok(out)
}

/// Collares-Pereira and Rabl hourly ratio, normalized so the daylight slots
/// sum to exactly 1. All zeros during polar night.
pub fn hourly_ratio_profile(geom: &SolarGeometry) -> [f64; 24] {
    let ws = geom.sunset_hour_angle_rad;
    let mut rt = [0.0; 24];
    if ws <= 0.0 {
        return rt;
    }
    let shift = ws - std::f64::consts::FRAC_PI_3;
    let a = 0.409 + 0.5016 * shift.sin();
    let b = 0.6609 - 0.4767 * shift.sin();
    let denom = ws.sin() - ws * ws.cos();
    let mut sum = 0.0;
    for (h, slot) in rt.iter_mut().enumerate() {
        let w = (h as f64 + 0.5 + geom.solar_offset_hours - 12.0) * 15.0f64.to_radians();
        if w.abs() >= ws {
            continue;
        }
        let v = (a + b * w.cos()) * (w.cos() - ws.cos()) / denom;
        if v > 0.0 {
            *slot = v;
            sum += v;
        }
    }
    if sum > 0.0 {
        for slot in rt.iter_mut() {
            *slot /= sum;
        }
    }
    rt
}

/// Hourly GHI for a day of given clearness: rt(h) * kt * H0_daily.
pub fn hourly_profile(kt_daily: f64, geom: &SolarGeometry) -> Result<[f64; 24]> {
    if !(0.0..=1.0).contains(&kt_daily) {
        return Err(Error::invalid(format!("kt {kt_daily} out of [0, 1]")));
    }
    let rt = hourly_ratio_profile(geom);
    let total = kt_daily * geom.h0_daily_whm2;
    let mut out = [0.0; 24];
    for h in 0..24 {
        out[h] = rt[h] * total;
    }
    Ok(out)
}

/// Physical bounds of a named daily quantity, used to clamp correlation
/// predictions.
pub fn quantity_range(name: &str) -> Option<(f64, f64)> {
    match name {
        "kt" | "sunfrac" | "diffuse_fraction" | "sunmean" => Some((0.0, 1.0)),
        "oktamean" => Some((0.0, 8.0)),
        "rhmean" | "rhmin" | "rhmax" => Some((0.0, 100.0)),
        "wmean" | "wmax" | "ghitot" | "dhitot" => Some((0.0, f64::INFINITY)),
        _ => None,
    }
}

/// All names `daily_quantity` understands.
pub const DAILY_QUANTITIES: [&str; 16] = [
    "kt",
    "sunfrac",
    "diffuse_fraction",
    "tmean",
    "tmin",
    "tmax",
    "tamp",
    "rhmean",
    "rhmin",
    "rhmax",
    "wmean",
    "wmax",
    "ghitot",
    "dhitot",
    "sunmean",
    "oktamean",
];

/// Column and statistic behind a named daily quantity; `None` for the
/// derived ratios (`kt`, `sunfrac`, `diffuse_fraction`) that have no
/// single-column indicator.
pub fn indicator_spec(name: &str) -> Option<(WeatherVariable, IndicatorKind)> {
    let spec = match name {
        "tmean" => (WeatherVariable::Temperature, IndicatorKind::Mean),
        "tmin" => (WeatherVariable::Temperature, IndicatorKind::Min),
        "tmax" => (WeatherVariable::Temperature, IndicatorKind::Max),
        "tamp" => (WeatherVariable::Temperature, IndicatorKind::Amplitude),
        "rhmean" => (WeatherVariable::RelativeHumidity, IndicatorKind::Mean),
        "rhmin" => (WeatherVariable::RelativeHumidity, IndicatorKind::Min),
        "rhmax" => (WeatherVariable::RelativeHumidity, IndicatorKind::Max),
        "wmean" => (WeatherVariable::WindSpeed, IndicatorKind::Mean),
        "wmax" => (WeatherVariable::WindSpeed, IndicatorKind::Max),
        "ghitot" => (WeatherVariable::GlobalHorizontal, IndicatorKind::DailyTotal),
        "dhitot" => (WeatherVariable::DiffuseHorizontal, IndicatorKind::DailyTotal),
        "sunmean" => (WeatherVariable::SunshineFraction, IndicatorKind::Mean),
        "oktamean" => (WeatherVariable::Okta, IndicatorKind::Mean),
        _ => return None,
    };
    Some(spec)
}

/// One value per complete day for a named daily quantity.
///
/// Besides the plain per-variable indicators this resolves the solar-derived
/// quantities: `kt`, `sunfrac` (daily sunshine hours over day length) and
/// `diffuse_fraction` (daily diffuse over daily global).
pub fn daily_quantity(series: &WeatherSeries, name: &str) -> Result<(Vec<chrono::NaiveDate>, Vec<f64>)> {
    match name {
        "kt" => {
            let c = daily_clearness(series)?;
            Ok((c.days, c.values))
        }
        "sunfrac" => {
            let sun = series.daily_indicators(WeatherVariable::SunshineFraction, IndicatorKind::DailyTotal)?;
            let mut days = Vec::new();
            let mut values = Vec::new();
            for (day, &hours) in sun.days.iter().zip(sun.values.iter()) {
                let geom = solar_geometry(&series.site, day.ordinal())?;
                if geom.day_length_hours <= 0.0 {
                    continue;
                }
                days.push(*day);
                values.push((hours / geom.day_length_hours).clamp(0.0, 1.0));
            }
            if values.is_empty() {
                return Err(Error::invalid("no day with sunshine data and daylight".to_string()));
            }
            Ok((days, values))
        }
        "diffuse_fraction" => {
            let g = series.daily_indicators(WeatherVariable::GlobalHorizontal, IndicatorKind::DailyTotal)?;
            let d = series.daily_indicators(WeatherVariable::DiffuseHorizontal, IndicatorKind::DailyTotal)?;
            let d_by_day: std::collections::BTreeMap<_, _> = d.days.iter().zip(d.values.iter()).collect();
            let mut days = Vec::new();
            let mut values = Vec::new();
            for (day, &ghi) in g.days.iter().zip(g.values.iter()) {
                if let Some(&&dhi) = d_by_day.get(day) {
                    if ghi > 0.0 {
                        days.push(*day);
                        values.push((dhi / ghi).clamp(0.0, 1.0));
                    }
                }
            }
            if values.is_empty() {
                return Err(Error::invalid("no day with both global and diffuse radiation".to_string()));
            }
            Ok((days, values))
        }
        _ => {
            let (var, kind) = indicator_spec(name).ok_or_else(|| {
                Error::NotFound(format!(
                    "unknown daily quantity {name:?}; available: {}",
                    DAILY_QUANTITIES.join(", ")
                ))
            })?;
            let ind = series.daily_indicators(var, kind)?;
            Ok((ind.days, ind.values))
        }
    }
}

/// Daily-quantity view of a `DailyIndicator`, for the chi-square front end.
pub fn indicator_for_quantity(series: &WeatherSeries, name: &str) -> Result<DailyIndicator> {
    if let Some((var, kind)) = indicator_spec(name) {
        return series.daily_indicators(var, kind);
    }
    let (days, values) = daily_quantity(series, name)?;
    Ok(DailyIndicator {
        variable: WeatherVariable::GlobalHorizontal,
        kind: IndicatorKind::Mean,
        days,
        values,
        excluded_days: Vec::new(),
    })
}

/// Functional families of the correlation registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationForm {
    /// kt = a + b * sunfrac.
    AngstromBlack,
    /// sunfrac = a + b * kt.
    InverseAngstromBlack,
    /// Canonical piecewise quartic diffuse fraction of kt; no free parameters.
    Erbs,
    /// diffuse_fraction = a + b * kt.
    Page,
    /// Fixed cubic diffuse fraction of kt.
    LiuJordan,
    /// diffuse_fraction = a + b * sunfrac + c * kt.
    Gopinathan,
    /// y = p0 + p1 x + ... for a caller-chosen input/output pair.
    Poly(u8),
}

impl CorrelationForm {
    pub fn name(&self) -> &'static str {
        match self {
            CorrelationForm::AngstromBlack => "angstrom-black",
            CorrelationForm::InverseAngstromBlack => "inverse-angstrom-black",
            CorrelationForm::Erbs => "erbs",
            CorrelationForm::Page => "page",
            CorrelationForm::LiuJordan => "liu-jordan",
            CorrelationForm::Gopinathan => "gopinathan",
            CorrelationForm::Poly(1) => "poly1",
            CorrelationForm::Poly(2) => "poly2",
            CorrelationForm::Poly(_) => "poly3",
        }
    }

    pub fn from_name(name: &str) -> Option<CorrelationForm> {
        match name {
            "angstrom-black" => Some(CorrelationForm::AngstromBlack),
            "inverse-angstrom-black" => Some(CorrelationForm::InverseAngstromBlack),
            "erbs" => Some(CorrelationForm::Erbs),
            "page" => Some(CorrelationForm::Page),
            "liu-jordan" => Some(CorrelationForm::LiuJordan),
            "gopinathan" => Some(CorrelationForm::Gopinathan),
            "poly1" => Some(CorrelationForm::Poly(1)),
            "poly2" => Some(CorrelationForm::Poly(2)),
            "poly3" => Some(CorrelationForm::Poly(3)),
            _ => None,
        }
    }

    pub const NAMES: [&'static str; 9] = [
        "angstrom-black",
        "inverse-angstrom-black",
        "erbs",
        "page",
        "liu-jordan",
        "gopinathan",
        "poly1",
        "poly2",
        "poly3",
    ];

    /// Inputs and output fixed by the family, None for the polynomial slot.
    fn fixed_signature(&self) -> Option<(&'static [&'static str], &'static str)> {
        match self {
            CorrelationForm::AngstromBlack => Some((&["sunfrac"], "kt")),
            CorrelationForm::InverseAngstromBlack => Some((&["kt"], "sunfrac")),
            CorrelationForm::Erbs => Some((&["kt"], "diffuse_fraction")),
            CorrelationForm::Page => Some((&["kt"], "diffuse_fraction")),
            CorrelationForm::LiuJordan => Some((&["kt"], "diffuse_fraction")),
            CorrelationForm::Gopinathan => Some((&["sunfrac", "kt"], "diffuse_fraction")),
            CorrelationForm::Poly(_) => None,
        }
    }

    fn param_count(&self) -> usize {
        match self {
            CorrelationForm::AngstromBlack
            | CorrelationForm::InverseAngstromBlack
            | CorrelationForm::Page => 2,
            CorrelationForm::Erbs => 0,
            CorrelationForm::LiuJordan => 4,
            CorrelationForm::Gopinathan => 3,
            CorrelationForm::Poly(d) => *d as usize + 1,
        }
    }

    /// Families whose parameters are frozen literature constants; fitting
    /// only records diagnostics for them.
    fn is_canonical_only(&self) -> bool {
        matches!(self, CorrelationForm::Erbs | CorrelationForm::LiuJordan)
    }
}

/// A correlation with its coefficients and fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorrelationRepr", into = "CorrelationRepr")]
pub struct CorrelationModel {
    pub form: CorrelationForm,
    pub inputs: Vec<String>,
    pub output: String,
    pub params: Vec<f64>,
    pub rmse: f64,
    pub mbe: f64,
    pub n_fit: usize,
    /// Per-input value range seen during fitting; empty when never fitted.
    pub domain: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize, Clone)]
struct CorrelationRepr {
    name: String,
    inputs: Vec<String>,
    output: String,
    params: Vec<f64>,
    rmse: f64,
    mbe: f64,
    n: usize,
    #[serde(default)]
    domain: Vec<(f64, f64)>,
}

impl From<CorrelationModel> for CorrelationRepr {
    fn from(m: CorrelationModel) -> CorrelationRepr {
        CorrelationRepr {
            name: m.form.name().to_string(),
            inputs: m.inputs,
            output: m.output,
            params: m.params,
            rmse: m.rmse,
            mbe: m.mbe,
            n: m.n_fit,
            domain: m.domain,
        }
    }
}

impl TryFrom<CorrelationRepr> for CorrelationModel {
    type Error = Error;

    fn try_from(r: CorrelationRepr) -> Result<CorrelationModel> {
        let form = CorrelationForm::from_name(&r.name)
            .ok_or_else(|| Error::Unsupported(format!("unknown correlation {:?}", r.name)))?;
        let inputs: Vec<&str> = r.inputs.iter().map(|s| s.as_str()).collect();
        CorrelationModel::with_params(form, &inputs, &r.output, r.params.clone()).map(|mut m| {
            m.rmse = r.rmse;
            m.mbe = r.mbe;
            m.n_fit = r.n;
            m.domain = r.domain;
            m
        })
    }
}

/// Result of one correlation evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    /// True when the raw prediction left the output's physical range.
    pub clamped: bool,
    /// True when an input fell outside the fitted domain (a warning, the
    /// value is still returned).
    pub extrapolated: bool,
}

impl CorrelationModel {
    /// A registry entry with its literature default coefficients. Families
    /// without published defaults (`gopinathan`, `poly*`) must be fitted.
    pub fn canonical(form: CorrelationForm) -> Result<CorrelationModel> {
        let params = match form {
            CorrelationForm::AngstromBlack => vec![0.25, 0.50],
            CorrelationForm::InverseAngstromBlack => vec![-0.5, 2.0],
            CorrelationForm::Erbs => vec![],
            CorrelationForm::Page => vec![1.00, -1.13],
            CorrelationForm::LiuJordan => vec![1.390, -4.027, 5.531, -3.108],
            CorrelationForm::Gopinathan | CorrelationForm::Poly(_) => {
                return Err(Error::invalid(format!(
                    "{} has no canonical coefficients; fit it to data",
                    form.name()
                )));
            }
        };
        let (inputs, output) = form.fixed_signature().expect("fixed-family signature");
        CorrelationModel::with_params(form, inputs, output, params)
    }

    pub fn with_params(
        form: CorrelationForm,
        inputs: &[&str],
        output: &str,
        params: Vec<f64>,
    ) -> Result<CorrelationModel> {
        if let CorrelationForm::Poly(d) = form {
            if !(1..=3).contains(&d) {
                return Err(Error::invalid(format!("polynomial degree {d} out of 1..=3")));
            }
            if inputs.len() != 1 {
                return Err(Error::invalid("polynomial correlations take exactly one input".to_string()));
            }
        }
        if let Some((fixed_inputs, fixed_output)) = form.fixed_signature() {
            if inputs != fixed_inputs || output != fixed_output {
                return Err(Error::invalid(format!(
                    "{} maps {:?} to {fixed_output}, got {:?} to {output}",
                    form.name(),
                    fixed_inputs,
                    inputs
                )));
            }
        }
        if params.len() != form.param_count() {
            return Err(Error::invalid(format!(
                "{} needs {} parameters, got {}",
                form.name(),
                form.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("non-finite correlation parameter".to_string()));
        }
        for name in inputs.iter().chain(std::iter::once(&output)) {
            if !DAILY_QUANTITIES.contains(name) {
                return Err(Error::NotFound(format!(
                    "unknown daily quantity {name:?}; available: {}",
                    DAILY_QUANTITIES.join(", ")
                )));
            }
        }
        Ok(CorrelationModel {
            form,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            output: output.to_string(),
            params,
            rmse: 0.0,
            mbe: 0.0,
            n_fit: 0,
            domain: Vec::new(),
        })
    }

    /// Unfitted polynomial template for `fit_correlation`.
    pub fn poly(degree: u8, input: &str, output: &str) -> Result<CorrelationModel> {
        CorrelationModel::with_params(
            CorrelationForm::Poly(degree),
            &[input],
            output,
            vec![0.0; degree as usize + 1],
        )
    }

    fn raw_evaluate(&self, x: &[f64]) -> f64 {
        let p = &self.params;
        match self.form {
            CorrelationForm::AngstromBlack
            | CorrelationForm::InverseAngstromBlack
            | CorrelationForm::Page => p[0] + p[1] * x[0],
            CorrelationForm::Erbs => erbs_diffuse_fraction(x[0]),
            CorrelationForm::LiuJordan => {
                let kt = x[0];
                p[0] + p[1] * kt + p[2] * kt * kt + p[3] * kt * kt * kt
            }
            CorrelationForm::Gopinathan => p[0] + p[1] * x[0] + p[2] * x[1],
            CorrelationForm::Poly(_) => {
                // Horner evaluation, highest coefficient first.
                p.iter().rev().fold(0.0, |acc, &c| acc * x[0] + c)
            }
        }
    }

    pub fn evaluate(&self, inputs: &[f64]) -> Result<Prediction> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::invalid(format!(
                "{} takes {} inputs ({}), got {}",
                self.form.name(),
                self.inputs.len(),
                self.inputs.join(", "),
                inputs.len()
            )));
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite correlation input".to_string()));
        }
        let extrapolated = !self.domain.is_empty()
            && inputs
                .iter()
                .zip(self.domain.iter())
                .any(|(&v, &(lo, hi))| v < lo || v > hi);
        let raw = self.raw_evaluate(inputs);
        let (value, clamped) = match quantity_range(&self.output) {
            Some((lo, hi)) => (raw.clamp(lo, hi), raw < lo || raw > hi),
            None => (raw, false),
        };
        Ok(Prediction {
            value,
            clamped,
            extrapolated,
        })
    }

    /// Design-matrix row for the linear-in-parameters families.
    fn design_row(&self, x: &[f64]) -> Vec<f64> {
        match self.form {
            CorrelationForm::AngstromBlack
            | CorrelationForm::InverseAngstromBlack
            | CorrelationForm::Page => vec![1.0, x[0]],
            CorrelationForm::Gopinathan => vec![1.0, x[0], x[1]],
            CorrelationForm::Poly(d) => (0..=d).map(|k| x[0].powi(k as i32)).collect(),
            CorrelationForm::Erbs | CorrelationForm::LiuJordan => unreachable!("canonical-only"),
        }
    }
}

/// Canonical Erbs piecewise diffuse fraction of daily clearness.
pub fn erbs_diffuse_fraction(kt: f64) -> f64 {
    if kt <= 0.22 {
        1.0 - 0.09 * kt
    } else if kt <= 0.80 {
        0.9511 - 0.1604 * kt + 4.388 * kt.powi(2) - 16.638 * kt.powi(3) + 12.336 * kt.powi(4)
    } else {
        0.165
    }
}

const MIN_FIT_DAYS: usize = 30;

/// Least-squares fit of `template` on the daily quantities of `series`.
///
/// Canonical-only families keep their coefficients and only record
/// diagnostics. The recorded rmse/mbe are computed through `evaluate`, so
/// re-evaluating the fitting set reproduces them exactly.
pub fn fit_correlation(template: &CorrelationModel, series: &WeatherSeries) -> Result<CorrelationModel> {
    // Join input and output quantities on their common days.
    let mut rows: std::collections::BTreeMap<chrono::NaiveDate, Vec<f64>> = std::collections::BTreeMap::new();
    let n_cols = template.inputs.len() + 1;
    for (k, name) in template.inputs.iter().enumerate() {
        let (days, values) = daily_quantity(series, name)?;
        for (day, &v) in days.iter().zip(values.iter()) {
            let row = rows.entry(*day).or_insert_with(|| vec![f64::NAN; n_cols]);
            row[k] = v;
        }
    }
    let (days, values) = daily_quantity(series, &template.output)?;
    for (day, &v) in days.iter().zip(values.iter()) {
        if let Some(row) = rows.get_mut(day) {
            row[n_cols - 1] = v;
        }
    }
    let complete: Vec<&Vec<f64>> = rows.values().filter(|r| r.iter().all(|v| v.is_finite())).collect();
    if complete.len() < MIN_FIT_DAYS {
        return Err(Error::invalid(format!(
            "insufficient data: {} complete days, need {MIN_FIT_DAYS}",
            complete.len()
        )));
    }

    let mut fitted = template.clone();
    let xs: Vec<&[f64]> = complete.iter().map(|r| &r[..n_cols - 1]).collect();
    let ys: Vec<f64> = complete.iter().map(|r| r[n_cols - 1]).collect();

    if !fitted.form.is_canonical_only() {
        let design = DMatrix::from_fn(xs.len(), fitted.form.param_count(), |i, j| {
            fitted.design_row(xs[i])[j]
        });
        let y = DVector::from_vec(ys.clone());
        let beta = least_squares(&design, &y)?;
        fitted.params = beta.iter().copied().collect();
    }

    fitted.domain = (0..n_cols - 1)
        .map(|k| {
            let lo = xs.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
            let hi = xs.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();
    fitted.n_fit = xs.len();

    let mut se = 0.0;
    let mut be = 0.0;
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        let pred = fitted.evaluate(x)?.value;
        se += (pred - y).powi(2);
        be += pred - y;
    }
    fitted.rmse = (se / xs.len() as f64).sqrt();
    fitted.mbe = be / xs.len() as f64;
    Ok(fitted)
}
