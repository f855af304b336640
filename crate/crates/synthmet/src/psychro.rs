//! Psychrometrics, sky temperature and altitude-based site extrapolation.
//!
//! All moist-air relations use the Magnus saturation form with constants
//! 610.94 Pa, 17.625 and 243.04 degC, chosen because the dew point then has
//! a closed-form inversion.

use chrono::Datelike;

use crate::error::{Error, Result};
use crate::solar::{clearness_index, hourly_profile, solar_geometry};
use crate::weather::{fmt_num, Site, WeatherSeries, WeatherVariable};

const MAGNUS_ES0: f64 = 610.94;
const MAGNUS_A: f64 = 17.625;
const MAGNUS_B: f64 = 243.04;

/// Standard sea-level pressure, Pa.
pub const STANDARD_PRESSURE: f64 = 101_325.0;

/// Standard-atmosphere temperature lapse, K per km of altitude gain.
pub const STANDARD_LAPSE_K_PER_KM: f64 = 6.5;

/// Largest altitude difference the extrapolation accepts, m.
pub const MAX_ALTITUDE_DELTA: f64 = 3000.0;

fn check_temperature(t: f64) -> Result<()> {
    if !(t.is_finite() && (-40.0..=60.0).contains(&t)) {
        return Err(Error::invalid(format!(
            "temperature {t} degC outside the psychrometric domain [-40, 60]"
        )));
    }
    Ok(())
}

/// Saturation vapor pressure over water, Pa, Magnus form. T in [-40, 60] degC.
pub fn saturation_vapor_pressure(t: f64) -> Result<f64> {
    check_temperature(t)?;
    Ok(MAGNUS_ES0 * (MAGNUS_A * t / (t + MAGNUS_B)).exp())
}

/// Dew point, degC, from the closed-form Magnus inversion. RH in (0, 100].
pub fn dew_point(t: f64, rh: f64) -> Result<f64> {
    check_temperature(t)?;
    if !(rh.is_finite() && rh > 0.0 && rh <= 100.0) {
        return Err(Error::invalid(format!(
            "relative humidity {rh}% outside (0, 100]"
        )));
    }
    let e = rh / 100.0 * saturation_vapor_pressure(t)?;
    let x = (e / MAGNUS_ES0).ln();
    Ok(MAGNUS_B * x / (MAGNUS_A - x))
}

/// Moist air at a dry-bulb temperature, relative humidity and pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoistAirState {
    /// Dry-bulb temperature, degC.
    pub t: f64,
    /// Relative humidity, %.
    pub rh: f64,
    /// Total pressure, Pa.
    pub p: f64,
    /// Partial vapor pressure, Pa.
    pub e: f64,
    /// Humidity ratio, kg water per kg dry air.
    pub w: f64,
    /// Dew point, degC; undefined for perfectly dry air.
    pub td: Option<f64>,
    /// Specific enthalpy, kJ per kg dry air.
    pub h: f64,
}

/// Builds the full moist-air state at standard pressure.
pub fn moist_air_state(t: f64, rh: f64) -> Result<MoistAirState> {
    moist_air_state_at(t, rh, STANDARD_PRESSURE)
}

/// Builds the full moist-air state at the given total pressure.
pub fn moist_air_state_at(t: f64, rh: f64, p: f64) -> Result<MoistAirState> {
    check_temperature(t)?;
    if !(rh.is_finite() && (0.0..=100.0).contains(&rh)) {
        return Err(Error::invalid(format!(
            "relative humidity {rh}% outside [0, 100]"
        )));
    }
    let e = rh / 100.0 * saturation_vapor_pressure(t)?;
    if !(p.is_finite() && p > e) {
        return Err(Error::invalid(format!(
            "total pressure {p} Pa must exceed the vapor pressure {e} Pa"
        )));
    }
    let w = 0.622 * e / (p - e);
    let td = if rh > 0.0 { Some(dew_point(t, rh)?) } else { None };
    let h = specific_enthalpy(t, w);
    Ok(MoistAirState {
        t,
        rh,
        p,
        e,
        w,
        td,
        h,
    })
}

/// Specific enthalpy of moist air, kJ per kg dry air.
pub fn specific_enthalpy(t: f64, w: f64) -> f64 {
    1.006 * t + w * (2501.0 + 1.86 * t)
}

/// Humidity ratio from vapor pressure and total pressure.
pub fn humidity_ratio(e: f64, p: f64) -> f64 {
    0.622 * e / (p - e)
}

/// Effective sky temperature, degC: Berdahl-Martin clear-sky emissivity from
/// the dew point, with a polynomial cloud-cover correction in tenths. The
/// result is clamped to the air temperature from above.
pub fn sky_temperature(t: f64, td: f64, octas: f64) -> Result<f64> {
    check_temperature(t)?;
    if td > t + 1e-9 {
        return Err(Error::invalid(format!(
            "dew point {td} degC above air temperature {t} degC"
        )));
    }
    if !(octas.is_finite() && (0.0..=8.0).contains(&octas)) {
        return Err(Error::invalid(format!("nebulosity {octas} outside [0, 8] octas")));
    }
    let x = td / 100.0;
    let clear = 0.711 + 0.56 * x + 0.73 * x * x;
    let n = octas / 8.0 * 10.0;
    let cloud = 1.0 + 0.0224 * n - 0.0035 * n * n + 0.00028 * n * n * n;
    let emissivity = (clear * cloud).clamp(0.0, 1.0);
    let tsky = emissivity.powf(0.25) * (t + 273.15) - 273.15;
    Ok(tsky.min(t))
}

/// Barometric pressure of the standard atmosphere at an altitude, Pa.
pub fn barometric_pressure(altitude_m: f64) -> f64 {
    STANDARD_PRESSURE * (1.0 - 2.25577e-5 * altitude_m).powf(5.25588)
}

/// Moves a weather series to another site.
///
/// Temperature follows the lapse rate (K per km, positive = cooling with
/// height); relative humidity is recomputed so the vapor pressure, hence the
/// dew point, is conserved where possible (capped at 100%); global radiation
/// keeps each day's clearness index but is re-emitted through the target
/// site's solar geometry, with the day's diffuse fraction preserved. A
/// target identical in coordinates and altitude returns the input unchanged.
pub fn extrapolate_site(
    series: &WeatherSeries,
    target: Site,
    lapse_k_per_km: f64,
) -> Result<WeatherSeries> {
    use WeatherVariable as V;
    let source = &series.site;
    let delta_alt = target.altitude_m - source.altitude_m;
    if delta_alt.abs() > MAX_ALTITUDE_DELTA {
        return Err(Error::invalid(format!(
            "altitude difference {delta_alt} m exceeds {MAX_ALTITUDE_DELTA} m"
        )));
    }
    if !lapse_k_per_km.is_finite() {
        return Err(Error::invalid("lapse rate must be finite".to_string()));
    }
    let mut out = series.clone();
    out.site = target.clone();
    if target.latitude_deg == source.latitude_deg
        && target.longitude_deg == source.longitude_deg
        && delta_alt == 0.0
    {
        return Ok(out);
    }

    let dt = -lapse_k_per_km * delta_alt / 1000.0;

    // Temperature shift, then humidity at conserved vapor pressure.
    let temps: Vec<Option<f64>> = series.column(V::Temperature).to_vec();
    let rhs: Vec<Option<f64>> = series.column(V::RelativeHumidity).to_vec();
    let mut new_temp = Vec::with_capacity(temps.len());
    let mut new_rh = Vec::with_capacity(temps.len());
    for (t, rh) in temps.iter().zip(&rhs) {
        match t {
            Some(t) => {
                let shifted = (t + dt).clamp(V::Temperature.range().0, V::Temperature.range().1);
                new_temp.push(Some(shifted));
                match rh {
                    Some(rh) => {
                        let e = rh / 100.0 * saturation_vapor_pressure(*t)?;
                        let capped = (100.0 * e / saturation_vapor_pressure(shifted)?).min(100.0);
                        new_rh.push(Some(capped));
                    }
                    None => new_rh.push(None),
                }
            }
            // Without a temperature there is nothing to conserve against;
            // humidity passes through untouched.
            None => {
                new_temp.push(None);
                new_rh.push(*rh);
            }
        }
    }
    out.set_column(V::Temperature, new_temp)?;
    out.set_column(V::RelativeHumidity, new_rh)?;

    // Radiation: preserve each complete day's clearness index and diffuse
    // fraction, re-emitted through the target geometry. Days with missing
    // radiation hours pass through unchanged.
    if series.has_data(V::GlobalHorizontal) {
        let mut ghi = series.column(V::GlobalHorizontal).to_vec();
        let mut dhi = series.column(V::DiffuseHorizontal).to_vec();
        for (d, &date) in series.days().iter().enumerate() {
            let day_ghi = series.day_slice(V::GlobalHorizontal, d);
            if day_ghi.iter().any(|v| v.is_none()) {
                continue;
            }
            let total: f64 = day_ghi.iter().map(|v| v.unwrap()).sum();
            let source_geom = solar_geometry(source, date.ordinal())?;
            let target_geom = solar_geometry(&target, date.ordinal())?;
            let kt = clearness_index(total, source_geom.h0_daily_whm2)?.kt;
            let emitted = hourly_profile(kt, &target_geom)?;
            let day_dhi = series.day_slice(V::DiffuseHorizontal, d);
            let diffuse_fraction = if day_dhi.iter().all(|v| v.is_some()) && total > 0.0 {
                let dhi_total: f64 = day_dhi.iter().map(|v| v.unwrap()).sum();
                Some((dhi_total / total).clamp(0.0, 1.0))
            } else {
                None
            };
            for h in 0..emitted.len() {
                let idx = d * emitted.len() + h;
                let g = emitted[h].clamp(0.0, V::GlobalHorizontal.range().1);
                ghi[idx] = Some(g);
                if let Some(fd) = diffuse_fraction {
                    dhi[idx] = Some((fd * g).min(V::DiffuseHorizontal.range().1));
                }
            }
        }
        out.set_column(V::GlobalHorizontal, ghi)?;
        out.set_column(V::DiffuseHorizontal, dhi)?;
    }
    Ok(out)
}

/// Extra column names emitted by [`derived_csv`], in order.
pub const DERIVED_COLUMNS: [&str; 5] = ["tdew_C", "e_Pa", "w_kgkg", "h_kJkg", "tsky_C"];

/// Weather CSV text with the psychrometric columns appended to each row.
///
/// Pressure comes from the site altitude through the barometric formula.
/// Cells whose inputs are missing (or dew point at RH = 0) stay empty; the
/// sky temperature additionally needs the nebulosity column.
pub fn derived_csv(series: &WeatherSeries) -> Result<String> {
    use WeatherVariable as V;
    let pressure = barometric_pressure(series.site.altitude_m);
    let base = series.to_csv();
    let mut lines = base.lines();
    let mut out = String::with_capacity(base.len() * 2);
    for _ in 0..3 {
        out.push_str(lines.next().expect("header lines"));
        out.push('\n');
    }
    out.push_str(lines.next().expect("column header"));
    for name in DERIVED_COLUMNS {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, line) in lines.enumerate() {
        out.push_str(line);
        let mut cells: [Option<f64>; 5] = [None; 5];
        if let (Some(t), Some(rh)) = (
            series.value(V::Temperature, i),
            series.value(V::RelativeHumidity, i),
        ) {
            let state = moist_air_state_at(t, rh, pressure)?;
            cells[0] = state.td;
            cells[1] = Some(state.e);
            cells[2] = Some(state.w);
            cells[3] = Some(state.h);
            if let (Some(td), Some(okta)) = (state.td, series.value(V::Okta, i)) {
                cells[4] = Some(sky_temperature(t, td, okta)?);
            }
        }
        for cell in cells {
            out.push(',');
            if let Some(v) = cell {
                out.push_str(&fmt_num(v));
            }
        }
        out.push('\n');
    }
    Ok(out)
}
