//! Bundled demonstration data: a deterministic synthetic year for a
//! tropical island site, dense enough to satisfy every fitting routine in
//! the crate, plus a helper that fits the full model set and saves it as a
//! ready-to-use library directory.

use std::f64::consts::TAU;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::generate::{
    fit_kt_model, fit_temp_rh_arx, fit_wind_model, load_library, save_entry, LibraryEntry,
    ModelPayload, ModelRegistry, ROOT_KT, ROOT_WIND,
};
use crate::solar::{
    fit_correlation, hourly_profile, solar_geometry, CorrelationForm, CorrelationModel,
};
use crate::stoch::{fit_ar, fit_mlp, Climate, MlpSpec};
use crate::weather::{PeriodSelector, Site, WeatherSeries, WeatherVariable, HOURS_PER_DAY};

/// Everything below reproduces byte for byte from this seed alone.
const DEMO_SEED: u64 = 20_030_101;

const DEMO_DAYS: usize = 365;

pub fn demo_site() -> Site {
    Site::new("demo-tropical", -21.1, 55.5, 100.0).expect("demo site coordinates are valid")
}

/// One synthetic year (365 days, hourly, every column populated).
///
/// The year is drawn from simple seasonal and diurnal shapes with
/// autoregressive day-to-day weather. It is not a climate record, but it
/// keeps the physical invariants (night radiation zero, diffuse below
/// global, humidity below saturation, positive wind) and is long enough for
/// all fitting routines, including the network fit's sample floor.
pub fn demo_year() -> WeatherSeries {
    let site = demo_site();
    let start = NaiveDate::from_ymd_opt(2003, 1, 1).expect("fixed start date");
    let mut series = WeatherSeries::with_consecutive_days(site.clone(), start, DEMO_DAYS)
        .expect("fixed day count");

    let n = DEMO_DAYS * HOURS_PER_DAY;
    let mut temp = Vec::with_capacity(n);
    let mut rh = Vec::with_capacity(n);
    let mut wind = Vec::with_capacity(n);
    let mut winddir = Vec::with_capacity(n);
    let mut ghi = Vec::with_capacity(n);
    let mut dhi = Vec::with_capacity(n);
    let mut bni = Vec::with_capacity(n);
    let mut sunfrac = Vec::with_capacity(n);
    let mut okta = Vec::with_capacity(n);

    let mut rng = ChaCha8Rng::seed_from_u64(DEMO_SEED);
    let mut noise = move |sd: f64| sd * rng.sample::<f64, _>(StandardNormal);

    // Day-to-day drivers, each a stationary AR(1).
    let mut z_kt = 0.0;
    let mut z_temp = 0.0;
    let mut z_rh = 0.0;
    let mut z_wind = 0.0;
    let mut z_dir = 0.0;
    // Hour-to-hour residuals carried across day boundaries.
    let mut p_ghi = 0.0;
    let mut p_wind = 0.0;

    for d in 0..DEMO_DAYS {
        let date = start + chrono::Duration::days(d as i64);
        let geom = solar_geometry(&site, date.ordinal()).expect("valid day of year");

        z_kt = 0.7 * z_kt + noise(0.6);
        z_temp = 0.75 * z_temp + noise(0.8);
        z_rh = 0.6 * z_rh + noise(1.5);
        z_wind = 0.6 * z_wind + noise(0.5);
        z_dir = 0.8 * z_dir + noise(0.4);

        // Logistic squash keeps daily clearness strictly inside (0.2, 0.85).
        let kt_day = 0.2 + 0.65 / (1.0 + (-z_kt).exp());
        // Southern-hemisphere summer: warmest around day 40.
        let seasonal = 3.5 * (TAU * (date.ordinal() as f64 - 40.0) / 365.0).cos();
        let sun_level = (2.0 * kt_day - 0.45 + noise(0.05)).clamp(0.0, 1.0);
        let diffuse_frac = (1.0 - 1.13 * kt_day + noise(0.03)).clamp(0.05, 0.95);
        let wind_level = (4.0 + 1.6 * z_wind).max(0.8);
        let dir_day = 120.0 + 40.0 * z_dir;

        let profile = hourly_profile(kt_day, &geom).expect("clearness stays in range");
        for (h, &clear) in profile.iter().enumerate() {
            let sin_alt = geom.sin_altitude(h);
            let diurnal = (TAU * (h as f64 - 9.0) / 24.0).sin();

            p_ghi = 0.5 * p_ghi + noise(0.06);
            let g = (clear * (1.0 + p_ghi).max(0.0)).clamp(0.0, 1400.0);
            let dh = (diffuse_frac * g).min(g);
            let b = if sin_alt > 0.0 && g > 0.0 {
                ((g - dh) / sin_alt.max(0.0872)).clamp(0.0, 1450.0)
            } else {
                0.0
            };
            let sf = if sin_alt > 0.0 && g > 0.0 {
                (sun_level + noise(0.08)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let cover = (8.0 * (1.0 - sun_level) + noise(0.7)).round().clamp(0.0, 8.0);

            let t = 24.0 + seasonal + 3.0 * (kt_day - 0.5) + 4.2 * diurnal + z_temp + noise(0.3);
            // Anti-correlated with the diurnal cycle; the 96% cap keeps the
            // dew point strictly below the dry-bulb temperature.
            let r = (78.0 - 2.2 * (t - 24.0 - seasonal) + z_rh + noise(0.5)).clamp(35.0, 96.0);

            p_wind = 0.7 * p_wind + noise(0.35);
            let w = (wind_level * (1.0 + 0.25 * diurnal) + p_wind).clamp(0.4, 30.0);
            let dir = (dir_day + noise(12.0)).rem_euclid(360.0);

            ghi.push(g);
            dhi.push(dh);
            bni.push(b);
            sunfrac.push(sf);
            okta.push(cover);
            temp.push(t);
            rh.push(r);
            wind.push(w);
            winddir.push(dir);
        }
    }

    let columns = [
        (WeatherVariable::Temperature, temp),
        (WeatherVariable::RelativeHumidity, rh),
        (WeatherVariable::WindSpeed, wind),
        (WeatherVariable::WindDirection, winddir),
        (WeatherVariable::GlobalHorizontal, ghi),
        (WeatherVariable::DiffuseHorizontal, dhi),
        (WeatherVariable::BeamNormal, bni),
        (WeatherVariable::SunshineFraction, sunfrac),
        (WeatherVariable::Okta, okta),
    ];
    for (var, values) in columns {
        series.set_column_full(var, values).expect("synthetic column stays in range");
    }
    series
}

/// Fits every model kind to the demo year and saves the entries under
/// `dir`, then reloads the directory so the returned registry reflects
/// exactly what a later `load_library` will see.
pub fn build_demo_library(dir: &Path) -> Result<ModelRegistry> {
    let series = demo_year();
    let site = series.site.clone();

    let mut entries = vec![
        LibraryEntry::new(
            "kt-ar",
            ModelPayload::Ar {
                output: ROOT_KT.to_string(),
                model: fit_kt_model(&series, Climate::Tropical)?,
            },
        ),
        LibraryEntry::new(
            "wind-ar",
            ModelPayload::Ar {
                output: ROOT_WIND.to_string(),
                model: fit_wind_model(&series)?,
            },
        ),
        LibraryEntry::new(
            "winddir-ar",
            ModelPayload::Ar {
                output: WeatherVariable::WindDirection.column().to_string(),
                model: {
                    let dir: Vec<f64> = series
                        .column(WeatherVariable::WindDirection)
                        .iter()
                        .flatten()
                        .copied()
                        .collect();
                    fit_ar(&dir, 3)?
                },
            },
        ),
        LibraryEntry::new(
            "diffuse-page",
            ModelPayload::Correlation {
                model: fit_correlation(
                    &CorrelationModel::canonical(CorrelationForm::Page)?,
                    &series,
                )?,
            },
        ),
        LibraryEntry::new(
            "sunshine-linear",
            ModelPayload::Correlation {
                model: fit_correlation(
                    &CorrelationModel::canonical(CorrelationForm::InverseAngstromBlack)?,
                    &series,
                )?,
            },
        ),
        LibraryEntry::new(
            "okta-linear",
            ModelPayload::Correlation {
                model: fit_correlation(
                    &CorrelationModel::poly(1, "sunfrac", "oktamean")?,
                    &series,
                )?,
            },
        ),
        LibraryEntry::new(
            "temp-rh-net",
            ModelPayload::Mlp {
                model: fit_mlp(&series, &MlpSpec { epochs: 80, ..MlpSpec::default() })?,
            },
        ),
    ];
    let (temp_arx, rh_arx) = fit_temp_rh_arx(&series)?;
    entries.push(LibraryEntry::new(
        "temp-arx",
        ModelPayload::Ar { output: WeatherVariable::Temperature.column().to_string(), model: temp_arx },
    ));
    entries.push(LibraryEntry::new(
        "rh-arx",
        ModelPayload::Ar { output: WeatherVariable::RelativeHumidity.column().to_string(), model: rh_arx },
    ));

    for entry in entries {
        let entry = entry.with_provenance(site.clone(), PeriodSelector::All);
        save_entry(dir, &entry)?;
    }
    load_library(dir)
}
