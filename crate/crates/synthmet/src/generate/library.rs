//! Persisted model library: JSON entries carrying a fitted model plus its
//! provenance, directory loading with per-file error recovery, and the
//! fitting helpers that build the standard entry kinds from a weather series.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solar::{daily_clearness, CorrelationModel};
use crate::stoch::ar::MAX_ORDER;
use crate::stoch::{
    fit_ar_series, fit_arx, fit_clearness_law, fit_weibull, ArModel, Climate, ClearnessLaw,
    MlpModel, Transform, WeibullFit,
};
use crate::weather::{PeriodSelector, Site, WeatherSeries, WeatherVariable, HOURS_PER_DAY};

/// Daily clearness root variable in plan vocabulary; every other plan
/// variable is a weather CSV column name.
pub const ROOT_KT: &str = "kt";
/// Hourly wind root variable.
pub const ROOT_WIND: &str = "wind_ms";

/// Model payload of one library entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelPayload {
    /// Marginal wind-speed law; acts as a persistence-free root when no
    /// autoregressive wind entry exists.
    Weibull { fit: WeibullFit },
    /// Marginal daily clearness law, same role for kt.
    Clearness { law: ClearnessLaw },
    /// Autoregressive model; `output` names the produced variable, either
    /// a root ("kt", "wind_ms") or a weather column.
    Ar { output: String, model: ArModel },
    /// Coupled temperature and humidity network.
    Mlp { model: MlpModel },
    /// Daily-quantity correlation.
    Correlation { model: CorrelationModel },
}

/// One stored model with its provenance tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    /// Unique within a library; also the file stem on disk.
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<Site>,
    /// Day selection the model was fitted on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<PeriodSelector>,
    #[serde(flatten)]
    pub payload: ModelPayload,
}

/// Weather column a daily correlation output is emitted as, with any extra
/// hourly variables the emission needs. Quantities without an emitter (for
/// example a fitted "tmean" polynomial) stay library-only diagnostics.
pub(crate) fn emitted_column(quantity: &str) -> Option<(WeatherVariable, &'static [&'static str])> {
    match quantity {
        "diffuse_fraction" => Some((WeatherVariable::DiffuseHorizontal, &["ghi_Whm2"])),
        "sunfrac" => Some((WeatherVariable::SunshineFraction, &[])),
        "oktamean" => Some((WeatherVariable::Okta, &[])),
        _ => None,
    }
}

/// Plan variable whose generated data supplies a correlation input.
pub(crate) fn quantity_source(quantity: &str) -> Option<&'static str> {
    match quantity {
        "kt" => Some(ROOT_KT),
        "sunfrac" => Some("sunfrac"),
        "diffuse_fraction" => Some("dhi_Whm2"),
        "oktamean" => Some("okta"),
        _ => None,
    }
}

/// Plan variable behind a regression input name. `Ok(None)` marks inputs
/// the engine synthesises itself (solar time, feedback terms).
pub(crate) fn exog_source(name: &str) -> std::result::Result<Option<&'static str>, ()> {
    match name {
        "hour_sin" | "hour_cos" => Ok(None),
        "prev_temp" | "prev_rh" => Ok(None),
        "ghi" => Ok(Some("ghi_Whm2")),
        "wind" => Ok(Some(ROOT_WIND)),
        "temp" => Ok(Some("temp_C")),
        "rh" => Ok(Some("rh_pct")),
        _ => Err(()),
    }
}

impl LibraryEntry {
    pub fn new(id: impl Into<String>, payload: ModelPayload) -> LibraryEntry {
        LibraryEntry {
            id: id.into(),
            site: None,
            period: None,
            payload,
        }
    }

    pub fn with_provenance(mut self, site: Site, period: PeriodSelector) -> LibraryEntry {
        self.site = Some(site);
        self.period = Some(period);
        self
    }

    pub fn kind(&self) -> &'static str {
        match self.payload {
            ModelPayload::Weibull { .. } => "weibull",
            ModelPayload::Clearness { .. } => "clearness",
            ModelPayload::Ar { .. } => "ar",
            ModelPayload::Mlp { .. } => "mlp",
            ModelPayload::Correlation { .. } => "correlation",
        }
    }

    /// Plan variables this entry can produce. Empty for entries that only
    /// carry diagnostics (correlations without a column emitter, or whose
    /// output is a root: roots are exclusively stochastic).
    pub fn outputs(&self) -> Vec<String> {
        match &self.payload {
            ModelPayload::Weibull { .. } => vec![ROOT_WIND.to_string()],
            ModelPayload::Clearness { .. } => vec![ROOT_KT.to_string()],
            ModelPayload::Ar { output, .. } => vec![output.clone()],
            ModelPayload::Mlp { .. } => vec!["temp_C".to_string(), "rh_pct".to_string()],
            ModelPayload::Correlation { model } => match emitted_column(&model.output) {
                Some((var, _)) => vec![var.column().to_string()],
                None => Vec::new(),
            },
        }
    }

    /// Plan variables that must exist before this entry can run. Input
    /// names the engine cannot drive are kept verbatim, which leaves the
    /// entry permanently blocked and shows up in unreachable diagnostics.
    pub fn inputs(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |name: String| {
            if !out.contains(&name) {
                out.push(name);
            }
        };
        match &self.payload {
            ModelPayload::Weibull { .. } | ModelPayload::Clearness { .. } => {}
            ModelPayload::Ar { model, .. } => {
                if let Some(exog) = &model.exog {
                    for name in &exog.names {
                        match exog_source(name) {
                            Ok(Some(var)) => push(var.to_string()),
                            Ok(None) => {
                                // Feedback terms are only driveable inside
                                // the coupled network.
                                if name.starts_with("prev_") {
                                    push(name.clone());
                                }
                            }
                            Err(()) => push(name.clone()),
                        }
                    }
                }
            }
            ModelPayload::Mlp { model } => {
                for name in &model.inputs {
                    match exog_source(name) {
                        Ok(Some(var)) => push(var.to_string()),
                        Ok(None) => {}
                        Err(()) => push(name.clone()),
                    }
                }
            }
            ModelPayload::Correlation { model } => {
                for name in &model.inputs {
                    match quantity_source(name) {
                        Some(var) => push(var.to_string()),
                        None => push(name.clone()),
                    }
                }
                if let Some((_, extras)) = emitted_column(&model.output) {
                    for extra in extras {
                        push(extra.to_string());
                    }
                }
            }
        }
        out
    }

    /// Conflict tier: models with dynamics or deterministic structure
    /// outrank marginal-only laws.
    pub(crate) fn rank(&self) -> u8 {
        match self.payload {
            ModelPayload::Weibull { .. } | ModelPayload::Clearness { .. } => 1,
            _ => 0,
        }
    }

    /// Recorded fit error; breaks ties within a rank, smaller wins.
    pub fn score(&self) -> f64 {
        match &self.payload {
            ModelPayload::Weibull { fit } => fit.ks,
            ModelPayload::Clearness { .. } => f64::INFINITY,
            // Innovation scale; physical units under the identity transform.
            ModelPayload::Ar { model, .. } => model.sigma * model.sd,
            ModelPayload::Mlp { model } => {
                model.val_rmse.iter().sum::<f64>() / model.val_rmse.len().max(1) as f64
            }
            ModelPayload::Correlation { model } => model.rmse,
        }
    }
}

/// All entries available to the planner, plus any loading warnings.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    pub entries: Vec<LibraryEntry>,
    pub warnings: Vec<String>,
}

impl ModelRegistry {
    pub fn new(entries: Vec<LibraryEntry>) -> Result<ModelRegistry> {
        let mut registry = ModelRegistry::default();
        for entry in entries {
            registry.push(entry)?;
        }
        Ok(registry)
    }

    pub fn push(&mut self, entry: LibraryEntry) -> Result<()> {
        validate_id(&entry.id)?;
        if self.entry(&entry.id).is_some() {
            return Err(Error::invalid(format!("duplicate model id {:?}", entry.id)));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entry(&self, id: &str) -> Option<&LibraryEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Entries fitted on exactly the given period.
    pub fn by_period(&self, period: &PeriodSelector) -> ModelRegistry {
        ModelRegistry {
            entries: self
                .entries
                .iter()
                .filter(|e| e.period.as_ref() == Some(period))
                .cloned()
                .collect(),
            warnings: Vec::new(),
        }
    }
}

fn validate_id(id: &str) -> Result<()> {
    if id.is_empty()
        || !id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
    {
        return Err(Error::invalid(format!(
            "model id {id:?} must be non-empty and use only letters, digits, '-', '_' or '.'"
        )));
    }
    Ok(())
}

/// Writes `entry` as `<dir>/<id>.json`, creating the directory if needed.
pub fn save_entry(dir: &Path, entry: &LibraryEntry) -> Result<PathBuf> {
    validate_id(&entry.id)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{}.json", entry.id));
    let mut text = serde_json::to_string_pretty(entry)
        .map_err(|e| Error::numeric(format!("cannot serialize model {:?}: {e}", entry.id)))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Loads every `*.json` entry under `dir`. An unreadable directory is an
/// error; unreadable, malformed or duplicate files are skipped with one
/// warning each so a single bad artifact cannot block the library.
/// `*.manifest.json` files are run records, not entries, and are ignored.
pub fn load_library(dir: &Path) -> Result<ModelRegistry> {
    let read = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = read
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            let manifest = p
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(".manifest.json"));
            p.extension().is_some_and(|ext| ext == "json") && !manifest
        })
        .collect();
    paths.sort();

    let mut registry = ModelRegistry::default();
    let mut seen = BTreeSet::new();
    for path in paths {
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) => {
                registry.warnings.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        match serde_json::from_str::<LibraryEntry>(&text) {
            Ok(entry) => {
                if !seen.insert(entry.id.clone()) {
                    registry
                        .warnings
                        .push(format!("{}: duplicate id {:?}, skipped", path.display(), entry.id));
                    continue;
                }
                registry.entries.push(entry);
            }
            Err(e) => registry.warnings.push(format!("{}: {e}", path.display())),
        }
    }
    Ok(registry)
}

/// Daily clearness root model: bounded Beta law plus AR persistence fitted
/// in normal-score space. Incomplete radiation days are skipped, so the
/// autocorrelation is estimated across any day gaps they leave.
pub fn fit_kt_model(series: &WeatherSeries, climate: Climate) -> Result<ArModel> {
    let daily = daily_clearness(series)?;
    let law = fit_clearness_law(&daily.values, climate)?;
    fit_ar_series(&daily.values, Transform::Clearness(law), false, MAX_ORDER)
}

/// Hourly wind root model: Weibull marginal plus AR with a diurnal cycle.
/// Only complete wind days are used so the cycle stays hour-aligned.
pub fn fit_wind_model(series: &WeatherSeries) -> Result<ArModel> {
    let mut values = Vec::new();
    for d in 0..series.n_days() {
        let day = series.day_slice(WeatherVariable::WindSpeed, d);
        if day.iter().all(Option::is_some) {
            values.extend(day.iter().map(|v| v.unwrap()));
        }
    }
    let fit = fit_weibull(&values)?;
    fit_ar_series(&values, Transform::Weibull(fit.law), true, MAX_ORDER)
}

/// Exogenous input names of the fallback temperature and humidity models.
pub const ARX_INPUTS: [&str; 4] = ["hour_sin", "hour_cos", "ghi", "wind"];

/// Fallback temperature and humidity models: linear regression on solar
/// time, radiation and wind, plus an AR model on the residuals. Both are
/// fitted on the same complete days.
pub fn fit_temp_rh_arx(series: &WeatherSeries) -> Result<(ArModel, ArModel)> {
    let needed = [
        WeatherVariable::Temperature,
        WeatherVariable::RelativeHumidity,
        WeatherVariable::GlobalHorizontal,
        WeatherVariable::WindSpeed,
    ];
    let mut temp = Vec::new();
    let mut rh = Vec::new();
    let mut exog = Vec::new();
    for d in 0..series.n_days() {
        let complete = needed
            .iter()
            .all(|&v| series.day_slice(v, d).iter().all(Option::is_some));
        if !complete {
            continue;
        }
        for h in 0..HOURS_PER_DAY {
            let i = d * HOURS_PER_DAY + h;
            let angle = 2.0 * std::f64::consts::PI * h as f64 / HOURS_PER_DAY as f64;
            exog.push(vec![
                angle.sin(),
                angle.cos(),
                series.value(WeatherVariable::GlobalHorizontal, i).unwrap(),
                series.value(WeatherVariable::WindSpeed, i).unwrap(),
            ]);
            temp.push(series.value(WeatherVariable::Temperature, i).unwrap());
            rh.push(series.value(WeatherVariable::RelativeHumidity, i).unwrap());
        }
    }
    let t = fit_arx(&temp, &ARX_INPUTS, &exog, MAX_ORDER)?;
    let r = fit_arx(&rh, &ARX_INPUTS, &exog, MAX_ORDER)?;
    Ok((t, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solar::CorrelationForm;
    use crate::stoch::Climate;

    fn sample_entries() -> Vec<LibraryEntry> {
        let law = crate::stoch::WeibullLaw::new(2.0, 5.0).unwrap();
        let weibull = LibraryEntry::new(
            "wind-weibull",
            ModelPayload::Weibull {
                fit: WeibullFit {
                    law,
                    n_used: 8760,
                    zero_fraction: 0.01,
                    iterations: 12,
                    ks: 0.02,
                },
            },
        );
        let clearness = LibraryEntry::new(
            "kt-beta",
            ModelPayload::Clearness {
                law: ClearnessLaw {
                    kt_min: 0.15,
                    kt_max: 0.82,
                    alpha: 2.5,
                    beta: 1.8,
                    mean_kt: 0.5395348837209302,
                    climate: Climate::Tropical,
                },
            },
        );
        let ar = LibraryEntry::new(
            "wind-ar",
            ModelPayload::Ar {
                output: ROOT_WIND.to_string(),
                model: ArModel {
                    order: 2,
                    phi: vec![0.5, 0.2],
                    sigma: 0.7,
                    mean: 0.1,
                    sd: 1.1,
                    diurnal: Some(vec![0.0; HOURS_PER_DAY]),
                    transform: Transform::Weibull(law),
                    exog: None,
                    aic: 123.4,
                    n_fit: 8760,
                },
            },
        );
        let mlp = LibraryEntry::new(
            "temp-rh-net",
            ModelPayload::Mlp {
                model: MlpModel {
                    w1: vec![vec![0.25; 6]; 2],
                    b1: vec![0.0, -0.5],
                    w2: vec![vec![1.0, -1.0]; 2],
                    b2: vec![0.1, 0.2],
                    in_mean: vec![0.0; 6],
                    in_sd: vec![1.0; 6],
                    out_mean: vec![25.0, 75.0],
                    out_sd: vec![3.0, 10.0],
                    val_rmse: vec![0.7, 3.1],
                    inputs: crate::stoch::MLP_INPUTS.iter().map(|s| s.to_string()).collect(),
                    n_fit: 6000,
                    seed: 3,
                    epochs: 150,
                },
            },
        );
        let correlation = LibraryEntry::new(
            "erbs",
            ModelPayload::Correlation {
                model: CorrelationModel::canonical(CorrelationForm::Erbs).unwrap(),
            },
        )
        .with_provenance(
            Site::new("saint-pierre", -21.3, 55.5, 50.0).unwrap(),
            PeriodSelector::Months(vec![11, 12, 1]),
        );
        vec![weibull, clearness, ar, mlp, correlation]
    }

    #[test]
    fn entries_round_trip_through_the_library_directory() {
        let dir = tempfile::tempdir().unwrap();
        let entries = sample_entries();
        for entry in &entries {
            let path = save_entry(dir.path(), entry).unwrap();
            assert_eq!(path.file_name().unwrap().to_str().unwrap(), format!("{}.json", entry.id));
        }
        let registry = load_library(dir.path()).unwrap();
        assert!(registry.warnings.is_empty(), "{:?}", registry.warnings);
        assert_eq!(registry.entries.len(), entries.len());
        for entry in &entries {
            assert_eq!(registry.entry(&entry.id), Some(entry));
        }
    }

    #[test]
    fn loading_skips_bad_files_with_warnings() {
        let dir = tempfile::tempdir().unwrap();
        let entries = sample_entries();
        save_entry(dir.path(), &entries[0]).unwrap();
        save_entry(dir.path(), &entries[1]).unwrap();
        fs::write(dir.path().join("broken.json"), "{not json").unwrap();
        fs::write(
            dir.path().join("alien.json"),
            r#"{"id":"alien","kind":"quantum","qubits":3}"#,
        )
        .unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();

        let registry = load_library(dir.path()).unwrap();
        assert_eq!(registry.entries.len(), 2);
        assert_eq!(registry.warnings.len(), 2);
        assert!(registry.warnings.iter().any(|w| w.contains("broken.json")));
        assert!(registry.warnings.iter().any(|w| w.contains("alien.json")));
    }

    #[test]
    fn duplicate_ids_on_disk_keep_the_first_file() {
        let dir = tempfile::tempdir().unwrap();
        let entry = &sample_entries()[0];
        save_entry(dir.path(), entry).unwrap();
        let mut copy = entry.clone();
        copy.id = "zz-alias".to_string();
        let text = serde_json::to_string(entry).unwrap();
        fs::write(dir.path().join("zz-alias.json"), text).unwrap();

        let registry = load_library(dir.path()).unwrap();
        assert_eq!(registry.entries.len(), 1);
        assert_eq!(registry.warnings.len(), 1);
        assert!(registry.warnings[0].contains("duplicate"));
    }

    #[test]
    fn missing_directory_is_an_error() {
        assert!(load_library(Path::new("/nonexistent/library")).is_err());
    }

    #[test]
    fn registry_rejects_bad_and_duplicate_ids() {
        let mut registry = ModelRegistry::default();
        let entry = sample_entries().remove(0);
        registry.push(entry.clone()).unwrap();
        assert!(registry.push(entry.clone()).is_err());

        let mut bad = entry;
        bad.id = "no/slashes".to_string();
        assert!(registry.push(bad.clone()).is_err());
        bad.id = String::new();
        assert!(registry.push(bad).is_err());
    }

    #[test]
    fn period_filter_selects_matching_entries() {
        let registry = ModelRegistry::new(sample_entries()).unwrap();
        let summer = registry.by_period(&PeriodSelector::Months(vec![11, 12, 1]));
        assert_eq!(summer.entries.len(), 1);
        assert_eq!(summer.entries[0].id, "erbs");
        let none = registry.by_period(&PeriodSelector::All);
        assert!(none.entries.is_empty());
    }

    #[test]
    fn plan_vocabulary_matches_the_entry_kinds() {
        let entries = sample_entries();
        assert_eq!(entries[0].outputs(), [ROOT_WIND]);
        assert_eq!(entries[1].outputs(), [ROOT_KT]);
        assert!(entries[0].inputs().is_empty());
        assert_eq!(entries[3].outputs(), ["temp_C", "rh_pct"]);
        assert_eq!(entries[3].inputs(), ["ghi_Whm2", ROOT_WIND]);
        assert_eq!(entries[4].outputs(), ["dhi_Whm2"]);
        assert_eq!(entries[4].inputs(), [ROOT_KT, "ghi_Whm2"]);

        // A correlation without a column emitter is diagnostics-only.
        let diag = LibraryEntry::new(
            "tmean-poly",
            ModelPayload::Correlation {
                model: CorrelationModel::poly(2, "kt", "tmean").unwrap(),
            },
        );
        assert!(diag.outputs().is_empty());
    }
}
