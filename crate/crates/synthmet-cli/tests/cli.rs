//! Behavioral checks of every subcommand against fixtures written once per
//! run: the demo year and library, planted series with known classes and
//! windows, and constant exterior forcing for the load model.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::LazyLock;

use chrono::NaiveDate;
use synthmet::building::{demo_building_json, demo_comfort_zones_json};
use synthmet::demo::{build_demo_library, demo_site, demo_year};
use synthmet::generate::{load_library, ModelPayload};
use synthmet::solar::{daily_clearness, hourly_profile, solar_geometry};
use synthmet::weather::{WeatherSeries, WeatherVariable, HOURS_PER_DAY};

static FIXTURE: LazyLock<PathBuf> = LazyLock::new(|| {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-fixture");
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("fixture directory");

    fs::write(dir.join("weather.csv"), demo_year().to_csv()).expect("weather fixture");
    fs::write(dir.join("building.json"), demo_building_json()).expect("building fixture");
    fs::write(dir.join("comfort.json"), demo_comfort_zones_json()).expect("comfort fixture");
    build_demo_library(&dir.join("library")).expect("library fixture");

    fs::write(dir.join("planted-ghi.csv"), planted_radiation().to_csv())
        .expect("classification fixture");
    fs::write(dir.join("planted-temp.csv"), planted_warm_window().to_csv())
        .expect("search fixture");
    fs::write(dir.join("hot-dry.csv"), constant_forcing(32.0, 60.0).to_csv())
        .expect("dry fixture");
    fs::write(dir.join("hot-humid.csv"), constant_forcing(32.0, 90.0).to_csv())
        .expect("humid fixture");
    dir
});

/// Ninety days cycling through three radiation day types: clear, overcast,
/// and a clear morning with a damped afternoon.
fn planted_radiation() -> WeatherSeries {
    let site = demo_site();
    let start = NaiveDate::from_ymd_opt(2003, 1, 1).expect("valid date");
    let n_days = 90;
    let mut ghi = Vec::with_capacity(n_days * HOURS_PER_DAY);
    for d in 0..n_days {
        let geom = solar_geometry(&site, d as u32 + 1).expect("valid day");
        let mut p = match d % 3 {
            0 => hourly_profile(0.70, &geom).expect("valid clearness"),
            1 => hourly_profile(0.25, &geom).expect("valid clearness"),
            _ => hourly_profile(0.70, &geom).expect("valid clearness"),
        };
        if d % 3 == 2 {
            let noon = p
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(h, _)| h)
                .unwrap_or(12);
            for v in p.iter_mut().skip(noon + 1) {
                *v *= 0.35;
            }
        }
        ghi.extend(p);
    }
    let mut series =
        WeatherSeries::with_consecutive_days(site, start, n_days).expect("layout");
    series
        .set_column_full(WeatherVariable::GlobalHorizontal, ghi)
        .expect("complete column");
    series
}

/// Sixty flat days at 25 C with one warm block, days 20 to 24, at 30.5 C.
fn planted_warm_window() -> WeatherSeries {
    let site = demo_site();
    let start = NaiveDate::from_ymd_opt(2003, 1, 1).expect("valid date");
    let n_days = 60;
    let mut temp = Vec::with_capacity(n_days * HOURS_PER_DAY);
    for d in 0..n_days {
        let value = if (20..25).contains(&d) { 30.5 } else { 25.0 };
        temp.extend([value; HOURS_PER_DAY]);
    }
    let mut series =
        WeatherSeries::with_consecutive_days(site, start, n_days).expect("layout");
    series
        .set_column_full(WeatherVariable::Temperature, temp)
        .expect("complete column");
    series
}

/// Three days of constant exterior temperature and humidity, no sun.
fn constant_forcing(temp: f64, rh: f64) -> WeatherSeries {
    let site = demo_site();
    let start = NaiveDate::from_ymd_opt(2003, 2, 1).expect("valid date");
    let mut w = WeatherSeries::with_consecutive_days(site, start, 3).expect("layout");
    let n = w.len();
    w.set_column_full(WeatherVariable::Temperature, vec![temp; n])
        .expect("complete column");
    w.set_column_full(WeatherVariable::RelativeHumidity, vec![rh; n])
        .expect("complete column");
    w.set_column_full(WeatherVariable::GlobalHorizontal, vec![0.0; n])
        .expect("complete column");
    w.set_column_full(WeatherVariable::Okta, vec![0.0; n])
        .expect("complete column");
    w
}

fn out_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("cli-out-{name}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("output directory");
    dir
}

fn synthmet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synthmet"))
        .args(args)
        .env_remove("SYNTHMET_LIBDIR")
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn path_str(p: &Path) -> String {
    p.to_str().expect("utf-8 path").to_string()
}

/// Column sums of the loads table, (sensible, latent).
fn load_sums(path: &Path) -> (f64, f64) {
    let text = fs::read_to_string(path).expect("loads table");
    let mut sensible = 0.0;
    let mut latent = 0.0;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        sensible += fields[1].parse::<f64>().expect("sensible value");
        latent += fields[2].parse::<f64>().expect("latent value");
    }
    (sensible, latent)
}

fn window_starts(path: &Path) -> BTreeSet<String> {
    fs::read_to_string(path)
        .expect("window table")
        .lines()
        .skip(1)
        .map(|line| line.split(',').next().expect("start field").to_string())
        .collect()
}

#[test]
fn describe_writes_a_report_and_a_histogram() {
    let fixture = &*FIXTURE;
    let out = out_dir("describe");
    let run = synthmet(&[
        "describe",
        "--input",
        &path_str(&fixture.join("weather.csv")),
        "--var",
        "temp_C",
        "--indicator",
        "mean",
        "--bins",
        "10",
        "--out",
        &path_str(&out),
    ]);
    let stdout = stdout_of(&run);
    assert!(stdout.contains("temp_C mean"), "stdout: {stdout}");
    assert!(stdout.contains("365 complete days"), "stdout: {stdout}");

    let report = fs::read_to_string(out.join("describe.txt")).expect("report");
    assert!(report.contains("mean") && report.contains("max"));
    let hist = fs::read_to_string(out.join("histogram.csv")).expect("histogram");
    assert_eq!(hist.lines().count(), 11, "header plus ten bins");
    assert!(hist.starts_with("bin_low,bin_high,count,frequency"));
    assert!(out.join("describe.manifest.json").is_file());
}

#[test]
fn describe_rejects_unknown_columns_with_a_usage_error() {
    let fixture = &*FIXTURE;
    let run = synthmet(&[
        "describe",
        "--input",
        &path_str(&fixture.join("weather.csv")),
        "--var",
        "nope",
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("unknown column"));
}

#[test]
fn describe_restricts_to_the_selected_months() {
    let fixture = &*FIXTURE;
    let out = out_dir("describe-months");
    let run = synthmet(&[
        "describe",
        "--input",
        &path_str(&fixture.join("weather.csv")),
        "--var",
        "temp_C",
        "--months",
        "11,12,1,2,3,4",
        "--out",
        &path_str(&out),
    ]);
    let stdout = stdout_of(&run);
    assert!(stdout.contains("181 complete days"), "stdout: {stdout}");
}

#[test]
fn fit_families_round_trip_through_the_library() {
    let fixture = &*FIXTURE;
    let lib = out_dir("fit-lib");
    let weather = path_str(&fixture.join("weather.csv"));
    for model in ["weibull", "clearness", "correlation:page"] {
        let run = synthmet(&[
            "fit",
            "--input",
            &weather,
            "--model",
            model,
            "--out",
            &path_str(&lib),
        ]);
        stdout_of(&run);
    }

    let registry = load_library(&lib).expect("library loads");
    assert!(registry.warnings.is_empty(), "{:?}", registry.warnings);
    let ids: Vec<&str> = registry.entries.iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids, ["diffuse-fraction-page", "kt-law", "wind-weibull"]);
    assert!(matches!(
        registry.entry("wind-weibull").unwrap().payload,
        ModelPayload::Weibull { .. }
    ));
    assert!(matches!(
        registry.entry("kt-law").unwrap().payload,
        ModelPayload::Clearness { .. }
    ));
    assert!(matches!(
        registry.entry("diffuse-fraction-page").unwrap().payload,
        ModelPayload::Correlation { .. }
    ));
}

#[test]
fn classify_recovers_the_planted_day_types() {
    let fixture = &*FIXTURE;
    let out = out_dir("classify");
    let run = synthmet(&[
        "classify",
        "--input",
        &path_str(&fixture.join("planted-ghi.csv")),
        "--vars",
        "ghi_Whm2",
        "--k",
        "3",
        "--out",
        &path_str(&out),
    ]);
    let stdout = stdout_of(&run);
    assert!(stdout.contains("3 classes"), "stdout: {stdout}");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("classify.json")).expect("report"))
            .expect("valid json");
    let classes = report["per_variable"][0]["classes"]
        .as_array()
        .expect("classes");
    assert_eq!(classes.len(), 3);
    let frequencies: Vec<f64> = classes
        .iter()
        .map(|c| c["frequency"].as_f64().expect("frequency"))
        .collect();
    assert!((frequencies.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    for c in classes {
        assert_eq!(c["members"].as_u64(), Some(30), "equal planted thirds");
    }
}

#[test]
fn classify_accepts_a_single_class() {
    let fixture = &*FIXTURE;
    let out = out_dir("classify-single");
    let run = synthmet(&[
        "classify",
        "--input",
        &path_str(&fixture.join("planted-ghi.csv")),
        "--vars",
        "ghi_Whm2",
        "--k",
        "1",
        "--out",
        &path_str(&out),
    ]);
    stdout_of(&run);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("classify.json")).expect("report"))
            .expect("valid json");
    let classes = report["per_variable"][0]["classes"]
        .as_array()
        .expect("classes");
    assert_eq!(classes.len(), 1);
    assert!((classes[0]["frequency"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn search_finds_the_planted_window() {
    let fixture = &*FIXTURE;
    let out = out_dir("search");
    let table = out.join("windows.csv");
    let run = synthmet(&[
        "search",
        "--input",
        &path_str(&fixture.join("planted-temp.csv")),
        "--criteria",
        "tmean:30:32",
        "--len",
        "5",
        "--out",
        &path_str(&table),
    ]);
    let stdout = stdout_of(&run);
    assert!(stdout.contains("1 matching windows"), "stdout: {stdout}");
    let starts = window_starts(&table);
    assert_eq!(starts.len(), 1);
    assert!(starts.contains("2003-01-21"), "starts: {starts:?}");
}

#[test]
fn search_writes_an_empty_table_when_nothing_matches() {
    let fixture = &*FIXTURE;
    let out = out_dir("search-empty");
    let table = out.join("windows.csv");
    let run = synthmet(&[
        "search",
        "--input",
        &path_str(&fixture.join("planted-temp.csv")),
        "--criteria",
        "tmean:45:50",
        "--len",
        "5",
        "--out",
        &path_str(&table),
    ]);
    stdout_of(&run);
    let text = fs::read_to_string(&table).expect("window table");
    assert_eq!(text.lines().count(), 1, "header only: {text:?}");
}

#[test]
fn search_tightening_bounds_shrinks_the_result() {
    let fixture = &*FIXTURE;
    let out = out_dir("search-subset");
    let weather = path_str(&fixture.join("weather.csv"));
    let wide = out.join("wide.csv");
    let tight = out.join("tight.csv");
    for (criteria, table) in [("tmean:20:40", &wide), ("tmean:26:40", &tight)] {
        let run = synthmet(&[
            "search",
            "--input",
            &weather,
            "--criteria",
            criteria,
            "--len",
            "3",
            "--all-windows",
            "--out",
            &path_str(table),
        ]);
        stdout_of(&run);
    }
    let wide_starts = window_starts(&wide);
    let tight_starts = window_starts(&tight);
    assert!(!wide_starts.is_empty(), "wide criteria found nothing");
    assert!(
        tight_starts.is_subset(&wide_starts),
        "{} tight vs {} wide",
        tight_starts.len(),
        wide_starts.len()
    );
}

#[test]
fn generate_hits_targets_and_is_reproducible() {
    let fixture = &*FIXTURE;
    let library = path_str(&fixture.join("library"));
    let first = out_dir("generate-a").join("generated.csv");
    let second = out_dir("generate-b").join("generated.csv");
    for path in [&first, &second] {
        let run = synthmet(&[
            "generate",
            "--library",
            &library,
            "--days",
            "5",
            "--seed",
            "11",
            "--target",
            "kt=0.75",
            "--target",
            "wind=3",
            "--out",
            &path_str(path),
        ]);
        stdout_of(&run);
    }

    let series = WeatherSeries::read_csv(&first).expect("generated series");
    let kt = daily_clearness(&series).expect("clearness");
    let kt_mean = kt.values.iter().sum::<f64>() / kt.values.len() as f64;
    assert!((kt_mean - 0.75).abs() <= 0.02, "kt mean {kt_mean}");
    let wind: Vec<f64> = series
        .column(WeatherVariable::WindSpeed)
        .iter()
        .flatten()
        .copied()
        .collect();
    let wind_mean = wind.iter().sum::<f64>() / wind.len() as f64;
    assert!((wind_mean - 3.0).abs() <= 0.2, "wind mean {wind_mean}");

    assert_eq!(
        fs::read(&first).expect("first run"),
        fs::read(&second).expect("second run"),
        "same seed must reproduce the same bytes"
    );
}

#[test]
fn generate_prompts_when_several_models_fit() {
    let fixture = &*FIXTURE;
    let out = out_dir("generate-interactive").join("generated.csv");
    let mut child = Command::new(env!("CARGO_BIN_EXE_synthmet"))
        .args([
            "generate",
            "--library",
            &path_str(&fixture.join("library")),
            "--days",
            "2",
            "--seed",
            "5",
            "--interactive",
            "--out",
            &path_str(&out),
        ])
        .env_remove("SYNTHMET_LIBDIR")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary starts");
    child
        .stdin
        .as_mut()
        .expect("stdin handle")
        .write_all(b"2\n2\n")
        .expect("choices");
    let run = child.wait_with_output().expect("binary finishes");
    let stdout = stdout_of(&run);
    assert!(
        stdout.contains("select the model for temp_C:"),
        "stdout: {stdout}"
    );
    assert!(
        stdout.contains("select the model for rh_pct:"),
        "stdout: {stdout}"
    );
    // Choice 2 is the network in both prompts, so it must appear in the plan.
    assert!(
        stdout.lines().any(|l| l.starts_with("temp-rh-net -> ")),
        "stdout: {stdout}"
    );
    assert!(out.is_file());
}

#[test]
fn simulate_reports_loads_and_comfort() {
    let fixture = &*FIXTURE;
    let out = out_dir("simulate");
    let run = synthmet(&[
        "simulate",
        "--building",
        &path_str(&fixture.join("building.json")),
        "--weather",
        &path_str(&fixture.join("weather.csv")),
        "--comfort",
        &path_str(&fixture.join("comfort.json")),
        "--out",
        &path_str(&out),
    ]);
    let stdout = stdout_of(&run);
    assert!(stdout.contains("cooling over 365 days"), "stdout: {stdout}");

    let (sensible, _) = load_sums(&out.join("loads.csv"));
    assert!(sensible > 0.0, "sensible {sensible}");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("comfort.json")).expect("report"))
            .expect("valid json");
    let zones = report["zones"].as_array().expect("zones");
    assert!(!zones.is_empty());
    for zone in zones {
        for (_, f) in zone["fractions"].as_object().expect("fractions") {
            let f = f.as_f64().expect("fraction");
            assert!((0.0..=1.0).contains(&f), "fraction {f}");
        }
    }
    assert!(out.join("simulate.manifest.json").is_file());
}

#[test]
fn simulate_latent_load_grows_with_exterior_humidity() {
    let fixture = &*FIXTURE;
    let building = path_str(&fixture.join("building.json"));
    let dry_out = out_dir("simulate-dry");
    let humid_out = out_dir("simulate-humid");
    for (weather, out) in [("hot-dry.csv", &dry_out), ("hot-humid.csv", &humid_out)] {
        let run = synthmet(&[
            "simulate",
            "--building",
            &building,
            "--weather",
            &path_str(&fixture.join(weather)),
            "--out",
            &path_str(out),
        ]);
        stdout_of(&run);
    }
    let (_, dry_latent) = load_sums(&dry_out.join("loads.csv"));
    let (_, humid_latent) = load_sums(&humid_out.join("loads.csv"));
    assert!(
        humid_latent > dry_latent,
        "latent {humid_latent} at rh 90 vs {dry_latent} at rh 60"
    );
}
