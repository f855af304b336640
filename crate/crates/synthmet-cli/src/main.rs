//! Command line front end: site statistics, model libraries, representative
//! days, sequence search, conditioned generation and building simulation,
//! all over the shared weather CSV format.
//!
//! Every run writes exactly one `<subcommand>.manifest.json` next to its
//! primary outputs recording the arguments, the seed, input digests and the
//! tool version. Exit codes: 0 success (including empty results), 1 runtime
//! or data error, 2 usage error.

use std::collections::{BTreeMap, BTreeSet};
use std::env;
use std::fs;
use std::io::{self, BufRead, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use synthmet::building::{
    comfort_fraction, default_comfort_zones, demo_building_json, demo_comfort_zones_json,
    ideal_hvac_loads, parse_comfort_zones, read_building, simulate_thermal,
};
use synthmet::classify::{representative_days, search_sequences, Predicate, SequenceCriteria};
use synthmet::demo::{build_demo_library, demo_site, demo_year};
use synthmet::generate::{
    fit_kt_model, fit_temp_rh_arx, fit_wind_model, generate, load_library, save_entry,
    GenerationRequest, LibraryEntry, ModelPayload, ModelRegistry, Target, ROOT_KT, ROOT_WIND,
};
use synthmet::psychro::{barometric_pressure, moist_air_state_at, saturation_vapor_pressure};
use synthmet::solar::{
    daily_clearness, fit_correlation, indicator_spec, CorrelationForm, CorrelationModel,
    DAILY_QUANTITIES,
};
use synthmet::stats::{histogram, summarize, Bins};
use synthmet::stoch::{fit_clearness_law, fit_mlp, fit_weibull, Climate, MlpSpec};
use synthmet::weather::{
    fmt_num, IndicatorKind, PeriodSelector, Site, WeatherSeries, WeatherVariable,
};

const ALL_COLUMNS: [WeatherVariable; 9] = [
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

#[derive(Parser)]
#[command(
    name = "synthmet",
    version,
    about = "Synthetic weather toolkit: statistics, model libraries, representative days, \
             sequence search, conditioned generation and building load simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summary statistics and a histogram of one daily indicator
    Describe(DescribeArgs),
    /// Fit one model family and save it as a library entry
    Fit(FitArgs),
    /// Representative days from a principal-component day classification
    Classify(ClassifyArgs),
    /// Rank windows of consecutive days matching numeric criteria
    Search(SearchArgs),
    /// Generate a synthetic hourly weather file from a model library
    Generate(GenerateArgs),
    /// Hourly thermal simulation: cooling loads and comfort fractions
    Simulate(SimulateArgs),
    /// Write the bundled demo site: weather, dwelling, comfort zones, library
    Demo(DemoArgs),
}

#[derive(Args)]
struct DescribeArgs {
    /// Weather CSV to read
    #[arg(long)]
    input: PathBuf,
    /// Weather column (temp_C, rh_pct, wind_ms, winddir_deg, ghi_Whm2, dhi_Whm2,
    /// bni_Whm2, sunfrac, okta)
    #[arg(long)]
    var: String,
    /// Daily statistic: mean, min, max, amplitude or daily-total
    #[arg(long, default_value = "mean")]
    indicator: String,
    /// Period filter: all, a month list like 11,12,1,2,3,4, or first..last dates
    #[arg(long, default_value = "all")]
    months: String,
    /// Number of equal-width histogram bins
    #[arg(long, default_value_t = 12)]
    bins: usize,
    /// Directory receiving describe.txt and histogram.csv
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Weather CSV to fit on
    #[arg(long)]
    input: PathBuf,
    /// Model family: weibull, clearness, ar, mlp or correlation:<form> where
    /// <form> is angstrom-black, inverse-angstrom-black, erbs, page,
    /// liu-jordan, gopinathan, poly1, poly2 or poly3
    #[arg(long)]
    model: String,
    /// For ar: the column to drive (kt, wind_ms, temp_C, rh_pct).
    /// For polyN correlations: the quantity pair input:output
    #[arg(long)]
    var: Option<String>,
    /// Clearness climate prior: tropical or temperate
    #[arg(long, default_value = "tropical")]
    climate: String,
    /// Entry id; defaults to a per-family name
    #[arg(long)]
    id: Option<String>,
    /// Period filter, as in describe
    #[arg(long, default_value = "all")]
    months: String,
    /// Library directory (defaults to $SYNTHMET_LIBDIR)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Weather CSV to read
    #[arg(long)]
    input: PathBuf,
    /// Comma list of columns to classify, e.g. ghi_Whm2,temp_C
    #[arg(long)]
    vars: String,
    /// Class count; omit for automatic selection
    #[arg(long)]
    k: Option<usize>,
    /// Period filter, as in describe
    #[arg(long, default_value = "all")]
    months: String,
    /// Directory receiving classify.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    /// Weather CSV to read
    #[arg(long)]
    input: PathBuf,
    /// Comma list of quantity:min:max triples, e.g. tmean:30:32,wmean:0:3.
    /// An empty bound means unbounded on that side
    #[arg(long)]
    criteria: String,
    /// Window length in days
    #[arg(long, default_value_t = 5)]
    len: usize,
    /// Keep overlapping windows instead of the best of each cluster
    #[arg(long)]
    all_windows: bool,
    /// Period filter, as in describe
    #[arg(long, default_value = "all")]
    months: String,
    /// Output CSV of ranked windows
    #[arg(long, default_value = "windows.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// Model library directory (defaults to $SYNTHMET_LIBDIR)
    #[arg(long)]
    library: Option<PathBuf>,
    /// Number of days to generate
    #[arg(long)]
    days: usize,
    /// First generated day
    #[arg(long, default_value = "2003-01-01")]
    start: NaiveDate,
    /// Site as name,lat,lon,alt; defaults to the demo island site
    #[arg(long)]
    site: Option<String>,
    /// Comma list of output columns; defaults to every column
    #[arg(long)]
    vars: Option<String>,
    /// Daily-mean target name=value or name=value:tolerance, e.g. kt=0.75 or
    /// wind=3:0.5. Default tolerances: kt 0.02, wind 0.2
    #[arg(long = "target")]
    targets: Vec<String>,
    /// Force a model for a column: column=entry-id
    #[arg(long = "use")]
    uses: Vec<String>,
    /// Random seed; the same seed reproduces the same file
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output weather CSV
    #[arg(long, default_value = "generated.csv")]
    out: PathBuf,
    /// Ask on stdin which model to use when several produce one column
    #[arg(long)]
    interactive: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Building JSON: zones, couplings, surfaces, loads, hvac
    #[arg(long)]
    building: PathBuf,
    /// Weather CSV driving the simulation
    #[arg(long)]
    weather: PathBuf,
    /// Comfort zone polygons JSON; defaults to the bundled set
    #[arg(long)]
    comfort: Option<PathBuf>,
    /// Directory receiving loads.csv and comfort.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct DemoArgs {
    /// Target directory
    #[arg(long, default_value = "demo")]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    /// Bad flag or value; exits 2 like a parse failure.
    Usage(String),
    /// Valid request that failed on data or IO; exits 1.
    Runtime(String),
}

fn runtime(e: synthmet::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Describe(a) => cmd_describe(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Search(a) => cmd_search(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Demo(a) => cmd_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_describe(args: &DescribeArgs) -> Result<(), CliError> {
    let var = parse_variable(&args.var)?;
    let kind = parse_indicator(&args.indicator)?;
    if args.bins == 0 {
        return Err(CliError::Usage("at least one histogram bin is required".to_string()));
    }
    let period = parse_period(&args.months)?;
    let series = period.apply(&read_series(&args.input)?).map_err(runtime)?;

    let indicator = series.daily_indicators(var, kind).map_err(runtime)?;
    let table = summarize(&indicator).map_err(runtime)?;
    let hist = histogram(&indicator.values, Bins::Count(args.bins)).map_err(runtime)?;

    let mut report = format!(
        "{} {} at {}, {} complete days ({} excluded), period {}\n",
        var.column(),
        kind,
        series.site.name,
        table.count,
        indicator.excluded_days.len(),
        period,
    );
    report.push_str(&format!(
        "  mean {}\n  sd   {}\n  min  {}\n  max  {}\n",
        fmt_num(table.mean),
        fmt_num(table.sd),
        fmt_num(table.min),
        fmt_num(table.max),
    ));

    let mut csv = String::from("bin_low,bin_high,count,frequency\n");
    for (i, (&count, &freq)) in hist.counts.iter().zip(&hist.frequencies).enumerate() {
        csv.push_str(&format!(
            "{},{},{count},{}\n",
            fmt_num(hist.edges[i]),
            fmt_num(hist.edges[i + 1]),
            fmt_num(freq),
        ));
    }

    let report_path = args.out.join("describe.txt");
    let hist_path = args.out.join("histogram.csv");
    write_file(&report_path, &report)?;
    write_file(&hist_path, &csv)?;
    print!("{report}");
    write_manifest(
        &args.out,
        "describe",
        None,
        &[args.input.clone()],
        &[report_path.clone(), hist_path.clone()],
    )?;
    println!("wrote {} and {}", report_path.display(), hist_path.display());
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let dir = library_dir(args.out.clone(), "--out")?;
    let climate = parse_climate(&args.climate)?;
    let period = parse_period(&args.months)?;
    let series = period.apply(&read_series(&args.input)?).map_err(runtime)?;
    let site = series.site.clone();

    let (default_id, payload) = match args.model.as_str() {
        "weibull" => {
            let values: Vec<f64> = series
                .column(WeatherVariable::WindSpeed)
                .iter()
                .flatten()
                .copied()
                .collect();
            let fit = fit_weibull(&values).map_err(runtime)?;
            ("wind-weibull".to_string(), ModelPayload::Weibull { fit })
        }
        "clearness" => {
            let daily = daily_clearness(&series).map_err(runtime)?;
            let law = fit_clearness_law(&daily.values, climate).map_err(runtime)?;
            ("kt-law".to_string(), ModelPayload::Clearness { law })
        }
        "ar" => fit_ar_payload(&series, args.var.as_deref(), climate)?,
        "mlp" => {
            let model = fit_mlp(&series, &MlpSpec::default()).map_err(runtime)?;
            ("temp-rh-net".to_string(), ModelPayload::Mlp { model })
        }
        other => {
            let Some(name) = other.strip_prefix("correlation:") else {
                return Err(CliError::Usage(format!(
                    "unknown model family {other:?}; use weibull, clearness, ar, mlp or correlation:<form>"
                )));
            };
            let Some(form) = CorrelationForm::from_name(name) else {
                return Err(CliError::Usage(format!(
                    "unknown correlation form {name:?}; see --help for the list"
                )));
            };
            let template = correlation_template(form, args.var.as_deref())?;
            let model = fit_correlation(&template, &series).map_err(runtime)?;
            let id = format!("{}-{}", model.output.replace('_', "-"), form.name());
            (id, ModelPayload::Correlation { model })
        }
    };

    let id = args.id.clone().unwrap_or(default_id);
    let entry = LibraryEntry::new(id, payload).with_provenance(site, period);
    let path = save_entry(&dir, &entry).map_err(runtime)?;
    write_manifest(&dir, "fit", None, &[args.input.clone()], &[path.clone()])?;
    println!("wrote {}", path.display());
    Ok(())
}

fn fit_ar_payload(
    series: &WeatherSeries,
    var: Option<&str>,
    climate: Climate,
) -> Result<(String, ModelPayload), CliError> {
    let var = var.ok_or_else(|| {
        CliError::Usage("--model ar needs --var kt, wind_ms, temp_C or rh_pct".to_string())
    })?;
    let (id, output, model) = match var {
        "kt" => ("kt-ar", ROOT_KT, fit_kt_model(series, climate).map_err(runtime)?),
        "wind" | "wind_ms" => ("wind-ar", ROOT_WIND, fit_wind_model(series).map_err(runtime)?),
        "temp_C" | "rh_pct" => {
            let (temp, rh) = fit_temp_rh_arx(series).map_err(runtime)?;
            if var == "temp_C" {
                ("temp-arx", "temp_C", temp)
            } else {
                ("rh-arx", "rh_pct", rh)
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "no autoregressive fit for {other:?}; use kt, wind_ms, temp_C or rh_pct"
            )));
        }
    };
    Ok((id.to_string(), ModelPayload::Ar { output: output.to_string(), model }))
}

fn correlation_template(
    form: CorrelationForm,
    var: Option<&str>,
) -> Result<CorrelationModel, CliError> {
    if let CorrelationForm::Poly(degree) = form {
        let pair = var.ok_or_else(|| {
            CliError::Usage(
                "polynomial correlations need --var input:output, e.g. --var sunfrac:oktamean"
                    .to_string(),
            )
        })?;
        let Some((input, output)) = pair.split_once(':') else {
            return Err(CliError::Usage(format!(
                "--var {pair:?} is not an input:output quantity pair"
            )));
        };
        return CorrelationModel::poly(degree, input, output)
            .map_err(|e| CliError::Usage(e.to_string()));
    }
    // Gopinathan has a fixed signature but no published default coefficients;
    // start from zero, the fit replaces them.
    match form {
        CorrelationForm::Gopinathan => CorrelationModel::with_params(
            form,
            &["sunfrac", "kt"],
            "diffuse_fraction",
            vec![0.0; 3],
        ),
        _ => CorrelationModel::canonical(form),
    }
    .map_err(runtime)
}

#[derive(Serialize)]
struct ClassReport {
    frequency: f64,
    representative: String,
    members: usize,
}

#[derive(Serialize)]
struct VariableReport {
    variable: String,
    days: usize,
    retained: usize,
    explained: Vec<f64>,
    classes: Vec<ClassReport>,
}

#[derive(Serialize)]
struct JointReport {
    variables: Vec<String>,
    days: usize,
    classes: Vec<ClassReport>,
}

#[derive(Serialize)]
struct ClassifyReport {
    per_variable: Vec<VariableReport>,
    joint: JointReport,
}

fn cmd_classify(args: &ClassifyArgs) -> Result<(), CliError> {
    let vars = parse_variables(&args.vars)?;
    if args.k == Some(0) {
        return Err(CliError::Usage("--k must be at least 1".to_string()));
    }
    let period = parse_period(&args.months)?;
    let series = period.apply(&read_series(&args.input)?).map_err(runtime)?;
    let result = representative_days(&series, &vars, args.k).map_err(runtime)?;

    let class_reports = |days: &[NaiveDate], classes: &[synthmet::classify::DayClass]| {
        classes
            .iter()
            .map(|c| ClassReport {
                frequency: c.frequency,
                representative: days[c.representative].to_string(),
                members: c.members.len(),
            })
            .collect::<Vec<_>>()
    };

    let report = ClassifyReport {
        per_variable: result
            .per_variable
            .iter()
            .map(|v| VariableReport {
                variable: v.variable.column().to_string(),
                days: v.days.len(),
                retained: v.retained,
                explained: v.explained.clone(),
                classes: class_reports(&v.days, &v.classes),
            })
            .collect(),
        joint: JointReport {
            variables: result.joint.variables.iter().map(|v| v.column().to_string()).collect(),
            days: result.joint.days.len(),
            classes: class_reports(&result.joint.days, &result.joint.classes),
        },
    };

    for v in &report.per_variable {
        println!("{}: {} classes over {} days, {} components retained", v.variable, v.classes.len(), v.days, v.retained);
        for (i, c) in v.classes.iter().enumerate() {
            println!(
                "  class {}: {}% of days, representative {}",
                i + 1,
                fmt_num(100.0 * c.frequency),
                c.representative,
            );
        }
    }
    println!("joint over {}: {} classes", report.joint.variables.join("+"), report.joint.classes.len());
    for (i, c) in report.joint.classes.iter().enumerate() {
        println!(
            "  class {}: {}% of days, representative {}",
            i + 1,
            fmt_num(100.0 * c.frequency),
            c.representative,
        );
    }

    let path = args.out.join("classify.json");
    write_file(&path, &to_pretty_json(&report)?)?;
    write_manifest(&args.out, "classify", None, &[args.input.clone()], &[path.clone()])?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_search(args: &SearchArgs) -> Result<(), CliError> {
    let (predicates, names) = parse_criteria(&args.criteria)?;
    if args.len == 0 {
        return Err(CliError::Usage("--len must be at least 1 day".to_string()));
    }
    let period = parse_period(&args.months)?;
    let series = period.apply(&read_series(&args.input)?).map_err(runtime)?;
    let criteria = SequenceCriteria {
        length: args.len,
        predicates,
        class_variables: Vec::new(),
        suppress_overlaps: !args.all_windows,
    };
    let matches = search_sequences(&series, &criteria).map_err(runtime)?;

    let mut csv = format!("start,length,score,{}\n", names.join(","));
    for m in &matches {
        let achieved: Vec<String> = m.achieved.iter().map(|&v| fmt_num(v)).collect();
        csv.push_str(&format!(
            "{},{},{},{}\n",
            m.start,
            m.length,
            fmt_num(m.score),
            achieved.join(","),
        ));
    }
    write_file(&args.out, &csv)?;
    write_manifest(
        &out_dir(&args.out),
        "search",
        None,
        &[args.input.clone()],
        &[args.out.clone()],
    )?;
    println!("{} matching windows, wrote {}", matches.len(), args.out.display());
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    if args.days == 0 {
        return Err(CliError::Usage("--days must be at least 1".to_string()));
    }
    let dir = library_dir(args.library.clone(), "--library")?;
    let site = match &args.site {
        Some(text) => parse_site(text)?,
        None => demo_site(),
    };
    let variables = match &args.vars {
        Some(text) => parse_variables(text)?,
        None => ALL_COLUMNS.to_vec(),
    };
    let targets: Vec<Target> =
        args.targets.iter().map(|t| parse_target(t)).collect::<Result<_, _>>()?;
    let mut overrides = BTreeMap::new();
    for text in &args.uses {
        let Some((column, id)) = text.split_once('=') else {
            return Err(CliError::Usage(format!("--use {text:?} is not column=entry-id")));
        };
        overrides.insert(column.to_string(), id.to_string());
    }

    let registry = load_library(&dir).map_err(runtime)?;
    for warning in &registry.warnings {
        eprintln!("warning: {warning}");
    }
    if args.interactive {
        interactive_overrides(&registry, &variables, &mut overrides)?;
    }

    let request = GenerationRequest {
        site,
        n_days: args.days,
        start: args.start,
        variables,
        targets,
        seed: args.seed,
        overrides,
    };
    let result = generate(&request, &registry).map_err(runtime)?;

    for u in &result.plan.unreachable {
        if u.missing.is_empty() {
            eprintln!("warning: no model in the library produces {}", u.variable);
        } else {
            eprintln!(
                "warning: {} is unreachable, its model is missing {}",
                u.variable,
                u.missing.join(", "),
            );
        }
    }
    for step in &result.plan.steps {
        println!("{} -> {}", step.model, step.outputs.join(","));
    }
    for a in &result.achieved {
        println!(
            "target {} = {}: achieved {} (tolerance {})",
            a.variable,
            fmt_num(a.target),
            fmt_num(a.achieved),
            fmt_num(a.tolerance),
        );
    }
    let clamped: usize = result.clamps.values().sum();
    if clamped > 0 {
        println!("{clamped} values pulled back to physical bounds");
    }

    write_file(&args.out, &result.series.to_csv())?;
    write_manifest(
        &out_dir(&args.out),
        "generate",
        Some(args.seed),
        &library_files(&dir)?,
        &[args.out.clone()],
    )?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn interactive_overrides(
    registry: &ModelRegistry,
    variables: &[WeatherVariable],
    overrides: &mut BTreeMap<String, String>,
) -> Result<(), CliError> {
    let mut names: Vec<String> = vec![ROOT_KT.to_string(), ROOT_WIND.to_string()];
    names.extend(variables.iter().map(|v| v.column().to_string()));
    let mut seen = BTreeSet::new();

    let stdin = io::stdin();
    for name in names {
        if !seen.insert(name.clone()) || overrides.contains_key(&name) {
            continue;
        }
        let is_root = name == ROOT_KT || name == ROOT_WIND;
        let candidates: Vec<&LibraryEntry> = registry
            .entries
            .iter()
            .filter(|e| {
                if is_root {
                    e.outputs() == [name.as_str()] && e.inputs().is_empty()
                } else {
                    e.outputs().iter().any(|o| *o == name)
                }
            })
            .collect();
        if candidates.len() < 2 {
            continue;
        }
        println!("select the model for {name}:");
        for (i, e) in candidates.iter().enumerate() {
            println!("  {}) {} ({})", i + 1, e.id, e.kind());
        }
        print!("choice [1]: ");
        io::stdout().flush().ok();
        let mut line = String::new();
        stdin
            .lock()
            .read_line(&mut line)
            .map_err(|e| CliError::Runtime(format!("reading the model choice: {e}")))?;
        let line = line.trim();
        let index = if line.is_empty() {
            1
        } else {
            line.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("choice {line:?} is not a number")))?
        };
        if index == 0 || index > candidates.len() {
            return Err(CliError::Usage(format!(
                "choice {index} out of 1..={}",
                candidates.len()
            )));
        }
        overrides.insert(name, candidates[index - 1].id.clone());
    }
    Ok(())
}

#[derive(Serialize)]
struct ZoneComfort {
    zone: String,
    hours: usize,
    /// Fraction of hours inside each comfort polygon, by polygon name.
    fractions: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct ComfortReport {
    /// Indoor states pair the free-floating zone temperature with the
    /// exterior moisture content: a closed unconditioned zone tracks outdoor
    /// humidity ratio far closer than outdoor relative humidity.
    zones: Vec<ZoneComfort>,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let config = read_building(&args.building).map_err(runtime)?;
    let (model, loads, hvac) = config.build().map_err(runtime)?;
    let weather = read_series(&args.weather)?;
    let comfort_zones = match &args.comfort {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            parse_comfort_zones(&text).map_err(runtime)?
        }
        None => default_comfort_zones(),
    };

    let result = ideal_hvac_loads(&model, &weather, &loads, &hvac).map_err(runtime)?;
    let free = simulate_thermal(&model, &weather, &loads, 1.0).map_err(runtime)?;

    let pressure = barometric_pressure(weather.site.altitude_m);
    let mut report = ComfortReport { zones: Vec::new() };
    for zone in &hvac.zones {
        let temps = free
            .node(zone)
            .ok_or_else(|| CliError::Runtime(format!("zone {zone:?} missing from the solution")))?;
        let mut states = Vec::with_capacity(temps.len());
        for (i, &t_zone) in temps.iter().enumerate() {
            let (Some(t_ext), Some(rh_ext)) = (
                weather.value(WeatherVariable::Temperature, i),
                weather.value(WeatherVariable::RelativeHumidity, i),
            ) else {
                continue;
            };
            // A tiny floor keeps perfectly dry hours representable.
            let ext = moist_air_state_at(t_ext, rh_ext.max(0.1), pressure).map_err(runtime)?;
            let saturation = saturation_vapor_pressure(t_zone).map_err(runtime)?;
            let rh_zone = (100.0 * ext.e / saturation).clamp(0.1, 100.0);
            states.push(moist_air_state_at(t_zone, rh_zone, pressure).map_err(runtime)?);
        }
        let fractions = comfort_fraction(&states, &comfort_zones).map_err(runtime)?;
        report.zones.push(ZoneComfort {
            zone: zone.clone(),
            hours: states.len(),
            fractions: comfort_zones
                .iter()
                .map(|z| z.name.clone())
                .zip(fractions)
                .collect(),
        });
    }

    let sensible: f64 = result.sensible_kwh.iter().sum();
    let latent: f64 = result.latent_kwh.iter().sum();
    println!(
        "cooling over {} days: sensible {} kWh, latent {} kWh, mean {} kWh/day, peak {} kWh/day",
        result.days.len(),
        fmt_num(sensible),
        fmt_num(latent),
        fmt_num(result.mean_kwh),
        fmt_num(result.max_kwh),
    );
    for z in &report.zones {
        let parts: Vec<String> = z
            .fractions
            .iter()
            .map(|(name, f)| format!("{name} {}%", fmt_num(100.0 * f)))
            .collect();
        println!("comfort in {} over {} hours: {}", z.zone, z.hours, parts.join(", "));
    }

    let loads_path = args.out.join("loads.csv");
    let comfort_path = args.out.join("comfort.json");
    write_file(&loads_path, &result.to_csv())?;
    write_file(&comfort_path, &to_pretty_json(&report)?)?;
    let mut inputs = vec![args.building.clone(), args.weather.clone()];
    if let Some(path) = &args.comfort {
        inputs.push(path.clone());
    }
    write_manifest(
        &args.out,
        "simulate",
        None,
        &inputs,
        &[loads_path.clone(), comfort_path.clone()],
    )?;
    println!("wrote {} and {}", loads_path.display(), comfort_path.display());
    Ok(())
}

fn cmd_demo(args: &DemoArgs) -> Result<(), CliError> {
    let weather_path = args.out.join("weather.csv");
    let building_path = args.out.join("building.json");
    let comfort_path = args.out.join("comfort.json");
    let library_dir = args.out.join("library");

    write_file(&weather_path, &demo_year().to_csv())?;
    write_file(&building_path, demo_building_json())?;
    write_file(&comfort_path, demo_comfort_zones_json())?;
    let registry = build_demo_library(&library_dir).map_err(runtime)?;

    let mut outputs = vec![weather_path, building_path, comfort_path];
    outputs.extend(library_files(&library_dir)?);
    write_manifest(&args.out, "demo", None, &[], &outputs)?;

    println!(
        "wrote a demo year, a two-zone dwelling, comfort zones and {} fitted models under {}",
        registry.entries.len(),
        args.out.display(),
    );
    println!("try:");
    println!(
        "  synthmet describe --input {}/weather.csv --var ghi_Whm2 --indicator daily-total",
        args.out.display(),
    );
    println!(
        "  synthmet generate --library {}/library --days 5 --target kt=0.75 --out five.csv",
        args.out.display(),
    );
    println!(
        "  synthmet simulate --building {0}/building.json --weather {0}/weather.csv",
        args.out.display(),
    );
    Ok(())
}

fn parse_variable(text: &str) -> Result<WeatherVariable, CliError> {
    WeatherVariable::from_column(text).ok_or_else(|| {
        let names: Vec<&str> = ALL_COLUMNS.iter().map(|v| v.column()).collect();
        CliError::Usage(format!("unknown column {text:?}; one of {}", names.join(", ")))
    })
}

fn parse_variables(text: &str) -> Result<Vec<WeatherVariable>, CliError> {
    let vars: Vec<WeatherVariable> = text
        .split(',')
        .filter(|s| !s.is_empty())
        .map(parse_variable)
        .collect::<Result<_, _>>()?;
    if vars.is_empty() {
        return Err(CliError::Usage("no columns given".to_string()));
    }
    Ok(vars)
}

fn parse_indicator(text: &str) -> Result<IndicatorKind, CliError> {
    match text {
        "mean" => Ok(IndicatorKind::Mean),
        "min" => Ok(IndicatorKind::Min),
        "max" => Ok(IndicatorKind::Max),
        "amplitude" => Ok(IndicatorKind::Amplitude),
        "daily-total" => Ok(IndicatorKind::DailyTotal),
        other => Err(CliError::Usage(format!(
            "unknown indicator {other:?}; one of mean, min, max, amplitude, daily-total"
        ))),
    }
}

fn parse_climate(text: &str) -> Result<Climate, CliError> {
    match text {
        "tropical" => Ok(Climate::Tropical),
        "temperate" => Ok(Climate::Temperate),
        other => Err(CliError::Usage(format!(
            "unknown climate {other:?}; tropical or temperate"
        ))),
    }
}

fn parse_period(text: &str) -> Result<PeriodSelector, CliError> {
    if let Ok(period) = text.parse::<PeriodSelector>() {
        return Ok(period);
    }
    // Shorthand: a bare month list.
    if let Ok(period) = format!("months:{text}").parse::<PeriodSelector>() {
        return Ok(period);
    }
    Err(CliError::Usage(format!(
        "cannot parse period {text:?}; use all, a month list like 11,12,1,2,3,4 \
         or a date range like 2003-01-01..2003-03-31"
    )))
}

fn parse_site(text: &str) -> Result<Site, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    let usage = || CliError::Usage(format!("--site {text:?} is not name,lat,lon,alt"));
    if parts.len() != 4 {
        return Err(usage());
    }
    let lat: f64 = parts[1].trim().parse().map_err(|_| usage())?;
    let lon: f64 = parts[2].trim().parse().map_err(|_| usage())?;
    let alt: f64 = parts[3].trim().parse().map_err(|_| usage())?;
    Site::new(parts[0].trim(), lat, lon, alt).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_target(text: &str) -> Result<Target, CliError> {
    let Some((name, rest)) = text.split_once('=') else {
        return Err(CliError::Usage(format!("--target {text:?} is not name=value")));
    };
    let (variable, default_tolerance, range) = match name {
        "kt" => (ROOT_KT, 0.02, (0.0, 1.0)),
        "wind" | "wind_ms" => (ROOT_WIND, 0.2, WeatherVariable::WindSpeed.range()),
        other => {
            return Err(CliError::Usage(format!(
                "targets condition the generation roots kt and wind, not {other:?}"
            )));
        }
    };
    let (value_text, tolerance_text) = match rest.split_once(':') {
        Some((v, t)) => (v, Some(t)),
        None => (rest, None),
    };
    let value: f64 = value_text
        .parse()
        .map_err(|_| CliError::Usage(format!("target value {value_text:?} is not a number")))?;
    if !(value >= range.0 && value <= range.1) {
        return Err(CliError::Usage(format!(
            "target {name} = {value} outside the physical range [{}, {}]",
            range.0, range.1
        )));
    }
    let tolerance: f64 = match tolerance_text {
        Some(t) => t
            .parse()
            .map_err(|_| CliError::Usage(format!("tolerance {t:?} is not a number")))?,
        None => default_tolerance,
    };
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(CliError::Usage(format!("tolerance {tolerance} must be positive")));
    }
    Ok(Target { variable: variable.to_string(), value, tolerance })
}

fn parse_criteria(text: &str) -> Result<(Vec<Predicate>, Vec<String>), CliError> {
    let mut predicates = Vec::new();
    let mut names = Vec::new();
    for part in text.split(',').filter(|p| !p.is_empty()) {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            return Err(CliError::Usage(format!(
                "criterion {part:?} is not quantity:min:max"
            )));
        }
        let Some((variable, kind)) = indicator_spec(fields[0]) else {
            let known: Vec<&str> = DAILY_QUANTITIES
                .iter()
                .copied()
                .filter(|q| indicator_spec(q).is_some())
                .collect();
            return Err(CliError::Usage(format!(
                "unknown quantity {:?}; one of {}",
                fields[0],
                known.join(", ")
            )));
        };
        // Empty bounds fall back to the physical range so scores stay finite.
        let (lo, hi) = variable.range();
        let scale = if kind == IndicatorKind::DailyTotal { 24.0 } else { 1.0 };
        let min = parse_bound(fields[1], lo * scale)?;
        let max = parse_bound(fields[2], hi * scale)?;
        if min > max {
            return Err(CliError::Usage(format!("criterion {part:?} has min above max")));
        }
        predicates.push(Predicate { variable, kind, min, max });
        names.push(fields[0].to_string());
    }
    if predicates.is_empty() {
        return Err(CliError::Usage("at least one criterion is required".to_string()));
    }
    Ok((predicates, names))
}

fn parse_bound(text: &str, default: f64) -> Result<f64, CliError> {
    if text.is_empty() {
        return Ok(default);
    }
    text.parse()
        .map_err(|_| CliError::Usage(format!("bound {text:?} is not a number")))
}

fn library_dir(flag: Option<PathBuf>, flag_name: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| env::var_os("SYNTHMET_LIBDIR").map(PathBuf::from))
        .ok_or_else(|| {
            CliError::Usage(format!(
                "no library directory: pass {flag_name} or set SYNTHMET_LIBDIR"
            ))
        })
}

/// Library entry files in load order, for manifest digests.
fn library_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let read =
        fs::read_dir(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
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
    Ok(paths)
}

fn read_series(path: &Path) -> Result<WeatherSeries, CliError> {
    WeatherSeries::read_csv(path).map_err(runtime)
}

fn out_dir(out: &Path) -> PathBuf {
    match out.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", parent.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing the report: {e}")))?;
    text.push('\n');
    Ok(text)
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    argv: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Input path to sha256 digest.
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    timestamp: String,
    version: String,
}

/// One manifest per run, `<subcommand>.manifest.json` next to the outputs.
/// The manifest records the run; it is not itself a primary output (its
/// timestamp differs between otherwise identical runs).
fn write_manifest(
    dir: &Path,
    subcommand: &str,
    seed: Option<u64>,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    let mut digests = BTreeMap::new();
    for path in inputs {
        let bytes =
            fs::read(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        digests.insert(path.display().to_string(), hex::encode(Sha256::digest(bytes)));
    }
    let manifest = RunManifest {
        subcommand: subcommand.to_string(),
        argv: env::args().collect(),
        seed,
        inputs: digests,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let path = dir.join(format!("{subcommand}.manifest.json"));
    write_file(&path, &to_pretty_json(&manifest)?)
}
