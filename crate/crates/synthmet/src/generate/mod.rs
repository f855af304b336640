//! Generation engine: resolves which variables the model library can
//! produce, in what order, and emits coherent synthetic weather sequences
//! conditioned on user targets.

mod library;

pub use library::{
    fit_kt_model, fit_temp_rh_arx, fit_wind_model, load_library, save_entry, LibraryEntry,
    ModelPayload, ModelRegistry, ARX_INPUTS, ROOT_KT, ROOT_WIND,
};

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solar::{hourly_profile, solar_geometry, SolarGeometry};
use crate::stoch::mlp::OUTPUT_RANGE;
use crate::stoch::{ArModel, Transform};
use crate::weather::{Site, WeatherSeries, WeatherVariable, HOURS_PER_DAY};

use library::exog_source;

/// Physical producers that need no library entry.
pub const BUILTIN_PROFILE: &str = "builtin:hourly-profile";
pub const BUILTIN_BEAM: &str = "builtin:beam-normal";

/// Clearness of the hourly clamp envelope: the profile at this kt bounds
/// every emitted radiation hour.
const ENVELOPE_KT: f64 = 0.85;
/// AR(1) coefficient and innovation sd of the multiplicative perturbation
/// that roughens the smooth radiation profile.
const GHI_PERTURB_PHI: f64 = 0.4;
const GHI_PERTURB_SD: f64 = 0.08;
/// Beam-normal conversion floor, sin of about 5 degrees of altitude;
/// avoids dividing near-sunset radiation by a vanishing sine.
const MIN_SIN_ALTITUDE: f64 = 0.0872;
const MAX_CONDITION_ITERATIONS: usize = 50;
/// Conditioning shifts are kept inside this normal-score band.
const MAX_SHIFT: f64 = 8.0;

/// A requested daily-mean statistic: generated `variable` must average
/// within `tolerance` of `value`. Only the stochastic roots ("kt",
/// "wind_ms") accept targets; everything else is derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub variable: String,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub site: Site,
    pub n_days: usize,
    pub start: NaiveDate,
    pub variables: Vec<WeatherVariable>,
    #[serde(default)]
    pub targets: Vec<Target>,
    pub seed: u64,
    /// Output variable to library entry id, forcing that model.
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
}

/// One resolved production step. `model` is a library entry id, one of the
/// `builtin:` producers, or `root:<variable>` when the library holds no
/// model for a root (executing such a plan fails with a clear error).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanStep {
    pub model: String,
    pub outputs: Vec<String>,
    pub inputs: Vec<String>,
}

/// A requested variable no model chain can reach, with the inputs that
/// block its closest candidate (empty when nothing produces it at all).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnreachableVariable {
    pub variable: String,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationPlan {
    pub steps: Vec<PlanStep>,
    pub unreachable: Vec<UnreachableVariable>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AchievedTarget {
    pub variable: String,
    pub target: f64,
    pub achieved: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSequence {
    pub series: WeatherSeries,
    pub achieved: Vec<AchievedTarget>,
    /// Hours (or days, for daily quantities) forced back into physical
    /// bounds, per variable.
    pub clamps: BTreeMap<String, usize>,
    pub plan: GenerationPlan,
    pub seed: u64,
}

fn known_variable(name: &str) -> bool {
    name == ROOT_KT || WeatherVariable::from_column(name).is_some()
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Independent per-variable stream seed, stable across runs.
fn stage_seed(seed: u64, tag: &str) -> u64 {
    splitmix64(seed ^ fnv1a64(tag.as_bytes()))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

impl GenerationRequest {
    fn validate(&self, registry: &ModelRegistry) -> Result<()> {
        if self.n_days == 0 {
            return Err(Error::invalid("n_days must be at least 1".to_string()));
        }
        if self.variables.is_empty() {
            return Err(Error::invalid("no variables requested".to_string()));
        }
        let mut seen = BTreeSet::new();
        for t in &self.targets {
            if !known_variable(&t.variable) {
                return Err(Error::invalid(format!("unknown target variable {:?}", t.variable)));
            }
            if t.variable != ROOT_KT && t.variable != ROOT_WIND {
                return Err(Error::Unsupported(format!(
                    "targets apply to the root variables {ROOT_KT} and {ROOT_WIND} only, not {:?}",
                    t.variable
                )));
            }
            if !seen.insert(t.variable.clone()) {
                return Err(Error::invalid(format!("duplicate target for {:?}", t.variable)));
            }
            let (lo, hi) = if t.variable == ROOT_KT {
                (0.0, 1.0)
            } else {
                WeatherVariable::WindSpeed.range()
            };
            if !t.value.is_finite() || t.value < lo || t.value > hi {
                return Err(Error::invalid(format!(
                    "target {} = {} outside physical range [{lo}, {hi}]",
                    t.variable, t.value
                )));
            }
            if !(t.tolerance > 0.0 && t.tolerance.is_finite()) {
                return Err(Error::invalid(format!(
                    "target {} needs a positive tolerance, got {}",
                    t.variable, t.tolerance
                )));
            }
        }
        for (variable, id) in &self.overrides {
            if !known_variable(variable) {
                return Err(Error::invalid(format!("override names unknown variable {variable:?}")));
            }
            let entry = registry
                .entry(id)
                .ok_or_else(|| Error::NotFound(format!("override model {id:?} is not in the library")))?;
            if !entry.outputs().iter().any(|o| o == variable) {
                return Err(Error::invalid(format!(
                    "override model {id:?} does not produce {variable:?}"
                )));
            }
        }
        Ok(())
    }
}

struct Candidate {
    id: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    rank: u8,
    score: f64,
}

fn better(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    a.rank
        .cmp(&b.rank)
        .then(a.score.total_cmp(&b.score))
        .then(a.id.cmp(&b.id))
}

/// Resolves the production order for `request` by fixed-point closure:
/// starting from the stochastic roots kt and wind, any model whose inputs
/// are all available is added until nothing new can be produced. When
/// several models can produce a variable the user override wins, otherwise
/// the lowest recorded error among the models ready at that point.
/// Requested variables that stay out of reach are reported, not fatal.
pub fn resolve_plan(registry: &ModelRegistry, request: &GenerationRequest) -> Result<GenerationPlan> {
    request.validate(registry)?;

    let mut candidates: Vec<Candidate> = Vec::new();
    for entry in &registry.entries {
        let outputs = entry.outputs();
        // Roots are exclusively stochastic, picked separately below, and
        // outputs outside the plan vocabulary cannot be emitted.
        if outputs.is_empty()
            || outputs.iter().any(|o| o == ROOT_KT || o == ROOT_WIND)
            || !outputs.iter().all(|o| known_variable(o))
        {
            continue;
        }
        candidates.push(Candidate {
            id: entry.id.clone(),
            inputs: entry.inputs(),
            outputs,
            rank: entry.rank(),
            score: entry.score(),
        });
    }
    candidates.push(Candidate {
        id: BUILTIN_PROFILE.to_string(),
        inputs: vec![ROOT_KT.to_string()],
        outputs: vec!["ghi_Whm2".to_string()],
        rank: 0,
        score: f64::NEG_INFINITY,
    });
    candidates.push(Candidate {
        id: BUILTIN_BEAM.to_string(),
        inputs: vec!["ghi_Whm2".to_string(), "dhi_Whm2".to_string()],
        outputs: vec!["bni_Whm2".to_string()],
        rank: 0,
        score: f64::NEG_INFINITY,
    });

    let pick_root = |root: &str| -> Option<String> {
        if let Some(id) = request.overrides.get(root) {
            return Some(id.clone());
        }
        registry
            .entries
            .iter()
            .filter(|e| {
                let outs = e.outputs();
                outs.len() == 1 && outs[0] == root && e.inputs().is_empty()
            })
            .map(|e| Candidate {
                id: e.id.clone(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                rank: e.rank(),
                score: e.score(),
            })
            .min_by(|a, b| better(a, b))
            .map(|c| c.id)
    };

    let mut available: BTreeSet<String> = BTreeSet::new();
    let mut steps: Vec<PlanStep> = Vec::new();
    for root in [ROOT_KT, ROOT_WIND] {
        available.insert(root.to_string());
        steps.push(PlanStep {
            model: pick_root(root).unwrap_or_else(|| format!("root:{root}")),
            outputs: vec![root.to_string()],
            inputs: Vec::new(),
        });
    }

    // Permitted producer for a variable under the override map.
    let allowed = |var: &str, id: &str| match request.overrides.get(var) {
        Some(forced) => forced == id,
        None => true,
    };

    loop {
        // Best ready producer for every variable still missing.
        let mut best_for: BTreeMap<&str, &Candidate> = BTreeMap::new();
        for c in &candidates {
            if !c.inputs.iter().all(|i| available.contains(i)) {
                continue;
            }
            for o in &c.outputs {
                if available.contains(o) || !allowed(o, &c.id) {
                    continue;
                }
                best_for
                    .entry(o.as_str())
                    .and_modify(|b| {
                        if better(c, b) == std::cmp::Ordering::Less {
                            *b = c;
                        }
                    })
                    .or_insert(c);
            }
        }
        // Settle the alphabetically first producible variable; one
        // selection per pass keeps multi-output claims consistent. The
        // winner only claims outputs it is the best producer for, so a
        // joint model cannot shadow a stronger single-variable one.
        let Some(chosen) = best_for.values().next().copied() else {
            break;
        };
        let claimed: Vec<String> = chosen
            .outputs
            .iter()
            .filter(|o| {
                !available.contains(*o)
                    && best_for.get(o.as_str()).is_some_and(|b| b.id == chosen.id)
            })
            .cloned()
            .collect();
        let step = PlanStep {
            model: chosen.id.clone(),
            outputs: claimed,
            inputs: chosen.inputs.clone(),
        };
        for o in &step.outputs {
            available.insert(o.clone());
        }
        steps.push(step);
    }

    let mut unreachable = Vec::new();
    let mut reported = BTreeSet::new();
    for var in &request.variables {
        let col = var.column();
        if available.contains(col) || !reported.insert(col) {
            continue;
        }
        let missing = candidates
            .iter()
            .filter(|c| c.outputs.iter().any(|o| o == col) && allowed(col, &c.id))
            .map(|c| {
                c.inputs
                    .iter()
                    .filter(|i| !available.contains(*i))
                    .cloned()
                    .collect::<Vec<String>>()
            })
            .min_by_key(|m| m.len())
            .unwrap_or_default();
        unreachable.push(UnreachableVariable {
            variable: col.to_string(),
            missing,
        });
    }

    // Prune to what the requested variables and targets actually need.
    let mut needed: BTreeSet<String> = BTreeSet::new();
    let mut stack: Vec<String> = request
        .variables
        .iter()
        .map(|v| v.column().to_string())
        .filter(|c| available.contains(c))
        .collect();
    stack.extend(request.targets.iter().map(|t| t.variable.clone()));
    while let Some(var) = stack.pop() {
        if !needed.insert(var.clone()) {
            continue;
        }
        if let Some(step) = steps.iter().find(|s| s.outputs.contains(&var)) {
            stack.extend(step.inputs.iter().cloned());
        }
    }
    let steps: Vec<PlanStep> = steps
        .into_iter()
        .filter(|s| s.outputs.iter().any(|o| needed.contains(o)))
        .collect();

    Ok(GenerationPlan { steps, unreachable })
}

/// Finds the normal-score shift whose achieved statistic lands within
/// `tolerance` of `target` by secant iteration. `f` must be continuous and
/// monotone in the shift, which holds for all the engine's emissions.
fn secant_condition(f: &mut dyn FnMut(f64) -> Result<f64>, target: f64, tolerance: f64) -> Result<f64> {
    let mut s0 = 0.0;
    let mut a0 = f(s0)?;
    if (a0 - target).abs() <= tolerance {
        return Ok(s0);
    }
    let mut best = (s0, a0);
    let mut s1 = (target - a0).clamp(-1.0, 1.0);
    for _ in 1..MAX_CONDITION_ITERATIONS {
        let a1 = f(s1)?;
        if (a1 - target).abs() < (best.1 - target).abs() {
            best = (s1, a1);
        }
        if (a1 - target).abs() <= tolerance {
            return Ok(s1);
        }
        let da = a1 - a0;
        let step = if da.abs() < 1e-12 {
            // Flat stretch (for example both ends clamped): widen the probe.
            (s1 - s0) * 2.0
        } else {
            (target - a1) * (s1 - s0) / da
        };
        s0 = s1;
        a0 = a1;
        s1 = (s1 + step).clamp(-MAX_SHIFT, MAX_SHIFT);
    }
    Err(Error::numeric(format!(
        "target {target} not reached in {MAX_CONDITION_ITERATIONS} conditioning iterations; best achieved {}",
        best.1
    )))
}

/// Simulates `n` values whose mean lands within `tolerance` of `target`,
/// by shifting the model's normal-score space. The innovations depend only
/// on the seed, so the same seed with a different target yields the same
/// weather pattern displaced in level.
pub fn condition_to_target(
    model: &ArModel,
    n: usize,
    target: f64,
    tolerance: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tolerance}")));
    }
    let (lo, hi) = model.transform.support();
    if !target.is_finite() || target <= lo || target >= hi {
        return Err(Error::invalid(format!(
            "target {target} outside the law support ({lo}, {hi})"
        )));
    }
    let shift = secant_condition(
        &mut |s| Ok(mean(&model.simulate_shifted(n, seed, s))),
        target,
        tolerance,
    )?;
    Ok(model.simulate_shifted(n, seed, shift))
}

/// Order-0 wrapper for marginal-only library entries: every step is an
/// independent draw from the law.
fn marginal_ar(transform: Transform) -> ArModel {
    ArModel {
        order: 0,
        phi: Vec::new(),
        sigma: 1.0,
        mean: 0.0,
        sd: 1.0,
        diurnal: None,
        transform,
        exog: None,
        aic: 0.0,
        n_fit: 0,
    }
}

fn root_model(registry: &ModelRegistry, id: &str, root: &str) -> Result<ArModel> {
    let Some(entry) = registry.entry(id) else {
        let kind = if root == ROOT_KT { "clearness" } else { "wind" };
        return Err(Error::NotFound(format!(
            "the library has no {kind} model, required to generate {root}"
        )));
    };
    match &entry.payload {
        ModelPayload::Ar { model, .. } => Ok(model.clone()),
        ModelPayload::Clearness { law } if root == ROOT_KT => {
            Ok(marginal_ar(Transform::Clearness(*law)))
        }
        ModelPayload::Weibull { fit } if root == ROOT_WIND => {
            Ok(marginal_ar(Transform::Weibull(fit.law)))
        }
        _ => Err(Error::invalid(format!(
            "model {id:?} cannot act as the {root} root"
        ))),
    }
}

/// Hourly radiation for the daily clearness series: smooth profile times a
/// clamped AR(1) perturbation, renormalized so each day keeps its kt.
fn emit_ghi(kt_daily: &[f64], geoms: &[SolarGeometry], seed: u64) -> Result<(Vec<f64>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = rand_distr::Normal::new(0.0, GHI_PERTURB_SD).expect("fixed sd");
    let mut p = 0.0;
    let mut out = Vec::with_capacity(kt_daily.len() * HOURS_PER_DAY);
    let mut clamped = 0;
    for (d, geom) in geoms.iter().enumerate() {
        let profile = hourly_profile(kt_daily[d], geom)?;
        let envelope = hourly_profile(ENVELOPE_KT, geom)?;
        let target = kt_daily[d] * geom.h0_daily_whm2;
        let mut day = [0.0; HOURS_PER_DAY];
        for (h, slot) in day.iter_mut().enumerate() {
            p = GHI_PERTURB_PHI * p + gauss.sample(&mut rng);
            if profile[h] <= 0.0 {
                continue;
            }
            let raw = profile[h] * (1.0 + p).max(0.0);
            *slot = raw.min(envelope[h]);
            if *slot != raw {
                clamped += 1;
            }
        }
        let sum: f64 = day.iter().sum();
        if sum > 0.0 {
            let scale = target / sum;
            for (h, slot) in day.iter_mut().enumerate() {
                let v = *slot * scale;
                *slot = v.min(envelope[h]);
                if *slot != v {
                    clamped += 1;
                }
            }
        }
        out.extend(day);
    }
    Ok((out, clamped))
}

/// Daily clearness of emitted hourly radiation, averaged over days.
fn mean_daily_kt(ghi: &[f64], geoms: &[SolarGeometry]) -> f64 {
    let per_day: Vec<f64> = geoms
        .iter()
        .enumerate()
        .map(|(d, geom)| {
            let total: f64 = ghi[d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY].iter().sum();
            (total / geom.h0_daily_whm2).clamp(0.0, 1.0)
        })
        .collect();
    mean(&per_day)
}

struct EngineState {
    hourly: BTreeMap<String, Vec<f64>>,
    daily: BTreeMap<String, Vec<f64>>,
    clamps: BTreeMap<String, usize>,
}

impl EngineState {
    fn hourly(&self, var: &str) -> Result<&[f64]> {
        self.hourly
            .get(var)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::numeric(format!("plan executed {var} before its inputs")))
    }

    fn clamp_into(&mut self, var: &str, values: Vec<f64>, range: (f64, f64)) {
        let counter = self.clamps.entry(var.to_string()).or_insert(0);
        let clamped: Vec<f64> = values
            .into_iter()
            .map(|v| {
                let c = v.clamp(range.0, range.1);
                if c != v {
                    *counter += 1;
                }
                c
            })
            .collect();
        self.hourly.insert(var.to_string(), clamped);
    }
}

/// Runs the plan for `request` and emits the synthetic series. Uses one
/// independent random stream per variable, all derived from the request
/// seed, so identical requests reproduce identical sequences.
pub fn generate(request: &GenerationRequest, registry: &ModelRegistry) -> Result<GeneratedSequence> {
    let plan = resolve_plan(registry, request)?;
    let mut series =
        WeatherSeries::with_consecutive_days(request.site.clone(), request.start, request.n_days)?;
    let geoms: Vec<SolarGeometry> = series
        .days()
        .iter()
        .map(|d| solar_geometry(&request.site, d.ordinal()))
        .collect::<Result<_>>()?;
    let n_hours = request.n_days * HOURS_PER_DAY;
    let ghi_planned = plan.steps.iter().any(|s| s.model == BUILTIN_PROFILE);

    let mut state = EngineState {
        hourly: BTreeMap::new(),
        daily: BTreeMap::new(),
        clamps: BTreeMap::new(),
    };

    for step in &plan.steps {
        if step.outputs.len() == 1 && step.outputs[0] == ROOT_KT {
            execute_kt_root(request, registry, step, &geoms, ghi_planned, &mut state)?;
        } else if step.outputs.len() == 1 && step.outputs[0] == ROOT_WIND {
            execute_wind_root(request, registry, step, n_hours, &mut state)?;
        } else if step.model == BUILTIN_PROFILE {
            // Radiation is emitted together with the clearness root, because
            // kt conditioning is measured on the emitted hours.
            state.hourly("ghi_Whm2")?;
        } else if step.model == BUILTIN_BEAM {
            execute_beam(&geoms, &mut state)?;
        } else {
            let entry = registry.entry(&step.model).ok_or_else(|| {
                Error::NotFound(format!("model {:?} disappeared from the library", step.model))
            })?;
            match &entry.payload {
                ModelPayload::Correlation { model } => {
                    execute_correlation(model, step, request.n_days, &geoms, &mut state)?
                }
                ModelPayload::Mlp { model } => execute_mlp(model, step, n_hours, &mut state)?,
                ModelPayload::Ar { output, model } => {
                    execute_column_ar(request.seed, output, model, n_hours, &mut state)?
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "model {:?} of kind {} cannot produce {:?}",
                        step.model,
                        entry.kind(),
                        step.outputs
                    )))
                }
            }
        }
    }

    for (name, values) in &state.hourly {
        let var = WeatherVariable::from_column(name).expect("engine emits known columns");
        series.set_column_full(var, values.clone())?;
    }

    let mut achieved = Vec::new();
    for t in &request.targets {
        let a = if t.variable == ROOT_KT {
            if ghi_planned {
                mean_daily_kt(state.hourly("ghi_Whm2")?, &geoms)
            } else {
                mean(&state.daily[ROOT_KT])
            }
        } else {
            mean(state.hourly(ROOT_WIND)?)
        };
        if (a - t.value).abs() > t.tolerance {
            return Err(Error::numeric(format!(
                "conditioned {} drifted to {a}, outside {} +- {}",
                t.variable, t.value, t.tolerance
            )));
        }
        achieved.push(AchievedTarget {
            variable: t.variable.clone(),
            target: t.value,
            achieved: a,
            tolerance: t.tolerance,
        });
    }

    Ok(GeneratedSequence {
        series,
        achieved,
        clamps: state.clamps,
        plan,
        seed: request.seed,
    })
}

fn execute_kt_root(
    request: &GenerationRequest,
    registry: &ModelRegistry,
    step: &PlanStep,
    geoms: &[SolarGeometry],
    ghi_planned: bool,
    state: &mut EngineState,
) -> Result<()> {
    let model = root_model(registry, &step.model, ROOT_KT)?;
    let seed_kt = stage_seed(request.seed, ROOT_KT);
    let seed_ghi = stage_seed(request.seed, "ghi_Whm2");
    let n_days = geoms.len();

    // (kt series, emitted radiation, kt clamps, radiation clamps).
    let emit = |shift: f64| -> Result<(Vec<f64>, Vec<f64>, usize, usize)> {
        let raw = model.simulate_shifted(n_days, seed_kt, shift);
        let mut kt_clamps = 0;
        let kt: Vec<f64> = raw
            .iter()
            .map(|&v| {
                let c = v.clamp(0.0, 1.0);
                if c != v {
                    kt_clamps += 1;
                }
                c
            })
            .collect();
        if ghi_planned {
            let (ghi, ghi_clamps) = emit_ghi(&kt, geoms, seed_ghi)?;
            Ok((kt, ghi, kt_clamps, ghi_clamps))
        } else {
            Ok((kt, Vec::new(), kt_clamps, 0))
        }
    };

    let shift = match target_on(request, ROOT_KT) {
        Some(t) => {
            let (lo, hi) = model.transform.support();
            if t.value <= lo.max(0.0) || t.value >= hi.min(1.0) {
                return Err(Error::invalid(format!(
                    "kt target {} outside the law support ({}, {})",
                    t.value,
                    lo.max(0.0),
                    hi.min(1.0)
                )));
            }
            secant_condition(
                &mut |s| {
                    let (kt, ghi, _, _) = emit(s)?;
                    Ok(if ghi_planned {
                        mean_daily_kt(&ghi, geoms)
                    } else {
                        mean(&kt)
                    })
                },
                t.value,
                t.tolerance,
            )?
        }
        None => 0.0,
    };

    let (kt, ghi, kt_clamps, ghi_clamps) = emit(shift)?;
    state.daily.insert(ROOT_KT.to_string(), kt);
    *state.clamps.entry(ROOT_KT.to_string()).or_insert(0) += kt_clamps;
    if ghi_planned {
        state.hourly.insert("ghi_Whm2".to_string(), ghi);
        *state.clamps.entry("ghi_Whm2".to_string()).or_insert(0) += ghi_clamps;
    }
    Ok(())
}

fn target_on<'a>(request: &'a GenerationRequest, var: &str) -> Option<&'a Target> {
    request.targets.iter().find(|t| t.variable == var)
}

fn execute_wind_root(
    request: &GenerationRequest,
    registry: &ModelRegistry,
    step: &PlanStep,
    n_hours: usize,
    state: &mut EngineState,
) -> Result<()> {
    let model = root_model(registry, &step.model, ROOT_WIND)?;
    let seed = stage_seed(request.seed, ROOT_WIND);
    let range = WeatherVariable::WindSpeed.range();

    let emit = |shift: f64| -> (Vec<f64>, usize) {
        let mut clamps = 0;
        let values: Vec<f64> = model
            .simulate_shifted(n_hours, seed, shift)
            .into_iter()
            .map(|v| {
                let c = v.clamp(range.0, range.1);
                if c != v {
                    clamps += 1;
                }
                c
            })
            .collect();
        (values, clamps)
    };

    let shift = match target_on(request, ROOT_WIND) {
        Some(t) => {
            let (lo, hi) = model.transform.support();
            if t.value <= lo || t.value >= hi {
                return Err(Error::invalid(format!(
                    "wind target {} outside the law support ({lo}, {hi})",
                    t.value
                )));
            }
            secant_condition(&mut |s| Ok(mean(&emit(s).0)), t.value, t.tolerance)?
        }
        None => 0.0,
    };

    let (values, clamps) = emit(shift);
    *state.clamps.entry(ROOT_WIND.to_string()).or_insert(0) += clamps;
    state.hourly.insert(ROOT_WIND.to_string(), values);
    Ok(())
}

fn execute_beam(geoms: &[SolarGeometry], state: &mut EngineState) -> Result<()> {
    let range = WeatherVariable::BeamNormal.range();
    let ghi = state.hourly("ghi_Whm2")?.to_vec();
    let dhi = state.hourly("dhi_Whm2")?.to_vec();
    let mut clamps = 0;
    let values: Vec<f64> = ghi
        .iter()
        .zip(&dhi)
        .enumerate()
        .map(|(t, (&g, &d))| {
            let sin_alt = geoms[t / HOURS_PER_DAY].sin_altitude(t % HOURS_PER_DAY);
            if sin_alt <= 0.0 || g <= 0.0 {
                return 0.0;
            }
            let raw = (g - d) / sin_alt.max(MIN_SIN_ALTITUDE);
            let c = raw.clamp(range.0, range.1);
            if c != raw {
                clamps += 1;
            }
            c
        })
        .collect();
    state.clamps.insert("bni_Whm2".to_string(), clamps);
    state.hourly.insert("bni_Whm2".to_string(), values);
    Ok(())
}

fn execute_correlation(
    model: &crate::solar::CorrelationModel,
    step: &PlanStep,
    n_days: usize,
    geoms: &[SolarGeometry],
    state: &mut EngineState,
) -> Result<()> {
    let inputs: Vec<&[f64]> = model
        .inputs
        .iter()
        .map(|q| {
            state
                .daily
                .get(q)
                .map(Vec::as_slice)
                .ok_or_else(|| Error::numeric(format!("daily quantity {q} unavailable for {}", step.model)))
        })
        .collect::<Result<_>>()?;
    let mut daily_out = Vec::with_capacity(n_days);
    let mut clamps = 0;
    for d in 0..n_days {
        let row: Vec<f64> = inputs.iter().map(|col| col[d]).collect();
        let pred = model.evaluate(&row)?;
        if pred.clamped {
            clamps += 1;
        }
        daily_out.push(pred.value);
    }

    let (var, _) = library::emitted_column(&model.output)
        .ok_or_else(|| Error::invalid(format!("{} has no column emitter", model.output)))?;
    let column = var.column();
    match var {
        WeatherVariable::DiffuseHorizontal => {
            let ghi = state.hourly("ghi_Whm2")?.to_vec();
            let values: Vec<f64> = ghi
                .iter()
                .enumerate()
                .map(|(t, &g)| daily_out[t / HOURS_PER_DAY] * g)
                .collect();
            *state.clamps.entry(column.to_string()).or_insert(0) += clamps;
            state.clamp_into(column, values, var.range());
        }
        WeatherVariable::SunshineFraction => {
            let values: Vec<f64> = (0..n_days * HOURS_PER_DAY)
                .map(|t| {
                    if geoms[t / HOURS_PER_DAY].h0_hourly_whm2[t % HOURS_PER_DAY] > 0.0 {
                        daily_out[t / HOURS_PER_DAY]
                    } else {
                        0.0
                    }
                })
                .collect();
            *state.clamps.entry(column.to_string()).or_insert(0) += clamps;
            state.clamp_into(column, values, var.range());
        }
        WeatherVariable::Okta => {
            let values: Vec<f64> = (0..n_days * HOURS_PER_DAY)
                .map(|t| daily_out[t / HOURS_PER_DAY].round().clamp(0.0, 8.0))
                .collect();
            *state.clamps.entry(column.to_string()).or_insert(0) += clamps;
            state.clamp_into(column, values, var.range());
        }
        _ => unreachable!("emitted_column only returns the three daily emitters"),
    }
    state.daily.insert(model.output.clone(), daily_out);
    Ok(())
}

fn execute_mlp(
    model: &crate::stoch::MlpModel,
    step: &PlanStep,
    n_hours: usize,
    state: &mut EngineState,
) -> Result<()> {
    let mut feeds: Vec<(usize, &[f64])> = Vec::new();
    for (i, name) in model.inputs.iter().enumerate() {
        if let Ok(Some(var)) = exog_source(name) {
            feeds.push((i, state.hourly(var)?));
        }
    }
    let (mut prev_t, mut prev_r) = (model.out_mean[0], model.out_mean[1]);
    let mut temp = Vec::with_capacity(n_hours);
    let mut rh = Vec::with_capacity(n_hours);
    let mut temp_clamps = 0;
    let mut rh_clamps = 0;
    let mut row = vec![0.0; model.inputs.len()];
    for t in 0..n_hours {
        let angle = 2.0 * std::f64::consts::PI * (t % HOURS_PER_DAY) as f64 / HOURS_PER_DAY as f64;
        for (i, name) in model.inputs.iter().enumerate() {
            row[i] = match name.as_str() {
                "hour_sin" => angle.sin(),
                "hour_cos" => angle.cos(),
                "prev_temp" => prev_t,
                "prev_rh" => prev_r,
                _ => 0.0,
            };
        }
        for &(i, values) in &feeds {
            row[i] = values[t];
        }
        let (a, b) = model.predict(&row)?;
        if a == OUTPUT_RANGE[0].0 || a == OUTPUT_RANGE[0].1 {
            temp_clamps += 1;
        }
        if b == OUTPUT_RANGE[1].0 || b == OUTPUT_RANGE[1].1 {
            rh_clamps += 1;
        }
        prev_t = a;
        prev_r = b;
        temp.push(a);
        rh.push(b);
    }
    if step.outputs.iter().any(|o| o == "temp_C") {
        state.clamps.insert("temp_C".to_string(), temp_clamps);
        state.hourly.insert("temp_C".to_string(), temp);
    }
    if step.outputs.iter().any(|o| o == "rh_pct") {
        state.clamps.insert("rh_pct".to_string(), rh_clamps);
        state.hourly.insert("rh_pct".to_string(), rh);
    }
    Ok(())
}

fn execute_column_ar(
    seed: u64,
    output: &str,
    model: &ArModel,
    n_hours: usize,
    state: &mut EngineState,
) -> Result<()> {
    let var = WeatherVariable::from_column(output)
        .ok_or_else(|| Error::invalid(format!("unknown output column {output:?}")))?;
    let stream = stage_seed(seed, output);
    let values = match &model.exog {
        Some(part) => {
            let mut columns: Vec<(usize, Vec<f64>)> = Vec::new();
            for (i, name) in part.names.iter().enumerate() {
                if let Ok(Some(src)) = exog_source(name) {
                    columns.push((i, state.hourly(src)?.to_vec()));
                }
            }
            let rows: Vec<Vec<f64>> = (0..n_hours)
                .map(|t| {
                    let angle =
                        2.0 * std::f64::consts::PI * (t % HOURS_PER_DAY) as f64 / HOURS_PER_DAY as f64;
                    let mut row = vec![0.0; part.names.len()];
                    for (i, name) in part.names.iter().enumerate() {
                        row[i] = match name.as_str() {
                            "hour_sin" => angle.sin(),
                            "hour_cos" => angle.cos(),
                            _ => 0.0,
                        };
                    }
                    for (i, values) in &columns {
                        row[*i] = values[t];
                    }
                    row
                })
                .collect();
            model.simulate_with_exog(&rows, stream)?
        }
        None => model.simulate(n_hours, stream),
    };
    state.clamp_into(output, values, var.range());
    Ok(())
}
