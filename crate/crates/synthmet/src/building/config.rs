//! Building description JSON: zones, couplings, solar surfaces, internal
//! loads and the HVAC block, assembled into the runtime model types.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weather::HOURS_PER_DAY;

use super::{IdealHvac, InternalLoadSchedule, NodalModel, ZoneLoads};

/// Reserved coupling endpoints driven by the weather.
const EXTERIOR: &str = "exterior";
const SKY: &str = "sky";
/// Share of horizontal irradiance collected by a vertical surface,
/// averaged over the day (isotropic sky plus ground reflection).
const VERTICAL_SOLAR_FACTOR: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig {
    pub name: String,
    #[serde(rename = "air_capacitance_JK")]
    pub air_capacitance_jk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub from: String,
    pub to: String,
    #[serde(rename = "UA_WK")]
    pub ua_wk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    North,
    South,
    East,
    West,
}

impl Orientation {
    fn solar_factor(self) -> f64 {
        match self {
            Orientation::Horizontal => 1.0,
            _ => VERTICAL_SOLAR_FACTOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceConfig {
    pub zone: String,
    pub area_m2: f64,
    pub absorptivity: f64,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadConfig {
    pub zone: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(rename = "sensible_W")]
    pub sensible_w: f64,
    #[serde(rename = "latent_W")]
    pub latent_w: f64,
    /// Hours of day this load is present, 0..=23.
    pub hours: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvacConfig {
    pub zones: Vec<String>,
    pub hours: Vec<u32>,
    #[serde(rename = "setpoint_C")]
    pub setpoint_c: f64,
    pub humidity_setpoint_kgkg: f64,
    pub zone_air_mass_kg: f64,
    pub air_changes_per_hour: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingConfig {
    pub zones: Vec<ZoneConfig>,
    pub couplings: Vec<CouplingConfig>,
    #[serde(default)]
    pub surfaces: Vec<SurfaceConfig>,
    #[serde(default)]
    pub loads: Vec<LoadConfig>,
    pub hvac: HvacConfig,
}

impl BuildingConfig {
    /// Assembles and validates the runtime model, load schedule and HVAC.
    pub fn build(&self) -> Result<(NodalModel, InternalLoadSchedule, IdealHvac)> {
        let n = self.zones.len();
        let index = |name: &str| self.zones.iter().position(|z| z.name == name);

        let mut model = NodalModel {
            node_names: self.zones.iter().map(|z| z.name.clone()).collect(),
            capacitance_jk: self.zones.iter().map(|z| z.air_capacitance_jk).collect(),
            coupling_wk: DMatrix::zeros(n, n),
            exterior_ua_wk: vec![0.0; n],
            sky_ua_wk: vec![0.0; n],
            solar_aperture_m2: vec![0.0; n],
        };

        for c in &self.couplings {
            if !(c.ua_wk >= 0.0 && c.ua_wk.is_finite()) {
                return Err(Error::invalid(format!(
                    "coupling {} - {} has invalid conductance {}",
                    c.from, c.to, c.ua_wk
                )));
            }
            let pair = (c.from.as_str(), c.to.as_str());
            match pair {
                (EXTERIOR | SKY, EXTERIOR | SKY) => {
                    return Err(Error::invalid(format!(
                        "coupling {} - {} joins two boundaries",
                        c.from, c.to
                    )));
                }
                _ => {}
            }
            // Boundary couplings may be written in either direction.
            let (node_name, boundary) = if pair.0 == EXTERIOR || pair.0 == SKY {
                (pair.1, Some(pair.0))
            } else if pair.1 == EXTERIOR || pair.1 == SKY {
                (pair.0, Some(pair.1))
            } else {
                (pair.0, None)
            };
            let i = index(node_name)
                .ok_or_else(|| Error::NotFound(format!("coupling names unknown zone {node_name:?}")))?;
            match boundary {
                Some(EXTERIOR) => model.exterior_ua_wk[i] += c.ua_wk,
                Some(SKY) => model.sky_ua_wk[i] += c.ua_wk,
                Some(_) => unreachable!(),
                None => {
                    let j = index(pair.1).ok_or_else(|| {
                        Error::NotFound(format!("coupling names unknown zone {:?}", pair.1))
                    })?;
                    if i == j {
                        return Err(Error::invalid(format!("zone {node_name:?} coupled to itself")));
                    }
                    model.coupling_wk[(i, j)] += c.ua_wk;
                    model.coupling_wk[(j, i)] += c.ua_wk;
                }
            }
        }

        for s in &self.surfaces {
            let i = index(&s.zone)
                .ok_or_else(|| Error::NotFound(format!("surface names unknown zone {:?}", s.zone)))?;
            if !(s.area_m2 >= 0.0) || !(0.0..=1.0).contains(&s.absorptivity) {
                return Err(Error::invalid(format!(
                    "surface on {:?} needs area >= 0 and absorptivity in [0, 1]",
                    s.zone
                )));
            }
            model.solar_aperture_m2[i] += s.area_m2 * s.absorptivity * s.orientation.solar_factor();
        }

        let mut schedule = InternalLoadSchedule::default();
        for l in &self.loads {
            if index(&l.zone).is_none() {
                return Err(Error::NotFound(format!("load names unknown zone {:?}", l.zone)));
            }
            if l.sensible_w < 0.0 || l.latent_w < 0.0 {
                return Err(Error::invalid(format!("load on {:?} is negative", l.zone)));
            }
            if l.hours.iter().any(|&h| h >= HOURS_PER_DAY as u32) {
                return Err(Error::invalid(format!("load on {:?} has hours outside 0..=23", l.zone)));
            }
            let entry = schedule.zones.entry(l.zone.clone()).or_insert_with(ZoneLoads::default);
            for &h in &l.hours {
                entry.sensible_w[h as usize] += l.sensible_w;
                entry.latent_w[h as usize] += l.latent_w;
            }
        }

        let hvac = IdealHvac {
            zones: self.hvac.zones.clone(),
            hours: self.hvac.hours.clone(),
            setpoint_c: self.hvac.setpoint_c,
            humidity_setpoint_kgkg: self.hvac.humidity_setpoint_kgkg,
            zone_air_mass_kg: self.hvac.zone_air_mass_kg,
            air_changes_per_hour: self.hvac.air_changes_per_hour,
        };

        model.validate()?;
        schedule.validate(&model)?;
        hvac.validate(&model)?;
        Ok((model, schedule, hvac))
    }
}

pub fn parse_building(text: &str) -> Result<BuildingConfig> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("building JSON: {e}")))
}

pub fn read_building(path: &Path) -> Result<BuildingConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_building(&text)
}

/// Editable source of the demo dwelling.
pub fn demo_building_json() -> &'static str {
    include_str!("../../assets/demo_dwelling.json")
}

/// Editable source of the default comfort polygons.
pub fn demo_comfort_zones_json() -> &'static str {
    include_str!("../../assets/comfort_zones.json")
}

/// Two-zone tropical dwelling with a massive roof slab, the reference
/// test bed for load and comfort runs.
pub fn build_demo_dwelling() -> (NodalModel, InternalLoadSchedule) {
    let (model, loads, _) = parse_building(demo_building_json())
        .and_then(|c| c.build())
        .expect("embedded demo dwelling is valid");
    (model, loads)
}

/// Night-cooling schedule that accompanies the demo dwelling.
pub fn demo_hvac() -> IdealHvac {
    let (_, _, hvac) = parse_building(demo_building_json())
        .and_then(|c| c.build())
        .expect("embedded demo dwelling is valid");
    hvac
}
