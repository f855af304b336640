//! Psychrometric comfort zones: named polygons in (dry-bulb, humidity
//! ratio) coordinates and the fraction of air states falling inside them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psychro::MoistAirState;

/// Acceptable-state polygon on the psychrometric chart. Vertices are
/// (temperature degC, humidity ratio kg/kg) pairs in drawing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComfortZone {
    pub name: String,
    pub vertices: Vec<(f64, f64)>,
    /// Indoor air speed up to which the zone applies, m/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_air_speed_ms: Option<f64>,
}

#[derive(Deserialize)]
struct ZoneFile {
    zones: Vec<ComfortZone>,
}

impl ComfortZone {
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(Error::invalid(format!(
                "comfort zone {:?} needs at least 3 vertices, got {n}",
                self.name
            )));
        }
        if self
            .vertices
            .iter()
            .any(|&(t, w)| !t.is_finite() || !w.is_finite())
        {
            return Err(Error::invalid(format!("comfort zone {:?} has non-finite vertices", self.name)));
        }
        // Signed area rejects collapsed polygons.
        let mut area = 0.0;
        for i in 0..n {
            let (x1, y1) = self.vertices[i];
            let (x2, y2) = self.vertices[(i + 1) % n];
            area += x1 * y2 - x2 * y1;
        }
        if area.abs() < 1e-15 {
            return Err(Error::invalid(format!("comfort zone {:?} has zero area", self.name)));
        }
        // Simple polygon: non-adjacent edges must not cross.
        for i in 0..n {
            let a = (self.vertices[i], self.vertices[(i + 1) % n]);
            for j in i + 1..n {
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let b = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segments_cross(a, b) {
                    return Err(Error::invalid(format!(
                        "comfort zone {:?} is self-intersecting",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Even-odd ray casting; points on an edge or vertex count as inside.
    pub fn contains(&self, t: f64, w: f64) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            if on_segment(self.vertices[i], self.vertices[(i + 1) % n], t, w) {
                return true;
            }
        }
        let mut inside = false;
        for i in 0..n {
            let (x1, y1) = self.vertices[i];
            let (x2, y2) = self.vertices[(i + 1) % n];
            if (y1 > w) != (y2 > w) {
                let x_cross = x1 + (w - y1) * (x2 - x1) / (y2 - y1);
                if t < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Proper crossing in the open interior of both segments. Touching at an
/// endpoint does not count, so closed polygon chains stay valid.
fn segments_cross(a: ((f64, f64), (f64, f64)), b: ((f64, f64), (f64, f64))) -> bool {
    let d = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| {
        (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
    };
    let (d1, d2) = (d(b.0, b.1, a.0), d(b.0, b.1, a.1));
    let (d3, d4) = (d(a.0, a.1, b.0), d(a.0, a.1, b.1));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn on_segment(p1: (f64, f64), p2: (f64, f64), t: f64, w: f64) -> bool {
    let (dx, dy) = (p2.0 - p1.0, p2.1 - p1.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return (t - p1.0).abs() <= 1e-9 && (w - p1.1).abs() <= 1e-12;
    }
    let u = (((t - p1.0) * dx + (w - p1.1) * dy) / len2).clamp(0.0, 1.0);
    let (nx, ny) = (p1.0 + u * dx, p1.1 + u * dy);
    // Axis-wise tolerances: temperature and humidity ratio differ in scale
    // by three orders of magnitude.
    (t - nx).abs() <= 1e-9 && (w - ny).abs() <= 1e-12
}

/// Fraction of the air states inside each zone, in zone order.
pub fn comfort_fraction(states: &[MoistAirState], zones: &[ComfortZone]) -> Result<Vec<f64>> {
    if states.is_empty() {
        return Err(Error::invalid("no air states to evaluate".to_string()));
    }
    zones.iter().try_for_each(ComfortZone::validate)?;
    Ok(zones
        .iter()
        .map(|zone| {
            let inside = states.iter().filter(|s| zone.contains(s.t, s.w)).count();
            inside as f64 / states.len() as f64
        })
        .collect())
}

pub fn parse_comfort_zones(text: &str) -> Result<Vec<ComfortZone>> {
    let file: ZoneFile = serde_json::from_str(text)
        .map_err(|e| Error::invalid(format!("comfort zones JSON: {e}")))?;
    file.zones.iter().try_for_each(ComfortZone::validate)?;
    Ok(file.zones)
}

/// Built-in polygons: Givoni still-air and moving-air zones plus the ASHRAE
/// summer band. `demo_comfort_zones_json` exposes the editable source.
pub fn default_comfort_zones() -> Vec<ComfortZone> {
    parse_comfort_zones(super::demo_comfort_zones_json()).expect("embedded comfort zones are valid")
}
