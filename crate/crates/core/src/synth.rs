//! Synthetic fleets: hotspot-attracted random walks with injectable
//! avoidance ("dark vessel") events, used as ground truth for the detector.
//!
//! Movement uses local equirectangular steps, which is accurate to well
//! under a percent at the tens-of-km scales involved.

use chrono::{DateTime, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anomaly::HourWindow;
use crate::geo::{destination, haversine_km, initial_bearing, offset_equirectangular, wrap_lon, GeoPoint};
use crate::ingest::Panel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub center: GeoPoint,
    /// Vessels start uniformly inside this radius.
    pub radius_km: f64,
}

fn default_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetScenario {
    pub n_vessels: usize,
    pub hotspots: Vec<Hotspot>,
    pub duration_hours: usize,
    /// Standard deviation of the hourly east and north noise, km.
    pub step_noise_km: f64,
    /// Fraction of the way toward the assigned hotspot covered each hour.
    pub attraction_strength: f64,
    pub seed: u64,
    #[serde(default = "default_start")]
    pub start: DateTime<Utc>,
}

impl FleetScenario {
    /// Single hotspot on the Patagonian shelf: 50 vessels, 30 km radius, 10 days.
    pub fn hotspot_baseline(seed: u64) -> Self {
        Self {
            n_vessels: 50,
            hotspots: vec![Hotspot {
                center: GeoPoint {
                    lat: -42.77,
                    lon: -62.0,
                },
                radius_km: 30.0,
            }],
            duration_hours: 240,
            step_noise_km: 4.0,
            attraction_strength: 0.1,
            seed,
            start: default_start(),
        }
    }

    /// Five tight clusters whose vessels jitter independently around fixed
    /// centres every hour, so consecutive hours are exchangeable.
    pub fn stationary_noise(seed: u64, duration_hours: usize) -> Self {
        let center = GeoPoint {
            lat: -42.77,
            lon: -62.0,
        };
        let hotspots = (0..5)
            .map(|i| {
                let b = i as f64 * std::f64::consts::TAU / 5.0;
                Hotspot {
                    center: destination(center, b, 60.0 + 40.0 * i as f64),
                    radius_km: 10.0,
                }
            })
            .collect();
        Self {
            n_vessels: 50,
            hotspots,
            duration_hours,
            step_noise_km: 2.0,
            attraction_strength: 1.0,
            seed,
            start: default_start(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if self.n_vessels < 2 {
            return bad(format!("n_vessels must be >= 2, got {}", self.n_vessels));
        }
        if self.duration_hours < 2 {
            return bad(format!("duration_hours must be >= 2, got {}", self.duration_hours));
        }
        if self.hotspots.is_empty() {
            return bad("at least one hotspot is required".into());
        }
        for h in &self.hotspots {
            if !(h.radius_km > 0.0) || !h.center.is_valid() {
                return bad(format!("invalid hotspot {h:?}"));
            }
        }
        if !(self.step_noise_km >= 0.0 && self.step_noise_km.is_finite()) {
            return bad(format!("step_noise_km must be >= 0, got {}", self.step_noise_km));
        }
        if !(0.0..=1.0).contains(&self.attraction_strength) {
            return bad(format!(
                "attraction_strength must lie in [0, 1], got {}",
                self.attraction_strength
            ));
        }
        Ok(())
    }
}

/// An avoidance response to unobserved activity at `location`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkEvent {
    pub location: GeoPoint,
    pub start_hour: usize,
    pub end_hour: usize,
    pub avoidance_radius_km: f64,
    pub repulsion_km_per_hour: f64,
    pub response_fraction: f64,
}

impl DarkEvent {
    /// Radius 100 km, 10 km/h outward drift for 24 h, half of the vessels respond.
    pub fn avoidance(location: GeoPoint, start_hour: usize) -> Self {
        Self {
            location,
            start_hour,
            end_hour: start_hour + 24,
            avoidance_radius_km: 100.0,
            repulsion_km_per_hour: 10.0,
            response_fraction: 0.5,
        }
    }

    pub fn window(&self) -> HourWindow {
        HourWindow::new(self.start_hour, self.end_hour)
    }

    pub fn midpoint(&self) -> usize {
        (self.start_hour + self.end_hour) / 2
    }

    pub fn validate(&self, n_hours: usize) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if !(self.start_hour < self.end_hour && self.end_hour < n_hours) {
            return bad(format!(
                "event window [{}, {}] not inside panel of {n_hours} hours",
                self.start_hour, self.end_hour
            ));
        }
        if !(self.avoidance_radius_km > 0.0) {
            return bad(format!("avoidance_radius_km must be > 0, got {}", self.avoidance_radius_km));
        }
        if !(self.repulsion_km_per_hour >= 0.0 && self.repulsion_km_per_hour.is_finite()) {
            return bad(format!(
                "repulsion_km_per_hour must be >= 0, got {}",
                self.repulsion_km_per_hour
            ));
        }
        if !(0.0..=1.0).contains(&self.response_fraction) {
            return bad(format!(
                "response_fraction must lie in [0, 1], got {}",
                self.response_fraction
            ));
        }
        if !self.location.is_valid() {
            return bad(format!("invalid location {:?}", self.location));
        }
        Ok(())
    }
}

fn uniform_in_disc(rng: &mut ChaCha8Rng, center: GeoPoint, radius_km: f64) -> GeoPoint {
    let r = radius_km * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    offset_equirectangular(center, r * theta.sin(), r * theta.cos())
}

/// Move `attraction` of the way toward `target`; `attraction == 1` lands exactly on it.
fn pull_toward(p: GeoPoint, target: GeoPoint, attraction: f64) -> GeoPoint {
    let keep = 1.0 - attraction;
    let dlon = wrap_lon(target.lon - p.lon);
    GeoPoint {
        lat: target.lat - keep * (target.lat - p.lat),
        lon: wrap_lon(target.lon - keep * dlon),
    }
}

/// Simulate a fleet. Vessel `i` is attracted to hotspot `i mod k`; every vessel
/// is present every hour. Deterministic in `scenario.seed`.
pub fn generate_fleet(scenario: &FleetScenario) -> Result<Panel, SynthError> {
    scenario.validate()?;
    let n = scenario.n_vessels;
    let ids: Vec<String> = (0..n).map(|i| format!("SIM{:06}", i + 1)).collect();
    let mut panel = Panel::empty(ids, scenario.start, scenario.duration_hours);
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let noise = Normal::new(0.0, scenario.step_noise_km)
        .map_err(|e| SynthError::Config(e.to_string()))?;
    let home = |v: usize| scenario.hotspots[v % scenario.hotspots.len()];

    let mut current: Vec<GeoPoint> = (0..n)
        .map(|v| uniform_in_disc(&mut rng, home(v).center, home(v).radius_km))
        .collect();
    for (v, &p) in current.iter().enumerate() {
        panel.set(v, 0, Some(p));
    }
    for h in 1..scenario.duration_hours {
        for (v, pos) in current.iter_mut().enumerate() {
            let pulled = pull_toward(*pos, home(v).center, scenario.attraction_strength);
            let (e, nth) = (noise.sample(&mut rng), noise.sample(&mut rng));
            *pos = offset_equirectangular(pulled, e, nth);
            panel.set(v, h, Some(*pos));
        }
    }
    Ok(panel)
}

/// Vessels that react to `event`: those present within the avoidance radius
/// at the start hour, thinned to `response_fraction` by a seeded shuffle.
/// Larger fractions select supersets of smaller ones for the same seed.
pub fn select_responders(panel: &Panel, event: &DarkEvent, seed: u64) -> Result<Vec<usize>, SynthError> {
    event.validate(panel.n_hours())?;
    let mut candidates: Vec<usize> = (0..panel.n_vessels())
        .filter(|&v| {
            panel.get(v, event.start_hour).is_some_and(|p| {
                haversine_km(event.location, p).is_ok_and(|d| d <= event.avoidance_radius_km)
            })
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    let count = (event.response_fraction * candidates.len() as f64).round() as usize;
    candidates.truncate(count);
    candidates.sort_unstable();
    Ok(candidates)
}

/// Overlay an avoidance event on a panel.
///
/// Each responder leaves its start-hour position radially away from the
/// event location, its distance growing by `repulsion_km_per_hour` per hour
/// until `end_hour`. Its normal motion is replaced during the window; all
/// other cells are left untouched.
pub fn inject_event(panel: &Panel, event: &DarkEvent, seed: u64) -> Result<Panel, SynthError> {
    let responders = select_responders(panel, event, seed)?;
    let mut out = panel.clone();
    if event.repulsion_km_per_hour == 0.0 || responders.is_empty() {
        return Ok(out);
    }
    // Separate stream for the bearings of vessels sitting exactly on the event.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for v in responders {
        let entry = panel.get(v, event.start_hour).expect("responder present at start");
        let d0 = haversine_km(event.location, entry).unwrap_or(0.0);
        let bearing = if d0 > 0.0 {
            initial_bearing(event.location, entry)
        } else {
            std::f64::consts::TAU * rng.random::<f64>()
        };
        for h in event.start_hour + 1..=event.end_hour {
            if panel.is_present(v, h) {
                let k = (h - event.start_hour) as f64;
                let d = d0 + event.repulsion_km_per_hour * k;
                out.set(v, h, Some(destination(event.location, bearing, d)));
            }
        }
    }
    Ok(out)
}
