use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::parse::derive_speeds;
use super::{CleanConfig, IngestError, VesselPing};
use crate::geo::haversine_km;
use crate::stats::percentile;

/// Speed above which a ping is treated as a spoofed jump.
pub const DEFAULT_SPEED_CUTOFF_KMH: f64 = 32.0;

/// Per-rule accounting. Every removed ping is attributed to exactly one rule,
/// checked in the order window, shore, speed, mobility.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleanReport {
    pub schema: String,
    pub version: u32,
    pub input_pings: usize,
    pub surviving_pings: usize,
    pub removed_outside_window: usize,
    pub removed_shore: usize,
    pub removed_speed: usize,
    pub removed_mobility: usize,
    pub input_vessels: usize,
    pub surviving_vessels: usize,
    pub vessels_removed_mobility: usize,
    pub speed_cutoff_kmh: f64,
    pub warnings: Vec<String>,
}

impl CleanReport {
    pub fn total_removed(&self) -> usize {
        self.removed_outside_window + self.removed_shore + self.removed_speed + self.removed_mobility
    }

    /// `survivors + removals == inputs`.
    pub fn reconciles(&self) -> bool {
        self.surviving_pings + self.total_removed() == self.input_pings
    }
}

/// Empirical percentile (linear interpolation, see [`crate::stats::percentile`])
/// of all derived speeds.
pub fn compute_speed_threshold(pings: &[VesselPing], p: f64) -> Result<f64, IngestError> {
    let speeds: Vec<f64> = pings
        .iter()
        .filter_map(|p| p.speed_kmh)
        .filter(|s| s.is_finite())
        .collect();
    if speeds.is_empty() {
        return Err(IngestError::EmptySample);
    }
    percentile(&speeds, p).map_err(|e| IngestError::Config(e.to_string()))
}

/// Apply the window, shore, speed and mobility rules.
///
/// Input must be grouped by vessel and time-ordered within each vessel, as
/// produced by [`super::parse_pings`]. With a fixed speed cutoff the
/// operation is idempotent.
pub fn clean(
    pings: &[VesselPing],
    config: &CleanConfig,
) -> Result<(Vec<VesselPing>, CleanReport), IngestError> {
    config.validate()?;
    let shore = config.resolve_shore()?;
    let mut report = CleanReport {
        schema: "fleet-anomaly/clean-report".into(),
        version: 1,
        input_pings: pings.len(),
        input_vessels: pings.iter().map(|p| p.vessel_id.as_str()).collect::<HashSet<_>>().len(),
        ..Default::default()
    };
    if shore.is_none() {
        report.warnings.push(
            "no shoreline polygons supplied; shore rule skipped, only the bounding box limits positions"
                .into(),
        );
    }

    let mut kept: Vec<VesselPing> = Vec::with_capacity(pings.len());
    for p in pings {
        let in_window = config.bbox.is_none_or(|b| b.contains(p.position))
            && config.time_window.is_none_or(|w| w.contains(p.timestamp));
        if !in_window {
            report.removed_outside_window += 1;
        } else if shore.as_ref().is_some_and(|s| s.excludes(p.position)) {
            report.removed_shore += 1;
        } else {
            kept.push(p.clone());
        }
    }
    derive_speeds(&mut kept);

    let cutoff = match (config.speed_cutoff_kmh, config.speed_percentile) {
        (Some(c), _) => c,
        (None, Some(p)) => match compute_speed_threshold(&kept, p) {
            Ok(c) => c,
            Err(IngestError::EmptySample) => {
                report
                    .warnings
                    .push("no derivable speeds; speed rule skipped".into());
                f64::INFINITY
            }
            Err(e) => return Err(e),
        },
        (None, None) => unreachable!("validated"),
    };
    report.speed_cutoff_kmh = cutoff;

    // A ping is judged against the last ping of its vessel that was kept, so
    // a single spoofed jump removes only the jump and not the return leg.
    let mut last_kept: HashMap<&str, &VesselPing> = HashMap::new();
    let mut after_speed: Vec<VesselPing> = Vec::with_capacity(kept.len());
    for p in &kept {
        let ok = match last_kept.get(p.vessel_id.as_str()) {
            None => true,
            Some(prev) => {
                let hours = (p.timestamp - prev.timestamp).num_seconds() as f64 / 3600.0;
                let km = haversine_km(prev.position, p.position)?;
                hours > 0.0 && km / hours <= cutoff
            }
        };
        if ok {
            last_kept.insert(p.vessel_id.as_str(), p);
            after_speed.push(p.clone());
        } else {
            report.removed_speed += 1;
        }
    }

    let immobile = immobile_vessels(&after_speed, config.min_daily_travel_km)?;
    report.vessels_removed_mobility = immobile.len();
    let mut survivors: Vec<VesselPing> = Vec::with_capacity(after_speed.len());
    for p in after_speed {
        if immobile.contains(p.vessel_id.as_str()) {
            report.removed_mobility += 1;
        } else {
            survivors.push(p);
        }
    }
    derive_speeds(&mut survivors);

    report.surviving_pings = survivors.len();
    report.surviving_vessels = survivors
        .iter()
        .map(|p| p.vessel_id.as_str())
        .collect::<HashSet<_>>()
        .len();
    debug_assert!(report.reconciles());
    Ok((survivors, report))
}

/// Vessels whose travel within every observed UTC day stays below `min_km`.
fn immobile_vessels(pings: &[VesselPing], min_km: f64) -> Result<HashSet<String>, IngestError> {
    let mut daily: HashMap<&str, BTreeMap<NaiveDate, f64>> = HashMap::new();
    let mut prev: HashMap<&str, &VesselPing> = HashMap::new();
    for p in pings {
        let day = p.timestamp.date_naive();
        let entry = daily.entry(p.vessel_id.as_str()).or_default();
        let travelled = match prev.get(p.vessel_id.as_str()) {
            Some(q) if q.timestamp.date_naive() == day => haversine_km(q.position, p.position)?,
            _ => 0.0,
        };
        *entry.entry(day).or_insert(0.0) += travelled;
        prev.insert(p.vessel_id.as_str(), p);
    }
    Ok(daily
        .into_iter()
        .filter(|(_, days)| days.values().all(|&km| km < min_km))
        .map(|(id, _)| id.to_string())
        .collect())
}
