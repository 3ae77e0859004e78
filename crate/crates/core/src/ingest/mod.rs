//! Raw position reports: parsing, cleaning, and the balanced hourly panel.

mod clean;
mod panel;
mod parse;
mod shore;

use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoError, GeoPoint};

pub use clean::{clean, compute_speed_threshold, CleanReport, DEFAULT_SPEED_CUTOFF_KMH};
pub use panel::{build_panel, interpolate_hourly, Panel, PanelError, PANEL_SCHEMA_VERSION};
pub use parse::{parse_pings, write_pings_csv, ParseOutput, RecordError, RecordErrorKind};
pub use shore::{Polygon, ShoreExclusion};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("corrupt input: {malformed} of {total} records malformed")]
    CorruptInput { malformed: usize, total: usize },
    #[error("no derivable speeds (every vessel has a single ping)")]
    EmptySample,
    #[error("invalid clean config: {0}")]
    Config(String),
    #[error("shore polygons: {0}")]
    Shore(String),
    #[error("no vessels survived cleaning")]
    EmptyPanel,
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// One raw position report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselPing {
    pub vessel_id: String,
    pub timestamp: DateTime<Utc>,
    pub position: GeoPoint,
    /// km/h from the previous ping of the same vessel; `None` for the first.
    pub speed_kmh: Option<f64>,
}

/// Latitude/longitude rectangle, inclusive on every edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BBox {
    pub fn contains(&self, p: GeoPoint) -> bool {
        p.lat >= self.min_lat && p.lat <= self.max_lat && p.lon >= self.min_lon && p.lon <= self.max_lon
    }
}

/// Closed UTC interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeWindow {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        t >= self.start && t <= self.end
    }
}

fn default_cutoff() -> Option<f64> {
    Some(DEFAULT_SPEED_CUTOFF_KMH)
}
fn default_percentile() -> Option<f64> {
    Some(0.99)
}
fn default_min_daily_travel() -> f64 {
    1.0
}
fn default_max_gap() -> f64 {
    24.0
}

/// Cleaning and panel-building parameters.
///
/// When both `speed_cutoff_kmh` and `speed_percentile` are set the fixed
/// cutoff is used; the percentile is only consulted when the cutoff is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleanConfig {
    #[serde(default = "default_cutoff")]
    pub speed_cutoff_kmh: Option<f64>,
    #[serde(default = "default_percentile")]
    pub speed_percentile: Option<f64>,
    #[serde(default = "default_min_daily_travel")]
    pub min_daily_travel_km: f64,
    /// GeoJSON land polygons. Relative paths resolve against the working directory.
    #[serde(default)]
    pub shore_geojson: Option<PathBuf>,
    #[serde(default)]
    pub shore_buffer_km: f64,
    /// Pre-loaded polygons; takes precedence over `shore_geojson`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shore: Option<ShoreExclusion>,
    #[serde(default)]
    pub bbox: Option<BBox>,
    #[serde(default)]
    pub time_window: Option<TimeWindow>,
    #[serde(default = "default_max_gap")]
    pub max_gap_hours: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            speed_cutoff_kmh: default_cutoff(),
            speed_percentile: default_percentile(),
            min_daily_travel_km: default_min_daily_travel(),
            shore_geojson: None,
            shore_buffer_km: 0.0,
            shore: None,
            bbox: None,
            time_window: None,
            max_gap_hours: default_max_gap(),
        }
    }
}

impl CleanConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::Config(m));
        if let Some(c) = self.speed_cutoff_kmh {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("speed_cutoff_kmh must be > 0, got {c}"));
            }
        }
        if let Some(p) = self.speed_percentile {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("speed_percentile must lie in (0, 1), got {p}"));
            }
        }
        if self.speed_cutoff_kmh.is_none() && self.speed_percentile.is_none() {
            return bad("one of speed_cutoff_kmh or speed_percentile is required".into());
        }
        if !(self.min_daily_travel_km >= 0.0 && self.min_daily_travel_km.is_finite()) {
            return bad(format!(
                "min_daily_travel_km must be >= 0, got {}",
                self.min_daily_travel_km
            ));
        }
        if !(self.shore_buffer_km >= 0.0 && self.shore_buffer_km.is_finite()) {
            return bad(format!("shore_buffer_km must be >= 0, got {}", self.shore_buffer_km));
        }
        if !(self.max_gap_hours > 0.0) {
            return bad(format!("max_gap_hours must be > 0, got {}", self.max_gap_hours));
        }
        if let Some(w) = self.time_window {
            if w.start >= w.end {
                return bad(format!("time window start {} is not before end {}", w.start, w.end));
            }
        }
        if let Some(b) = self.bbox {
            let ok = b.min_lat < b.max_lat
                && b.min_lon < b.max_lon
                && GeoPoint::new(b.min_lat, b.min_lon).is_ok()
                && GeoPoint::new(b.max_lat, b.max_lon).is_ok();
            if !ok {
                return bad(format!("invalid bbox {b:?}"));
            }
        }
        Ok(())
    }

    /// Shore mask from `shore` or, failing that, the GeoJSON path.
    pub fn resolve_shore(&self) -> Result<Option<ShoreExclusion>, IngestError> {
        if let Some(s) = &self.shore {
            return Ok(Some(s.clone()));
        }
        match &self.shore_geojson {
            Some(path) => ShoreExclusion::from_geojson_file(path, self.shore_buffer_km).map(Some),
            None => Ok(None),
        }
    }
}
