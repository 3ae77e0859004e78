//! Run configuration files and built-in presets.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use fleet_anomaly::anomaly::{HourWindow, IndexKind};
use fleet_anomaly::ingest::{Panel, TimeWindow};
use fleet_anomaly::synth::{DarkEvent, FleetScenario};

use crate::error::{CliError, ErrorCode};

/// A window given either as hour indices into the panel or as UTC instants.
/// Both forms are closed intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    Hours { start: usize, end: usize },
    Times { start: DateTime<Utc>, end: DateTime<Utc> },
}

impl From<HourWindow> for WindowSpec {
    fn from(w: HourWindow) -> Self {
        WindowSpec::Hours {
            start: w.start,
            end: w.end,
        }
    }
}

impl WindowSpec {
    /// Hour indices of the panel grid covered by this window.
    pub fn resolve<T: fleet_anomaly::Real>(&self, panel: &Panel<T>) -> Result<HourWindow, CliError> {
        let n = panel.n_hours();
        let (start, end) = match *self {
            WindowSpec::Hours { start, end } => (start as i64, end as i64),
            WindowSpec::Times { start, end } => {
                let secs = |t: DateTime<Utc>| (t - panel.start_hour()).num_seconds();
                (secs(start).div_euclid(3600) + i64::from(secs(start).rem_euclid(3600) != 0), secs(end).div_euclid(3600))
            }
        };
        if start > end {
            return Err(CliError::config(format!("window {self:?} is empty or reversed")));
        }
        if end < 0 || start >= n as i64 {
            return Err(CliError::config(format!(
                "window {self:?} lies outside the panel ({n} hours from {})",
                panel.start_hour()
            )));
        }
        Ok(HourWindow::new(start.max(0) as usize, (end as usize).min(n - 1)))
    }
}

fn default_lag() -> usize {
    72
}
fn default_kinds() -> Vec<IndexKind> {
    vec![IndexKind::Mean, IndexKind::Kurtosis]
}
fn default_percentile() -> f64 {
    0.99
}

/// Parameters of the `detect`, `heatmap` and `calibrate` stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Informational: the period the case study covers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study_window: Option<TimeWindow>,
    #[serde(default = "default_lag")]
    pub lag_hours: usize,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<IndexKind>,
    #[serde(default = "default_percentile")]
    pub percentile: f64,
    #[serde(default)]
    pub null_windows: Vec<WindowSpec>,
    #[serde(default)]
    pub event_windows: Vec<WindowSpec>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            name: None,
            study_window: None,
            lag_hours: default_lag(),
            kinds: default_kinds(),
            percentile: default_percentile(),
            null_windows: Vec::new(),
            event_windows: Vec::new(),
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.lag_hours == 0 {
            return Err(CliError::config("lag_hours must be >= 1"));
        }
        if self.kinds.is_empty() {
            return Err(CliError::config("at least one index kind is required"));
        }
        if !(self.percentile > 0.0 && self.percentile < 1.0) {
            return Err(CliError::config(format!(
                "percentile must lie in (0, 1), got {}",
                self.percentile
            )));
        }
        Ok(())
    }

    /// Copy with every window converted to hour indices of `panel`.
    pub fn resolved<T: fleet_anomaly::Real>(&self, panel: &Panel<T>) -> Result<DetectConfig, CliError> {
        let resolve = |ws: &[WindowSpec]| -> Result<Vec<WindowSpec>, CliError> {
            ws.iter().map(|w| w.resolve(panel).map(WindowSpec::from)).collect()
        };
        Ok(DetectConfig {
            null_windows: resolve(&self.null_windows)?,
            event_windows: resolve(&self.event_windows)?,
            ..self.clone()
        })
    }

    pub fn hour_windows(ws: &[WindowSpec]) -> Vec<HourWindow> {
        ws.iter()
            .filter_map(|w| match *w {
                WindowSpec::Hours { start, end } => Some(HourWindow::new(start, end)),
                WindowSpec::Times { .. } => None,
            })
            .collect()
    }
}

/// Scenario plus optional event for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub scenario: FleetScenario,
    #[serde(default)]
    pub event: Option<DarkEvent>,
    /// Seed for responder selection; defaults to the scenario seed.
    #[serde(default)]
    pub event_seed: Option<u64>,
}

impl SimulateConfig {
    pub fn event_seed(&self) -> u64 {
        self.event_seed.unwrap_or(self.scenario.seed)
    }
}

pub const SIMULATE_PRESETS: &[&str] = &["hotspot-baseline", "hotspot-event", "stationary-noise"];
pub const DETECT_PRESETS: &[&str] = &["iuu-2016", "iuu-2018a", "iuu-2018b", "synthetic-event"];

/// Built-in simulation scenarios.
///
/// `hotspot-event` is the synthetic validation setup: a 15-day single-hotspot
/// fleet with an avoidance event centred on the hotspot from hour 120 to 144.
pub fn simulate_preset(name: &str, seed: u64) -> Result<SimulateConfig, CliError> {
    let baseline = FleetScenario::hotspot_baseline(seed);
    let cfg = match name {
        "hotspot-baseline" => SimulateConfig {
            scenario: baseline,
            event: None,
            event_seed: None,
        },
        "hotspot-event" => {
            let center = baseline.hotspots[0].center;
            SimulateConfig {
                scenario: FleetScenario {
                    duration_hours: 360,
                    ..baseline
                },
                event: Some(DarkEvent::avoidance(center, 120)),
                event_seed: None,
            }
        }
        "stationary-noise" => SimulateConfig {
            scenario: FleetScenario::stationary_noise(seed, 1600),
            event: None,
            event_seed: None,
        },
        other => {
            return Err(CliError::config(format!(
                "unknown simulate preset `{other}` (known: {})",
                SIMULATE_PRESETS.join(", ")
            )))
        }
    };
    Ok(cfg)
}

/// Built-in detection configs: the three historical case studies and the
/// synthetic validation run matching the `hotspot-event` simulation.
pub fn detect_preset(name: &str) -> Result<DetectConfig, CliError> {
    let text = match name {
        "iuu-2016" => include_str!("../presets/iuu-2016.json"),
        "iuu-2018a" => include_str!("../presets/iuu-2018a.json"),
        "iuu-2018b" => include_str!("../presets/iuu-2018b.json"),
        "synthetic-event" => include_str!("../presets/synthetic-event.json"),
        other => {
            return Err(CliError::config(format!(
                "unknown detect preset `{other}` (known: {})",
                DETECT_PRESETS.join(", ")
            )))
        }
    };
    serde_json::from_str(text).map_err(|e| CliError::config(format!("preset {name}: {e}")))
}

/// Read and deserialize a JSON config file.
pub fn load_json<C: DeserializeOwned>(path: &Path) -> Result<C, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        let mut err = CliError::io(path, e);
        if err.code == ErrorCode::Io {
            err.code = ErrorCode::ConfigInvalid;
        }
        err
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn panel() -> Panel {
        Panel::empty(
            vec!["a".into()],
            Utc.with_ymd_and_hms(2016, 3, 1, 0, 0, 0).unwrap(),
            31 * 24,
        )
    }

    #[test]
    fn presets_parse() {
        for name in DETECT_PRESETS {
            let c = detect_preset(name).unwrap();
            c.validate().unwrap();
            assert!(!c.null_windows.is_empty() && !c.event_windows.is_empty());
        }
        assert_eq!(detect_preset("iuu-2016").unwrap().lag_hours, 192);
        assert_eq!(detect_preset("iuu-2018a").unwrap().lag_hours, 72);
        assert_eq!(detect_preset("iuu-2018b").unwrap().lag_hours, 192);
        for name in SIMULATE_PRESETS {
            let c = simulate_preset(name, 1).unwrap();
            c.scenario.validate().unwrap();
        }
        assert_eq!(detect_preset("nope").unwrap_err().code, ErrorCode::ConfigInvalid);
    }

    #[test]
    fn time_windows_resolve_to_hours() {
        let p = panel();
        let c = detect_preset("iuu-2016").unwrap().resolved(&p).unwrap();
        assert_eq!(
            DetectConfig::hour_windows(&c.event_windows),
            [HourWindow::new(14 * 24, 15 * 24 - 1)]
        );
        assert_eq!(
            DetectConfig::hour_windows(&c.null_windows),
            [HourWindow::new(15 * 24, 31 * 24 - 1)]
        );
        let partial = WindowSpec::Times {
            start: Utc.with_ymd_and_hms(2016, 3, 1, 0, 30, 0).unwrap(),
            end: Utc.with_ymd_and_hms(2016, 3, 1, 5, 59, 0).unwrap(),
        };
        assert_eq!(partial.resolve(&p).unwrap(), HourWindow::new(1, 5));
        let outside = WindowSpec::Hours { start: 5000, end: 6000 };
        assert!(outside.resolve(&p).is_err());
    }

    #[test]
    fn window_spec_json_forms() {
        let h: WindowSpec = serde_json::from_str(r#"{"start": 3, "end": 9}"#).unwrap();
        assert_eq!(h, WindowSpec::Hours { start: 3, end: 9 });
        let t: WindowSpec =
            serde_json::from_str(r#"{"start": "2016-03-15T00:00:00Z", "end": "2016-03-15T23:00:00Z"}"#)
                .unwrap();
        assert!(matches!(t, WindowSpec::Times { .. }));
    }
}
