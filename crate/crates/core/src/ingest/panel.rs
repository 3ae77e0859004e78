use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::{DateTime, Duration, DurationRound, SecondsFormat, TimeDelta, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CleanConfig, IngestError, VesselPing};
use crate::geo::GeoPoint;
use crate::scalar::Real;

pub const PANEL_SCHEMA_VERSION: u32 = 1;
const PANEL_SCHEMA: &str = "fleet-anomaly/panel";

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("panel shape mismatch: {0}")]
    Shape(String),
    #[error("hours must be consecutive and one hour apart (index {0})")]
    NonConsecutiveHours(usize),
    #[error("present cell ({vessel}, {hour}) has invalid coordinates")]
    InvalidCell { vessel: usize, hour: usize },
    #[error("panel schema: {0}")]
    Schema(String),
    #[error("panel json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("panel csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("panel io: {0}")]
    Io(#[from] std::io::Error),
}

/// Balanced vessel × hour grid of positions with a presence mask.
///
/// Storage is row-major by vessel. Absent cells hold a placeholder position
/// that is never handed out through [`Panel::get`].
#[derive(Debug, Clone, PartialEq)]
pub struct Panel<T = f64> {
    vessel_ids: Vec<String>,
    start_hour: DateTime<Utc>,
    n_hours: usize,
    positions: Vec<GeoPoint<T>>,
    presence: Vec<bool>,
}

impl<T: Real> Panel<T> {
    /// All cells absent.
    pub fn empty(vessel_ids: Vec<String>, start_hour: DateTime<Utc>, n_hours: usize) -> Self {
        let cells = vessel_ids.len() * n_hours;
        let origin = GeoPoint {
            lat: T::zero(),
            lon: T::zero(),
        };
        Self {
            vessel_ids,
            start_hour,
            n_hours,
            positions: vec![origin; cells],
            presence: vec![false; cells],
        }
    }

    pub fn from_rows(
        vessel_ids: Vec<String>,
        start_hour: DateTime<Utc>,
        n_hours: usize,
        positions: Vec<GeoPoint<T>>,
        presence: Vec<bool>,
    ) -> Result<Self, PanelError> {
        let cells = vessel_ids.len() * n_hours;
        if positions.len() != cells || presence.len() != cells {
            return Err(PanelError::Shape(format!(
                "{} vessels × {} hours needs {cells} cells, got {} positions / {} flags",
                vessel_ids.len(),
                n_hours,
                positions.len(),
                presence.len()
            )));
        }
        let panel = Self {
            vessel_ids,
            start_hour,
            n_hours,
            positions,
            presence,
        };
        for v in 0..panel.n_vessels() {
            for h in 0..n_hours {
                let i = panel.idx(v, h);
                if panel.presence[i] && !panel.positions[i].is_valid() {
                    return Err(PanelError::InvalidCell { vessel: v, hour: h });
                }
            }
        }
        Ok(panel)
    }

    #[inline]
    fn idx(&self, vessel: usize, hour: usize) -> usize {
        vessel * self.n_hours + hour
    }

    pub fn n_vessels(&self) -> usize {
        self.vessel_ids.len()
    }

    pub fn n_hours(&self) -> usize {
        self.n_hours
    }

    pub fn vessel_ids(&self) -> &[String] {
        &self.vessel_ids
    }

    pub fn start_hour(&self) -> DateTime<Utc> {
        self.start_hour
    }

    pub fn hour(&self, h: usize) -> DateTime<Utc> {
        self.start_hour + Duration::hours(h as i64)
    }

    pub fn hours(&self) -> Vec<DateTime<Utc>> {
        (0..self.n_hours).map(|h| self.hour(h)).collect()
    }

    /// Index of an exact hour instant, if on the grid.
    pub fn hour_index(&self, t: DateTime<Utc>) -> Option<usize> {
        let d = t - self.start_hour;
        if d < TimeDelta::zero() || d.num_seconds() % 3600 != 0 {
            return None;
        }
        let h = (d.num_seconds() / 3600) as usize;
        (h < self.n_hours).then_some(h)
    }

    pub fn get(&self, vessel: usize, hour: usize) -> Option<GeoPoint<T>> {
        let i = self.idx(vessel, hour);
        self.presence[i].then(|| self.positions[i])
    }

    pub fn is_present(&self, vessel: usize, hour: usize) -> bool {
        self.presence[self.idx(vessel, hour)]
    }

    /// Raw grid access, row-major by vessel.
    pub fn positions(&self) -> &[GeoPoint<T>] {
        &self.positions
    }

    pub fn presence(&self) -> &[bool] {
        &self.presence
    }

    pub fn present_count(&self) -> usize {
        self.presence.iter().filter(|&&p| p).count()
    }

    pub fn set(&mut self, vessel: usize, hour: usize, position: Option<GeoPoint<T>>) {
        let i = self.idx(vessel, hour);
        match position {
            Some(p) => {
                self.positions[i] = p;
                self.presence[i] = true;
            }
            None => self.presence[i] = false,
        }
    }

    /// Positions of the vessels present at `hour`, in vessel order.
    pub fn present_at(&self, hour: usize) -> Vec<GeoPoint<T>> {
        (0..self.n_vessels())
            .filter_map(|v| self.get(v, hour))
            .collect()
    }

    /// Reorder vessels; `order[i]` is the old index of the new row `i`.
    pub fn permute_vessels(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.n_vessels());
        let mut out = Self::empty(
            order.iter().map(|&v| self.vessel_ids[v].clone()).collect(),
            self.start_hour,
            self.n_hours,
        );
        for (new, &old) in order.iter().enumerate() {
            for h in 0..self.n_hours {
                let (src, dst) = (self.idx(old, h), out.idx(new, h));
                out.positions[dst] = self.positions[src];
                out.presence[dst] = self.presence[src];
            }
        }
        out
    }

    pub fn cast<U: Real>(&self) -> Panel<U> {
        Panel {
            vessel_ids: self.vessel_ids.clone(),
            start_hour: self.start_hour,
            n_hours: self.n_hours,
            positions: self.positions.iter().map(|p| p.cast()).collect(),
            presence: self.presence.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String, PanelError> {
        let doc = PanelDoc {
            schema: PANEL_SCHEMA.into(),
            version: PANEL_SCHEMA_VERSION,
            start_hour: fmt_time(self.start_hour),
            n_hours: self.n_hours,
            vessel_ids: self.vessel_ids.clone(),
            positions: (0..self.n_vessels())
                .map(|v| {
                    (0..self.n_hours)
                        .map(|h| {
                            self.get(v, h)
                                .map(|p| [p.lat.to_f64_lossy(), p.lon.to_f64_lossy()])
                        })
                        .collect()
                })
                .collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self, PanelError> {
        let doc: PanelDoc = serde_json::from_str(text)?;
        if doc.schema != PANEL_SCHEMA || doc.version != PANEL_SCHEMA_VERSION {
            return Err(PanelError::Schema(format!(
                "unsupported schema {} v{}",
                doc.schema, doc.version
            )));
        }
        let start = parse_time(&doc.start_hour)?;
        if doc.positions.len() != doc.vessel_ids.len() {
            return Err(PanelError::Shape("positions rows != vessel_ids".into()));
        }
        let mut panel = Self::empty(doc.vessel_ids, start, doc.n_hours);
        for (v, row) in doc.positions.iter().enumerate() {
            if row.len() != doc.n_hours {
                return Err(PanelError::Shape(format!("row {v} has {} hours", row.len())));
            }
            for (h, cell) in row.iter().enumerate() {
                if let Some([lat, lon]) = *cell {
                    let p = GeoPoint {
                        lat: T::lit(lat),
                        lon: T::lit(lon),
                    };
                    if !p.is_valid() {
                        return Err(PanelError::InvalidCell { vessel: v, hour: h });
                    }
                    panel.set(v, h, Some(p));
                }
            }
        }
        Ok(panel)
    }

    /// Flat CSV: `vessel_id,hour,lat,lon,present`; absent cells leave lat/lon empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PanelError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["vessel_id", "hour", "lat", "lon", "present"])?;
        for v in 0..self.n_vessels() {
            for h in 0..self.n_hours {
                let hour = fmt_time(self.hour(h));
                let (lat, lon, present) = match self.get(v, h) {
                    Some(p) => (p.lat.to_string(), p.lon.to_string(), "true"),
                    None => (String::new(), String::new(), "false"),
                };
                w.write_record([self.vessel_ids[v].as_str(), &hour, &lat, &lon, present])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, PanelError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut order: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut cells: Vec<(usize, DateTime<Utc>, Option<GeoPoint<T>>)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let id = field(0).to_string();
            let v = *index.entry(id.clone()).or_insert_with(|| {
                order.push(id);
                order.len() - 1
            });
            let hour = parse_time(field(1))?;
            let present = match field(4) {
                "true" | "1" => true,
                "false" | "0" => false,
                other => return Err(PanelError::Schema(format!("bad present flag `{other}`"))),
            };
            let pos = if present {
                let num = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|_| PanelError::Schema(format!("bad coordinate `{s}`")))
                };
                Some(GeoPoint {
                    lat: T::lit(num(field(2))?),
                    lon: T::lit(num(field(3))?),
                })
            } else {
                None
            };
            cells.push((v, hour, pos));
        }
        let Some(start) = cells.iter().map(|c| c.1).min() else {
            return Ok(Self::empty(Vec::new(), DateTime::<Utc>::UNIX_EPOCH, 0));
        };
        let end = cells.iter().map(|c| c.1).max().unwrap();
        let n_hours = ((end - start).num_seconds() / 3600) as usize + 1;
        if cells.len() != order.len() * n_hours {
            return Err(PanelError::Shape(format!(
                "{} rows for {} vessels × {n_hours} hours",
                cells.len(),
                order.len()
            )));
        }
        let mut panel = Self::empty(order, start, n_hours);
        let mut seen = vec![false; panel.n_vessels() * n_hours];
        for (v, t, pos) in cells {
            let h = panel
                .hour_index(t)
                .ok_or_else(|| PanelError::Schema(format!("hour {t} off the hourly grid")))?;
            let i = panel.idx(v, h);
            if std::mem::replace(&mut seen[i], true) {
                return Err(PanelError::Shape(format!("duplicate cell ({v}, {h})")));
            }
            if let Some(p) = pos {
                if !p.is_valid() {
                    return Err(PanelError::InvalidCell { vessel: v, hour: h });
                }
            }
            panel.set(v, h, pos);
        }
        Ok(panel)
    }
}

#[derive(Serialize, Deserialize)]
struct PanelDoc {
    schema: String,
    version: u32,
    start_hour: String,
    n_hours: usize,
    vessel_ids: Vec<String>,
    positions: Vec<Vec<Option<[f64; 2]>>>,
}

fn fmt_time(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_time(s: &str) -> Result<DateTime<Utc>, PanelError> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| PanelError::Schema(format!("bad timestamp `{s}`: {e}")))
}

/// Interpolate one vessel's time-ordered pings onto an hourly grid.
///
/// Positions are linear in raw (lat, lon) between the bracketing pings. Hours
/// before the first ping, after the last, or inside a gap longer than
/// `max_gap_hours` are absent. A lone ping is placed on its nearest grid hour.
pub fn interpolate_hourly(
    pings: &[VesselPing],
    hours: &[DateTime<Utc>],
    max_gap_hours: f64,
) -> (Vec<GeoPoint>, Vec<bool>) {
    let origin = GeoPoint { lat: 0.0, lon: 0.0 };
    let mut positions = vec![origin; hours.len()];
    let mut presence = vec![false; hours.len()];
    match pings {
        [] => {}
        [only] => {
            let nearest = only
                .timestamp
                .duration_round(TimeDelta::hours(1))
                .unwrap_or(only.timestamp);
            if let Some(h) = hours.iter().position(|&t| t == nearest) {
                positions[h] = only.position;
                presence[h] = true;
            }
        }
        _ => {
            let max_gap_secs = max_gap_hours * 3600.0;
            let mut seg = 0;
            for (h, &t) in hours.iter().enumerate() {
                if t < pings[0].timestamp || t > pings[pings.len() - 1].timestamp {
                    continue;
                }
                while seg + 1 < pings.len() - 1 && pings[seg + 1].timestamp <= t {
                    seg += 1;
                }
                let (a, b) = (&pings[seg], &pings[seg + 1]);
                let p = if t == a.timestamp {
                    a.position
                } else if t == b.timestamp {
                    b.position
                } else {
                    let span = (b.timestamp - a.timestamp).num_seconds() as f64;
                    if span > max_gap_secs {
                        continue;
                    }
                    let f = (t - a.timestamp).num_seconds() as f64 / span;
                    GeoPoint {
                        lat: a.position.lat + f * (b.position.lat - a.position.lat),
                        lon: a.position.lon + f * (b.position.lon - a.position.lon),
                    }
                };
                positions[h] = p;
                presence[h] = true;
            }
        }
    }
    (positions, presence)
}

/// Assemble the balanced panel from cleaned pings.
///
/// The hour grid spans `config.time_window` when set, otherwise the hours
/// covering the first and last ping. Vessels appear in first-appearance order.
pub fn build_panel(pings: &[VesselPing], config: &CleanConfig) -> Result<Panel, IngestError> {
    config.validate()?;
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&VesselPing>> = HashMap::new();
    for p in pings {
        groups
            .entry(p.vessel_id.as_str())
            .or_insert_with(|| {
                order.push(p.vessel_id.as_str());
                Vec::new()
            })
            .push(p);
    }
    if order.is_empty() {
        return Err(IngestError::EmptyPanel);
    }
    let one_hour = TimeDelta::hours(1);
    let (first, last) = match config.time_window {
        Some(w) => (ceil_hour(w.start), w.end.duration_trunc(one_hour).unwrap()),
        None => {
            let lo = pings.iter().map(|p| p.timestamp).min().unwrap();
            let hi = pings.iter().map(|p| p.timestamp).max().unwrap();
            (lo.duration_trunc(one_hour).unwrap(), ceil_hour(hi))
        }
    };
    let n_hours = if last >= first {
        ((last - first).num_hours() + 1) as usize
    } else {
        0
    };
    let hours: Vec<DateTime<Utc>> = (0..n_hours).map(|h| first + Duration::hours(h as i64)).collect();

    let rows: Vec<(Vec<GeoPoint>, Vec<bool>)> = order
        .par_iter()
        .map(|id| {
            let mut track: Vec<VesselPing> = groups[id].iter().map(|&p| p.clone()).collect();
            track.sort_by_key(|p| p.timestamp);
            interpolate_hourly(&track, &hours, config.max_gap_hours)
        })
        .collect();

    let mut positions = Vec::with_capacity(order.len() * n_hours);
    let mut presence = Vec::with_capacity(order.len() * n_hours);
    for (pos, pres) in rows {
        positions.extend(pos);
        presence.extend(pres);
    }
    Panel::from_rows(
        order.into_iter().map(String::from).collect(),
        first,
        n_hours,
        positions,
        presence,
    )
    .map_err(|e| IngestError::Config(e.to_string()))
}

fn ceil_hour(t: DateTime<Utc>) -> DateTime<Utc> {
    let down = t.duration_trunc(TimeDelta::hours(1)).unwrap();
    if down == t {
        t
    } else {
        down + TimeDelta::hours(1)
    }
}
