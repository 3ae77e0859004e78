use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDateTime, SubsecRound, Utc};
use serde::Serialize;

use super::{IngestError, VesselPing};
use crate::geo::{haversine_km, GeoPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordErrorKind {
    MissingField,
    BadNumber,
    BadTimestamp,
    CoordinateOutOfRange,
    /// Same vessel and timestamp as an earlier record but a different position.
    ConflictingDuplicate,
    Malformed,
}

/// A rejected input record. `line` is 1-based and counts the header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordError {
    pub line: u64,
    pub kind: RecordErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutput {
    pub pings: Vec<VesselPing>,
    pub errors: Vec<RecordError>,
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc).trunc_subsecs(0));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%d %H:%M:%S UTC"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc().trunc_subsecs(0));
        }
    }
    None
}

/// Read `mmsi,timestamp,lat,lon` records (header required, extra columns ignored).
///
/// Returns pings sorted by `(vessel_id, timestamp)` with exact duplicates
/// dropped and speeds derived from each vessel's previous ping. Records that
/// fail to parse are returned as [`RecordError`]s; if more than half of the
/// records are malformed the whole input is rejected.
pub fn parse_pings<R: Read>(reader: R) -> Result<ParseOutput, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Ok(ParseOutput::default());
    }
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or(IngestError::MissingColumn(name))
    };
    let (c_id, c_ts, c_lat, c_lon) = (col("mmsi")?, col("timestamp")?, col("lat")?, col("lon")?);

    let mut pings = Vec::new();
    let mut errors = Vec::new();
    let mut total = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        total += 1;
        let line = i as u64 + 2;
        let err = |kind, message: String| RecordError { line, kind, message };
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                errors.push(err(RecordErrorKind::Malformed, e.to_string()));
                continue;
            }
        };
        let field = |c: usize| rec.get(c).filter(|s| !s.is_empty());
        let (Some(id), Some(ts), Some(lat), Some(lon)) =
            (field(c_id), field(c_ts), field(c_lat), field(c_lon))
        else {
            errors.push(err(RecordErrorKind::MissingField, "empty or missing field".into()));
            continue;
        };
        let Some(timestamp) = parse_timestamp(ts) else {
            errors.push(err(RecordErrorKind::BadTimestamp, format!("unparseable timestamp `{ts}`")));
            continue;
        };
        let (Ok(lat), Ok(lon)) = (lat.parse::<f64>(), lon.parse::<f64>()) else {
            errors.push(err(RecordErrorKind::BadNumber, format!("bad coordinate `{lat}`/`{lon}`")));
            continue;
        };
        match GeoPoint::normalized(lat, lon) {
            Ok(position) => pings.push((
                line,
                VesselPing {
                    vessel_id: id.to_string(),
                    timestamp,
                    position,
                    speed_kmh: None,
                },
            )),
            Err(e) => errors.push(err(RecordErrorKind::CoordinateOutOfRange, e.to_string())),
        }
    }
    if total > 0 && errors.len() * 2 > total {
        return Err(IngestError::CorruptInput {
            malformed: errors.len(),
            total,
        });
    }

    // Stable sort keeps the first-seen record of a (vessel, timestamp) pair in front.
    pings.sort_by(|(_, a), (_, b)| {
        a.vessel_id
            .cmp(&b.vessel_id)
            .then(a.timestamp.cmp(&b.timestamp))
    });
    let mut kept: Vec<VesselPing> = Vec::with_capacity(pings.len());
    for (line, p) in pings {
        if let Some(last) = kept.last() {
            if last.vessel_id == p.vessel_id && last.timestamp == p.timestamp {
                if last.position != p.position {
                    errors.push(RecordError {
                        line,
                        kind: RecordErrorKind::ConflictingDuplicate,
                        message: format!(
                            "vessel {} reported two positions at {}",
                            p.vessel_id, p.timestamp
                        ),
                    });
                }
                continue;
            }
        }
        kept.push(p);
    }
    errors.sort_by_key(|e| e.line);
    derive_speeds(&mut kept);
    Ok(ParseOutput {
        pings: kept,
        errors,
    })
}

/// Recompute `speed_kmh` from consecutive pings of each vessel.
/// Expects pings grouped by vessel and time-ordered within a vessel.
pub(crate) fn derive_speeds(pings: &mut [VesselPing]) {
    let mut last: HashMap<String, (DateTime<Utc>, GeoPoint)> = HashMap::new();
    for p in pings.iter_mut() {
        p.speed_kmh = last.get(&p.vessel_id).map(|&(t0, p0)| {
            let hours = (p.timestamp - t0).num_seconds() as f64 / 3600.0;
            let km = haversine_km(p0, p.position).unwrap_or(0.0);
            if hours > 0.0 {
                km / hours
            } else {
                f64::INFINITY
            }
        });
        last.insert(p.vessel_id.clone(), (p.timestamp, p.position));
    }
}

/// Write pings in the input schema, plus a derived `speed_kmh` column.
pub fn write_pings_csv<W: Write>(writer: W, pings: &[VesselPing]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["mmsi", "timestamp", "lat", "lon", "speed_kmh"])?;
    for p in pings {
        w.write_record([
            p.vessel_id.clone(),
            p.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            p.position.lat.to_string(),
            p.position.lon.to_string(),
            p.speed_kmh.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| IngestError::Io {
        path: "<output>".into(),
        source: e,
    })?;
    Ok(())
}
