//! Shoreline exclusion: GeoJSON land polygons with an optional buffer distance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IngestError;
use crate::geo::{local_offset_km, GeoPoint};

/// A simple polygon with holes. Rings are `(lon, lat)` pairs in degrees; the
/// closing vertex may or may not repeat the first one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub exterior: Vec<(f64, f64)>,
    #[serde(default)]
    pub holes: Vec<Vec<(f64, f64)>>,
}

impl Polygon {
    pub fn contains(&self, p: GeoPoint) -> bool {
        ring_contains(&self.exterior, p) && !self.holes.iter().any(|h| ring_contains(h, p))
    }

    fn rings(&self) -> impl Iterator<Item = &Vec<(f64, f64)>> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }
}

/// Even-odd ray casting in the lon/lat plane.
fn ring_contains(ring: &[(f64, f64)], p: GeoPoint) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let (x, y) = (p.lon, p.lat);
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = ring[i];
        let (xj, yj) = ring[j];
        if (yi > y) != (yj > y) {
            let x_cross = xi + (y - yi) * (xj - xi) / (yj - yi);
            if x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Land mask used by the shore rule.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShoreExclusion {
    pub polygons: Vec<Polygon>,
    /// Pings closer than this to any polygon edge are treated as on shore.
    #[serde(default)]
    pub buffer_km: f64,
}

impl ShoreExclusion {
    pub fn from_geojson_file(path: &Path, buffer_km: f64) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_geojson_str(&text, buffer_km)
    }

    pub fn from_geojson_str(text: &str, buffer_km: f64) -> Result<Self, IngestError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| IngestError::Shore(e.to_string()))?;
        let mut polygons = Vec::new();
        collect_polygons(&value, &mut polygons)?;
        if polygons.is_empty() {
            return Err(IngestError::Shore(
                "no Polygon or MultiPolygon geometry found".into(),
            ));
        }
        Ok(Self {
            polygons,
            buffer_km,
        })
    }

    /// True when the point is on land or within the buffer of a coastline.
    pub fn excludes(&self, p: GeoPoint) -> bool {
        if self.polygons.iter().any(|poly| poly.contains(p)) {
            return true;
        }
        self.buffer_km > 0.0
            && self
                .polygons
                .iter()
                .flat_map(Polygon::rings)
                .any(|ring| ring_distance_km(ring, p) < self.buffer_km)
    }
}

/// Distance from `p` to the nearest edge of `ring`, using a local planar
/// projection centred on `p`. Adequate for buffers of a few tens of km.
fn ring_distance_km(ring: &[(f64, f64)], p: GeoPoint) -> f64 {
    let project = |&(lon, lat): &(f64, f64)| local_offset_km(p, GeoPoint { lat, lon });
    let pts: Vec<(f64, f64)> = ring.iter().map(project).collect();
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        best = best.min(segment_origin_distance(a, b));
    }
    best
}

fn segment_origin_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (-(a.0 * dx + a.1 * dy) / len2).clamp(0.0, 1.0)
    };
    let (x, y) = (a.0 + t * dx, a.1 + t * dy);
    (x * x + y * y).sqrt()
}

fn collect_polygons(v: &Value, out: &mut Vec<Polygon>) -> Result<(), IngestError> {
    let kind = v.get("type").and_then(Value::as_str).unwrap_or("");
    match kind {
        "FeatureCollection" => {
            for f in v
                .get("features")
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
            {
                collect_polygons(f, out)?;
            }
        }
        "Feature" => {
            if let Some(g) = v.get("geometry").filter(|g| !g.is_null()) {
                collect_polygons(g, out)?;
            }
        }
        "GeometryCollection" => {
            for g in v
                .get("geometries")
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
            {
                collect_polygons(g, out)?;
            }
        }
        "Polygon" => out.push(parse_polygon(coordinates(v)?)?),
        "MultiPolygon" => {
            let polys = coordinates(v)?
                .as_array()
                .ok_or_else(|| IngestError::Shore("MultiPolygon coordinates".into()))?;
            for p in polys {
                out.push(parse_polygon(p)?);
            }
        }
        // Points and lines carry no area.
        _ => {}
    }
    Ok(())
}

fn coordinates(v: &Value) -> Result<&Value, IngestError> {
    v.get("coordinates")
        .ok_or_else(|| IngestError::Shore("geometry without coordinates".into()))
}

fn parse_polygon(v: &Value) -> Result<Polygon, IngestError> {
    let rings = v
        .as_array()
        .ok_or_else(|| IngestError::Shore("polygon must be an array of rings".into()))?;
    let mut parsed = rings.iter().map(parse_ring).collect::<Result<Vec<_>, _>>()?;
    if parsed.is_empty() {
        return Err(IngestError::Shore("polygon without rings".into()));
    }
    let exterior = parsed.remove(0);
    Ok(Polygon {
        exterior,
        holes: parsed,
    })
}

fn parse_ring(v: &Value) -> Result<Vec<(f64, f64)>, IngestError> {
    let bad = || IngestError::Shore("ring positions must be [lon, lat] numbers".into());
    v.as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|pos| {
            let xy = pos.as_array().ok_or_else(bad)?;
            match (
                xy.first().and_then(Value::as_f64),
                xy.get(1).and_then(Value::as_f64),
            ) {
                (Some(lon), Some(lat)) => Ok((lon, lat)),
                _ => Err(bad()),
            }
        })
        .collect()
}
