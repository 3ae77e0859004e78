//! Great-circle primitives and the per-timestep pairwise distance kernel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Mean Earth radius in kilometres. Every distance in the crate uses it.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("coordinate out of range: lat={lat}, lon={lon}")]
    CoordinateDomain { lat: f64, lon: f64 },
    #[error("need at least 2 positions, got {0}")]
    InsufficientVessels(usize),
}

/// A position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint<T = f64> {
    pub lat: T,
    pub lon: T,
}

impl<T: Real> GeoPoint<T> {
    /// Validated constructor; longitude must already lie in [-180, 180].
    pub fn new(lat: T, lon: T) -> Result<Self, GeoError> {
        let p = Self { lat, lon };
        p.validate()?;
        Ok(p)
    }

    /// Wraps longitude into [-180, 180] before validating latitude.
    pub fn normalized(lat: T, lon: T) -> Result<Self, GeoError> {
        Self::new(lat, wrap_lon(lon))
    }

    pub fn is_valid(&self) -> bool {
        let ninety = T::lit(90.0);
        let one_eighty = T::lit(180.0);
        self.lat.is_finite()
            && self.lon.is_finite()
            && self.lat >= -ninety
            && self.lat <= ninety
            && self.lon >= -one_eighty
            && self.lon <= one_eighty
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(GeoError::CoordinateDomain {
                lat: self.lat.to_f64_lossy(),
                lon: self.lon.to_f64_lossy(),
            })
        }
    }

    pub fn cast<U: Real>(self) -> GeoPoint<U> {
        GeoPoint {
            lat: U::lit(self.lat.to_f64_lossy()),
            lon: U::lit(self.lon.to_f64_lossy()),
        }
    }
}

/// Wrap a longitude in degrees into [-180, 180].
pub fn wrap_lon<T: Real>(lon: T) -> T {
    let one_eighty = T::lit(180.0);
    if !lon.is_finite() || (lon >= -one_eighty && lon <= one_eighty) {
        return lon;
    }
    let full = T::lit(360.0);
    let mut w = (lon + one_eighty) % full;
    if w < T::zero() {
        w = w + full;
    }
    w - one_eighty
}

/// Kilometres spanned by one degree of latitude on the reference sphere.
pub fn km_per_degree<T: Real>() -> T {
    T::lit(EARTH_RADIUS_KM) * T::PI() / T::lit(180.0)
}

/// Haversine great-circle distance in kilometres.
pub fn haversine_km<T: Real>(a: GeoPoint<T>, b: GeoPoint<T>) -> Result<T, GeoError> {
    a.validate()?;
    b.validate()?;
    Ok(haversine_unchecked(a, b))
}

#[inline]
pub(crate) fn haversine_unchecked<T: Real>(a: GeoPoint<T>, b: GeoPoint<T>) -> T {
    let two = T::lit(2.0);
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let half_dphi = (phi2 - phi1) / two;
    let half_dlambda = (b.lon - a.lon).to_radians() / two;
    let s1 = half_dphi.sin();
    let s2 = half_dlambda.sin();
    let h = s1 * s1 + (phi1.cos() * phi2.cos()) * (s2 * s2);
    let c = two * h.sqrt().min(T::one()).asin();
    T::lit(EARTH_RADIUS_KM) * c
}

/// Distances between all vessels present at one timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSample<T = f64> {
    pub time_index: usize,
    pub distances: Vec<T>,
}

impl<T: Real> DistanceSample<T> {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Ascending copy of the distances (NaN-free by construction).
    pub fn sorted(&self) -> Vec<T> {
        let mut v = self.distances.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

/// Strict upper triangle of the N×N haversine matrix, row-major by input order.
pub fn pairwise_distances<T: Real>(
    positions: &[GeoPoint<T>],
    time_index: usize,
) -> Result<DistanceSample<T>, GeoError> {
    let n = positions.len();
    if n < 2 {
        return Err(GeoError::InsufficientVessels(n));
    }
    for p in positions {
        p.validate()?;
    }
    let mut distances = Vec::with_capacity(n * (n - 1) / 2);
    for (i, &a) in positions.iter().enumerate() {
        for &b in &positions[i + 1..] {
            distances.push(haversine_unchecked(a, b));
        }
    }
    Ok(DistanceSample {
        time_index,
        distances,
    })
}

/// Initial great-circle bearing from `from` to `to`, radians clockwise from north.
pub fn initial_bearing<T: Real>(from: GeoPoint<T>, to: GeoPoint<T>) -> T {
    let phi1 = from.lat.to_radians();
    let phi2 = to.lat.to_radians();
    let dl = (to.lon - from.lon).to_radians();
    let y = dl.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dl.cos();
    y.atan2(x)
}

/// Point reached by travelling `distance_km` along a great circle at `bearing` (radians).
pub fn destination<T: Real>(from: GeoPoint<T>, bearing: T, distance_km: T) -> GeoPoint<T> {
    let delta = distance_km / T::lit(EARTH_RADIUS_KM);
    let phi1 = from.lat.to_radians();
    let lambda1 = from.lon.to_radians();
    let sin_phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * bearing.cos())
        .max(-T::one())
        .min(T::one());
    let phi2 = sin_phi2.asin();
    let lambda2 = lambda1
        + (bearing.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * sin_phi2);
    GeoPoint {
        lat: phi2.to_degrees(),
        lon: wrap_lon(lambda2.to_degrees()),
    }
}

/// Shift a point by a local east/north displacement using the equirectangular
/// approximation at the point's latitude. Latitude is clamped to the poles.
pub fn offset_equirectangular<T: Real>(p: GeoPoint<T>, east_km: T, north_km: T) -> GeoPoint<T> {
    let kpd = km_per_degree::<T>();
    let ninety = T::lit(90.0);
    let lat = (p.lat + north_km / kpd).max(-ninety).min(ninety);
    let cos_lat = p.lat.to_radians().cos().max(T::lit(1e-6));
    let lon = wrap_lon(p.lon + east_km / (kpd * cos_lat));
    GeoPoint { lat, lon }
}

/// Local east/north displacement from `from` to `to` in km (equirectangular).
pub fn local_offset_km<T: Real>(from: GeoPoint<T>, to: GeoPoint<T>) -> (T, T) {
    let kpd = km_per_degree::<T>();
    let mut dlon = to.lon - from.lon;
    let one_eighty = T::lit(180.0);
    if dlon > one_eighty {
        dlon = dlon - T::lit(360.0);
    } else if dlon < -one_eighty {
        dlon = dlon + T::lit(360.0);
    }
    let mid_lat = ((from.lat + to.lat) / T::lit(2.0)).to_radians();
    (dlon * kpd * mid_lat.cos(), (to.lat - from.lat) * kpd)
}
