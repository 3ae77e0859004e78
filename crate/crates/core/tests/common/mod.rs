//! Reference implementations used as test oracles. They are deliberately
//! slow and share no code with the library.
#![allow(dead_code)]

pub const R_KM: f64 = 6371.0;

/// Great-circle distance from the chord between unit vectors.
pub fn chord_distance_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let v = |lat: f64, lon: f64| {
        let (la, lo) = (lat.to_radians(), lon.to_radians());
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let (a, b) = (v(lat1, lon1), v(lat2, lon2));
    let c = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    2.0 * R_KM * (c / 2.0).min(1.0).asin()
}

/// KS statistic by evaluating both ECDFs at every pooled value. The gap is
/// kept as the exact integer `|ca·m − cb·n|` and divided once at the end.
pub fn ks_brute_force(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as u64, b.len() as u64);
    let mut best = 0u64;
    for &x in a.iter().chain(b) {
        let ca = a.iter().filter(|&&v| v <= x).count() as u64;
        let cb = b.iter().filter(|&&v| v <= x).count() as u64;
        best = best.max((ca * m).abs_diff(cb * n));
    }
    best as f64 / (n * m) as f64
}

/// Population Pearson kurtosis straight from the definition.
pub fn kurtosis_direct(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mu).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2)
}
