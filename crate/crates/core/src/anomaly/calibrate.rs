use serde::{Deserialize, Serialize};

use super::index::AnomalySeries;
use super::AnomalyError;
use crate::scalar::Real;
use crate::stats::percentile;

/// Below this many null values the threshold is reported as undersampled.
pub const RECOMMENDED_NULL_SAMPLES: usize = 100;

/// Closed range of hour indices `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HourWindow {
    pub start: usize,
    pub end: usize,
}

impl HourWindow {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, h: usize) -> bool {
        h >= self.start && h <= self.end
    }

    pub fn overlaps(&self, other: &HourWindow) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// Widen by `pad` hours on each side, clamped at zero.
    pub fn padded(&self, pad: usize) -> Self {
        Self {
            start: self.start.saturating_sub(pad),
            end: self.end.saturating_add(pad),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration<T = f64> {
    pub null_windows: Vec<HourWindow>,
    pub percentile: T,
    pub threshold: T,
    pub sample_count: usize,
}

impl<T: Real> NullCalibration<T> {
    pub fn is_undersampled(&self) -> bool {
        self.sample_count < RECOMMENDED_NULL_SAMPLES
    }
}

/// Threshold at `percentile` of the defined index values inside the null windows.
///
/// Null windows may not overlap any of `event_windows`. Uses the same
/// linear-interpolation percentile as the speed threshold.
pub fn calibrate_null<T: Real>(
    series: &AnomalySeries<T>,
    null_windows: &[HourWindow],
    event_windows: &[HourWindow],
    percentile_p: T,
) -> Result<NullCalibration<T>, AnomalyError> {
    if null_windows.is_empty() {
        return Err(AnomalyError::Config("no null windows given".into()));
    }
    if !(percentile_p > T::zero() && percentile_p < T::one()) {
        return Err(AnomalyError::Config(format!(
            "percentile must lie in (0, 1), got {percentile_p}"
        )));
    }
    for w in null_windows.iter().chain(event_windows) {
        if w.start > w.end {
            return Err(AnomalyError::Config(format!(
                "window [{}, {}] has start after end",
                w.start, w.end
            )));
        }
    }
    for n in null_windows {
        if let Some(e) = event_windows.iter().find(|e| e.overlaps(n)) {
            return Err(AnomalyError::Config(format!(
                "null window [{}, {}] overlaps event window [{}, {}]",
                n.start, n.end, e.start, e.end
            )));
        }
    }
    // Hours covered by several null windows are counted once.
    let null_values: Vec<T> = series
        .values
        .iter()
        .enumerate()
        .filter(|(h, _)| null_windows.iter().any(|w| w.contains(*h)))
        .filter_map(|(_, v)| *v)
        .collect();
    if null_values.is_empty() {
        return Err(AnomalyError::EmptySample);
    }
    let threshold = percentile(&null_values, percentile_p).map_err(|_| AnomalyError::EmptySample)?;
    let cal = NullCalibration {
        null_windows: null_windows.to_vec(),
        percentile: percentile_p,
        threshold,
        sample_count: null_values.len(),
    };
    if cal.is_undersampled() {
        log::warn!(
            "{} null calibration uses only {} values (< {RECOMMENDED_NULL_SAMPLES})",
            series.kind.name(),
            cal.sample_count
        );
    }
    Ok(cal)
}

/// Mark hours whose value strictly exceeds the calibrated threshold.
pub fn flag_anomalies<T: Real>(
    series: &AnomalySeries<T>,
    calibration: &NullCalibration<T>,
) -> AnomalySeries<T> {
    let thr = calibration.threshold;
    AnomalySeries {
        flags: series.values.iter().map(|v| v.is_some_and(|v| v > thr)).collect(),
        threshold: Some(thr),
        ..series.clone()
    }
}
