use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lag::{lagged_ks_sets, KsLagSet};
use super::{AnomalyError, SampleStore};
use crate::scalar::Real;

/// Moment used to summarise a lag set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Mean,
    Kurtosis,
}

impl IndexKind {
    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Mean => "mean",
            IndexKind::Kurtosis => "kurtosis",
        }
    }

    /// Fewest valid lags for which the index is defined.
    pub fn min_valid_lags(self) -> usize {
        match self {
            IndexKind::Mean => 1,
            IndexKind::Kurtosis => 4,
        }
    }
}

impl std::str::FromStr for IndexKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(IndexKind::Mean),
            "kurtosis" => Ok(IndexKind::Kurtosis),
            other => Err(format!("unknown index kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("{have} valid lags, need at least {need}")]
    InsufficientLags { have: usize, need: usize },
    #[error("zero-variance lag set")]
    Degenerate,
}

/// Arithmetic mean of the valid lag entries.
pub fn mean_index<T: Real>(set: &KsLagSet<T>) -> Result<T, IndexError> {
    let vals = set.valid_values();
    crate::stats::mean(&vals).ok_or(IndexError::InsufficientLags { have: 0, need: 1 })
}

/// Pearson (non-excess) kurtosis `m4 / m2²` of the valid entries, population moments.
pub fn kurtosis_index<T: Real>(set: &KsLagSet<T>) -> Result<T, IndexError> {
    pearson_kurtosis(&set.valid_values())
}

pub(crate) fn pearson_kurtosis<T: Real>(vals: &[T]) -> Result<T, IndexError> {
    if vals.len() < 4 {
        return Err(IndexError::InsufficientLags {
            have: vals.len(),
            need: 4,
        });
    }
    // A constant set must be reported as degenerate even when rounding in the
    // mean would leave tiny non-zero deviations.
    if vals.iter().all(|&v| v == vals[0]) {
        return Err(IndexError::Degenerate);
    }
    let n = T::from_count(vals.len());
    // With two distinct values the kurtosis depends only on the split p/q,
    // (p³ + q³) / pq, so skip the mean and its rounding entirely.
    let other = vals.iter().copied().find(|&v| v != vals[0]).unwrap();
    if vals.iter().all(|&v| v == vals[0] || v == other) {
        let p = T::from_count(vals.iter().filter(|&&v| v == vals[0]).count()) / n;
        let q = T::one() - p;
        return Ok((p * p * p + q * q * q) / (p * q));
    }
    let mean = vals.iter().fold(T::zero(), |a, &v| a + v) / n;
    let (mut s2, mut s4) = (T::zero(), T::zero());
    for &v in vals {
        let d2 = (v - mean) * (v - mean);
        s2 = s2 + d2;
        s4 = s4 + d2 * d2;
    }
    let m2 = s2 / n;
    if !(m2 > T::zero()) {
        return Err(IndexError::Degenerate);
    }
    Ok((s4 / n) / (m2 * m2))
}

/// Why an hour has (or lacks) an index value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexStatus {
    Defined,
    /// Fewer than two vessels at this hour.
    UndefinedTimestep,
    InsufficientLags,
    Degenerate,
}

/// Per-hour anomaly index with optional significance flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalySeries<T = f64> {
    pub kind: IndexKind,
    pub lag_hours: usize,
    pub values: Vec<Option<T>>,
    pub status: Vec<IndexStatus>,
    pub threshold: Option<T>,
    pub flags: Vec<bool>,
}

impl<T: Real> AnomalySeries<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flagged_hours(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(h, &f)| f.then_some(h))
            .collect()
    }

    /// Hour and value of the largest defined index (earliest on ties).
    pub fn peak(&self) -> Option<(usize, T)> {
        let mut best: Option<(usize, T)> = None;
        for (h, v) in self.values.iter().enumerate() {
            if let Some(v) = *v {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((h, v));
                }
            }
        }
        best
    }

    /// CSV `hour,value,flag,threshold`; undefined values and an uncalibrated
    /// threshold are written as empty fields.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "hour,value,flag,threshold")?;
        let thr = self.threshold.map(|t| t.to_string()).unwrap_or_default();
        for (h, (v, f)) in self.values.iter().zip(&self.flags).enumerate() {
            let v = v.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{h},{v},{f},{thr}")?;
        }
        Ok(())
    }
}

/// Index series computed from precomputed lag sets (one per hour).
pub fn index_series<T: Real>(
    sets: &[Result<KsLagSet<T>, AnomalyError>],
    kind: IndexKind,
    lag_hours: usize,
) -> AnomalySeries<T> {
    let (values, status) = sets
        .iter()
        .map(|set| match set {
            Err(_) => (None, IndexStatus::UndefinedTimestep),
            Ok(s) => {
                let r = match kind {
                    IndexKind::Mean => mean_index(s),
                    IndexKind::Kurtosis => kurtosis_index(s),
                };
                match r {
                    Ok(v) => (Some(v), IndexStatus::Defined),
                    Err(IndexError::InsufficientLags { .. }) => (None, IndexStatus::InsufficientLags),
                    Err(IndexError::Degenerate) => (None, IndexStatus::Degenerate),
                }
            }
        })
        .unzip();
    AnomalySeries {
        kind,
        lag_hours,
        values,
        status,
        threshold: None,
        flags: vec![false; sets.len()],
    }
}

/// Unflagged index series over every hour of the store.
pub fn anomaly_series<T: Real>(
    store: &SampleStore<T>,
    lag_hours: usize,
    kind: IndexKind,
) -> Result<AnomalySeries<T>, AnomalyError> {
    if lag_hours == 0 {
        return Err(AnomalyError::InvalidLag(0));
    }
    if store.len() <= lag_hours {
        return Err(AnomalyError::WindowTooShort {
            hours: store.len(),
            lag: lag_hours,
        });
    }
    Ok(index_series(&lagged_ks_sets(store, lag_hours), kind, lag_hours))
}
