//! Lagged KS statistics, anomaly indices and null-period significance.

mod calibrate;
mod index;
mod ks;
mod lag;

use rayon::prelude::*;
use thiserror::Error;

use crate::density::distance_distribution;
use crate::ingest::Panel;
use crate::scalar::Real;

pub use calibrate::{calibrate_null, flag_anomalies, HourWindow, NullCalibration, RECOMMENDED_NULL_SAMPLES};
pub use index::{
    anomaly_series, index_series, kurtosis_index, mean_index, AnomalySeries, IndexError, IndexKind,
    IndexStatus,
};
pub use ks::{ks_sorted, ks_statistic};
pub use lag::{ks_heatmap, lagged_ks_set, lagged_ks_sets, KsHeatmap, KsLagSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnomalyError {
    #[error("empty sample")]
    EmptySample,
    #[error("lag must be >= 1, got {0}")]
    InvalidLag(usize),
    #[error("hour {0} outside the sample store")]
    HourOutOfRange(usize),
    #[error("hour {0} has no distance sample")]
    UndefinedTimestep(usize),
    #[error("{hours} hours is too short for a {lag} hour lag window")]
    WindowTooShort { hours: usize, lag: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Sorted between-vessel distance samples for every hour of a panel.
/// Hours with fewer than two present vessels hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStore<T = f64> {
    samples: Vec<Option<Vec<T>>>,
}

impl<T: Real> SampleStore<T> {
    pub fn from_panel(panel: &Panel<T>) -> Self {
        let samples = (0..panel.n_hours())
            .into_par_iter()
            .map(|t| distance_distribution(panel, t).ok().map(|s| s.sorted()))
            .collect();
        Self { samples }
    }

    /// Wrap raw samples; each is sorted here and empty samples become `None`.
    pub fn from_samples(samples: Vec<Option<Vec<T>>>) -> Self {
        let samples = samples
            .into_iter()
            .map(|s| {
                s.filter(|v| !v.is_empty()).map(|mut v| {
                    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN distance"));
                    v
                })
            })
            .collect();
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, t: usize) -> Option<&[T]> {
        self.samples.get(t)?.as_deref()
    }

    pub fn defined_hours(&self) -> usize {
        self.samples.iter().filter(|s| s.is_some()).count()
    }
}
