//! Detection of anomalous multiscale fleet behaviour from vessel positions.
//!
//! The pipeline turns raw position reports into a balanced hourly panel
//! ([`ingest`]), reduces every hour to the distribution of between-vessel
//! great-circle distances ([`geo`], [`density`]), compares each hour's
//! distribution with its recent history through two-sample
//! Kolmogorov–Smirnov statistics, and summarises those lagged statistics into
//! mean and kurtosis anomaly indices with null-period significance
//! thresholds ([`anomaly`]). [`synth`] generates clustered fleets with
//! injected avoidance events for end-to-end validation.
//!
//! Numerical code is generic over [`Real`]; the aliases below fix the scalar
//! to `f64`, which is what the file formats and the CLI use.

// Parameter checks are written `!(x > 0.0)` on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anomaly;
pub mod density;
pub mod geo;
pub mod ingest;
pub mod scalar;
pub mod stats;
pub mod synth;

pub use scalar::Real;

/// Default scalar for positions, distances and statistics.
pub type Scalar = f64;

pub type GeoPoint = geo::GeoPoint<Scalar>;
pub type DistanceSample = geo::DistanceSample<Scalar>;
pub type Panel = ingest::Panel<Scalar>;
pub type DensityEstimate = density::DensityEstimate<Scalar>;
pub type Grid = density::Grid<Scalar>;
pub type SampleStore = anomaly::SampleStore<Scalar>;
pub type KsLagSet = anomaly::KsLagSet<Scalar>;
pub type KsHeatmap = anomaly::KsHeatmap<Scalar>;
pub type AnomalySeries = anomaly::AnomalySeries<Scalar>;
pub type NullCalibration = anomaly::NullCalibration<Scalar>;

/// Single-precision variants for large fleets where memory dominates.
pub mod f32 {
    pub type GeoPoint = crate::geo::GeoPoint<f32>;
    pub type DistanceSample = crate::geo::DistanceSample<f32>;
    pub type Panel = crate::ingest::Panel<f32>;
    pub type SampleStore = crate::anomaly::SampleStore<f32>;
    pub type AnomalySeries = crate::anomaly::AnomalySeries<f32>;
}
