//! Between-vessel distance distributions and their kernel density estimates.
//!
//! The density estimate is an export product only; the anomaly statistics
//! work directly on the raw distance samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{pairwise_distances, DistanceSample, GeoError};
use crate::ingest::Panel;
use crate::scalar::Real;
use crate::stats::{percentile_sorted, sample_std};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("hour {hour}: {present} vessels present, need at least 2")]
    InsufficientVessels { hour: usize, present: usize },
    #[error("hour index {0} outside panel")]
    HourOutOfRange(usize),
    #[error("sample of {0} values is too small for a density estimate")]
    SampleTooSmall(usize),
    #[error("zero-variance sample")]
    DegenerateSample,
    #[error("invalid grid or bandwidth: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// Pairwise distances among the vessels present at hour `t`.
pub fn distance_distribution<T: Real>(
    panel: &Panel<T>,
    t: usize,
) -> Result<DistanceSample<T>, DensityError> {
    if t >= panel.n_hours() {
        return Err(DensityError::HourOutOfRange(t));
    }
    let present = panel.present_at(t);
    if present.len() < 2 {
        return Err(DensityError::InsufficientVessels {
            hour: t,
            present: present.len(),
        });
    }
    Ok(pairwise_distances(&present, t)?)
}

/// Uniform evaluation grid in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<T = f64> {
    pub start: T,
    pub end: T,
    pub points: usize,
}

impl<T: Real> Default for Grid<T> {
    /// 0–1600 km at 512 points.
    fn default() -> Self {
        Self {
            start: T::zero(),
            end: T::lit(1600.0),
            points: 512,
        }
    }
}

impl<T: Real> Grid<T> {
    pub fn new(start: T, end: T, points: usize) -> Result<Self, DensityError> {
        let grid = Self { start, end, points };
        grid.validate()?;
        Ok(grid)
    }

    pub fn step(&self) -> T {
        (self.end - self.start) / T::from_count(self.points - 1)
    }

    pub fn values(&self) -> Vec<T> {
        let step = self.step();
        (0..self.points)
            .map(|i| self.start + step * T::from_count(i))
            .collect()
    }

    fn validate(&self) -> Result<(), DensityError> {
        if self.points < 2 || !(self.end > self.start) {
            return Err(DensityError::InvalidParameter(format!(
                "grid needs >= 2 points and end > start, got {} points over [{}, {}]",
                self.points, self.start, self.end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate<T = f64> {
    pub grid: Vec<T>,
    pub density: Vec<T>,
    pub bandwidth: T,
}

impl<T: Real> DensityEstimate<T> {
    /// Trapezoidal mass over the grid.
    pub fn mass(&self) -> T {
        let two = T::lit(2.0);
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .fold(T::zero(), |acc, (x, y)| acc + (x[1] - x[0]) * (y[0] + y[1]) / two)
    }

    /// Grid value of the highest density (first one on ties).
    pub fn argmax(&self) -> T {
        let mut best = 0;
        for (i, &d) in self.density.iter().enumerate() {
            if d > self.density[best] {
                best = i;
            }
        }
        self.grid[best]
    }
}

/// Rule-of-thumb bandwidth `0.9 · min(σ, IQR / 1.34) · n^(-1/5)`.
///
/// Falls back to σ when the IQR collapses to zero (more than half the sample
/// tied) so that a non-degenerate sample always gets a positive bandwidth.
pub fn silverman_bandwidth<T: Real>(sorted: &[T]) -> Result<T, DensityError> {
    let n = sorted.len();
    if n < 2 {
        return Err(DensityError::SampleTooSmall(n));
    }
    let sigma = sample_std(sorted).unwrap();
    if !(sigma > T::zero()) || sorted[0] == sorted[n - 1] {
        return Err(DensityError::DegenerateSample);
    }
    let q = |p: f64| percentile_sorted(sorted, T::lit(p)).unwrap();
    let iqr = (q(0.75) - q(0.25)) / T::lit(1.34);
    let spread = if iqr > T::zero() { sigma.min(iqr) } else { sigma };
    Ok(T::lit(0.9) * spread * T::from_count(n).powf(T::lit(-0.2)))
}

/// Kernels farther than this many bandwidths contribute below 1e-17 and are skipped.
const KERNEL_CUTOFF: f64 = 9.0;

/// Gaussian KDE of `sample` evaluated on `grid`.
///
/// `bandwidth` defaults to [`silverman_bandwidth`].
pub fn kde_pdf<T: Real>(
    sample: &DistanceSample<T>,
    grid: &Grid<T>,
    bandwidth: Option<T>,
) -> Result<DensityEstimate<T>, DensityError> {
    grid.validate()?;
    let sorted = sample.sorted();
    let n = sorted.len();
    if n < 2 {
        return Err(DensityError::SampleTooSmall(n));
    }
    if sorted[0] == sorted[n - 1] {
        return Err(DensityError::DegenerateSample);
    }
    let h = match bandwidth {
        Some(h) if h > T::zero() && h.is_finite() => h,
        Some(h) => return Err(DensityError::InvalidParameter(format!("bandwidth {h}"))),
        None => silverman_bandwidth(&sorted)?,
    };
    let xs = grid.values();
    let cut = T::lit(KERNEL_CUTOFF) * h;
    let half = T::lit(0.5);
    let norm = T::one() / (T::from_count(n) * h * (T::lit(2.0) * T::PI()).sqrt());
    let density = xs
        .iter()
        .map(|&x| {
            let lo = sorted.partition_point(|&v| v < x - cut);
            let hi = sorted.partition_point(|&v| v <= x + cut);
            let s = sorted[lo..hi].iter().fold(T::zero(), |acc, &v| {
                let z = (x - v) / h;
                acc + (-half * z * z).exp()
            });
            s * norm
        })
        .collect();
    Ok(DensityEstimate {
        grid: xs,
        density,
        bandwidth: h,
    })
}

/// Density estimates for every hour, in hour order. Hours with fewer than two
/// vessels or a degenerate distance sample yield `None`.
pub fn density_series<T: Real>(
    panel: &Panel<T>,
    grid: &Grid<T>,
    bandwidth: Option<T>,
) -> Vec<Option<DensityEstimate<T>>> {
    (0..panel.n_hours())
        .into_par_iter()
        .map(|t| {
            let sample = distance_distribution(panel, t).ok()?;
            kde_pdf(&sample, grid, bandwidth).ok()
        })
        .collect()
}
