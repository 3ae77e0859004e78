//! Small order-statistic and moment helpers.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("percentile {0} outside [0, 1]")]
    PercentileDomain(String),
    #[error("sample contains NaN")]
    NotANumber,
}

/// Empirical percentile with linear interpolation between order statistics.
///
/// With the sample sorted ascending as `x[0..n]`, the rank is `h = (n - 1) p`
/// and the result is `x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h])`.
/// This is the "type 7" definition used by numpy and R by default.
pub fn percentile<T: Real>(values: &[T], p: T) -> Result<T, StatsError> {
    let mut sorted = values.to_vec();
    if sorted.iter().any(|v| v.is_nan()) {
        return Err(StatsError::NotANumber);
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    percentile_sorted(&sorted, p)
}

/// [`percentile`] on a sample that is already sorted ascending.
pub fn percentile_sorted<T: Real>(sorted: &[T], p: T) -> Result<T, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if !(p >= T::zero() && p <= T::one()) {
        return Err(StatsError::PercentileDomain(format!("{p}")));
    }
    let h = T::from_count(sorted.len() - 1) * p;
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0).min(sorted.len() - 1);
    let frac = h - lo;
    if i + 1 >= sorted.len() || frac == T::zero() {
        return Ok(sorted[i]);
    }
    Ok(sorted[i] + frac * (sorted[i + 1] - sorted[i]))
}

/// Arithmetic mean with left-to-right summation.
pub fn mean<T: Real>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let sum = values.iter().fold(T::zero(), |acc, &v| acc + v);
    Some(sum / T::from_count(values.len()))
}

/// Sample standard deviation (divides by `n - 1`).
pub fn sample_std<T: Real>(values: &[T]) -> Option<T> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss = values.iter().fold(T::zero(), |acc, &v| acc + (v - m) * (v - m));
    Some((ss / T::from_count(values.len() - 1)).sqrt())
}

/// Population standard deviation (divides by `n`).
pub fn population_std<T: Real>(values: &[T]) -> Option<T> {
    let m = mean(values)?;
    let ss = values.iter().fold(T::zero(), |acc, &v| acc + (v - m) * (v - m));
    Some((ss / T::from_count(values.len())).sqrt())
}
