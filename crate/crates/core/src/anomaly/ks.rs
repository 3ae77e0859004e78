use crate::geo::DistanceSample;
use crate::scalar::Real;

use super::AnomalyError;

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
///
/// Both inputs are sorted copies internally; use [`ks_sorted`] when the
/// samples are already sorted.
pub fn ks_statistic<T: Real>(
    a: &DistanceSample<T>,
    b: &DistanceSample<T>,
) -> Result<T, AnomalyError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnomalyError::EmptySample);
    }
    Ok(ks_sorted(&a.sorted(), &b.sorted()))
}

/// Exact KS statistic of two ascending, non-empty samples by a merged scan.
///
/// The ECDF gap just after each distinct sample value is tracked exactly as
/// the integer `|i·m − j·n|` (the supremum is attained at a sample value), so
/// the result is the single rounding of the exact rational `max / (n·m)`.
pub fn ks_sorted<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert!(!a.is_empty() && !b.is_empty());
    let (n, m) = (a.len(), b.len());
    let (n64, m64) = (n as u64, m as u64);
    let inf = T::infinity();
    let (mut i, mut j) = (0usize, 0usize);
    let mut x = inf;
    let mut sup: u64 = 0;
    // Branch-light merge: one element (or a tied pair) per step. The gap is
    // only recorded once every copy of the current value has been consumed.
    while i < n && j < m {
        let (ai, bj) = (a[i], b[j]);
        x = if ai <= bj { ai } else { bj };
        i += (ai <= x) as usize;
        j += (bj <= x) as usize;
        let next_a = if i < n { a[i] } else { inf };
        let next_b = if j < m { b[j] } else { inf };
        let gap = (i as u64 * m64).abs_diff(j as u64 * n64);
        let settled = next_a > x && next_b > x;
        sup = if settled && gap > sup { gap } else { sup };
    }
    // One side ran out while copies of `x` may remain on the other; past
    // that point one ECDF is 1 and the gap can only shrink.
    while i < n && a[i] <= x {
        i += 1;
    }
    while j < m && b[j] <= x {
        j += 1;
    }
    let gap = (i as u64 * m64).abs_diff(j as u64 * n64);
    ratio(sup.max(gap), n64 * m64)
}

/// `num / den` with one rounding when both fit the mantissa.
fn ratio<T: Real>(num: u64, den: u64) -> T {
    T::from_u64(num).unwrap() / T::from_u64(den).unwrap()
}
