use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ks::ks_sorted;
use super::{AnomalyError, SampleStore};
use crate::scalar::Real;

/// KS statistics of one hour against each of the preceding `lags` hours.
///
/// `ks_values[k - 1]` compares hour `t` with hour `t - k`; entries whose
/// lagged hour is before the panel or has no distance sample are masked out
/// and hold zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsLagSet<T = f64> {
    pub time_index: usize,
    pub lags: Vec<usize>,
    pub ks_values: Vec<T>,
    pub valid_mask: Vec<bool>,
}

impl<T: Real> KsLagSet<T> {
    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    /// Valid entries in lag order.
    pub fn valid_values(&self) -> Vec<T> {
        self.ks_values
            .iter()
            .zip(&self.valid_mask)
            .filter_map(|(&v, &ok)| ok.then_some(v))
            .collect()
    }

    pub fn valid_count(&self) -> usize {
        self.valid_mask.iter().filter(|&&b| b).count()
    }
}

/// Lagged KS set at hour `t` for lags `1..=max_lag`.
pub fn lagged_ks_set<T: Real>(
    store: &SampleStore<T>,
    t: usize,
    max_lag: usize,
) -> Result<KsLagSet<T>, AnomalyError> {
    if max_lag == 0 {
        return Err(AnomalyError::InvalidLag(max_lag));
    }
    if t >= store.len() {
        return Err(AnomalyError::HourOutOfRange(t));
    }
    let current = store.get(t).ok_or(AnomalyError::UndefinedTimestep(t))?;
    let mut ks_values = Vec::with_capacity(max_lag);
    let mut valid_mask = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        match t.checked_sub(k).and_then(|u| store.get(u)) {
            Some(past) => {
                ks_values.push(ks_sorted(current, past));
                valid_mask.push(true);
            }
            None => {
                ks_values.push(T::zero());
                valid_mask.push(false);
            }
        }
    }
    Ok(KsLagSet {
        time_index: t,
        lags: (1..=max_lag).collect(),
        ks_values,
        valid_mask,
    })
}

/// [`lagged_ks_set`] for every hour, computed in parallel and returned in
/// hour order. Undefined hours carry their error.
pub fn lagged_ks_sets<T: Real>(
    store: &SampleStore<T>,
    max_lag: usize,
) -> Vec<Result<KsLagSet<T>, AnomalyError>> {
    (0..store.len())
        .into_par_iter()
        .map(|t| lagged_ks_set(store, t, max_lag))
        .collect()
}

/// Time × lag matrix of KS values; `None` marks undefined cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsHeatmap<T = f64> {
    pub max_lag: usize,
    pub rows: Vec<Vec<Option<T>>>,
}

impl<T: Real> KsHeatmap<T> {
    pub fn from_sets(sets: &[Result<KsLagSet<T>, AnomalyError>], max_lag: usize) -> Self {
        let rows = sets
            .iter()
            .map(|set| match set {
                Ok(s) => s
                    .ks_values
                    .iter()
                    .zip(&s.valid_mask)
                    .map(|(&v, &ok)| ok.then_some(v))
                    .collect(),
                Err(_) => vec![None; max_lag],
            })
            .collect();
        Self { max_lag, rows }
    }

    pub fn n_hours(&self) -> usize {
        self.rows.len()
    }

    /// Cell for hour `t` and lag `k` (1-based).
    pub fn get(&self, t: usize, k: usize) -> Option<T> {
        self.rows.get(t)?.get(k.checked_sub(1)?).copied().flatten()
    }

    /// Mean over the defined cells of row `t`.
    pub fn row_mean(&self, t: usize) -> Option<T> {
        let vals: Vec<T> = self.rows.get(t)?.iter().flatten().copied().collect();
        crate::stats::mean(&vals)
    }

    /// CSV with a header row `hour,1,2,...,max_lag`; undefined cells are empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = String::from("hour");
        for k in 1..=self.max_lag {
            header.push(',');
            header.push_str(&k.to_string());
        }
        writeln!(w, "{header}")?;
        for (t, row) in self.rows.iter().enumerate() {
            let mut line = t.to_string();
            for cell in row {
                line.push(',');
                if let Some(v) = cell {
                    line.push_str(&v.to_string());
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Full lag heatmap for lags `1..=max_lag`.
pub fn ks_heatmap<T: Real>(
    store: &SampleStore<T>,
    max_lag: usize,
) -> Result<KsHeatmap<T>, AnomalyError> {
    if max_lag == 0 {
        return Err(AnomalyError::InvalidLag(0));
    }
    if store.len() < 2 {
        return Err(AnomalyError::WindowTooShort {
            hours: store.len(),
            lag: 1,
        });
    }
    Ok(KsHeatmap::from_sets(&lagged_ks_sets(store, max_lag), max_lag))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(samples: Vec<Option<Vec<f64>>>) -> SampleStore {
        SampleStore::from_samples(samples)
    }

    #[test]
    fn early_hours_are_partially_masked() {
        let st = store(vec![Some(vec![1.0, 2.0]), Some(vec![1.0, 2.0]), Some(vec![5.0, 6.0])]);
        let set = lagged_ks_set(&st, 2, 4).unwrap();
        assert_eq!(set.lags, [1, 2, 3, 4]);
        assert_eq!(set.valid_mask, [true, true, false, false]);
        assert_eq!(set.ks_values, [1.0, 1.0, 0.0, 0.0]);
        let first = lagged_ks_set(&st, 0, 2).unwrap();
        assert_eq!(first.valid_count(), 0);
    }

    #[test]
    fn undefined_hours() {
        let st = store(vec![Some(vec![1.0]), None, Some(vec![1.0])]);
        assert_eq!(lagged_ks_set(&st, 1, 1), Err(AnomalyError::UndefinedTimestep(1)));
        let set = lagged_ks_set(&st, 2, 2).unwrap();
        assert_eq!(set.valid_mask, [false, true]);
        assert_eq!(lagged_ks_set(&st, 2, 0), Err(AnomalyError::InvalidLag(0)));
        assert_eq!(lagged_ks_set(&st, 3, 1), Err(AnomalyError::HourOutOfRange(3)));
    }

    #[test]
    fn lag_counts_in_hours() {
        let st = store(vec![Some(vec![1.0]); 200]);
        assert_eq!(lagged_ks_set(&st, 199, 8 * 24).unwrap().len(), 192);
        assert_eq!(lagged_ks_set(&st, 199, 3 * 24).unwrap().len(), 72);
    }

    #[test]
    fn heatmap_matches_sets_and_csv_shape() {
        let st = store(vec![
            Some(vec![1.0, 2.0]),
            Some(vec![1.5, 2.5]),
            None,
            Some(vec![3.0, 4.0]),
        ]);
        let hm = ks_heatmap(&st, 2).unwrap();
        assert_eq!(hm.get(1, 1), Some(0.5));
        assert_eq!(hm.get(2, 1), None);
        assert_eq!(hm.get(3, 1), None);
        assert_eq!(hm.get(3, 2), Some(1.0));
        let mut buf = Vec::new();
        hm.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("hour,1,2"));
        assert_eq!(text.lines().nth(4), Some("3,,1"));
        assert!(ks_heatmap(&st, 0).is_err());
    }
}
