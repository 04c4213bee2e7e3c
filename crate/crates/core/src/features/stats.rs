//! Per-dimension standardization.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Floor applied to per-dimension standard deviations.
pub const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats<T> {
    pub mean: Vec<T>,
    /// Population standard deviation, floored at [`MIN_STD`].
    pub std: Vec<T>,
}

impl<T: Scalar> StandardizationStats<T> {
    /// Mean and floored population std of each dimension. Panics on an empty set
    /// or ragged rows.
    pub fn fit<V: AsRef<[T]>>(data: &[V]) -> Self {
        assert!(
            !data.is_empty(),
            "standardization needs at least one vector"
        );
        let d = data[0].as_ref().len();
        let n = data.len() as f64;
        let mut mean = vec![0.0f64; d];
        for row in data {
            let row = row.as_ref();
            assert_eq!(row.len(), d, "ragged data");
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v.as_f64();
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0f64; d];
        for row in data {
            for ((s, v), m) in var.iter_mut().zip(row.as_ref()).zip(&mean) {
                *s += (v.as_f64() - m).powi(2);
            }
        }
        Self {
            mean: mean.into_iter().map(T::lit).collect(),
            std: var
                .into_iter()
                .map(|s| T::lit((s / n).sqrt().max(MIN_STD)))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// True when the dimension's spread was below the floor.
    pub fn is_degenerate(&self, d: usize) -> bool {
        self.std[d] <= T::lit(MIN_STD)
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    pub fn apply_dim(&self, d: usize, v: T) -> T {
        (v - self.mean[d]) / self.std[d]
    }
}

/// Standardize every vector with statistics computed from `data` itself.
pub fn standardize<T: Scalar, V: AsRef<[T]>>(data: &[V]) -> (Vec<Vec<T>>, StandardizationStats<T>) {
    let stats = StandardizationStats::fit(data);
    let out = data.iter().map(|row| stats.apply(row.as_ref())).collect();
    (out, stats)
}
