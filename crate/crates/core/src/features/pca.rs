//! Principal component analysis through a cyclic Jacobi eigensolver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigenvalues below this fraction of the largest one count as zero variance.
const RANK_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix (row-major, `n x n`).
///
/// Returns eigenvalues in descending order and the matching unit eigenvectors.
/// Each eigenvector's largest-magnitude entry is made positive so results are
/// reproducible.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut col: Vec<f64> = (0..n).map(|k| v[k * n + i]).collect();
            let pivot = col
                .iter()
                .fold(0.0f64, |m, &x| if x.abs() > m.abs() { x } else { m });
            if pivot < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    (values, vectors)
}

/// A fitted linear projection onto the leading principal directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit principal directions, strongest first. Directions beyond the data's
    /// rank are zero vectors, so the matching coordinates are always 0.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component (population normalization).
    pub explained_variance: Vec<f64>,
    /// Number of components with non-negligible variance.
    pub rank: usize,
}

impl Pca {
    /// Fit `out_dims` components. Needs at least 5 vectors.
    pub fn fit<T: Scalar, V: AsRef<[T]>>(data: &[V], out_dims: usize) -> Result<Self> {
        if data.len() < 5 {
            return Err(Error::InvalidConfig(format!(
                "pca needs at least 5 vectors, got {}",
                data.len()
            )));
        }
        let d = data[0].as_ref().len();
        if out_dims == 0 || out_dims > d {
            return Err(Error::InvalidConfig(format!(
                "cannot keep {out_dims} of {d} dimensions"
            )));
        }
        let n = data.len() as f64;
        let mut mean = vec![0.0f64; d];
        for row in data {
            for (m, v) in mean.iter_mut().zip(row.as_ref()) {
                *m += v.as_f64();
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut cov = vec![0.0f64; d * d];
        let mut centered = vec![0.0f64; d];
        for row in data {
            for ((c, v), m) in centered.iter_mut().zip(row.as_ref()).zip(&mean) {
                *c = v.as_f64() - m;
            }
            for i in 0..d {
                for j in i..d {
                    cov[i * d + j] += centered[i] * centered[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let c = cov[i * d + j] / n;
                cov[i * d + j] = c;
                cov[j * d + i] = c;
            }
        }
        let (values, vectors) = symmetric_eigen(&cov, d);
        let top = values[0].max(0.0);
        let mut components = Vec::with_capacity(out_dims);
        let mut explained = Vec::with_capacity(out_dims);
        let mut rank = 0;
        for (val, vec) in values.into_iter().zip(vectors).take(out_dims) {
            if top > 0.0 && val > RANK_TOL * top {
                rank += 1;
                components.push(vec);
                explained.push(val);
            } else {
                components.push(vec![0.0; d]);
                explained.push(0.0);
            }
        }
        Ok(Self {
            mean,
            components,
            explained_variance: explained,
            rank,
        })
    }

    pub fn out_dims(&self) -> usize {
        self.components.len()
    }

    pub fn project<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.components
            .iter()
            .map(|c| {
                let s: f64 = c
                    .iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(ci, (xi, mi))| ci * (xi.as_f64() - mi))
                    .sum();
                T::lit(s)
            })
            .collect()
    }

    /// Map projected coordinates back into the input space.
    pub fn reconstruct<T: Scalar>(&self, coords: &[T]) -> Vec<T> {
        let mut out = self.mean.clone();
        for (c, &z) in self.components.iter().zip(coords) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += ci * z.as_f64();
            }
        }
        out.into_iter().map(T::lit).collect()
    }
}
