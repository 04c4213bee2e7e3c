//! Bin-occupancy diversity, acceptance rate and the evaluation embedding.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explorer::INLIER;
use crate::features::haralick::{haralick13, N_FEATURES};
use crate::features::{EvalEmbedding, Pca, StandardizationStats};
use crate::grid::Grid2D;
use crate::scalar::Scalar;

pub const EVAL_DIM: usize = 4;
/// Bin budget for global diversity.
pub const GLOBAL_BINS: u64 = 200_000;
/// Bin budget for constrained diversity.
pub const CONSTRAINED_BINS: u64 = 100_000;

/// Largest `b` with `b^4 <= n`, computed exactly.
pub fn fourth_root_floor(n: u64) -> u64 {
    let mut b = (n as f64).powf(0.25).floor() as u64;
    while b > 0 && b.saturating_pow(4) > n {
        b -= 1;
    }
    while (b + 1).saturating_pow(4) <= n {
        b += 1;
    }
    b
}

/// Uniform grid over a 4-D box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub n_bins_target: u64,
    pub bins_per_dim: u64,
    pub lo: [f64; EVAL_DIM],
    pub hi: [f64; EVAL_DIM],
}

impl BinningSpec {
    pub fn new(n_bins_target: u64, lo: [f64; EVAL_DIM], hi: [f64; EVAL_DIM]) -> Result<Self> {
        let bins_per_dim = fourth_root_floor(n_bins_target);
        if bins_per_dim == 0 {
            return Err(Error::InvalidConfig(
                "need at least one bin per dimension".into(),
            ));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) || lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::InvalidConfig(format!(
                "bad binning bounds {lo:?} .. {hi:?}"
            )));
        }
        Ok(Self {
            n_bins_target,
            bins_per_dim,
            lo,
            hi,
        })
    }

    /// Bounds taken from the coordinate-wise min and max of `points`.
    pub fn from_points<T: Scalar>(n_bins_target: u64, points: &[EvalEmbedding<T>]) -> Result<Self> {
        let mut lo = [f64::INFINITY; EVAL_DIM];
        let mut hi = [f64::NEG_INFINITY; EVAL_DIM];
        for p in points {
            for d in 0..EVAL_DIM {
                let v = p.coords[d].as_f64();
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        if points.is_empty() {
            lo = [0.0; EVAL_DIM];
            hi = [0.0; EVAL_DIM];
        }
        Self::new(n_bins_target, lo, hi)
    }

    pub fn n_bins(&self) -> u64 {
        self.bins_per_dim.pow(EVAL_DIM as u32)
    }

    /// Bin id along one dimension; out-of-range values clamp to the edge bins.
    pub fn bin_1d(&self, d: usize, v: f64) -> u64 {
        let b = self.bins_per_dim;
        let width = self.hi[d] - self.lo[d];
        if !(width > 0.0) || v.is_nan() {
            return 0;
        }
        let t = ((v - self.lo[d]) / width * b as f64).floor();
        if t <= 0.0 {
            0
        } else {
            (t as u64).min(b - 1)
        }
    }
}

/// Mixed-radix bin index, first coordinate most significant.
pub fn bin_index<T: Scalar>(point: &EvalEmbedding<T>, spec: &BinningSpec) -> u64 {
    (0..EVAL_DIM).fold(0, |acc, d| {
        acc * spec.bins_per_dim + spec.bin_1d(d, point.coords[d].as_f64())
    })
}

/// Number of occupied bins.
pub fn diversity<T: Scalar>(points: &[EvalEmbedding<T>], spec: &BinningSpec) -> usize {
    points
        .iter()
        .map(|p| bin_index(p, spec))
        .collect::<HashSet<_>>()
        .len()
}

/// Occupied bins among inliers only.
pub fn constrained_diversity<T: Scalar>(
    classifications: &[i8],
    spec: &BinningSpec,
    embeddings: &[EvalEmbedding<T>],
) -> usize {
    assert_eq!(classifications.len(), embeddings.len());
    embeddings
        .iter()
        .zip(classifications)
        .filter(|(_, &c)| c == INLIER)
        .map(|(p, _)| bin_index(p, spec))
        .collect::<HashSet<_>>()
        .len()
}

/// Inlier fraction among entries with index `>= n_init`.
pub fn acceptance_rate(classifications: &[i8], n_init: usize) -> Result<f64> {
    if classifications.len() <= n_init {
        return Err(Error::InsufficientHistory {
            len: classifications.len(),
            n_init,
        });
    }
    let post = &classifications[n_init..];
    Ok(post.iter().filter(|&&c| c == INLIER).count() as f64 / post.len() as f64)
}

/// Diversity and acceptance as functions of the sample index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub global: Vec<usize>,
    pub constrained: Vec<usize>,
    pub acceptance_rate: Option<f64>,
}

/// Occupied-bin sets that grow one sample at a time.
#[derive(Debug, Clone)]
pub struct DiversityTracker {
    global_spec: BinningSpec,
    constrained_spec: BinningSpec,
    global: HashSet<u64>,
    constrained: HashSet<u64>,
}

impl DiversityTracker {
    pub fn new(global_spec: BinningSpec, constrained_spec: BinningSpec) -> Self {
        Self {
            global_spec,
            constrained_spec,
            global: HashSet::new(),
            constrained: HashSet::new(),
        }
    }

    /// Adds one sample and returns `(global, constrained)` diversity so far.
    pub fn push<T: Scalar>(&mut self, point: &EvalEmbedding<T>, inlier: bool) -> (usize, usize) {
        self.global.insert(bin_index(point, &self.global_spec));
        if inlier {
            self.constrained
                .insert(bin_index(point, &self.constrained_spec));
        }
        self.current()
    }

    pub fn current(&self) -> (usize, usize) {
        (self.global.len(), self.constrained.len())
    }

    /// Recomputes the constrained set after a re-classification.
    pub fn reset_constrained<T: Scalar>(
        &mut self,
        embeddings: &[EvalEmbedding<T>],
        classifications: &[i8],
    ) {
        self.constrained = embeddings
            .iter()
            .zip(classifications)
            .filter(|(_, &c)| c == INLIER)
            .map(|(p, _)| bin_index(p, &self.constrained_spec))
            .collect();
    }
}

pub fn diversity_report<T: Scalar>(
    embeddings: &[EvalEmbedding<T>],
    classifications: &[i8],
    global_spec: &BinningSpec,
    constrained_spec: &BinningSpec,
    n_init: usize,
) -> DiversityReport {
    assert_eq!(embeddings.len(), classifications.len());
    let mut tracker = DiversityTracker::new(global_spec.clone(), constrained_spec.clone());
    let (global, constrained) = embeddings
        .iter()
        .zip(classifications)
        .map(|(p, &c)| tracker.push(p, c == INLIER))
        .unzip();
    DiversityReport {
        global,
        constrained,
        acceptance_rate: acceptance_rate(classifications, n_init).ok(),
    }
}

/// Haralick features, standardization and PCA to four dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSpace {
    pub stats: StandardizationStats<f64>,
    pub pca: Pca,
}

impl EvalSpace {
    /// Fit on pooled Haralick vectors; needs at least five.
    pub fn fit(haralick: &[[f64; N_FEATURES]]) -> Result<Self> {
        let stats = StandardizationStats::fit(haralick);
        let standardized: Vec<Vec<f64>> = haralick.iter().map(|h| stats.apply(h)).collect();
        let pca = Pca::fit(&standardized, EVAL_DIM)?;
        Ok(Self { stats, pca })
    }

    pub fn fit_observations<T: Scalar>(observations: &[&Grid2D<T>]) -> Result<Self> {
        let h: Vec<[f64; N_FEATURES]> = observations.iter().map(|o| haralick_f64(o)).collect();
        Self::fit(&h)
    }

    pub fn embed_features<T: Scalar>(&self, haralick: &[f64; N_FEATURES]) -> EvalEmbedding<T> {
        let p = self.pca.project(&self.stats.apply(haralick));
        EvalEmbedding {
            coords: [p[0], p[1], p[2], p[3]].map(T::lit),
        }
    }

    pub fn embed<T: Scalar>(&self, obs: &Grid2D<T>) -> EvalEmbedding<T> {
        self.embed_features(&haralick_f64(obs))
    }
}

pub fn haralick_f64<T: Scalar>(obs: &Grid2D<T>) -> [f64; N_FEATURES] {
    haralick13(&obs.cast::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(c: [f64; 4]) -> EvalEmbedding<f64> {
        EvalEmbedding { coords: c }
    }

    fn unit_spec(target: u64) -> BinningSpec {
        BinningSpec::new(target, [0.0; 4], [1.0; 4]).unwrap()
    }

    /// Counts cells containing at least one point by scanning every cell box.
    fn brute_force_occupied(points: &[[f64; 4]], spec: &BinningSpec) -> usize {
        let b = spec.bins_per_dim as usize;
        let edges = |d: usize, i: usize| {
            let w = (spec.hi[d] - spec.lo[d]) / b as f64;
            let lo = if i == 0 {
                f64::NEG_INFINITY
            } else {
                spec.lo[d] + i as f64 * w
            };
            let hi = if i + 1 == b {
                f64::INFINITY
            } else {
                spec.lo[d] + (i + 1) as f64 * w
            };
            (lo, hi)
        };
        let mut occupied = 0;
        for cell in 0..b.pow(4) {
            let idx = [
                cell / (b * b * b),
                cell / (b * b) % b,
                cell / b % b,
                cell % b,
            ];
            let hit = points.iter().any(|p| {
                (0..4).all(|d| {
                    let (lo, hi) = edges(d, idx[d]);
                    lo <= p[d] && p[d] < hi
                })
            });
            occupied += hit as usize;
        }
        occupied
    }

    #[test]
    fn bins_per_dim_for_benchmark_budgets() {
        assert_eq!(fourth_root_floor(200_000), 21);
        assert_eq!(fourth_root_floor(100_000), 17);
        assert_eq!(fourth_root_floor(16), 2);
        assert_eq!(fourth_root_floor(15), 1);
        assert_eq!(fourth_root_floor(0), 0);
        for n in 1..5000u64 {
            let b = fourth_root_floor(n);
            assert!(b.pow(4) <= n && (b + 1).pow(4) > n);
        }
        assert_eq!(unit_spec(200_000).n_bins(), 194_481);
        assert_eq!(unit_spec(100_000).n_bins(), 83_521);
    }

    #[test]
    fn corner_and_clamping() {
        let s = unit_spec(200_000);
        assert_eq!(bin_index(&e([0.0; 4]), &s), 0);
        assert_eq!(bin_index(&e([-5.0; 4]), &s), 0);
        assert_eq!(bin_index(&e([1.0; 4]), &s), s.n_bins() - 1);
        assert_eq!(bin_index(&e([7.0; 4]), &s), s.n_bins() - 1);
        assert_eq!(
            bin_index(&e([0.001, 0.0, 0.0, 0.0]), &s),
            bin_index(&e([0.002, 0.0, 0.0, 0.0]), &s)
        );
        // Mixed radix: the last coordinate is the least significant digit.
        assert_eq!(bin_index(&e([0.0, 0.0, 0.0, 1.0]), &s), 20);
        assert_eq!(bin_index(&e([1.0, 0.0, 0.0, 0.0]), &s), 20 * 21 * 21 * 21);
    }

    #[test]
    fn degenerate_bounds_use_bin_zero() {
        let s = BinningSpec::new(16, [0.5; 4], [0.5; 4]).unwrap();
        assert_eq!(bin_index(&e([0.9; 4]), &s), 0);
        assert!(BinningSpec::new(16, [1.0; 4], [0.0; 4]).is_err());
    }

    #[test]
    fn diversity_basics() {
        let s = unit_spec(10_000);
        assert_eq!(diversity::<f64>(&[], &s), 0);
        assert_eq!(diversity(&vec![e([0.3; 4]); 50], &s), 1);
        let points = vec![e([0.1; 4]), e([0.9; 4]), e([0.1; 4])];
        assert_eq!(diversity(&points, &s), 2);
        assert_eq!(constrained_diversity(&[-1, -1, -1], &s, &points), 0);
        assert_eq!(constrained_diversity(&[1, 1, 1], &s, &points), 2);
    }

    #[test]
    fn acceptance() {
        assert_eq!(acceptance_rate(&[-1, -1, 1, 1], 2).unwrap(), 1.0);
        assert_eq!(acceptance_rate(&[1, 1, -1, 1], 2).unwrap(), 0.5);
        assert!(matches!(
            acceptance_rate(&[1, 1], 2),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn report_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let points: Vec<_> = (0..300)
            .map(|_| e([(); 4].map(|_| rng.random::<f64>())))
            .collect();
        let classes: Vec<i8> = (0..300)
            .map(|_| if rng.random_bool(0.3) { 1 } else { -1 })
            .collect();
        let g = BinningSpec::from_points(GLOBAL_BINS, &points).unwrap();
        let c = BinningSpec::from_points(CONSTRAINED_BINS, &points).unwrap();
        let r = diversity_report(&points, &classes, &g, &c, 100);
        assert!(r.global.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.constrained.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*r.global.last().unwrap(), diversity(&points, &g));
        assert_eq!(
            *r.constrained.last().unwrap(),
            constrained_diversity(&classes, &c, &points)
        );
        assert_eq!(
            r.acceptance_rate,
            Some(acceptance_rate(&classes, 100).unwrap())
        );
    }

    #[test]
    fn tracker_reset_matches_batch() {
        let points = vec![e([0.1; 4]), e([0.5; 4]), e([0.9; 4])];
        let s = unit_spec(10_000);
        let mut t = DiversityTracker::new(s.clone(), s.clone());
        for p in &points {
            t.push(p, true);
        }
        assert_eq!(t.current(), (3, 3));
        t.reset_constrained(&points, &[1, -1, -1]);
        assert_eq!(t.current(), (3, 1));
    }

    /// Projection through an independently computed eigen-decomposition.
    fn oracle_embedding(h: &[[f64; N_FEATURES]]) -> Vec<[f64; 4]> {
        let n = h.len();
        let mean: Vec<f64> = (0..N_FEATURES)
            .map(|d| h.iter().map(|r| r[d]).sum::<f64>() / n as f64)
            .collect();
        let std: Vec<f64> = (0..N_FEATURES)
            .map(|d| {
                (h.iter().map(|r| (r[d] - mean[d]).powi(2)).sum::<f64>() / n as f64)
                    .sqrt()
                    .max(1e-12)
            })
            .collect();
        let z = DMatrix::from_fn(n, N_FEATURES, |i, d| (h[i][d] - mean[d]) / std[d]);
        let zc_mean: Vec<f64> = (0..N_FEATURES).map(|d| z.column(d).mean()).collect();
        let zc = DMatrix::from_fn(n, N_FEATURES, |i, d| z[(i, d)] - zc_mean[d]);
        let eig = SymmetricEigen::new(zc.transpose() * &zc / n as f64);
        let mut order: Vec<usize> = (0..N_FEATURES).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let cols: Vec<_> = order[..4]
            .iter()
            .map(|&k| &zc * eig.eigenvectors.column(k))
            .collect();
        (0..n)
            .map(|i| [cols[0][i], cols[1][i], cols[2][i], cols[3][i]])
            .collect()
    }

    #[test]
    fn eval_space_diversity_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let obs: Vec<Grid2D<f64>> = (0..120)
            .map(|i| {
                let period = 2 + i % 7;
                let noise = 0.1 * (i % 5) as f64;
                Grid2D::from_fn(16, 16, |x, y| {
                    let base = if (x / period + y / (1 + i % 3)) % 2 == 0 {
                        0.8
                    } else {
                        0.1
                    };
                    (base + noise * rng.random::<f64>()).min(1.0)
                })
            })
            .collect();
        let refs: Vec<&Grid2D<f64>> = obs.iter().collect();
        let space = EvalSpace::fit_observations(&refs).unwrap();
        let ours: Vec<EvalEmbedding<f64>> = obs.iter().map(|o| space.embed(o)).collect();
        let h: Vec<[f64; N_FEATURES]> = obs.iter().map(haralick_f64).collect();
        let mut oracle = oracle_embedding(&h);
        // Eigenvectors are defined up to sign; align each axis with ours.
        for k in 0..4 {
            let dot: f64 = ours
                .iter()
                .zip(&oracle)
                .map(|(a, b)| a.coords[k] * b[k])
                .sum();
            if dot < 0.0 {
                oracle.iter_mut().for_each(|p| p[k] = -p[k]);
            }
        }
        for (a, b) in ours.iter().zip(&oracle) {
            for k in 0..4 {
                assert!((a.coords[k] - b[k]).abs() < 1e-6, "{:?} vs {b:?}", a.coords);
            }
        }
        let oracle_points: Vec<_> = oracle.into_iter().map(e).collect();
        for target in [GLOBAL_BINS, CONSTRAINED_BINS, 625] {
            let s1 = BinningSpec::from_points(target, &ours).unwrap();
            let s2 = BinningSpec::from_points(target, &oracle_points).unwrap();
            assert_eq!(diversity(&ours, &s1), diversity(&oracle_points, &s2));
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force_cells(
            points in proptest::collection::vec(proptest::array::uniform4(-0.5f64..1.5), 0..200),
            target in 1u64..700,
        ) {
            let s = unit_spec(target);
            let pts: Vec<_> = points.iter().copied().map(e).collect();
            prop_assert_eq!(diversity(&pts, &s), brute_force_occupied(&points, &s));
        }

        #[test]
        fn permutation_invariant_and_monotone(
            mut points in proptest::collection::vec(proptest::array::uniform4(0.0f64..1.0), 1..100),
            extra in proptest::array::uniform4(0.0f64..1.0),
        ) {
            let s = unit_spec(10_000);
            let d0 = diversity(&points.iter().copied().map(e).collect::<Vec<_>>(), &s);
            points.reverse();
            let d1 = diversity(&points.iter().copied().map(e).collect::<Vec<_>>(), &s);
            prop_assert_eq!(d0, d1);
            points.push(extra);
            let d2 = diversity(&points.iter().copied().map(e).collect::<Vec<_>>(), &s);
            prop_assert!(d2 >= d1);
        }

        #[test]
        fn constrained_never_exceeds_global_and_narrowing_shrinks(
            points in proptest::collection::vec(proptest::array::uniform4(0.0f64..1.0), 1..100),
            vols in proptest::collection::vec(0.0f64..1.0, 100),
        ) {
            let s = unit_spec(10_000);
            let pts: Vec<_> = points.iter().copied().map(e).collect();
            let classify = |lo: f64, hi: f64| -> Vec<i8> {
                vols[..pts.len()].iter().map(|v| if (lo..=hi).contains(v) { 1 } else { -1 }).collect()
            };
            let wide = constrained_diversity(&classify(0.2, 0.8), &s, &pts);
            let narrow = constrained_diversity(&classify(0.4, 0.6), &s, &pts);
            prop_assert!(narrow <= wide);
            prop_assert!(wide <= diversity(&pts, &s));
        }
    }
}
