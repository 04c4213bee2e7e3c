//! Goal sampling and nearest-neighbour candidate selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::features::StandardizationStats;
use crate::scalar::Scalar;

use super::roi::INLIER;

/// Which history entries may serve as the mutation source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Global,
    Constrained,
}

/// Goal drawn uniformly from the bounding box of `behaviors`, one uniform draw
/// per dimension. Panics on an empty history.
pub fn sample_goal<T: Scalar, const D: usize, R: Rng + ?Sized>(
    behaviors: &[[T; D]],
    rng: &mut R,
) -> [T; D] {
    assert!(
        !behaviors.is_empty(),
        "goal sampling needs a non-empty history"
    );
    let mut lo = behaviors[0];
    let mut hi = behaviors[0];
    for b in &behaviors[1..] {
        for d in 0..D {
            lo[d] = lo[d].min(b[d]);
            hi[d] = hi[d].max(b[d]);
        }
    }
    let mut goal = lo;
    for d in 0..D {
        let u: f64 = rng.random();
        goal[d] = (lo[d] + (hi[d] - lo[d]) * T::lit(u)).min(hi[d]);
    }
    goal
}

/// `k` distinct axes out of `dim`, in ascending order.
pub fn draw_axes<R: Rng + ?Sized>(dim: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut axes = rand::seq::index::sample(rng, dim, k.min(dim)).into_vec();
    axes.sort_unstable();
    axes
}

/// Index of the history entry nearest to `goal` over `axes`, after standardizing
/// history and goal with statistics of the whole history. Degenerate dimensions
/// contribute nothing. Constrained mode only considers inliers and falls back to
/// all entries when there are none. Ties go to the lowest index.
pub fn select_candidate<T: Scalar, const D: usize>(
    behaviors: &[[T; D]],
    classifications: &[i8],
    goal: &[T; D],
    mode: Mode,
    axes: &[usize],
) -> usize {
    assert!(
        !behaviors.is_empty(),
        "candidate selection needs a non-empty history"
    );
    assert_eq!(behaviors.len(), classifications.len());
    assert!(!axes.is_empty(), "at least one axis");
    let stats = StandardizationStats::fit(behaviors);
    let active: Vec<usize> = axes
        .iter()
        .copied()
        .filter(|&d| !stats.is_degenerate(d))
        .collect();
    let g: Vec<f64> = active
        .iter()
        .map(|&d| stats.apply_dim(d, goal[d]).as_f64())
        .collect();

    let constrained = mode == Mode::Constrained && classifications.contains(&INLIER);
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, b) in behaviors.iter().enumerate() {
        if constrained && classifications[i] != INLIER {
            continue;
        }
        let dist: f64 = active
            .iter()
            .zip(&g)
            .map(|(&d, gd)| (stats.apply_dim(d, b[d]).as_f64() - gd).powi(2))
            .sum();
        if best.0 == usize::MAX || dist < best.1 {
            best = (i, dist);
        }
    }
    best.0
}
