//! Haralick texture features 1-13 from gray-level co-occurrence matrices.
//!
//! Values in `[0, 1]` are quantized to [`GRAY_LEVELS`] levels. For each of the
//! four unit offsets (0°, 45°, 90°, 135°) a symmetric, normalized GLCM is built
//! over the torus, the 13 features are computed, and the four results are
//! averaged. Entropies use the natural logarithm.

use crate::grid::Grid2D;
use crate::scalar::Scalar;

pub const GRAY_LEVELS: usize = 32;
pub const N_FEATURES: usize = 13;

/// `(dx, dy)` for 0°, 45°, 90° and 135°, with `y` pointing down.
pub const OFFSETS: [(isize, isize); 4] = [(1, 0), (1, -1), (0, -1), (-1, -1)];

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "asm",
    "contrast",
    "correlation",
    "sum_of_squares_variance",
    "inverse_difference_moment",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "info_correlation_1",
    "info_correlation_2",
];

#[inline]
fn quantize(v: f64) -> usize {
    let c = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    ((c * GRAY_LEVELS as f64).floor() as usize).min(GRAY_LEVELS - 1)
}

/// Symmetric co-occurrence matrix for one offset, normalized to unit sum.
pub fn glcm<T: Scalar>(obs: &Grid2D<T>, offset: (isize, isize)) -> Vec<f64> {
    let n = GRAY_LEVELS;
    let levels: Vec<usize> = obs.values().iter().map(|v| quantize(v.as_f64())).collect();
    let (w, h) = (obs.width() as isize, obs.height() as isize);
    let mut counts = vec![0.0f64; n * n];
    for y in 0..h {
        for x in 0..w {
            let a = levels[(y * w + x) as usize];
            let nx = (x + offset.0).rem_euclid(w);
            let ny = (y + offset.1).rem_euclid(h);
            let b = levels[(ny * w + nx) as usize];
            counts[a * n + b] += 1.0;
            counts[b * n + a] += 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    counts.iter_mut().for_each(|c| *c /= total);
    counts
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// The 13 features of one normalized, symmetric GLCM.
pub fn features_from_glcm(p: &[f64]) -> [f64; N_FEATURES] {
    let n = GRAY_LEVELS;
    assert_eq!(p.len(), n * n);
    let at = |i: usize, j: usize| p[i * n + j];

    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut p_sum = vec![0.0; 2 * n - 1];
    let mut p_diff = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let v = at(i, j);
            px[i] += v;
            py[j] += v;
            p_sum[i + j] += v;
            p_diff[i.abs_diff(j)] += v;
        }
    }

    let mean_x: f64 = px.iter().enumerate().map(|(i, &v)| i as f64 * v).sum();
    let mean_y: f64 = py.iter().enumerate().map(|(j, &v)| j as f64 * v).sum();
    let var_x: f64 = px
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64 - mean_x).powi(2) * v)
        .sum();
    let var_y: f64 = py
        .iter()
        .enumerate()
        .map(|(j, &v)| (j as f64 - mean_y).powi(2) * v)
        .sum();

    let mut asm = 0.0;
    let mut cross = 0.0;
    let mut idm = 0.0;
    let mut entropy = 0.0;
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for (i, &pxi) in px.iter().enumerate() {
        for (j, &pyj) in py.iter().enumerate() {
            let v = at(i, j);
            let d = i as f64 - j as f64;
            asm += v * v;
            cross += i as f64 * j as f64 * v;
            idm += v / (1.0 + d * d);
            entropy -= plogp(v);
            let q = pxi * pyj;
            if q > 0.0 {
                hxy1 -= v * q.ln();
                hxy2 -= q * q.ln();
            }
        }
    }

    let contrast: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, &v)| (k * k) as f64 * v)
        .sum();
    let correlation = if var_x > 1e-12 && var_y > 1e-12 {
        (cross - mean_x * mean_y) / (var_x.sqrt() * var_y.sqrt())
    } else {
        1.0
    };
    let sum_average: f64 = p_sum.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let sum_variance: f64 = p_sum
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - sum_average).powi(2) * v)
        .sum();
    let sum_entropy: f64 = -p_sum.iter().map(|&v| plogp(v)).sum::<f64>();
    let diff_mean: f64 = p_diff.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let diff_variance: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - diff_mean).powi(2) * v)
        .sum();
    let diff_entropy: f64 = -p_diff.iter().map(|&v| plogp(v)).sum::<f64>();

    let hx: f64 = -px.iter().map(|&v| plogp(v)).sum::<f64>();
    let hy: f64 = -py.iter().map(|&v| plogp(v)).sum::<f64>();
    let hmax = hx.max(hy);
    let imc1 = if hmax > 0.0 {
        (entropy - hxy1) / hmax
    } else {
        0.0
    };
    let imc2 = (1.0 - (-2.0 * (hxy2 - entropy).max(0.0)).exp())
        .max(0.0)
        .sqrt();

    [
        asm,
        contrast,
        correlation,
        var_x,
        idm,
        sum_average,
        sum_variance,
        sum_entropy,
        entropy,
        diff_variance,
        diff_entropy,
        imc1,
        imc2,
    ]
}

/// Features for a single offset.
pub fn haralick_for_offset<T: Scalar>(obs: &Grid2D<T>, offset: (isize, isize)) -> [T; N_FEATURES] {
    features_from_glcm(&glcm(obs, offset)).map(T::lit)
}

/// The 13 Haralick features averaged over the four unit offsets.
pub fn haralick13<T: Scalar>(obs: &Grid2D<T>) -> [T; N_FEATURES] {
    let mut acc = [0.0f64; N_FEATURES];
    for off in OFFSETS {
        let f = features_from_glcm(&glcm(obs, off));
        for (a, v) in acc.iter_mut().zip(f) {
            *a += v;
        }
    }
    acc.map(|v| T::lit(v / OFFSETS.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_image_degenerate_values() {
        let f = haralick13(&Grid2D::<f64>::filled(16, 16, 0.4));
        assert_eq!(f[0], 1.0); // ASM
        assert_eq!(f[1], 0.0); // contrast
        assert_eq!(f[8], 0.0); // entropy
        assert!(f.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn checkerboard_hand_computed() {
        // Levels 0 and 31 alternate. Horizontal neighbours always differ:
        // the GLCM is 0.5 at (0, 31) and (31, 0).
        let g = Grid2D::<f64>::from_fn(16, 16, |x, y| ((x + y) % 2) as f64);
        let h = haralick_for_offset(&g, (1, 0));
        assert_eq!(h[1], 961.0);
        assert_eq!(h[0], 0.5);
        // Diagonal neighbours share a level.
        let d = haralick_for_offset(&g, (1, -1));
        assert_eq!(d[1], 0.0);
        assert_eq!(d[0], 0.5);
        let avg = haralick13(&g);
        assert_eq!(avg[0], 0.5);
        assert_eq!(avg[1], 480.5);
    }

    #[test]
    fn transpose_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let g = Grid2D::<f64>::from_fn(24, 17, |_, _| rng.random::<f64>());
            let a = haralick13(&g);
            let b = haralick13(&g.transpose());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "{a:?}\n{b:?}");
            }
        }
    }

    #[test]
    fn glcm_is_symmetric_and_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid2D::<f64>::from_fn(10, 10, |_, _| rng.random::<f64>());
        for off in OFFSETS {
            let p = glcm(&g, off);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..GRAY_LEVELS {
                for j in 0..GRAY_LEVELS {
                    assert_eq!(p[i * GRAY_LEVELS + j], p[j * GRAY_LEVELS + i]);
                }
            }
        }
    }

    #[test]
    fn information_correlations_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = Grid2D::<f64>::from_fn(32, 32, |x, _| {
            (x as f64 / 32.0 + 0.1 * rng.random::<f64>()).min(1.0)
        });
        let f = haralick13(&g);
        assert!(f[11] <= 0.0 && f[11] >= -1.0);
        assert!((0.0..=1.0).contains(&f[12]));
        assert!(f[2] > 0.5, "smooth ramp is strongly correlated: {}", f[2]);
    }
}
