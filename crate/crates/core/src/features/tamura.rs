//! Tamura coarseness, contrast and directionality.
//!
//! All neighbourhoods wrap around the torus.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::grid::Grid2D;
use crate::scalar::Scalar;

/// Scales `k = 1..=5`, i.e. windows of 2 to 32 pixels.
pub const COARSENESS_SCALES: u32 = 5;
pub const DIRECTION_BINS: usize = 16;
/// Gradient magnitude threshold for the orientation histogram (12 gray levels of 255).
pub const GRADIENT_THRESHOLD: f64 = 12.0 / 255.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tamura<T> {
    pub coarseness: T,
    pub contrast: T,
    pub directionality: T,
}

fn to_f64<T: Scalar>(obs: &Grid2D<T>) -> Vec<f64> {
    obs.values().iter().map(|v| v.as_f64()).collect()
}

/// Mean over the `size x size` window starting `size / 2` cells up-left of each cell.
fn box_mean(values: &[f64], w: usize, h: usize, size: usize) -> Vec<f64> {
    let half = (size / 2) as isize;
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for d in 0..size as isize {
                let xx = (x as isize - half + d).rem_euclid(w as isize) as usize;
                s += values[y * w + xx];
            }
            rows[y * w + x] = s;
        }
    }
    let norm = (size * size) as f64;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for d in 0..size as isize {
                let yy = (y as isize - half + d).rem_euclid(h as isize) as usize;
                s += rows[yy * w + x];
            }
            out[y * w + x] = s / norm;
        }
    }
    out
}

/// Mean best window size: for each pixel, the `2^k` whose opposite-side window
/// averages differ most (ties keep the smaller scale).
pub fn coarseness<T: Scalar>(obs: &Grid2D<T>) -> T {
    let (w, h) = (obs.width(), obs.height());
    let values = to_f64(obs);
    let mut best_e = vec![-1.0f64; w * h];
    let mut best_size = vec![0.0f64; w * h];
    for k in 1..=COARSENESS_SCALES {
        let size = 1usize << k;
        let half = (size / 2) as isize;
        let avg = box_mean(&values, w, h, size);
        let at = |x: isize, y: isize| {
            avg[(y.rem_euclid(h as isize) as usize) * w + x.rem_euclid(w as isize) as usize]
        };
        for y in 0..h as isize {
            for x in 0..w as isize {
                let eh = (at(x + half, y) - at(x - half, y)).abs();
                let ev = (at(x, y + half) - at(x, y - half)).abs();
                let e = eh.max(ev);
                let i = y as usize * w + x as usize;
                if e > best_e[i] {
                    best_e[i] = e;
                    best_size[i] = size as f64;
                }
            }
        }
    }
    T::lit(best_size.iter().sum::<f64>() / (w * h) as f64)
}

/// `σ / kurtosis^(1/4)`, i.e. `σ² / μ4^(1/4)`; zero for constant images.
pub fn contrast<T: Scalar>(obs: &Grid2D<T>) -> T {
    let (lo, hi) = obs.min_max();
    if lo == hi {
        return T::zero();
    }
    let values = to_f64(obs);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    if var <= 0.0 || m4 <= 0.0 {
        return T::zero();
    }
    T::lit(var / m4.powf(0.25))
}

/// Histogram of edge orientations in `[0, π)` over pixels with a strong gradient,
/// normalized to unit sum. `None` when no pixel passes the threshold.
pub fn orientation_histogram<T: Scalar>(obs: &Grid2D<T>) -> Option<[f64; DIRECTION_BINS]> {
    let (w, h) = (obs.width() as isize, obs.height() as isize);
    let at = |x: isize, y: isize| obs.get_wrapped(x, y).as_f64();
    let mut hist = [0.0f64; DIRECTION_BINS];
    let mut count = 0usize;
    for y in 0..h {
        for x in 0..w {
            // Prewitt operators.
            let dh = (at(x + 1, y - 1) + at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + at(x - 1, y) + at(x - 1, y + 1));
            let dv = (at(x - 1, y + 1) + at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + at(x, y - 1) + at(x + 1, y - 1));
            let mag = (dh.abs() + dv.abs()) / 2.0;
            if mag < GRADIENT_THRESHOLD {
                continue;
            }
            let theta = (dv.atan2(dh) + FRAC_PI_2).rem_euclid(PI);
            let bin = ((theta / PI * DIRECTION_BINS as f64) as usize).min(DIRECTION_BINS - 1);
            hist[bin] += 1.0;
            count += 1;
        }
    }
    if count == 0 {
        return None;
    }
    hist.iter_mut().for_each(|v| *v /= count as f64);
    Some(hist)
}

/// Sharpness of the dominant orientation peak, in `[0, 1]`:
/// `1 − Σ d(φ, φ_peak)² H(φ) / (π/2)²` with circular distance `d`.
/// Images without strong edges score 0.
pub fn directionality<T: Scalar>(obs: &Grid2D<T>) -> T {
    let Some(hist) = orientation_histogram(obs) else {
        return T::zero();
    };
    let peak = hist
        .iter()
        .enumerate()
        .fold(
            (0, f64::MIN),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        )
        .0;
    let bin_width = PI / DIRECTION_BINS as f64;
    let spread: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let d = (i as f64 - peak as f64).abs() * bin_width;
            let d = d.min(PI - d);
            d * d * v
        })
        .sum();
    T::lit(1.0 - spread / (FRAC_PI_2 * FRAC_PI_2))
}

pub fn tamura_features<T: Scalar>(obs: &Grid2D<T>) -> Tamura<T> {
    Tamura {
        coarseness: coarseness(obs),
        contrast: contrast(obs),
        directionality: directionality(obs),
    }
}
