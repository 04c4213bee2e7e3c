//! Single-octave Perlin gradient noise used for initial states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::Grid2D;
use crate::scalar::Scalar;

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Perlin noise on a `width x height` grid with one gradient lattice cell every
/// `cell_size` pixels, min-max normalized to `[0, 1]`.
///
/// The gradient lattice wraps, so the field tiles seamlessly whenever
/// `cell_size` divides the grid sides. A field that comes out constant maps to 0.
pub fn perlin_noise<T: Scalar>(
    width: usize,
    height: usize,
    cell_size: usize,
    seed: u64,
) -> Grid2D<T> {
    assert!(width >= 1 && height >= 1, "grid sides must be >= 1");
    assert!(cell_size >= 1, "cell_size must be >= 1");

    let lattice_w = width.div_ceil(cell_size);
    let lattice_h = height.div_ceil(cell_size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gradients: Vec<(f64, f64)> = (0..lattice_w * lattice_h)
        .map(|_| {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            (angle.cos(), angle.sin())
        })
        .collect();
    let grad = |ix: usize, iy: usize| gradients[(iy % lattice_h) * lattice_w + (ix % lattice_w)];

    let cell = cell_size as f64;
    let mut raw = Vec::with_capacity(width * height);
    for y in 0..height {
        let py = (y as f64 + 0.5) / cell;
        let iy = py.floor() as usize;
        let fy = py - iy as f64;
        for x in 0..width {
            let px = (x as f64 + 0.5) / cell;
            let ix = px.floor() as usize;
            let fx = px - ix as f64;

            let dot = |cx: usize, cy: usize, dx: f64, dy: f64| {
                let (gx, gy) = grad(cx, cy);
                gx * dx + gy * dy
            };
            let n00 = dot(ix, iy, fx, fy);
            let n10 = dot(ix + 1, iy, fx - 1.0, fy);
            let n01 = dot(ix, iy + 1, fx, fy - 1.0);
            let n11 = dot(ix + 1, iy + 1, fx - 1.0, fy - 1.0);
            let (u, v) = (fade(fx), fade(fy));
            raw.push(lerp(lerp(n00, n10, u), lerp(n01, n11, u), v));
        }
    }

    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let span = hi - lo;
    let values = raw
        .into_iter()
        .map(|v| {
            if span > 0.0 {
                T::lit(((v - lo) / span).clamp(0.0, 1.0))
            } else {
                T::zero()
            }
        })
        .collect();
    Grid2D::from_vec(width, height, values).expect("shape by construction")
}
