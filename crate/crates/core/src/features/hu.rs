//! Hu's seven moment invariants of a grid treated as a density image.

use crate::grid::Grid2D;
use crate::scalar::Scalar;

/// Offset used by [`signed_log`]: values are measured in decades above `1e-30`.
const LOG_FLOOR: f64 = 1e-30;

/// The seven classical Hu invariants, untransformed. A grid with zero mass
/// returns all zeros.
///
/// Pixel `(x, y)` sits at coordinates `(x, y)`; values are used as weights as-is.
pub fn hu_invariants<T: Scalar>(obs: &Grid2D<T>) -> [T; 7] {
    let mut m00 = 0.0f64;
    let mut m10 = 0.0f64;
    let mut m01 = 0.0f64;
    for y in 0..obs.height() {
        for x in 0..obs.width() {
            let v = obs.get(x, y).as_f64();
            m00 += v;
            m10 += v * x as f64;
            m01 += v * y as f64;
        }
    }
    if m00.abs() <= f64::MIN_POSITIVE {
        return [T::zero(); 7];
    }
    let (cx, cy) = (m10 / m00, m01 / m00);

    // Central moments up to order 3.
    let (mut mu20, mut mu02, mut mu11) = (0.0f64, 0.0f64, 0.0f64);
    let (mut mu30, mut mu03, mut mu21, mut mu12) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for y in 0..obs.height() {
        let dy = y as f64 - cy;
        for x in 0..obs.width() {
            let v = obs.get(x, y).as_f64();
            if v == 0.0 {
                continue;
            }
            let dx = x as f64 - cx;
            mu20 += v * dx * dx;
            mu02 += v * dy * dy;
            mu11 += v * dx * dy;
            mu30 += v * dx * dx * dx;
            mu03 += v * dy * dy * dy;
            mu21 += v * dx * dx * dy;
            mu12 += v * dx * dy * dy;
        }
    }
    // Scale normalization: eta_pq = mu_pq / mu00^(1 + (p + q) / 2).
    let n2 = m00 * m00;
    let n3 = m00.powf(2.5);
    let (e20, e02, e11) = (mu20 / n2, mu02 / n2, mu11 / n2);
    let (e30, e03, e21, e12) = (mu30 / n3, mu03 / n3, mu21 / n3, mu12 / n3);

    let a = e30 + e12;
    let b = e21 + e03;
    let h1 = e20 + e02;
    let h2 = (e20 - e02).powi(2) + 4.0 * e11 * e11;
    let h3 = (e30 - 3.0 * e12).powi(2) + (3.0 * e21 - e03).powi(2);
    let h4 = a * a + b * b;
    let h5 = (e30 - 3.0 * e12) * a * (a * a - 3.0 * b * b)
        + (3.0 * e21 - e03) * b * (3.0 * a * a - b * b);
    let h6 = (e20 - e02) * (a * a - b * b) + 4.0 * e11 * a * b;
    let h7 = (3.0 * e21 - e03) * a * (a * a - 3.0 * b * b)
        - (e30 - 3.0 * e12) * b * (3.0 * a * a - b * b);
    [h1, h2, h3, h4, h5, h6, h7].map(T::lit)
}

/// `sign(h) * (log10(|h| + 1e-30) - log10(1e-30))`: zero maps to zero and the
/// many decades Hu invariants span become comparable.
#[inline]
pub fn signed_log<T: Scalar>(h: T) -> T {
    let x = h.as_f64();
    if x == 0.0 {
        return T::zero();
    }
    let mag = (x.abs() + LOG_FLOOR).log10() - LOG_FLOOR.log10();
    T::lit(x.signum() * mag)
}

/// Signed-log transformed Hu invariants, as used in the behavior space.
pub fn hu_moments<T: Scalar>(obs: &Grid2D<T>) -> [T; 7] {
    hu_invariants(obs).map(signed_log)
}
