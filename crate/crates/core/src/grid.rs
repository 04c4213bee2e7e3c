//! Toroidal 2-D scalar field used for system states and observations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Real-valued field on a `width x height` torus, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T: Scalar> Grid2D<T> {
    /// Grid filled with `value`.
    ///
    /// Panics if either side is zero.
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        assert!(width >= 1 && height >= 1, "grid sides must be >= 1");
        Self {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, T::zero())
    }

    pub fn from_vec(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::GridShape {
                width,
                height,
                len: values.len(),
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a grid by evaluating `f(x, y)` at every cell.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(width >= 1 && height >= 1, "grid sides must be >= 1");
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.values[y * self.width + x] = value;
    }

    /// Reads with toroidal wrap-around on both axes.
    #[inline]
    pub fn get_wrapped(&self, x: isize, y: isize) -> T {
        let xs = x.rem_euclid(self.width as isize) as usize;
        let ys = y.rem_euclid(self.height as isize) as usize;
        self.values[ys * self.width + xs]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `(min, max)` over all cells.
    pub fn min_max(&self) -> (T, T) {
        self.values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> T {
        let sum: T = self.values.iter().copied().sum();
        sum / T::from_usize_lossy(self.values.len())
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    /// Rotates the image by 90 degrees counter-clockwise.
    pub fn rot90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        Self::from_fn(h, w, |x, y| self.get(w - 1 - y, x))
    }

    /// Shifts content by `(dx, dy)` with wrap-around.
    pub fn roll(&self, dx: isize, dy: isize) -> Self {
        Self::from_fn(self.width, self.height, |x, y| {
            self.get_wrapped(x as isize - dx, y as isize - dy)
        })
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Grid2D<U> {
        Grid2D {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    /// Snaps every value onto the 8-bit display grid: `round(255 * clip(v, 0, 1)) / 255`.
    pub fn quantize_8bit(&self) -> Self {
        let scale = T::lit(255.0);
        self.map(|v| {
            let c = if v.is_nan() {
                T::zero()
            } else {
                v.max(T::zero()).min(T::one())
            };
            (c * scale).round() / scale
        })
    }

    /// 8-bit grayscale pixels, `round(255 * clip(v, 0, 1))`.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|&v| {
                let c = if v.is_nan() {
                    0.0
                } else {
                    v.as_f64().clamp(0.0, 1.0)
                };
                (c * 255.0).round() as u8
            })
            .collect()
    }
}
