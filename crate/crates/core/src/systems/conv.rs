use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid2D;
use crate::scalar::Scalar;

/// Toroidal convolution `(K ∗ A)(p) = Σ_q K(q) A(p − q)` evaluated directly.
/// `O(n²)` in the cell count; meant for small grids and cross-checks.
pub fn convolve_direct<T: Scalar>(kernel: &Grid2D<T>, field: &Grid2D<T>) -> Grid2D<T> {
    assert_eq!(
        (kernel.width(), kernel.height()),
        (field.width(), field.height())
    );
    let (w, h) = (field.width(), field.height());
    Grid2D::from_fn(w, h, |px, py| {
        let mut acc = T::zero();
        for qy in 0..h {
            for qx in 0..w {
                let k = kernel.get(qx, qy);
                if k != T::zero() {
                    acc +=
                        k * field.get_wrapped(px as isize - qx as isize, py as isize - qy as isize);
                }
            }
        }
        acc
    })
}

/// 2-D FFT plans for one grid shape.
///
/// Spectra are kept in column-major (transposed) layout, which is all the
/// pointwise products in between need.
#[derive(Clone)]
pub struct FftConvolver<T: Scalar> {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

impl<T: Scalar> std::fmt::Debug for FftConvolver<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftConvolver")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

fn transpose<T: Copy>(src: &[T], dst: &mut [T], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

impl<T: Scalar> FftConvolver<T> {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            col_fwd: planner.plan_fft_forward(height),
            row_inv: planner.plan_fft_inverse(width),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Forward transform of a real field into `out` (transposed layout).
    pub fn forward_real(
        &self,
        field: &[T],
        out: &mut Vec<Complex<T>>,
        scratch: &mut Vec<Complex<T>>,
    ) {
        assert_eq!(field.len(), self.len());
        scratch.clear();
        scratch.extend(field.iter().map(|&re| Complex::new(re, T::zero())));
        self.forward_in_place(scratch, out);
    }

    /// Forward transform; `buf` is consumed as row-major input.
    fn forward_in_place(&self, buf: &mut [Complex<T>], out: &mut Vec<Complex<T>>) {
        self.row_fwd.process(buf);
        out.resize(self.len(), Complex::new(T::zero(), T::zero()));
        transpose(buf, out, self.height, self.width);
        self.col_fwd.process(out);
    }

    /// Inverse transform of a transposed-layout spectrum into row-major `out`,
    /// including the `1 / (w h)` normalization.
    pub fn inverse(&self, spectrum: &mut [Complex<T>], out: &mut Vec<Complex<T>>) {
        assert_eq!(spectrum.len(), self.len());
        self.col_inv.process(spectrum);
        out.resize(self.len(), Complex::new(T::zero(), T::zero()));
        transpose(spectrum, out, self.width, self.height);
        self.row_inv.process(out);
        let scale = T::one() / T::from_usize_lossy(self.len());
        for c in out.iter_mut() {
            *c = *c * scale;
        }
    }

    /// Spectrum of a kernel laid out with its center at cell `(0, 0)`.
    pub fn kernel_spectrum(&self, kernel: &Grid2D<T>) -> Vec<Complex<T>> {
        let mut scratch = Vec::new();
        let mut out = Vec::new();
        self.forward_real(kernel.values(), &mut out, &mut scratch);
        out
    }

    /// Convenience: one toroidal convolution through the FFT path.
    pub fn convolve(&self, kernel: &Grid2D<T>, field: &Grid2D<T>) -> Grid2D<T> {
        let ks = self.kernel_spectrum(kernel);
        let mut scratch = Vec::new();
        let mut spec = Vec::new();
        self.forward_real(field.values(), &mut spec, &mut scratch);
        for (s, k) in spec.iter_mut().zip(&ks) {
            *s = *s * *k;
        }
        let mut out = Vec::new();
        self.inverse(&mut spec, &mut out);
        Grid2D::from_vec(
            self.width,
            self.height,
            out.into_iter().map(|c| c.re).collect(),
        )
        .expect("shape by construction")
    }
}
