//! Single-channel Lenia with three kernels of three Gaussian bumps each.
//!
//! `A ← clip(A + dt Σ_k h_k G_k(K_k ∗ A), 0, 1)` with `dt = 1 / T`,
//! `G(x) = 2 exp(−(x − μ)² / 2σ²) − 1` and radial kernels
//! `K(x) = Σ_i b_i exp(−(x / (r R) − a_i)² / 2 w_i²)` truncated at `x = r R`
//! and normalized to unit sum.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::conv::FftConvolver;
use super::{RolloutConfig, System, SystemKind};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::noise::perlin_noise;
use crate::params::{ParamDim, ParamSpace};
use crate::scalar::Scalar;

pub const N_KERNELS: usize = 3;
pub const N_BUMPS: usize = 3;
/// `N_KERNELS * (N_BUMPS * 3 + 4) + 2`.
pub const N_PARAMS: usize = N_KERNELS * (N_BUMPS * 3 + 4) + 2;

/// Pre-normalization kernel mass below which a kernel is rejected.
pub const MIN_KERNEL_MASS: f64 = 1e-12;

// (lo, hi, sigma) per parameter family, sigma as a fraction of hi - lo.
const RADIUS: (f64, f64, f64) = (2.0, 40.0, 0.2);
const TIME_RES: (f64, f64, f64) = (2.0, 20.0, 0.5);
const MU: (f64, f64, f64) = (0.05, 0.5, 0.2);
const SIGMA: (f64, f64, f64) = (0.001, 0.18, 0.01);
const GAIN: (f64, f64, f64) = (0.01, 1.0, 0.2);
const REL_RADIUS: (f64, f64, f64) = (0.2, 1.0, 0.2);
const BUMP_HEIGHT: (f64, f64, f64) = (0.001, 1.0, 0.2);
const BUMP_WIDTH: (f64, f64, f64) = (0.01, 0.5, 0.2);
const BUMP_CENTER: (f64, f64, f64) = (0.0, 1.0, 0.2);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump<T> {
    /// Height.
    pub b: T,
    /// Width.
    pub w: T,
    /// Center, as a fraction of the kernel radius.
    pub a: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams<T> {
    pub mu: T,
    pub sigma: T,
    /// Gain of this kernel's growth in the update.
    pub h: T,
    /// Kernel radius relative to `R`.
    pub r: T,
    pub bumps: [Bump<T>; N_BUMPS],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeniaParams<T> {
    /// Kernel radius `R` in cells.
    pub radius: T,
    /// Time resolution `T`; the step is `1 / T`.
    pub time_res: T,
    pub kernels: [KernelParams<T>; N_KERNELS],
}

impl<T: Scalar> LeniaParams<T> {
    /// Flat layout: `R, T`, then per kernel `mu, sigma, h, r, (b, w, a) x 3`.
    pub fn from_slice(values: &[T]) -> Result<Self> {
        if values.len() != N_PARAMS {
            return Err(Error::InvalidConfig(format!(
                "lenia expects {N_PARAMS} parameters, got {}",
                values.len()
            )));
        }
        let kernel = |k: usize| {
            let o = 2 + k * 13;
            let bump = |i: usize| Bump {
                b: values[o + 4 + 3 * i],
                w: values[o + 5 + 3 * i],
                a: values[o + 6 + 3 * i],
            };
            KernelParams {
                mu: values[o],
                sigma: values[o + 1],
                h: values[o + 2],
                r: values[o + 3],
                bumps: [bump(0), bump(1), bump(2)],
            }
        };
        Ok(Self {
            radius: values[0],
            time_res: values[1],
            kernels: [kernel(0), kernel(1), kernel(2)],
        })
    }

    pub fn to_vec(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(N_PARAMS);
        out.push(self.radius);
        out.push(self.time_res);
        for k in &self.kernels {
            out.extend([k.mu, k.sigma, k.h, k.r]);
            for b in &k.bumps {
                out.extend([b.b, b.w, b.a]);
            }
        }
        out
    }

    pub fn dt(&self) -> T {
        T::one() / self.time_res
    }

    pub fn in_bounds(&self) -> bool {
        let space = param_space::<T>();
        let v = crate::params::ParamVector::new(self.to_vec());
        space.contains(&v)
    }
}

/// The 41-dimensional Lenia parameter space with default mutation scales in raw units.
pub fn param_space<T: Scalar>() -> ParamSpace<T> {
    let dim = |name: String, (lo, hi, sigma): (f64, f64, f64)| ParamDim {
        name,
        lo: T::lit(lo),
        hi: T::lit(hi),
        sigma: T::lit(sigma * (hi - lo)),
    };
    let mut dims = vec![dim("R".into(), RADIUS), dim("T".into(), TIME_RES)];
    for k in 1..=N_KERNELS {
        dims.push(dim(format!("k{k}.mu"), MU));
        dims.push(dim(format!("k{k}.sigma"), SIGMA));
        dims.push(dim(format!("k{k}.h"), GAIN));
        dims.push(dim(format!("k{k}.r"), REL_RADIUS));
        for i in 1..=N_BUMPS {
            dims.push(dim(format!("k{k}.b{i}"), BUMP_HEIGHT));
            dims.push(dim(format!("k{k}.w{i}"), BUMP_WIDTH));
            dims.push(dim(format!("k{k}.a{i}"), BUMP_CENTER));
        }
    }
    ParamSpace::new(dims).expect("static bounds are valid")
}

/// Growth mapping, in `(−1, 1]`.
#[inline]
pub fn growth<T: Scalar>(x: T, mu: T, sigma: T) -> T {
    let z = (x - mu) / sigma;
    T::lit(2.0) * (-(z * z) / T::lit(2.0)).exp() - T::one()
}

/// Radial kernel on a `width x height` torus, centered at cell `(0, 0)`.
///
/// Each cell's value depends only on its toroidal distance `x` from the center;
/// cells with `x > r R` are zero. The result sums to one.
pub fn lenia_kernel<T: Scalar>(
    kernel: &KernelParams<T>,
    radius: T,
    width: usize,
    height: usize,
) -> Result<Grid2D<T>> {
    let support = kernel.r * radius;
    let mut grid = Grid2D::from_fn(width, height, |x, y| {
        let dx = T::from_usize_lossy(x.min(width - x));
        let dy = T::from_usize_lossy(y.min(height - y));
        let dist = (dx * dx + dy * dy).sqrt();
        if dist > support {
            return T::zero();
        }
        let rel = dist / support;
        kernel
            .bumps
            .iter()
            .map(|b| {
                let d = rel - b.a;
                b.b * (-(d * d) / (T::lit(2.0) * b.w * b.w)).exp()
            })
            .sum()
    });
    let mass: T = grid.values().iter().copied().sum();
    if !(mass.as_f64() >= MIN_KERNEL_MASS) {
        return Err(Error::ZeroKernel {
            kernel: 0,
            sum: mass.as_f64(),
        });
    }
    for v in grid.values_mut() {
        *v /= mass;
    }
    Ok(grid)
}

/// Precomputed kernels and FFT plans for stepping one parameter set.
#[derive(Debug, Clone)]
pub struct LeniaStepper<T: Scalar> {
    params: LeniaParams<T>,
    width: usize,
    height: usize,
    conv: FftConvolver<T>,
    spectra: Vec<Vec<Complex<T>>>,
    kernels: Vec<Grid2D<T>>,
}

impl<T: Scalar> LeniaStepper<T> {
    pub fn new(params: &LeniaParams<T>, width: usize, height: usize) -> Result<Self> {
        let conv = FftConvolver::new(width, height);
        let mut kernels = Vec::with_capacity(N_KERNELS);
        for (i, k) in params.kernels.iter().enumerate() {
            let grid = lenia_kernel(k, params.radius, width, height).map_err(|e| match e {
                Error::ZeroKernel { sum, .. } => Error::ZeroKernel { kernel: i, sum },
                other => other,
            })?;
            kernels.push(grid);
        }
        let spectra = kernels.iter().map(|k| conv.kernel_spectrum(k)).collect();
        Ok(Self {
            params: *params,
            width,
            height,
            conv,
            spectra,
            kernels,
        })
    }

    pub fn kernels(&self) -> &[Grid2D<T>] {
        &self.kernels
    }

    /// Advances `state` by one update in place.
    pub fn step(&self, state: &mut Grid2D<T>, work: &mut Workspace<T>) {
        assert_eq!((state.width(), state.height()), (self.width, self.height));
        let Workspace {
            spectrum,
            packed,
            scratch,
            conv_out,
            delta,
        } = work;
        self.conv.forward_real(state.values(), spectrum, scratch);
        delta.clear();
        delta.resize(state.len(), T::zero());

        let imag = Complex::new(T::zero(), T::one());
        let ks = &self.params.kernels;
        // Two real convolutions share one complex inverse transform.
        let mut k = 0;
        while k < N_KERNELS {
            packed.clear();
            if k + 1 < N_KERNELS {
                packed.extend(
                    spectrum
                        .iter()
                        .zip(&self.spectra[k])
                        .zip(&self.spectra[k + 1])
                        .map(|((s, a), b)| *s * *a + imag * (*s * *b)),
                );
            } else {
                packed.extend(spectrum.iter().zip(&self.spectra[k]).map(|(s, a)| *s * *a));
            }
            self.conv.inverse(packed, conv_out);
            let (k0, k1) = (&ks[k], ks.get(k + 1));
            for (d, c) in delta.iter_mut().zip(conv_out.iter()) {
                *d += k0.h * growth(c.re, k0.mu, k0.sigma);
                if let Some(k1) = k1 {
                    *d += k1.h * growth(c.im, k1.mu, k1.sigma);
                }
            }
            k += 2;
        }

        let dt = self.params.dt();
        for (a, d) in state.values_mut().iter_mut().zip(delta.iter()) {
            *a = (*a + dt * *d).max(T::zero()).min(T::one());
        }
    }
}

/// Reusable buffers for [`LeniaStepper::step`].
#[derive(Debug, Default, Clone)]
pub struct Workspace<T> {
    spectrum: Vec<Complex<T>>,
    packed: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
    conv_out: Vec<Complex<T>>,
    delta: Vec<T>,
}

/// One Lenia update; builds kernels on every call. Prefer [`LeniaStepper`] in loops.
pub fn step_lenia<T: Scalar>(state: &Grid2D<T>, params: &LeniaParams<T>) -> Result<Grid2D<T>> {
    let stepper = LeniaStepper::new(params, state.width(), state.height())?;
    let mut next = state.clone();
    stepper.step(&mut next, &mut Workspace::default());
    Ok(next)
}

/// Final state after `config.steps` updates from an un-thresholded Perlin field.
pub fn rollout_lenia<T: Scalar>(
    params: &LeniaParams<T>,
    config: &RolloutConfig,
) -> Result<Grid2D<T>> {
    let n = config.size;
    let stepper = LeniaStepper::new(params, n, n)?;
    let mut state = perlin_noise::<T>(n, n, config.perlin_cell_size, config.seed);
    let mut work = Workspace::default();
    for _ in 0..config.steps {
        stepper.step(&mut state, &mut work);
    }
    Ok(state)
}

/// Lenia as an explorable [`System`].
#[derive(Debug, Clone)]
pub struct Lenia<T> {
    space: ParamSpace<T>,
    config: RolloutConfig,
}

impl<T: Scalar> Lenia<T> {
    pub fn new(config: RolloutConfig) -> Self {
        Self {
            space: param_space(),
            config,
        }
    }
}

impl<T: Scalar> Default for Lenia<T> {
    fn default() -> Self {
        Self::new(RolloutConfig::lenia())
    }
}

impl<T: Scalar> System<T> for Lenia<T> {
    fn kind(&self) -> SystemKind {
        SystemKind::Lenia
    }

    fn param_space(&self) -> &ParamSpace<T> {
        &self.space
    }

    fn config(&self) -> &RolloutConfig {
        &self.config
    }

    fn rollout(&self, params: &[T], init_seed: u64) -> Result<Grid2D<T>> {
        let p = LeniaParams::from_slice(params)?;
        rollout_lenia(&p, &self.config.with_seed(init_seed))
    }

    fn observe(&self, state: &Grid2D<T>) -> Grid2D<T> {
        state.quantize_8bit()
    }
}
