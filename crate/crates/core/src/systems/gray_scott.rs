//! Gray-Scott reaction-diffusion, forward Euler on a toroidal grid.
//!
//! ```text
//! du/dt = Du ∇²u − u v² + f (1 − u)
//! dv/dt = Dv ∇²v + u v² − (f + k) v
//! ```
//!
//! The observation is built from the `u` channel alone.

use serde::{Deserialize, Serialize};

use super::{RolloutConfig, System, SystemKind};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::noise::perlin_noise;
use crate::params::{ParamDim, ParamSpace};
use crate::scalar::Scalar;

pub const DIFFUSION_U: f64 = 0.5;
pub const DIFFUSION_V: f64 = 0.25;

pub const FEED_BOUNDS: (f64, f64) = (0.001, 0.2);
pub const KILL_BOUNDS: (f64, f64) = (0.01, 0.075);
/// Mutation scales as fractions of the parameter's range.
pub const FEED_SIGMA: f64 = 0.2;
pub const KILL_SIGMA: f64 = 0.001;

/// Sign convention of the kill term in the `v` equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KillTerm {
    /// `− (f + k) v`, the usual Gray-Scott model.
    #[default]
    Classical,
    /// `− (f − k) v`.
    AsPrinted,
}

/// Discrete Laplacian used for both channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Laplacian {
    /// Neighbours weigh 1, centre −4.
    FivePoint,
    /// Edges 0.2, corners 0.05, centre −1. Stable at `dt = 1` for the default diffusion rates.
    #[default]
    NinePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrayScottParams<T> {
    /// Feed rate.
    pub f: T,
    /// Kill rate.
    pub k: T,
}

impl<T: Scalar> GrayScottParams<T> {
    pub fn new(f: T, k: T) -> Self {
        Self { f, k }
    }

    pub fn from_slice(values: &[T]) -> Result<Self> {
        match values {
            [f, k] => Ok(Self { f: *f, k: *k }),
            _ => Err(Error::InvalidConfig(format!(
                "gray-scott expects 2 parameters, got {}",
                values.len()
            ))),
        }
    }

    pub fn to_vec(self) -> Vec<T> {
        vec![self.f, self.k]
    }

    pub fn in_bounds(&self) -> bool {
        let f = self.f.as_f64();
        let k = self.k.as_f64();
        (FEED_BOUNDS.0..=FEED_BOUNDS.1).contains(&f) && (KILL_BOUNDS.0..=KILL_BOUNDS.1).contains(&k)
    }

    /// Decay coefficient multiplying `v` in the `v` equation.
    fn decay(&self, kill_term: KillTerm) -> T {
        match kill_term {
            KillTerm::Classical => self.f + self.k,
            KillTerm::AsPrinted => self.f - self.k,
        }
    }
}

/// Parameter space `(f, k)` with the default mutation scales in raw units.
pub fn param_space<T: Scalar>() -> ParamSpace<T> {
    ParamSpace::new(vec![
        ParamDim {
            name: "f".into(),
            lo: T::lit(FEED_BOUNDS.0),
            hi: T::lit(FEED_BOUNDS.1),
            sigma: T::lit(FEED_SIGMA * (FEED_BOUNDS.1 - FEED_BOUNDS.0)),
        },
        ParamDim {
            name: "k".into(),
            lo: T::lit(KILL_BOUNDS.0),
            hi: T::lit(KILL_BOUNDS.1),
            sigma: T::lit(KILL_SIGMA * (KILL_BOUNDS.1 - KILL_BOUNDS.0)),
        },
    ])
    .expect("static bounds are valid")
}

/// `u ≡ 1`; `v = 1` where the Perlin field exceeds the threshold, else 0.
pub fn init_gray_scott<T: Scalar>(config: &RolloutConfig) -> (Grid2D<T>, Grid2D<T>) {
    let n = config.size;
    let noise = perlin_noise::<T>(n, n, config.perlin_cell_size, config.seed);
    let threshold = T::lit(config.perlin_threshold);
    let u = Grid2D::filled(n, n, T::one());
    let v = noise.map(|x| if x > threshold { T::one() } else { T::zero() });
    (u, v)
}

/// Toroidal field stored with a one-cell halo so the stencil loop is branch-free.
struct Haloed<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> Haloed<T> {
    fn from_grid(g: &Grid2D<T>) -> Self {
        let (w, h) = (g.width(), g.height());
        let mut data = vec![T::zero(); (w + 2) * (h + 2)];
        for y in 0..h {
            data[(y + 1) * (w + 2) + 1..][..w].copy_from_slice(&g.values()[y * w..][..w]);
        }
        let mut f = Self {
            width: w,
            height: h,
            data,
        };
        f.wrap();
        f
    }

    fn to_grid(&self) -> Grid2D<T> {
        let (w, h) = (self.width, self.height);
        let mut values = Vec::with_capacity(w * h);
        for y in 0..h {
            values.extend_from_slice(&self.data[(y + 1) * (w + 2) + 1..][..w]);
        }
        Grid2D::from_vec(w, h, values).expect("shape by construction")
    }

    fn row(&self, y: usize) -> &[T] {
        &self.data[y * (self.width + 2)..][..self.width + 2]
    }

    /// Refreshes the halo from the opposite edges.
    fn wrap(&mut self) {
        let (w, h, pw) = (self.width, self.height, self.width + 2);
        for y in 1..=h {
            let r = y * pw;
            self.data[r] = self.data[r + w];
            self.data[r + w + 1] = self.data[r + 1];
        }
        self.data.copy_within(h * pw..(h + 1) * pw, 0);
        self.data.copy_within(pw..2 * pw, (h + 1) * pw);
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Values of `v` below this magnitude are set to zero; they have no visible
/// effect and would otherwise decay into slow subnormal arithmetic.
fn flush_threshold<T: Scalar>() -> T {
    T::min_positive_value().sqrt()
}

/// One Euler step from `(u, v)` into `(un, vn)`, halos included.
#[allow(clippy::too_many_arguments)]
fn step_haloed<T: Scalar>(
    u: &Haloed<T>,
    v: &Haloed<T>,
    un: &mut Haloed<T>,
    vn: &mut Haloed<T>,
    feed: T,
    decay: T,
    dt: T,
    laplacian: Laplacian,
) {
    match laplacian {
        Laplacian::FivePoint => step_with(u, v, un, vn, feed, decay, dt, |a, b, c, x| {
            b[x] + b[x + 2] + a[x + 1] + c[x + 1] - T::lit(4.0) * b[x + 1]
        }),
        Laplacian::NinePoint => step_with(u, v, un, vn, feed, decay, dt, |a, b, c, x| {
            T::lit(0.2) * (b[x] + b[x + 2] + a[x + 1] + c[x + 1])
                + T::lit(0.05) * (a[x] + a[x + 2] + c[x] + c[x + 2])
                - b[x + 1]
        }),
    }
}

/// `lap(above, row, below, x)` evaluates the stencil at padded column `x + 1`.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn step_with<T: Scalar>(
    u: &Haloed<T>,
    v: &Haloed<T>,
    un: &mut Haloed<T>,
    vn: &mut Haloed<T>,
    feed: T,
    decay: T,
    dt: T,
    lap: impl Fn(&[T], &[T], &[T], usize) -> T,
) {
    let (w, h, pw) = (u.width, u.height, u.width + 2);
    let du = T::lit(DIFFUSION_U);
    let dv = T::lit(DIFFUSION_V);
    let tiny = flush_threshold::<T>();
    for y in 1..=h {
        let (uu, um, ud) = (u.row(y - 1), u.row(y), u.row(y + 1));
        let (vu, vm, vd) = (v.row(y - 1), v.row(y), v.row(y + 1));
        let uo = &mut un.data[y * pw + 1..][..w];
        let vo = &mut vn.data[y * pw + 1..][..w];
        for x in 0..w {
            let uc = um[x + 1];
            let vc = vm[x + 1];
            let uvv = uc * vc * vc;
            uo[x] = uc + dt * (du * lap(uu, um, ud, x) - uvv + feed * (T::one() - uc));
            let vnext = vc + dt * (dv * lap(vu, vm, vd, x) + uvv - decay * vc);
            vo[x] = if vnext.abs() < tiny { T::zero() } else { vnext };
        }
    }
    un.wrap();
    vn.wrap();
}

/// One forward-Euler step of the reaction-diffusion equations.
pub fn step_gray_scott<T: Scalar>(
    u: &Grid2D<T>,
    v: &Grid2D<T>,
    params: &GrayScottParams<T>,
    dt: T,
    kill_term: KillTerm,
    laplacian: Laplacian,
) -> Result<(Grid2D<T>, Grid2D<T>)> {
    assert_eq!(
        (u.width(), u.height()),
        (v.width(), v.height()),
        "u and v differ in shape"
    );
    let (hu, hv) = (Haloed::from_grid(u), Haloed::from_grid(v));
    let (mut un, mut vn) = (Haloed::from_grid(u), Haloed::from_grid(v));
    step_haloed(
        &hu,
        &hv,
        &mut un,
        &mut vn,
        params.f,
        params.decay(kill_term),
        dt,
        laplacian,
    );
    if !(un.all_finite() && vn.all_finite()) {
        return Err(Error::DivergentRollout { step: 0 });
    }
    Ok((un.to_grid(), vn.to_grid()))
}

/// Steps between finiteness checks. Non-finite values never become finite
/// again under the stencil, so a periodic check catches every divergence.
const FINITE_CHECK_INTERVAL: usize = 64;

/// Final `u` after `config.steps` Euler steps from [`init_gray_scott`].
pub fn rollout_gray_scott<T: Scalar>(
    params: &GrayScottParams<T>,
    config: &RolloutConfig,
) -> Result<Grid2D<T>> {
    let (u0, v0) = init_gray_scott::<T>(config);
    let (mut u, mut v) = (Haloed::from_grid(&u0), Haloed::from_grid(&v0));
    let (mut un, mut vn) = (Haloed::from_grid(&u0), Haloed::from_grid(&v0));
    let dt = T::lit(config.gray_scott_dt);
    let decay = params.decay(config.kill_term);
    for step in 0..config.steps {
        step_haloed(
            &u,
            &v,
            &mut un,
            &mut vn,
            params.f,
            decay,
            dt,
            config.laplacian,
        );
        std::mem::swap(&mut u, &mut un);
        std::mem::swap(&mut v, &mut vn);
        let check = (step + 1) % FINITE_CHECK_INTERVAL == 0 || step + 1 == config.steps;
        if check && !(u.all_finite() && v.all_finite()) {
            return Err(Error::DivergentRollout { step });
        }
    }
    Ok(u.to_grid())
}

/// Gray-Scott as an explorable [`System`].
#[derive(Debug, Clone)]
pub struct GrayScott<T> {
    space: ParamSpace<T>,
    config: RolloutConfig,
}

impl<T: Scalar> GrayScott<T> {
    pub fn new(config: RolloutConfig) -> Self {
        Self {
            space: param_space(),
            config,
        }
    }

    pub fn with_space(config: RolloutConfig, space: ParamSpace<T>) -> Self {
        Self { space, config }
    }
}

impl<T: Scalar> Default for GrayScott<T> {
    fn default() -> Self {
        Self::new(RolloutConfig::gray_scott())
    }
}

impl<T: Scalar> System<T> for GrayScott<T> {
    fn kind(&self) -> SystemKind {
        SystemKind::GrayScott
    }

    fn param_space(&self) -> &ParamSpace<T> {
        &self.space
    }

    fn config(&self) -> &RolloutConfig {
        &self.config
    }

    fn rollout(&self, params: &[T], init_seed: u64) -> Result<Grid2D<T>> {
        let p = GrayScottParams::from_slice(params)?;
        rollout_gray_scott(&p, &self.config.with_seed(init_seed))
    }

    /// Consumed substrate `1 − u` on the 8-bit display grid: the `u ≡ 1`
    /// resting state is black, reacted regions are bright.
    fn observe(&self, state: &Grid2D<T>) -> Grid2D<T> {
        state.map(|u| T::one() - u).quantize_8bit()
    }
}
