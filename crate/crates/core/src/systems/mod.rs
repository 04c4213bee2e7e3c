//! Grid-based complex systems: seeded Gray-Scott and Lenia rollouts on tori.
//!
//! A rollout is a pure function of `(parameters, initial-state seed, config)`.
//! Each system also defines how its final state is turned into the observation
//! that feature extraction sees.

mod conv;
pub mod gray_scott;
pub mod lenia;

use serde::{Deserialize, Serialize};

pub use conv::{convolve_direct, FftConvolver};
pub use gray_scott::{GrayScott, GrayScottParams, KillTerm, Laplacian};
pub use lenia::{growth, lenia_kernel, Bump, KernelParams, Lenia, LeniaParams};

use crate::error::Result;
use crate::grid::Grid2D;
use crate::params::ParamSpace;
use crate::scalar::Scalar;

/// Default spread tolerance for [`is_homogeneous`].
pub const HOMOGENEITY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    GrayScott,
    Lenia,
}

impl SystemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemKind::GrayScott => "gray_scott",
            SystemKind::Lenia => "lenia",
        }
    }
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gray_scott" | "gray-scott" | "grayscott" => Ok(SystemKind::GrayScott),
            "lenia" => Ok(SystemKind::Lenia),
            other => Err(format!("unknown system `{other}`")),
        }
    }
}

/// Rollout settings. The defaults are per system, see [`RolloutConfig::gray_scott`]
/// and [`RolloutConfig::lenia`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutConfig {
    /// Grid side in cells (square grids).
    pub size: usize,
    pub steps: usize,
    pub gray_scott_dt: f64,
    pub perlin_cell_size: usize,
    /// Gray-Scott only: `v = 1` where the noise exceeds this value.
    pub perlin_threshold: f64,
    pub kill_term: KillTerm,
    pub laplacian: Laplacian,
    /// Seed of the initial-state noise.
    pub seed: u64,
}

impl RolloutConfig {
    pub fn gray_scott() -> Self {
        Self {
            size: 32,
            steps: 2000,
            gray_scott_dt: 1.0,
            perlin_cell_size: 8,
            perlin_threshold: 0.7,
            kill_term: KillTerm::Classical,
            laplacian: Laplacian::NinePoint,
            seed: 0,
        }
    }

    pub fn lenia() -> Self {
        Self {
            size: 64,
            steps: 200,
            ..Self::gray_scott()
        }
    }

    pub fn for_kind(kind: SystemKind) -> Self {
        match kind {
            SystemKind::GrayScott => Self::gray_scott(),
            SystemKind::Lenia => Self::lenia(),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.size == 0 {
            return Err("size must be >= 1".into());
        }
        if self.steps == 0 {
            return Err("steps must be >= 1".into());
        }
        if !(self.gray_scott_dt > 0.0) || !(self.gray_scott_dt * self.steps as f64).is_finite() {
            return Err("gray_scott_dt must be positive and finite".into());
        }
        if self.perlin_cell_size == 0 || self.perlin_cell_size > self.size {
            return Err("perlin_cell_size must be in [1, size]".into());
        }
        Ok(())
    }
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self::gray_scott()
    }
}

/// Rollout settings that override the system's defaults field by field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutOverrides {
    pub size: Option<usize>,
    pub steps: Option<usize>,
    pub gray_scott_dt: Option<f64>,
    pub perlin_cell_size: Option<usize>,
    pub perlin_threshold: Option<f64>,
    pub kill_term: Option<KillTerm>,
    pub laplacian: Option<Laplacian>,
}

impl RolloutOverrides {
    pub fn apply(&self, mut base: RolloutConfig) -> RolloutConfig {
        if let Some(v) = self.size {
            base.size = v;
        }
        if let Some(v) = self.steps {
            base.steps = v;
        }
        if let Some(v) = self.gray_scott_dt {
            base.gray_scott_dt = v;
        }
        if let Some(v) = self.perlin_cell_size {
            base.perlin_cell_size = v;
        }
        if let Some(v) = self.perlin_threshold {
            base.perlin_threshold = v;
        }
        if let Some(v) = self.kill_term {
            base.kill_term = v;
        }
        if let Some(v) = self.laplacian {
            base.laplacian = v;
        }
        base
    }
}

/// A parameterized system the explorer can drive.
pub trait System<T: Scalar>: Send + Sync {
    fn kind(&self) -> SystemKind;

    fn param_space(&self) -> &ParamSpace<T>;

    fn config(&self) -> &RolloutConfig;

    /// Final state of a rollout from the initial state seeded by `init_seed`.
    fn rollout(&self, params: &[T], init_seed: u64) -> Result<Grid2D<T>>;

    /// Maps a final state to the observation image, values in `[0, 1]`.
    fn observe(&self, state: &Grid2D<T>) -> Grid2D<T>;

    /// Observation recorded for invalid rollouts (divergent or degenerate): constant 0.
    fn invalid_observation(&self) -> Grid2D<T> {
        let n = self.config().size;
        Grid2D::zeros(n, n)
    }
}

/// True iff the spread `max - min` over all cells is at most `tol`.
pub fn is_homogeneous<T: Scalar>(obs: &Grid2D<T>, tol: T) -> bool {
    let (lo, hi) = obs.min_max();
    hi - lo <= tol
}
