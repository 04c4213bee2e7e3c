//! Classification-augmented goal exploration of grid-based complex systems.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which every higher layer uses.

// `!(a <= b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod explorer;
pub mod export;
pub mod features;
pub mod grid;
pub mod metrics;
pub mod noise;
pub mod params;
pub mod scalar;
pub mod systems;

pub use error::{Error, Result};
pub use explorer::{
    classify, run_exploration, Constraint, Explorer, ExplorerConfig, Method, Mode, Origin,
    Progress, Roi, INLIER, OUTLIER,
};
pub use metrics::{BinningSpec, DiversityReport, DiversityTracker, EvalSpace};
pub use scalar::Scalar;
pub use systems::{KillTerm, Laplacian, RolloutConfig, RolloutOverrides, SystemKind};

pub type Grid = grid::Grid2D<f64>;
pub type ParamVector = params::ParamVector<f64>;
pub type ParamSpace = params::ParamSpace<f64>;
pub type BehaviorVector = features::BehaviorVector<f64>;
pub type ConstraintFeatures = features::ConstraintFeatures<f64>;
pub type EvalEmbedding = features::EvalEmbedding<f64>;
pub type History = explorer::History<f64>;
pub type HistoryEntry = explorer::HistoryEntry<f64>;
pub type HistoryRecord = export::HistoryRecord<f64>;
pub type GrayScott = systems::GrayScott<f64>;
pub type Lenia = systems::Lenia<f64>;
pub type DynSystem = std::sync::Arc<dyn systems::System<f64>>;

/// The default-configured system of the given kind.
pub fn system(kind: SystemKind, config: RolloutConfig) -> DynSystem {
    match kind {
        SystemKind::GrayScott => std::sync::Arc::new(GrayScott::new(config)),
        SystemKind::Lenia => std::sync::Arc::new(Lenia::new(config)),
    }
}
