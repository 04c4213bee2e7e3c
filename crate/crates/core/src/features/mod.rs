//! Behavior, constraint and evaluation features of observations.

pub mod haralick;
pub mod hu;
pub mod pca;
pub mod stats;
pub mod tamura;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::scalar::Scalar;

pub use haralick::haralick13;
pub use hu::{hu_invariants, hu_moments, signed_log};
pub use pca::Pca;
pub use stats::{standardize, StandardizationStats};
pub use tamura::{tamura_features, Tamura};

/// Pixel threshold of [`volume`].
pub const VOLUME_EPS: f64 = 1e-5;

/// Fraction of cells strictly above `eps`.
pub fn volume<T: Scalar>(obs: &Grid2D<T>, eps: T) -> T {
    if obs.is_empty() {
        return T::zero();
    }
    let count = obs.values().iter().filter(|&&v| v > eps).count();
    T::from_usize_lossy(count) / T::from_usize_lossy(obs.len())
}

pub fn mean_pixel<T: Scalar>(obs: &Grid2D<T>) -> T {
    obs.mean()
}

/// Point of the explorer's behavior space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorVector<T> {
    pub hu: [T; 7],
    pub mean_pixel: T,
    pub volume: T,
}

impl<T: Scalar> BehaviorVector<T> {
    pub const DIM: usize = 9;

    pub fn from_observation(obs: &Grid2D<T>) -> Self {
        Self {
            hu: hu_moments(obs),
            mean_pixel: mean_pixel(obs),
            volume: volume(obs, T::lit(VOLUME_EPS)),
        }
    }

    pub fn to_array(&self) -> [T; 9] {
        let h = self.hu;
        [
            h[0],
            h[1],
            h[2],
            h[3],
            h[4],
            h[5],
            h[6],
            self.mean_pixel,
            self.volume,
        ]
    }

    pub fn from_array(a: [T; 9]) -> Self {
        Self {
            hu: [a[0], a[1], a[2], a[3], a[4], a[5], a[6]],
            mean_pixel: a[7],
            volume: a[8],
        }
    }
}

/// Names accepted in ROI constraints, in field order.
pub const CONSTRAINT_FEATURE_NAMES: [&str; 5] = [
    "volume",
    "mean_pixel",
    "tamura_coarseness",
    "tamura_contrast",
    "tamura_directionality",
];

/// Features an ROI can constrain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintFeatures<T> {
    pub volume: T,
    pub mean_pixel: T,
    pub tamura_coarseness: T,
    pub tamura_contrast: T,
    pub tamura_directionality: T,
}

impl<T: Scalar> ConstraintFeatures<T> {
    pub fn from_observation(obs: &Grid2D<T>) -> Self {
        let t = tamura_features(obs);
        Self {
            volume: volume(obs, T::lit(VOLUME_EPS)),
            mean_pixel: mean_pixel(obs),
            tamura_coarseness: t.coarseness,
            tamura_contrast: t.contrast,
            tamura_directionality: t.directionality,
        }
    }

    pub fn get(&self, name: &str) -> Result<T> {
        match name {
            "volume" => Ok(self.volume),
            "mean_pixel" => Ok(self.mean_pixel),
            "tamura_coarseness" => Ok(self.tamura_coarseness),
            "tamura_contrast" => Ok(self.tamura_contrast),
            "tamura_directionality" => Ok(self.tamura_directionality),
            other => Err(Error::UnknownFeature(other.to_string())),
        }
    }

    pub fn to_array(&self) -> [T; 5] {
        [
            self.volume,
            self.mean_pixel,
            self.tamura_coarseness,
            self.tamura_contrast,
            self.tamura_directionality,
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Point of the 4-D evaluation space used for diversity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalEmbedding<T> {
    pub coords: [T; 4],
}

/// Everything the explorer extracts from one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationFeatures<T> {
    pub behavior: BehaviorVector<T>,
    pub constraints: ConstraintFeatures<T>,
}

impl<T: Scalar> ObservationFeatures<T> {
    pub fn extract(obs: &Grid2D<T>) -> Self {
        Self {
            behavior: BehaviorVector::from_observation(obs),
            constraints: ConstraintFeatures::from_observation(obs),
        }
    }
}
