//! Bounded parameter spaces and parameter vectors.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One named, bounded parameter with its Gaussian mutation scale (raw units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDim<T> {
    pub name: String,
    pub lo: T,
    pub hi: T,
    pub sigma: T,
}

/// The parameter space of a system: an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace<T> {
    dims: Vec<ParamDim<T>>,
}

/// A point of a [`ParamSpace`]. Values are kept inside the bounds by every
/// constructor in this module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector<T> {
    pub values: Vec<T>,
}

impl<T: Scalar> ParamSpace<T> {
    pub fn new(dims: Vec<ParamDim<T>>) -> Result<Self> {
        for d in &dims {
            if !(d.lo <= d.hi) || !d.lo.is_finite() || !d.hi.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "parameter `{}` has bounds [{}, {}]",
                    d.name, d.lo, d.hi
                )));
            }
            if !(d.sigma >= T::zero()) {
                return Err(Error::InvalidConfig(format!(
                    "parameter `{}` has negative mutation scale",
                    d.name
                )));
            }
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[ParamDim<T>] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.dims.iter().map(|d| d.name.as_str())
    }

    pub fn sigmas(&self) -> Vec<T> {
        self.dims.iter().map(|d| d.sigma).collect()
    }

    pub fn contains(&self, p: &ParamVector<T>) -> bool {
        p.values.len() == self.dims.len()
            && p.values
                .iter()
                .zip(&self.dims)
                .all(|(&v, d)| d.lo <= v && v <= d.hi)
    }

    /// Clamps arbitrary values into the box.
    pub fn clamp(&self, values: Vec<T>) -> ParamVector<T> {
        ParamVector {
            values: values
                .into_iter()
                .zip(&self.dims)
                .map(|(v, d)| v.max(d.lo).min(d.hi))
                .collect(),
        }
    }

    /// Uniform draw over the box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector<T> {
        ParamVector {
            values: self
                .dims
                .iter()
                .map(|d| {
                    let u: f64 = rng.random();
                    let v = d.lo + (d.hi - d.lo) * T::lit(u);
                    v.min(d.hi)
                })
                .collect(),
        }
    }

    /// Gaussian mutation with the space's own scales.
    pub fn mutate<R: Rng + ?Sized>(&self, params: &ParamVector<T>, rng: &mut R) -> ParamVector<T> {
        mutate(self, params, &self.sigmas(), rng)
    }
}

/// `value' = clip(value + N(0, sigma_d), lo_d, hi_d)` per dimension, sigma in raw units.
///
/// One normal draw is consumed per dimension even when its sigma is zero, so
/// the random stream does not depend on the sigmas.
pub fn mutate<T: Scalar, R: Rng + ?Sized>(
    space: &ParamSpace<T>,
    params: &ParamVector<T>,
    sigmas: &[T],
    rng: &mut R,
) -> ParamVector<T> {
    assert_eq!(params.values.len(), space.len());
    assert_eq!(sigmas.len(), space.len());
    let values = params
        .values
        .iter()
        .zip(sigmas)
        .map(|(&v, &s)| {
            let z: f64 = StandardNormal.sample(rng);
            v + s * T::lit(z)
        })
        .collect();
    space.clamp(values)
}

impl<T: Scalar> ParamVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
