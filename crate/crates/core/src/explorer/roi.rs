//! Regions of interest over constraint features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ConstraintFeatures, CONSTRAINT_FEATURE_NAMES};
use crate::scalar::Scalar;

pub const INLIER: i8 = 1;
pub const OUTLIER: i8 = -1;

/// Closed interval `[lo, hi]` on one named constraint feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub feature: String,
    pub lo: f64,
    pub hi: f64,
}

impl Constraint {
    pub fn new(feature: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self {
            feature: feature.into(),
            lo,
            hi,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Conjunction of closed intervals. The empty ROI accepts everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub constraints: Vec<Constraint>,
}

impl Roi {
    pub fn new(constraints: Vec<Constraint>) -> Result<Self> {
        let roi = Self { constraints };
        roi.validate()?;
        Ok(roi)
    }

    pub fn unconstrained() -> Self {
        Self::default()
    }

    /// The single-interval ROI on `volume`.
    pub fn volume(lo: f64, hi: f64) -> Self {
        Self {
            constraints: vec![Constraint::new("volume", lo, hi)],
        }
    }

    /// Feature names must be known and intervals non-empty.
    pub fn validate(&self) -> Result<()> {
        for c in &self.constraints {
            if !CONSTRAINT_FEATURE_NAMES.contains(&c.feature.as_str()) {
                return Err(Error::UnknownFeature(c.feature.clone()));
            }
            if !(c.lo <= c.hi) {
                return Err(Error::EmptyInterval {
                    feature: c.feature.clone(),
                    lo: c.lo,
                    hi: c.hi,
                });
            }
        }
        Ok(())
    }
}

/// `+1` iff every constraint interval contains its feature value, else `-1`.
pub fn classify<T: Scalar>(features: &ConstraintFeatures<T>, roi: &Roi) -> Result<i8> {
    let mut inside = true;
    for c in &roi.constraints {
        let v = features.get(&c.feature)?.as_f64();
        inside &= c.contains(v);
    }
    Ok(if inside { INLIER } else { OUTLIER })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_volume(v: f64) -> ConstraintFeatures<f64> {
        ConstraintFeatures {
            volume: v,
            mean_pixel: 0.3,
            tamura_coarseness: 4.0,
            tamura_contrast: 0.2,
            tamura_directionality: 0.5,
        }
    }

    #[test]
    fn volume_roi() {
        let roi = Roi::volume(0.6, 0.7);
        assert_eq!(classify(&with_volume(0.65), &roi).unwrap(), INLIER);
        assert_eq!(classify(&with_volume(0.5), &roi).unwrap(), OUTLIER);
        assert_eq!(classify(&with_volume(0.6), &roi).unwrap(), INLIER);
        assert_eq!(classify(&with_volume(0.7), &roi).unwrap(), INLIER);
        assert_eq!(classify(&with_volume(f64::NAN), &roi).unwrap(), OUTLIER);
    }

    #[test]
    fn empty_roi_accepts_all() {
        assert_eq!(
            classify(&with_volume(0.0), &Roi::unconstrained()).unwrap(),
            INLIER
        );
    }

    #[test]
    fn conjunction() {
        let roi = Roi::new(vec![
            Constraint::new("volume", 0.6, 0.7),
            Constraint::new("mean_pixel", 0.0, 0.2),
        ])
        .unwrap();
        assert_eq!(classify(&with_volume(0.65), &roi).unwrap(), OUTLIER);
    }

    #[test]
    fn unknown_feature() {
        let roi = Roi {
            constraints: vec![Constraint::new("area", 0.0, 1.0)],
        };
        assert!(matches!(
            classify(&with_volume(0.5), &roi),
            Err(Error::UnknownFeature(_))
        ));
        assert!(matches!(roi.validate(), Err(Error::UnknownFeature(_))));
    }

    #[test]
    fn empty_interval_rejected() {
        let err = Roi::new(vec![Constraint::new("volume", 0.7, 0.6)]).unwrap_err();
        assert!(matches!(err, Error::EmptyInterval { .. }));
        assert!(Roi::new(vec![Constraint::new("volume", f64::NAN, 0.6)]).is_err());
    }
}
