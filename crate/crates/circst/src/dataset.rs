//! Observed angles tied to space-time coordinates.

use crate::angle::Angle;
use crate::covariance::SpaceTimePoint;
use crate::covariates::DesignInfo;
use crate::{Error, Result};

/// A set of circular observations over space-time points, optionally carrying
/// covariate/factor design information for the regression and factor-cell
/// model variants.
#[derive(Debug, Clone)]
pub struct Dataset {
    points: Vec<SpaceTimePoint>,
    angles: Vec<Angle>,
    design: Option<DesignInfo>,
}

impl Dataset {
    pub fn new(points: Vec<SpaceTimePoint>, angles: Vec<Angle>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty { context: "dataset" });
        }
        if points.len() != angles.len() {
            return Err(Error::LengthMismatch {
                context: "dataset points vs angles",
                left: points.len(),
                right: angles.len(),
            });
        }
        Ok(Dataset {
            points,
            angles,
            design: None,
        })
    }

    /// Attaches design information; its row count must match the dataset.
    pub fn with_design(mut self, design: DesignInfo) -> Result<Self> {
        if design.n_rows() != self.len() {
            return Err(Error::LengthMismatch {
                context: "design rows vs dataset",
                left: design.n_rows(),
                right: self.len(),
            });
        }
        self.design = Some(design);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SpaceTimePoint] {
        &self.points
    }

    pub fn angles(&self) -> &[Angle] {
        &self.angles
    }

    pub fn design(&self) -> Option<&DesignInfo> {
        self.design.as_ref()
    }

    /// The design, or a configuration error for variants that need one.
    pub fn require_design(&self) -> Result<&DesignInfo> {
        self.design
            .as_ref()
            .ok_or_else(|| Error::config("this model variant requires covariate/factor design columns"))
    }

    /// Sub-dataset at the given row indices (design carried along).
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        if idx.is_empty() {
            return Err(Error::Empty {
                context: "subset indices",
            });
        }
        for &i in idx {
            if i >= self.len() {
                return Err(Error::config(format!(
                    "subset index {i} out of range for dataset of size {}",
                    self.len()
                )));
            }
        }
        let points = idx.iter().map(|&i| self.points[i]).collect();
        let angles = idx.iter().map(|&i| self.angles[i]).collect();
        let mut out = Dataset::new(points, angles)?;
        if let Some(design) = &self.design {
            out = out.with_design(design.subset(idx))?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::wrap;

    #[test]
    fn length_mismatch_is_rejected() {
        let points = vec![SpaceTimePoint::new(0.0, 0.0, 0).unwrap()];
        let angles = vec![wrap(1.0).unwrap(), wrap(2.0).unwrap()];
        assert!(Dataset::new(points, angles).is_err());
    }

    #[test]
    fn subset_selects_rows() {
        let points: Vec<_> = (0..4)
            .map(|i| SpaceTimePoint::new(i as f64, 0.0, i).unwrap())
            .collect();
        let angles: Vec<_> = (0..4).map(|i| wrap(i as f64).unwrap()).collect();
        let ds = Dataset::new(points, angles).unwrap();
        let sub = ds.subset(&[2, 0]).unwrap();
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.points()[0].t, 2);
        assert_eq!(sub.angles()[1].radians(), 0.0);
        assert!(ds.subset(&[7]).is_err());
        assert!(ds.subset(&[]).is_err());
    }
}
