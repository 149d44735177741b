//! Predictive draws at unobserved space-time points.

use crate::angle::{circ_summary, Angle};
use crate::covariance::SpaceTimePoint;
use crate::summary::shortest_arc;
use crate::{Error, Result};

/// Composition-sampling output at one target point: one predictive angle per
/// retained posterior draw, plus circular summaries.
#[derive(Debug, Clone)]
pub struct TargetPrediction {
    pub point: SpaceTimePoint,
    pub draws: Vec<Angle>,
    /// Circular mean of the draws; `None` for a perfectly balanced sample.
    pub mean_direction: Option<Angle>,
    /// Shortest arc containing the central 95% of the draws
    /// (counter-clockwise from start to end, possibly across the cut).
    pub arc_start: Angle,
    pub arc_end: Angle,
}

/// Predictions for a set of targets.
#[derive(Debug, Clone)]
pub struct PredictiveSamples {
    targets: Vec<TargetPrediction>,
}

impl PredictiveSamples {
    /// Builds predictions from per-target draw vectors, computing the
    /// summaries.  Every target needs at least one draw.
    pub fn from_target_draws(
        points: Vec<SpaceTimePoint>,
        draws: Vec<Vec<Angle>>,
    ) -> Result<Self> {
        if points.len() != draws.len() {
            return Err(Error::LengthMismatch {
                context: "prediction targets vs draw vectors",
                left: points.len(),
                right: draws.len(),
            });
        }
        let mut targets = Vec::with_capacity(points.len());
        for (point, d) in points.into_iter().zip(draws) {
            let s = circ_summary(&d)?;
            let (arc_start, arc_end) = shortest_arc(&d, 0.95)?;
            targets.push(TargetPrediction {
                point,
                draws: d,
                mean_direction: s.mean_direction,
                arc_start,
                arc_end,
            });
        }
        Ok(PredictiveSamples { targets })
    }

    pub fn targets(&self) -> &[TargetPrediction] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Mean direction per target; errors if any target's direction is
    /// undefined (vanishing resultant), since downstream scores need one.
    pub fn mean_directions(&self) -> Result<Vec<Angle>> {
        self.targets
            .iter()
            .enumerate()
            .map(|(i, t)| {
                t.mean_direction.ok_or_else(|| {
                    Error::config(format!(
                        "predictive mean direction undefined at target {i} (balanced draws)"
                    ))
                })
            })
            .collect()
    }
}
