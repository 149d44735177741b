//! Verification scores for circular forecasts: the average prediction error
//! under the cosine distance, and a Monte Carlo continuous ranked probability
//! score built from predictive draws.

use crate::angle::{circ_dist, Angle};
use crate::predict::PredictiveSamples;
use crate::{Error, Result};

/// Draw budget for the quadratic CRPS sum; longer chains are systematically
/// thinned to this size before scoring.
pub const CRPS_MAX_DRAWS: usize = 2000;

/// Mean circular distance `1 - cos` between point predictions and holdout
/// angles.  Lives in `[0, 2]`.
pub fn ape(predictions: &[Angle], holdout: &[Angle]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::Empty {
            context: "predictions",
        });
    }
    if predictions.len() != holdout.len() {
        return Err(Error::LengthMismatch {
            context: "predictions vs holdout",
            left: predictions.len(),
            right: holdout.len(),
        });
    }
    let sum: f64 = predictions
        .iter()
        .zip(holdout)
        .map(|(p, h)| circ_dist(*p, *h))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Every `len/max`-th element when over budget, the whole slice otherwise.
fn systematic_subsample(draws: &[Angle], max: usize) -> Vec<Angle> {
    let l = draws.len();
    if l <= max {
        return draws.to_vec();
    }
    (0..max).map(|i| draws[i * l / max]).collect()
}

/// Monte Carlo CRPS of one predictive sample against one holdout angle:
/// mean distance to the holdout minus half the mean pairwise distance among
/// draws.  The pairwise double sum is exact (diagonal terms included, where
/// they contribute zero) and quadratic in the number of draws, so samples
/// beyond [`CRPS_MAX_DRAWS`] are systematically thinned first.
pub fn crps_mc(draws: &[Angle], holdout: Angle) -> Result<f64> {
    if draws.len() < 2 {
        return Err(Error::ChainTooShort {
            len: draws.len(),
            min: 2,
        });
    }
    let draws = systematic_subsample(draws, CRPS_MAX_DRAWS);
    let l = draws.len();
    let first: f64 = draws.iter().map(|d| circ_dist(*d, holdout)).sum::<f64>() / l as f64;
    let mut pair = 0.0;
    for i in 0..l {
        for j in (i + 1)..l {
            pair += circ_dist(draws[i], draws[j]);
        }
    }
    // Off-diagonal pairs counted once above; the full double sum is twice
    // that, and the diagonal adds nothing.
    let second = pair / (l * l) as f64;
    Ok(first - second)
}

/// Scores of one forecast window.
#[derive(Debug, Clone)]
pub struct WindowScores {
    pub window: String,
    /// Per-target CRPS, in target order.
    pub crps: Vec<f64>,
    /// Per-target circular distance of the predictive mean direction.
    pub dist: Vec<f64>,
    pub mean_crps: f64,
    pub mean_ape: f64,
}

/// Scores across forecast windows.  The headline numbers average the
/// window means with equal weight; the pooled values weight every target
/// equally instead (they differ when window sizes differ).
#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub windows: Vec<WindowScores>,
    pub mean_crps: f64,
    pub mean_ape: f64,
    pub pooled_crps: f64,
    pub pooled_ape: f64,
}

/// Scores predictive samples against holdout angles, window by window.
/// Every prediction window must have a same-named holdout window with one
/// angle per target, and vice versa.
pub fn score_windows(
    predictions: &[(String, PredictiveSamples)],
    holdouts: &[(String, Vec<Angle>)],
) -> Result<ScoreReport> {
    if predictions.is_empty() {
        return Err(Error::Empty {
            context: "prediction windows",
        });
    }
    for (key, _) in holdouts {
        if !predictions.iter().any(|(k, _)| k == key) {
            return Err(Error::config(format!(
                "holdout window '{key}' has no matching predictions"
            )));
        }
    }
    let mut windows = Vec::with_capacity(predictions.len());
    let mut pooled_crps_sum = 0.0;
    let mut pooled_dist_sum = 0.0;
    let mut pooled_n = 0usize;
    for (key, samples) in predictions {
        let holdout = holdouts
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, h)| h)
            .ok_or_else(|| {
                Error::config(format!("no holdout angles for prediction window '{key}'"))
            })?;
        if holdout.len() != samples.len() {
            return Err(Error::LengthMismatch {
                context: "window holdouts vs targets",
                left: holdout.len(),
                right: samples.len(),
            });
        }
        let mut crps = Vec::with_capacity(samples.len());
        let mut dist = Vec::with_capacity(samples.len());
        for (target, h) in samples.targets().iter().zip(holdout) {
            crps.push(crps_mc(&target.draws, *h)?);
            let dir = target.mean_direction.ok_or(Error::UndefinedDirection)?;
            dist.push(circ_dist(dir, *h));
        }
        let mean_crps = crps.iter().sum::<f64>() / crps.len() as f64;
        let mean_ape = dist.iter().sum::<f64>() / dist.len() as f64;
        pooled_crps_sum += crps.iter().sum::<f64>();
        pooled_dist_sum += dist.iter().sum::<f64>();
        pooled_n += crps.len();
        windows.push(WindowScores {
            window: key.clone(),
            crps,
            dist,
            mean_crps,
            mean_ape,
        });
    }
    let k = windows.len() as f64;
    Ok(ScoreReport {
        mean_crps: windows.iter().map(|w| w.mean_crps).sum::<f64>() / k,
        mean_ape: windows.iter().map(|w| w.mean_ape).sum::<f64>() / k,
        pooled_crps: pooled_crps_sum / pooled_n as f64,
        pooled_ape: pooled_dist_sum / pooled_n as f64,
        windows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::wrap;
    use crate::covariance::SpaceTimePoint;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn a(x: f64) -> Angle {
        wrap(x).unwrap()
    }

    #[test]
    fn ape_basics() {
        let h = vec![a(0.3), a(1.0)];
        assert_abs_diff_eq!(ape(&h, &h).unwrap(), 0.0);
        let anti: Vec<Angle> = h.iter().map(|x| a(x.radians() + PI)).collect();
        assert_abs_diff_eq!(ape(&anti, &h).unwrap(), 2.0, epsilon = 1e-14);
        // Errors of (π/2, π): distances 1 and 2, mean 1.5.
        let off = vec![a(0.3 + FRAC_PI_2), a(1.0 + PI)];
        assert_abs_diff_eq!(ape(&off, &h).unwrap(), 1.5, epsilon = 1e-14);
        assert!(ape(&h[..1], &h).is_err());
        assert!(ape(&[], &[]).is_err());
    }

    #[test]
    fn crps_hand_values() {
        let theta = a(0.7);
        assert_abs_diff_eq!(crps_mc(&[theta, theta], theta).unwrap(), 0.0);
        // Draws {θ, θ+π}: first term (0+2)/2 = 1, pairwise term 0.5.
        let spread = [theta, a(0.7 + PI)];
        assert_abs_diff_eq!(crps_mc(&spread, theta).unwrap(), 0.5, epsilon = 1e-14);
        // Point mass at the antipode: maximal miss, no spread.
        let miss = [a(0.7 + PI), a(0.7 + PI)];
        assert_abs_diff_eq!(crps_mc(&miss, theta).unwrap(), 2.0, epsilon = 1e-14);
        assert!(crps_mc(&[theta], theta).is_err());
    }

    #[test]
    fn crps_point_mass_equals_distance() {
        let target = a(1.2);
        let point = a(2.9);
        let draws = vec![point; 50];
        assert_abs_diff_eq!(
            crps_mc(&draws, target).unwrap(),
            circ_dist(point, target),
            epsilon = 1e-14
        );
    }

    #[test]
    fn crps_rotation_invariance() {
        let draws: Vec<Angle> = (0..40).map(|i| a(0.17 * i as f64)).collect();
        let target = a(2.0);
        let base = crps_mc(&draws, target).unwrap();
        for delta in [0.3, 2.5, 5.9] {
            let rd: Vec<Angle> = draws.iter().map(|d| a(d.radians() + delta)).collect();
            let rt = a(2.0 + delta);
            assert_abs_diff_eq!(crps_mc(&rd, rt).unwrap(), base, epsilon = 1e-12);
        }
    }

    #[test]
    fn oversized_samples_are_systematically_thinned() {
        let draws: Vec<Angle> = (0..5000).map(|i| a(i as f64 * 0.001)).collect();
        let target = a(1.0);
        let thinned: Vec<Angle> = (0..CRPS_MAX_DRAWS)
            .map(|i| draws[i * draws.len() / CRPS_MAX_DRAWS])
            .collect();
        assert_abs_diff_eq!(
            crps_mc(&draws, target).unwrap(),
            crps_mc(&thinned, target).unwrap(),
            epsilon = 1e-14
        );
    }

    fn samples_from(draws: Vec<Vec<Angle>>) -> PredictiveSamples {
        let points: Vec<SpaceTimePoint> = (0..draws.len())
            .map(|i| SpaceTimePoint::new(i as f64, 0.0, 0).unwrap())
            .collect();
        PredictiveSamples::from_target_draws(points, draws).unwrap()
    }

    #[test]
    fn window_grand_mean_averages_window_means() {
        // Two windows of different sizes: the headline mean weights windows
        // equally; the pooled mean weights targets equally.
        let w1 = samples_from(vec![vec![a(0.0), a(0.0)]]); // 1 target
        let w2 = samples_from(vec![
            vec![a(PI), a(PI)],
            vec![a(PI), a(PI)],
            vec![a(PI), a(PI)],
        ]); // 3 targets
        let preds = vec![("w1".to_string(), w1), ("w2".to_string(), w2)];
        let holds = vec![
            ("w1".to_string(), vec![a(0.0)]),
            ("w2".to_string(), vec![a(0.0), a(0.0), a(0.0)]),
        ];
        let report = score_windows(&preds, &holds).unwrap();
        // Window APEs are 0 and 2: grand mean 1, pooled (0 + 3·2)/4 = 1.5.
        assert_abs_diff_eq!(report.mean_ape, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(report.pooled_ape, 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(report.mean_crps, 1.0, epsilon = 1e-14);
        assert_eq!(report.windows.len(), 2);
        assert_eq!(report.windows[1].crps.len(), 3);
    }

    #[test]
    fn missing_windows_are_refused() {
        let w1 = samples_from(vec![vec![a(0.0), a(0.1)]]);
        let preds = vec![("w1".to_string(), w1)];
        let holds = vec![("w2".to_string(), vec![a(0.0)])];
        let err = score_windows(&preds, &holds).unwrap_err();
        assert!(err.to_string().contains("w2"), "{err}");
    }
}
