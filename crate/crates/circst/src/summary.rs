//! Posterior point estimates and 95% intervals.

use crate::angle::{circ_summary, Angle, TAU};
use crate::{Error, Result};

/// Point estimate plus interval for one parameter.
#[derive(Debug, Clone)]
pub enum Estimate {
    /// Posterior mean with an equal-tailed interval.
    Linear { mean: f64, lower: f64, upper: f64 },
    /// Circular mean direction with the shortest arc containing the target
    /// mass.  The arc runs counter-clockwise from `arc_start` to `arc_end`
    /// and may straddle the 0/2π cut (then `arc_start > arc_end` as numbers).
    Circular {
        mean_direction: Option<Angle>,
        arc_start: Angle,
        arc_end: Angle,
    },
}

/// Named summary row, as printed in the result tables.
#[derive(Debug, Clone)]
pub struct ParamSummary {
    pub name: String,
    pub estimate: Estimate,
}

/// Equal-tailed interval at the given level, by linear interpolation of the
/// order statistics.
pub fn equal_tailed(draws: &[f64], level: f64) -> Result<(f64, f64)> {
    if draws.is_empty() {
        return Err(Error::Empty {
            context: "interval draws",
        });
    }
    assert!((0.0..1.0).contains(&(1.0 - level)) && level > 0.0);
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN draws"));
    let tail = (1.0 - level) / 2.0;
    Ok((quantile(&sorted, tail), quantile(&sorted, 1.0 - tail)))
}

/// Interpolated quantile of an already-sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Shortest arc containing at least `⌈coverage·L⌉` of the draws.
///
/// Draws are sorted around the circle; every window of the required count is
/// scanned (wrapping across the cut) and the narrowest one wins.
pub fn shortest_arc(draws: &[Angle], coverage: f64) -> Result<(Angle, Angle)> {
    if draws.is_empty() {
        return Err(Error::Empty {
            context: "arc draws",
        });
    }
    assert!(coverage > 0.0 && coverage <= 1.0);
    let mut sorted: Vec<f64> = draws.iter().map(|a| a.radians()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("angles are finite"));
    let l = sorted.len();
    let m = ((coverage * l as f64).ceil() as usize).clamp(1, l);
    let mut best_width = f64::INFINITY;
    let mut best_start = 0;
    for i in 0..l {
        let j = (i + m - 1) % l;
        let mut width = sorted[j] - sorted[i];
        if j < i {
            width += TAU;
        }
        if width < best_width {
            best_width = width;
            best_start = i;
        }
    }
    let end = (best_start + m - 1) % l;
    Ok((
        Angle::new(sorted[best_start]).expect("sorted angle is finite"),
        Angle::new(sorted[end]).expect("sorted angle is finite"),
    ))
}

/// Mean + equal-tailed 95% interval row.
pub fn summarize_linear(name: impl Into<String>, draws: &[f64]) -> Result<ParamSummary> {
    if draws.is_empty() {
        return Err(Error::Empty {
            context: "summary draws",
        });
    }
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let (lower, upper) = equal_tailed(draws, 0.95)?;
    Ok(ParamSummary {
        name: name.into(),
        estimate: Estimate::Linear { mean, lower, upper },
    })
}

/// Circular mean direction + shortest 95% arc row.
pub fn summarize_circular(name: impl Into<String>, draws: &[Angle]) -> Result<ParamSummary> {
    let s = circ_summary(draws)?;
    let (arc_start, arc_end) = shortest_arc(draws, 0.95)?;
    Ok(ParamSummary {
        name: name.into(),
        estimate: Estimate::Circular {
            mean_direction: s.mean_direction,
            arc_start,
            arc_end,
        },
    })
}
