//! Angles on `[0, 2π)` and basic circular statistics.

use crate::{Error, Result};

pub use std::f64::consts::TAU;

/// Mean resultant lengths below this are treated as zero: the mean direction
/// of a sample with a vanishing resultant is undefined.
pub const RESULTANT_EPS: f64 = 1e-12;

/// An angle in radians, guaranteed finite and in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    /// Wraps an arbitrary finite value into `[0, 2π)`.
    pub fn new(radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::NonFinite { context: "angle" });
        }
        let mut r = radians.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π when the input sits just
        // below a multiple of it; fold that (and any -0.0) back to 0.
        if r >= TAU || r == 0.0 {
            r = 0.0;
        }
        Ok(Angle(r))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn sin(self) -> f64 {
        self.0.sin()
    }

    pub fn cos(self) -> f64 {
        self.0.cos()
    }
}

impl std::fmt::Display for Angle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Wraps a value in radians into `[0, 2π)`.
///
/// Errors if the input is NaN or infinite.
pub fn wrap(radians: f64) -> Result<Angle> {
    Angle::new(radians)
}

/// Two-argument angle of the vector `(c, s)`, in `[0, 2π)`.
///
/// This is `atan(s/c)` corrected branch by branch so that the result is the
/// actual direction of `(c, s)` rather than a value in `(-π/2, π/2)`:
///
/// - first quadrant (`c > 0, s ≥ 0`): `atan(s/c)`;
/// - positive vertical axis (`c = 0, s > 0`): `π/2`;
/// - left half-plane (`c < 0`): `atan(s/c) + π`;
/// - fourth quadrant and negative vertical axis (`c ≥ 0, s < 0`):
///   `atan(s/c) + 2π` (the axis case falls out as `3π/2` via `s/0 = -∞`).
///
/// The zero vector has no direction and is rejected.  Scaling both arguments
/// by the same positive constant never changes the selected branch; the
/// returned value can still differ by ordinary floating-point rounding in
/// `s/c`.
pub fn atan_star(c: f64, s: f64) -> Result<Angle> {
    if !c.is_finite() || !s.is_finite() {
        return Err(Error::NonFinite {
            context: "atan_star argument",
        });
    }
    // Collapse -0.0 so the sign tests below see a single zero.
    let c = if c == 0.0 { 0.0 } else { c };
    let s = if s == 0.0 { 0.0 } else { s };
    if c == 0.0 && s == 0.0 {
        return Err(Error::UndefinedDirection);
    }
    let raw = if c > 0.0 && s >= 0.0 {
        (s / c).atan()
    } else if c == 0.0 && s > 0.0 {
        std::f64::consts::FRAC_PI_2
    } else if c < 0.0 {
        (s / c).atan() + std::f64::consts::PI
    } else {
        // c ≥ 0, s < 0; division by an exact zero gives -∞, atan gives -π/2.
        (s / c).atan() + TAU
    };
    Angle::new(raw)
}

/// Circular distance `d(α, β) = 1 - cos(α - β)`, in `[0, 2]`.
///
/// Zero iff the angles coincide; maximal for antipodal angles.
pub fn circ_dist(a: Angle, b: Angle) -> f64 {
    1.0 - (a.radians() - b.radians()).cos()
}

/// Sample summaries of a set of angles.
#[derive(Debug, Clone, Copy)]
pub struct CircularSummary {
    /// Direction of the sample resultant; `None` when the resultant length
    /// vanishes (perfectly balanced sample).
    pub mean_direction: Option<Angle>,
    /// Mean resultant length, in `[0, 1]`.
    pub mean_resultant_length: f64,
    /// Circular variance `1 - R̄`, in `[0, 1]`.
    pub circular_variance: f64,
}

/// Computes the mean direction, mean resultant length and circular variance
/// of a non-empty sample.
pub fn circ_summary(angles: &[Angle]) -> Result<CircularSummary> {
    if angles.is_empty() {
        return Err(Error::Empty {
            context: "circular summary",
        });
    }
    let n = angles.len() as f64;
    let c: f64 = angles.iter().map(|a| a.cos()).sum::<f64>() / n;
    let s: f64 = angles.iter().map(|a| a.sin()).sum::<f64>() / n;
    let r = (c * c + s * s).sqrt().min(1.0);
    let mean_direction = if r < RESULTANT_EPS {
        None
    } else {
        Some(atan_star(c, s)?)
    };
    Ok(CircularSummary {
        mean_direction,
        mean_resultant_length: r,
        circular_variance: 1.0 - r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn wrap_identity_on_range() {
        for &v in &[0.0, 1.0, 3.0, TAU - 1e-9] {
            assert_eq!(wrap(v).unwrap().radians(), v);
        }
    }

    #[test]
    fn wrap_folds_multiples() {
        assert_abs_diff_eq!(wrap(-0.5).unwrap().radians(), TAU - 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap(7.5).unwrap().radians(), 7.5 - TAU, epsilon = 1e-15);
        assert_eq!(wrap(TAU).unwrap().radians(), 0.0);
        assert_eq!(wrap(-TAU).unwrap().radians(), 0.0);
        // A value epsilon below a huge multiple of 2π must still land in range.
        let tricky = -1e-16;
        let w = wrap(tricky).unwrap().radians();
        assert!((0.0..TAU).contains(&w), "wrapped to {w}");
    }

    #[test]
    fn wrap_rejects_non_finite() {
        assert!(wrap(f64::NAN).is_err());
        assert!(wrap(f64::INFINITY).is_err());
    }

    #[test]
    fn atan_star_quadrants() {
        assert_abs_diff_eq!(atan_star(1.0, 0.0).unwrap().radians(), 0.0);
        assert_abs_diff_eq!(atan_star(1.0, 1.0).unwrap().radians(), PI / 4.0);
        assert_abs_diff_eq!(atan_star(0.0, 2.0).unwrap().radians(), FRAC_PI_2);
        assert_abs_diff_eq!(
            atan_star(-1.0, 1.0).unwrap().radians(),
            3.0 * PI / 4.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(atan_star(-1.0, 0.0).unwrap().radians(), PI);
        assert_abs_diff_eq!(
            atan_star(-1.0, -1.0).unwrap().radians(),
            5.0 * PI / 4.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            atan_star(0.0, -1.0).unwrap().radians(),
            3.0 * FRAC_PI_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            atan_star(1.0, -1.0).unwrap().radians(),
            7.0 * PI / 4.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn atan_star_negative_zero_components() {
        // -0.0 must behave exactly like +0.0 in the branch tests.
        assert_abs_diff_eq!(
            atan_star(-0.0, -1.0).unwrap().radians(),
            3.0 * FRAC_PI_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(atan_star(1.0, -0.0).unwrap().radians(), 0.0);
        assert!(atan_star(-0.0, 0.0).is_err());
    }

    #[test]
    fn atan_star_zero_vector_is_undefined() {
        assert!(matches!(
            atan_star(0.0, 0.0),
            Err(Error::UndefinedDirection)
        ));
    }

    #[test]
    fn atan_star_matches_atan2_up_to_wrap() {
        let mut v = -3.7_f64;
        while v < 4.0 {
            let mut w = -2.9_f64;
            while w < 3.0 {
                if v != 0.0 || w != 0.0 {
                    let got = atan_star(v, w).unwrap().radians();
                    let want = wrap(w.atan2(v)).unwrap().radians();
                    assert_relative_eq!(got, want, epsilon = 1e-12);
                }
                w += 0.37;
            }
            v += 0.53;
        }
    }

    #[test]
    fn circ_dist_basics() {
        let a = wrap(1.0).unwrap();
        assert_eq!(circ_dist(a, a), 0.0);
        let b = wrap(1.0 + PI).unwrap();
        assert_abs_diff_eq!(circ_dist(a, b), 2.0, epsilon = 1e-12);
        let c = wrap(0.1).unwrap();
        let d = wrap(TAU - 0.1).unwrap();
        // Neighbours across the cut are close.
        assert_abs_diff_eq!(circ_dist(c, d), 1.0 - (0.2_f64).cos(), epsilon = 1e-12);
    }

    #[test]
    fn summary_concentrated_sample() {
        let angles: Vec<Angle> = [1.0, 1.1, 0.9, 1.05]
            .iter()
            .map(|&v| wrap(v).unwrap())
            .collect();
        let s = circ_summary(&angles).unwrap();
        let m = s.mean_direction.unwrap().radians();
        assert_abs_diff_eq!(m, 1.0125, epsilon = 5e-3);
        assert!(s.mean_resultant_length > 0.99);
        assert!(s.circular_variance < 0.01);
    }

    #[test]
    fn summary_balanced_sample_has_no_direction() {
        let angles: Vec<Angle> = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2]
            .iter()
            .map(|&v| wrap(v).unwrap())
            .collect();
        let s = circ_summary(&angles).unwrap();
        assert!(s.mean_direction.is_none());
        assert!(s.circular_variance > 1.0 - 1e-9);
    }

    #[test]
    fn summary_straddling_the_cut() {
        let angles: Vec<Angle> = [0.1, TAU - 0.1, 0.05, TAU - 0.05]
            .iter()
            .map(|&v| wrap(v).unwrap())
            .collect();
        let s = circ_summary(&angles).unwrap();
        let m = s.mean_direction.unwrap().radians();
        // The mean is at the cut, not at π.
        assert!(m < 0.01 || m > TAU - 0.01, "mean direction {m}");
    }

    #[test]
    fn summary_empty_errors() {
        assert!(circ_summary(&[]).is_err());
    }
}
