//! Wrapped-normal and projected-normal densities.

use crate::angle::{Angle, TAU};
use crate::{Error, Result};
use nalgebra::{Matrix2, Vector2};

/// Parameters of a wrapped normal distribution: the circular mean and the
/// variance of the underlying linear normal.
#[derive(Debug, Clone, Copy)]
pub struct WrappedNormalParams {
    mu: Angle,
    sigma2: f64,
}

impl WrappedNormalParams {
    pub fn new(mu: Angle, sigma2: f64) -> Result<Self> {
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::InvalidParam {
                name: "sigma2",
                value: sigma2,
                constraint: "sigma2 > 0 and finite",
            });
        }
        Ok(WrappedNormalParams { mu, sigma2 })
    }

    pub fn mu(&self) -> Angle {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// Parameters of a projected normal distribution on the circle: the angle of
/// a bivariate normal with mean `(mu1, mu2)` and covariance
/// `V = [[sigma2_1, ρ√sigma2_1], [ρ√sigma2_1, 1]]`.
///
/// The lower-right entry of `V` is pinned to 1; without that constraint the
/// angle distribution would be invariant to a common rescaling of the plane
/// and the parameters unidentifiable.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedParams {
    mu1: f64,
    mu2: f64,
    sigma2_1: f64,
    rho: f64,
}

impl ProjectedParams {
    pub fn new(mu1: f64, mu2: f64, sigma2_1: f64, rho: f64) -> Result<Self> {
        if !mu1.is_finite() || !mu2.is_finite() {
            return Err(Error::NonFinite {
                context: "projected normal mean",
            });
        }
        if !sigma2_1.is_finite() || sigma2_1 <= 0.0 {
            return Err(Error::InvalidParam {
                name: "sigma2_1",
                value: sigma2_1,
                constraint: "sigma2_1 > 0 and finite",
            });
        }
        if !rho.is_finite() || rho.abs() >= 1.0 {
            return Err(Error::InvalidParam {
                name: "rho",
                value: rho,
                constraint: "-1 < rho < 1",
            });
        }
        Ok(ProjectedParams {
            mu1,
            mu2,
            sigma2_1,
            rho,
        })
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn sigma2_1(&self) -> f64 {
        self.sigma2_1
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mean(&self) -> Vector2<f64> {
        Vector2::new(self.mu1, self.mu2)
    }

    /// The 2×2 covariance `V` (lower-right entry exactly 1).
    pub fn cov(&self) -> Matrix2<f64> {
        let off = self.rho * self.sigma2_1.sqrt();
        Matrix2::new(self.sigma2_1, off, off, 1.0)
    }
}

/// Wrapped normal density at `x`: the normal density summed over the
/// translates `x + 2πk` for `|k| ≤ k_max`.
pub fn wn_pdf(x: Angle, params: &WrappedNormalParams, k_max: u32) -> f64 {
    wn_log_pdf(x, params, k_max).exp()
}

/// Log of [`wn_pdf`], computed stably via log-sum-exp over the translates.
pub fn wn_log_pdf(x: Angle, params: &WrappedNormalParams, k_max: u32) -> f64 {
    assert!(k_max >= 1, "k_max must be at least 1");
    let sigma2 = params.sigma2();
    let d0 = x.radians() - params.mu().radians();
    let norm = -0.5 * (TAU * sigma2).ln();
    let k_max = k_max as i64;
    let mut terms = Vec::with_capacity((2 * k_max + 1) as usize);
    let mut max = f64::NEG_INFINITY;
    for k in -k_max..=k_max {
        let d = d0 + TAU * k as f64;
        let t = -0.5 * d * d / sigma2;
        if t > max {
            max = t;
        }
        terms.push(t);
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    norm + max + sum.ln()
}

/// Tail-mass threshold for the default truncation rule: translates are kept
/// until the normal mass beyond the last one drops under this.
pub const K_MAX_TAIL: f64 = 1e-8;

/// Smallest number of retained translates `k_max` such that the untruncated
/// tail `2Φ(-2π·k_max/σ)` is below [`K_MAX_TAIL`], floored at 3.
pub fn default_k_max(sigma2: f64) -> u32 {
    assert!(sigma2 > 0.0 && sigma2.is_finite());
    let sigma = sigma2.sqrt();
    let mut k = 3u32;
    // 2Φ(-x) = erfc(x/√2)
    while statrs::function::erf::erfc(TAU * k as f64 / sigma / std::f64::consts::SQRT_2)
        >= K_MAX_TAIL
    {
        k += 1;
        if k > 10_000 {
            break; // unreachable for any sane variance; avoid spinning
        }
    }
    k
}

/// Joint density of the angle and radius of a bivariate normal vector
/// expressed in polar coordinates: for `u = (cosθ, sinθ)`,
/// `(2π)^{-1} |V|^{-1/2} exp(-½ (ru - μ)ᵀ V^{-1} (ru - μ)) · r`.
///
/// Integrating out `r` over `(0, ∞)` leaves the projected normal density of
/// the angle alone.
pub fn pn_joint_pdf(theta: Angle, r: f64, params: &ProjectedParams) -> Result<f64> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidParam {
            name: "r",
            value: r,
            constraint: "r > 0 and finite",
        });
    }
    let det = params.sigma2_1() * (1.0 - params.rho() * params.rho());
    let d1 = r * theta.cos() - params.mu1();
    let d2 = r * theta.sin() - params.mu2();
    // V^{-1} = [[1, -ρ√σ²₁], [-ρ√σ²₁, σ²₁]] / det
    let off = params.rho() * params.sigma2_1().sqrt();
    let quad = (d1 * d1 - 2.0 * off * d1 * d2 + params.sigma2_1() * d2 * d2) / det;
    Ok((TAU * det.sqrt()).recip() * (-0.5 * quad).exp() * r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::wrap;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn wn_params_reject_bad_variance() {
        let mu = wrap(0.0).unwrap();
        assert!(WrappedNormalParams::new(mu, 0.0).is_err());
        assert!(WrappedNormalParams::new(mu, -1.0).is_err());
        assert!(WrappedNormalParams::new(mu, f64::NAN).is_err());
    }

    #[test]
    fn wn_pdf_symmetric_about_mean() {
        let p = WrappedNormalParams::new(wrap(2.0).unwrap(), 0.1).unwrap();
        for delta in [0.3, 0.7, 1.9] {
            let hi = wn_pdf(wrap(2.0 + delta).unwrap(), &p, 3);
            let lo = wn_pdf(wrap(2.0 - delta).unwrap(), &p, 3);
            assert_relative_eq!(hi, lo, epsilon = 1e-13);
        }
        // The peak sits at the mean.
        let peak = wn_pdf(p.mu(), &p, 3);
        assert!(peak > wn_pdf(wrap(2.3).unwrap(), &p, 3));
    }

    #[test]
    fn wn_pdf_tends_to_uniform_for_large_variance() {
        let p = WrappedNormalParams::new(wrap(1.0).unwrap(), 100.0).unwrap();
        let uniform = 1.0 / TAU;
        let mut x = 0.0;
        while x < TAU {
            let v = wn_pdf(wrap(x).unwrap(), &p, 20);
            assert!((v - uniform).abs() < 1e-4, "x={x}: {v} vs {uniform}");
            x += 0.1;
        }
    }

    #[test]
    fn wn_pdf_truncation_tail_bound() {
        // Adding one more translate moves the value by less than the
        // residual normal tail beyond the kept ones.
        let p = WrappedNormalParams::new(wrap(3.0).unwrap(), 4.0).unwrap();
        let sigma = 2.0;
        for x in [0.0, 1.5, 4.0] {
            let a = wrap(x).unwrap();
            let v1 = wn_pdf(a, &p, 4);
            let v2 = wn_pdf(a, &p, 5);
            let slack = (TAU * 4.0 - (x - 3.0_f64).abs()) / sigma;
            let bound = statrs::function::erf::erfc(slack / std::f64::consts::SQRT_2);
            assert!((v2 - v1).abs() <= bound + 1e-300);
        }
    }

    #[test]
    fn wn_log_pdf_matches_pdf_and_survives_tiny_variance() {
        let p = WrappedNormalParams::new(wrap(0.0).unwrap(), 1e-4).unwrap();
        let x = wrap(PI).unwrap();
        let lp = wn_log_pdf(x, &p, 3);
        // The direct sum underflows to zero here; the log form must not.
        assert!(lp.is_finite() && lp < -1e4);
        let q = WrappedNormalParams::new(wrap(1.0).unwrap(), 0.5).unwrap();
        let y = wrap(1.7).unwrap();
        assert_relative_eq!(wn_log_pdf(y, &q, 5).exp(), wn_pdf(y, &q, 5), epsilon = 1e-13);
    }

    #[test]
    fn default_k_max_policy() {
        // Tiny variance: floor of 3 applies.
        assert_eq!(default_k_max(0.01), 3);
        assert_eq!(default_k_max(1.0), 3);
        // σ = 10: need 2Φ(-2πk/10) < 1e-8, i.e. 2πk/10 > 5.73 → k ≥ 10.
        let k = default_k_max(100.0);
        assert!(k >= 10 && k <= 11, "k = {k}");
        let thr = |k: u32| statrs::function::erf::erfc(TAU * k as f64 / 10.0 / 2f64.sqrt());
        assert!(thr(k) < K_MAX_TAIL);
        assert!(thr(k - 1) >= K_MAX_TAIL);
    }

    #[test]
    fn pn_params_validation() {
        assert!(ProjectedParams::new(0.0, 0.0, 1.0, 0.0).is_ok());
        assert!(ProjectedParams::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(ProjectedParams::new(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(ProjectedParams::new(f64::NAN, 0.0, 1.0, 0.0).is_err());
        let v = ProjectedParams::new(1.0, 2.0, 3.0, 0.5).unwrap().cov();
        assert_eq!(v[(1, 1)], 1.0);
        assert_eq!(v[(0, 1)], v[(1, 0)]);
    }

    #[test]
    fn pn_joint_pdf_isotropic_at_zero_mean() {
        let p = ProjectedParams::new(0.0, 0.0, 1.0, 0.0).unwrap();
        let r = 1.3_f64;
        let expect = (TAU).recip() * (-0.5 * r * r).exp() * r;
        for th in [0.0, 1.0, 2.5, 4.0, 6.0] {
            let v = pn_joint_pdf(wrap(th).unwrap(), r, &p).unwrap();
            assert_relative_eq!(v, expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn pn_joint_pdf_rejects_nonpositive_radius() {
        let p = ProjectedParams::new(0.0, 0.0, 1.0, 0.0).unwrap();
        assert!(pn_joint_pdf(wrap(0.0).unwrap(), 0.0, &p).is_err());
        assert!(pn_joint_pdf(wrap(0.0).unwrap(), -1.0, &p).is_err());
    }

    #[test]
    fn pn_joint_pdf_matches_cartesian_normal() {
        // f(θ, r) must equal the bivariate normal density at
        // (r cosθ, r sinθ) times the polar Jacobian r.
        let p = ProjectedParams::new(1.2, -0.4, 2.0, 0.6).unwrap();
        let (th, r) = (2.2_f64, 1.7_f64);
        let z1 = r * th.cos();
        let z2 = r * th.sin();
        let v = p.cov();
        let det = v[(0, 0)] * v[(1, 1)] - v[(0, 1)] * v[(1, 0)];
        let inv = Matrix2::new(v[(1, 1)], -v[(0, 1)], -v[(1, 0)], v[(0, 0)]) / det;
        let d = Vector2::new(z1 - p.mu1(), z2 - p.mu2());
        let dens = (TAU * det.sqrt()).recip() * (-0.5 * (inv * d).dot(&d)).exp();
        let got = pn_joint_pdf(wrap(th).unwrap(), r, &p).unwrap();
        assert_relative_eq!(got, dens * r, epsilon = 1e-13);
    }
}
