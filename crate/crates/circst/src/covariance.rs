//! Non-separable space-time correlation and covariance assembly.

use crate::linalg::SpdFactor;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// A planar location (km) observed at an integer time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    pub x: f64,
    pub y: f64,
    pub t: u32,
}

impl SpaceTimePoint {
    pub fn new(x: f64, y: f64, t: u32) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite {
                context: "space-time coordinates",
            });
        }
        Ok(SpaceTimePoint { x, y, t })
    }

    /// Euclidean distance in km.
    pub fn spatial_distance(&self, other: &SpaceTimePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Signed time lag in steps.
    pub fn time_lag(&self, other: &SpaceTimePoint) -> f64 {
        self.t as f64 - other.t as f64
    }
}

/// Parameters of the non-separable space-time correlation
/// `ρ(h,u) = (a|u|^{2α}+1)^{-τ} · exp(-c·h^{2γ} / (a|u|^{2α}+1)^{βγ})`.
///
/// `a` and `c` scale time and space, `α` and `γ` are smoothness exponents,
/// and `β` couples the two domains: at `β = 0` the function factorizes into a
/// purely temporal and a purely spatial part.  `τ` is fixed at 1 and never
/// inferred.
#[derive(Debug, Clone, Copy)]
pub struct GneitingParams {
    a: f64,
    c: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    tau: f64,
}

impl GneitingParams {
    pub fn new(a: f64, c: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::with_tau(a, c, alpha, beta, gamma, 1.0)
    }

    pub fn with_tau(a: f64, c: f64, alpha: f64, beta: f64, gamma: f64, tau: f64) -> Result<Self> {
        fn check(name: &'static str, value: f64, ok: bool, constraint: &'static str) -> Result<()> {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(Error::InvalidParam {
                    name,
                    value,
                    constraint,
                })
            }
        }
        check("a", a, a >= 0.0, "a >= 0")?;
        check("c", c, c >= 0.0, "c >= 0")?;
        check("alpha", alpha, alpha > 0.0 && alpha <= 1.0, "0 < alpha <= 1")?;
        check("gamma", gamma, gamma > 0.0 && gamma <= 1.0, "0 < gamma <= 1")?;
        check("beta", beta, (0.0..=1.0).contains(&beta), "0 <= beta <= 1")?;
        check("tau", tau, tau >= 1.0, "tau >= 1")?;
        Ok(GneitingParams {
            a,
            c,
            alpha,
            beta,
            gamma,
            tau,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Space-time correlation at spatial distance `h_norm` (km, non-negative)
/// and time lag `u` (steps, sign irrelevant).
pub fn gneiting_corr(h_norm: f64, u: f64, params: &GneitingParams) -> f64 {
    debug_assert!(h_norm >= 0.0);
    let tfac = params.a * u.abs().powf(2.0 * params.alpha) + 1.0;
    tfac.powf(-params.tau)
        * (-params.c * h_norm.powf(2.0 * params.gamma) / tfac.powf(params.beta * params.gamma))
            .exp()
}

/// Diagonal pure-error variance: one shared value or one per observation.
#[derive(Debug, Clone)]
pub enum Nugget {
    Scalar(f64),
    PerPoint(Vec<f64>),
}

impl Nugget {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            Nugget::Scalar(v) => {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::InvalidParam {
                        name: "nugget",
                        value: *v,
                        constraint: "nugget >= 0 and finite",
                    });
                }
            }
            Nugget::PerPoint(vs) => {
                if vs.len() != n {
                    return Err(Error::LengthMismatch {
                        context: "per-point nugget",
                        left: vs.len(),
                        right: n,
                    });
                }
                for &v in vs {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::InvalidParam {
                            name: "nugget",
                            value: v,
                            constraint: "nugget >= 0 and finite",
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn at(&self, i: usize) -> f64 {
        match self {
            Nugget::Scalar(v) => *v,
            Nugget::PerPoint(vs) => vs[i],
        }
    }
}

/// Pairwise lag table for a fixed point set, cached across the many
/// correlation-matrix rebuilds of an MCMC run.
///
/// Stores `ln h` per pair (so `h^{2γ}` becomes one `exp`) and deduplicated
/// absolute time lags (gridded data has very few distinct lags, so the
/// temporal factors are computed once per distinct lag per rebuild).
pub struct LagTable {
    n: usize,
    /// `ln ‖sᵢ−sⱼ‖` for i < j, row-major upper triangle; `-∞` encodes h = 0.
    ln_h: Vec<f64>,
    /// Index into `u_values` for i < j, same layout.
    u_idx: Vec<u32>,
    /// Distinct absolute time lags.
    u_values: Vec<f64>,
}

impl LagTable {
    pub fn new(points: &[SpaceTimePoint]) -> LagTable {
        let n = points.len();
        let mut ln_h = Vec::with_capacity(n * (n - 1) / 2);
        let mut u_idx = Vec::with_capacity(n * (n - 1) / 2);
        let mut u_values: Vec<f64> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                ln_h.push(points[i].spatial_distance(&points[j]).ln());
                let u = points[i].time_lag(&points[j]).abs();
                let idx = match u_values.iter().position(|&v| v == u) {
                    Some(k) => k,
                    None => {
                        u_values.push(u);
                        u_values.len() - 1
                    }
                };
                u_idx.push(idx as u32);
            }
        }
        LagTable {
            n,
            ln_h,
            u_idx,
            u_values,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Writes the full correlation matrix for `params` into `out`.
    pub fn fill_corr(&self, params: &GneitingParams, out: &mut DMatrix<f64>) {
        assert_eq!(out.nrows(), self.n);
        assert_eq!(out.ncols(), self.n);
        let two_gamma = 2.0 * params.gamma;
        // Per distinct |u|: the temporal factor and the scaled spatial decay
        // rate c / (a|u|^{2α}+1)^{βγ}.
        let mut tfac = Vec::with_capacity(self.u_values.len());
        let mut srate = Vec::with_capacity(self.u_values.len());
        for &u in &self.u_values {
            let t = params.a * u.powf(2.0 * params.alpha) + 1.0;
            tfac.push(t.powf(-params.tau));
            srate.push(params.c * t.powf(-params.beta * params.gamma));
        }
        let mut k = 0;
        for i in 0..self.n {
            out[(i, i)] = 1.0;
            for j in (i + 1)..self.n {
                let ui = self.u_idx[k] as usize;
                // exp(2γ·ln h) = h^{2γ}; ln h = -∞ gives exactly 0 for h = 0.
                let h2g = (two_gamma * self.ln_h[k]).exp();
                let v = tfac[ui] * (-srate[ui] * h2g).exp();
                out[(i, j)] = v;
                out[(j, i)] = v;
                k += 1;
            }
        }
    }

    /// Correlation matrix for `params` as a fresh allocation.
    pub fn corr_matrix(&self, params: &GneitingParams) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        self.fill_corr(params, &mut out);
        out
    }
}

/// A covariance matrix together with its factorization.
pub struct Covariance {
    matrix: DMatrix<f64>,
    factor: SpdFactor,
}

impl Covariance {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::InvalidParam {
            name: "sigma2",
            value: sigma2,
            constraint: "sigma2 > 0 and finite",
        });
    }
    Ok(())
}

/// Builds and factors `σ²·ρ(pointsᵢ, pointsⱼ) + nuggetᵢ·1(i=j)`.
///
/// Positive definiteness is established by the factorization itself; no
/// jitter is ever added silently.  The error on failure carries the order of
/// the first offending leading minor.
pub fn build_covariance(
    points: &[SpaceTimePoint],
    params: &GneitingParams,
    sigma2: f64,
    nugget: &Nugget,
) -> Result<Covariance> {
    if points.is_empty() {
        return Err(Error::Empty {
            context: "covariance points",
        });
    }
    check_sigma2(sigma2)?;
    nugget.validate(points.len())?;
    let lag = LagTable::new(points);
    let mut m = lag.corr_matrix(params);
    m *= sigma2;
    for i in 0..points.len() {
        m[(i, i)] += nugget.at(i);
    }
    let factor = SpdFactor::new(&m)?;
    Ok(Covariance { matrix: m, factor })
}

/// Heterogeneous-variance covariance: entry (i,j) is
/// `√σ²ᵢ·√σ²ⱼ·ρ(i,j) + φ²ᵢ·1(i=j)`.
///
/// The geometric-mean scaling keeps the matrix a congruence transform of the
/// correlation matrix (hence positive definite) and reduces to `σ²·ρ` within
/// any block of equal variances.
pub fn build_covariance_hetero(
    points: &[SpaceTimePoint],
    params: &GneitingParams,
    sigma2s: &[f64],
    nuggets: &[f64],
) -> Result<Covariance> {
    if points.is_empty() {
        return Err(Error::Empty {
            context: "covariance points",
        });
    }
    if sigma2s.len() != points.len() {
        return Err(Error::LengthMismatch {
            context: "per-point sigma2",
            left: sigma2s.len(),
            right: points.len(),
        });
    }
    for &s in sigma2s {
        check_sigma2(s)?;
    }
    Nugget::PerPoint(nuggets.to_vec()).validate(points.len())?;
    let lag = LagTable::new(points);
    let mut m = lag.corr_matrix(params);
    let sd: Vec<f64> = sigma2s.iter().map(|s| s.sqrt()).collect();
    for i in 0..points.len() {
        for j in 0..points.len() {
            m[(i, j)] *= sd[i] * sd[j];
        }
        m[(i, i)] += nuggets[i];
    }
    let factor = SpdFactor::new(&m)?;
    Ok(Covariance { matrix: m, factor })
}

/// Covariance vector between the observations and one target point:
/// element i is `σ²·ρ(‖sᵢ−s₀‖, tᵢ−t₀)`.
///
/// No nugget enters even when the target coincides with a data point: the
/// pure-error components of distinct measurements are independent.
pub fn cross_covariance(
    data_points: &[SpaceTimePoint],
    target: &SpaceTimePoint,
    params: &GneitingParams,
    sigma2: f64,
) -> DVector<f64> {
    DVector::from_fn(data_points.len(), |i, _| {
        sigma2
            * gneiting_corr(
                data_points[i].spatial_distance(target),
                data_points[i].time_lag(target),
                params,
            )
    })
}

/// Heterogeneous-variance cross covariance: element i is
/// `√σ²ᵢ·√σ²₀·ρ(i, target)`.
pub fn cross_covariance_hetero(
    data_points: &[SpaceTimePoint],
    target: &SpaceTimePoint,
    params: &GneitingParams,
    sigma2s: &[f64],
    target_sigma2: f64,
) -> DVector<f64> {
    let s0 = target_sigma2.sqrt();
    DVector::from_fn(data_points.len(), |i, _| {
        sigma2s[i].sqrt()
            * s0
            * gneiting_corr(
                data_points[i].spatial_distance(target),
                data_points[i].time_lag(target),
                params,
            )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn pt(x: f64, y: f64, t: u32) -> SpaceTimePoint {
        SpaceTimePoint::new(x, y, t).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(GneitingParams::new(1.0, 1.0, 0.5, 0.5, 0.5).is_ok());
        assert!(GneitingParams::new(-0.1, 1.0, 0.5, 0.5, 0.5).is_err());
        assert!(GneitingParams::new(1.0, 1.0, 0.0, 0.5, 0.5).is_err());
        assert!(GneitingParams::new(1.0, 1.0, 0.5, 1.1, 0.5).is_err());
        assert!(GneitingParams::new(1.0, 1.0, 0.5, 0.5, f64::NAN).is_err());
        assert!(GneitingParams::with_tau(1.0, 1.0, 0.5, 0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn corr_is_one_at_zero_lags() {
        let p = GneitingParams::new(0.7, 0.3, 0.8, 0.4, 0.9).unwrap();
        assert_eq!(gneiting_corr(0.0, 0.0, &p), 1.0);
        assert!(gneiting_corr(0.1, 0.0, &p) < 1.0);
        assert!(gneiting_corr(0.0, 1.0, &p) < 1.0);
    }

    #[test]
    fn corr_closed_form_value() {
        // a=c=1, α=γ=0.5, β=1, τ=1, h=u=1: (1/2)·exp(-1/√2).
        let p = GneitingParams::new(1.0, 1.0, 0.5, 1.0, 0.5).unwrap();
        let expect = 0.5 * (-1.0 / 2f64.sqrt()).exp();
        assert_relative_eq!(gneiting_corr(1.0, 1.0, &p), expect, epsilon = 1e-15);
    }

    #[test]
    fn corr_separable_when_beta_zero() {
        let p = GneitingParams::new(0.2, 1.0, 0.5, 0.0, 0.5).unwrap();
        let joint = gneiting_corr(3.0, 2.0, &p);
        let product = gneiting_corr(3.0, 0.0, &p) * gneiting_corr(0.0, 2.0, &p);
        assert_abs_diff_eq!(joint, product, epsilon = 1e-12);
    }

    #[test]
    fn corr_monotone_decay() {
        let p = GneitingParams::new(0.5, 0.8, 0.7, 0.6, 0.9).unwrap();
        let mut prev = 1.0;
        for i in 1..=50 {
            let v = gneiting_corr(0.2 * i as f64, 0.0, &p);
            assert!(v < prev);
            prev = v;
        }
        prev = 1.0;
        for i in 1..=50 {
            let v = gneiting_corr(0.0, 0.3 * i as f64, &p);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn lag_table_matches_direct_evaluation() {
        let points = vec![pt(0.0, 0.0, 0), pt(1.0, 2.0, 1), pt(3.0, 1.0, 4), pt(0.0, 0.0, 2)];
        let p = GneitingParams::new(0.2, 1.0, 0.5, 0.5, 0.8).unwrap();
        let lag = LagTable::new(&points);
        let m = lag.corr_matrix(&p);
        for i in 0..points.len() {
            for j in 0..points.len() {
                let want = gneiting_corr(
                    points[i].spatial_distance(&points[j]),
                    points[i].time_lag(&points[j]),
                    &p,
                );
                assert_relative_eq!(m[(i, j)], want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn single_point_covariance() {
        let cov = build_covariance(
            &[pt(1.0, 1.0, 0)],
            &GneitingParams::new(1.0, 1.0, 0.5, 0.5, 0.5).unwrap(),
            1.0,
            &Nugget::Scalar(0.1),
        )
        .unwrap();
        assert_eq!(cov.matrix().nrows(), 1);
        assert_relative_eq!(cov.matrix()[(0, 0)], 1.1, epsilon = 1e-15);
    }

    #[test]
    fn duplicated_points_without_nugget_fail_pd() {
        let points = vec![pt(1.0, 1.0, 0), pt(1.0, 1.0, 0)];
        match build_covariance(
            &points,
            &GneitingParams::new(1.0, 1.0, 0.5, 0.5, 0.5).unwrap(),
            1.0,
            &Nugget::Scalar(0.0),
        ) {
            Err(crate::Error::NotPositiveDefinite { order }) => assert_eq!(order, 2),
            Err(other) => panic!("unexpected error {other:?}"),
            Ok(_) => panic!("expected PD failure"),
        }
        // A positive nugget rescues the same configuration.
        assert!(build_covariance(
            &points,
            &GneitingParams::new(1.0, 1.0, 0.5, 0.5, 0.5).unwrap(),
            1.0,
            &Nugget::Scalar(1e-6),
        )
        .is_ok());
    }

    #[test]
    fn covariance_is_exactly_symmetric() {
        let points: Vec<_> = (0..7)
            .map(|i| pt((i as f64 * 1.3).sin() * 5.0, (i as f64 * 0.7).cos() * 5.0, i % 3))
            .collect();
        let cov = build_covariance(
            &points,
            &GneitingParams::new(0.3, 0.9, 0.6, 0.4, 0.7).unwrap(),
            1.7,
            &Nugget::Scalar(0.05),
        )
        .unwrap();
        let m = cov.matrix();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }

    #[test]
    fn hetero_covariance_reduces_to_homogeneous() {
        let points: Vec<_> = (0..5).map(|i| pt(i as f64, 0.5 * i as f64, i)).collect();
        let p = GneitingParams::new(0.4, 0.6, 0.5, 0.3, 0.5).unwrap();
        let a = build_covariance(&points, &p, 0.8, &Nugget::Scalar(0.02)).unwrap();
        let b = build_covariance_hetero(&points, &p, &[0.8; 5], &[0.02; 5]).unwrap();
        assert_relative_eq!(a.matrix(), b.matrix(), epsilon = 1e-14);
    }

    #[test]
    fn cross_covariance_zero_lag_and_decay() {
        let points = vec![pt(0.0, 0.0, 0), pt(2.0, 1.0, 3)];
        let p = GneitingParams::new(0.2, 1.0, 0.5, 0.5, 0.5).unwrap();
        let v = cross_covariance(&points, &points[1], &p, 1.7);
        assert_relative_eq!(v[1], 1.7, epsilon = 1e-15);
        let far = pt(1e9, 0.0, 0);
        let w = cross_covariance(&points, &far, &p, 1.7);
        assert!(w[0] < 1e-300 && w[1] < 1e-300);
    }

    #[test]
    fn cross_covariance_matches_elementwise_corr() {
        let points = vec![pt(0.0, 0.0, 0), pt(1.0, 4.0, 2), pt(3.0, 2.0, 5)];
        let target = pt(2.0, 2.0, 3);
        let p = GneitingParams::new(0.2, 1.0, 0.5, 0.5, 0.5).unwrap();
        let v = cross_covariance(&points, &target, &p, 2.3);
        for i in 0..3 {
            let want = 2.3
                * gneiting_corr(
                    points[i].spatial_distance(&target),
                    points[i].time_lag(&target),
                    &p,
                );
            assert_abs_diff_eq!(v[i], want, epsilon = 1e-15);
        }
    }
}
