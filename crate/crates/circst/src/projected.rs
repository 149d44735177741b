//! The projected-process model: a bivariate space-time Gaussian process
//! `Z = (Z₁, Z₂)` observed only through its direction `θ = atan*(Z₁, Z₂)`,
//! with latent radii `R` restoring `Z = R·(cos θ, sin θ)` during inference.
//!
//! The cross-covariance couples a shared space-time correlation `C` with a
//! 2×2 coordinate covariance `V` (lower-right entry pinned to 1 for
//! identifiability) plus an isotropic nugget: `Σ = C ⊗ V + φ²I`.

use crate::angle::{atan_star, Angle, TAU};
use crate::covariance::{gneiting_corr, GneitingParams, LagTable, SpaceTimePoint};
use crate::covariates::RegressionDesign;
use crate::dataset::Dataset;
use crate::density::ProjectedParams;
use crate::linalg::SpdFactor;
use crate::mcmc::{metropolis_accept, AdaptiveScale, BlockRate, ChainMeta, McmcConfig};
use crate::predict::PredictiveSamples;
use crate::priors::{CorrPriors, InvGammaPrior, NormalPrior, PnPriors, TruncNormalPrior};
use crate::summary::{summarize_linear, ParamSummary};
use crate::wrapped::{require_two_distinct, standard_normal};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Parameters of the projected space-time model.
#[derive(Debug, Clone, Copy)]
pub struct PnParams {
    proj: ProjectedParams,
    nugget: f64,
    corr: GneitingParams,
}

impl PnParams {
    pub fn new(
        mu1: f64,
        mu2: f64,
        sigma2_1: f64,
        rho: f64,
        nugget: f64,
        corr: GneitingParams,
    ) -> Result<Self> {
        let proj = ProjectedParams::new(mu1, mu2, sigma2_1, rho)?;
        if !nugget.is_finite() || nugget <= 0.0 {
            return Err(Error::InvalidParam {
                name: "nugget",
                value: nugget,
                constraint: "nugget > 0 and finite",
            });
        }
        Ok(PnParams { proj, nugget, corr })
    }

    pub fn mu1(&self) -> f64 {
        self.proj.mu1()
    }
    pub fn mu2(&self) -> f64 {
        self.proj.mu2()
    }
    pub fn sigma2_1(&self) -> f64 {
        self.proj.sigma2_1()
    }
    pub fn rho(&self) -> f64 {
        self.proj.rho()
    }
    pub fn nugget(&self) -> f64 {
        self.nugget
    }
    pub fn corr(&self) -> &GneitingParams {
        &self.corr
    }

    /// Single-site parameters without the nugget.
    pub fn projected(&self) -> &ProjectedParams {
        &self.proj
    }

    /// The coordinate covariance `V` (lower-right entry exactly 1).
    pub fn v_matrix(&self) -> Matrix2<f64> {
        self.proj.cov()
    }
}

/// One retained draw: parameters plus the latent radii.
#[derive(Debug, Clone)]
pub struct PnDraw {
    pub params: PnParams,
    pub r: Vec<f64>,
}

/// Posterior chain for the projected model.
#[derive(Debug, Clone)]
pub struct PnChain {
    pub draws: Vec<PnDraw>,
    pub meta: ChainMeta,
}

/// Builds the dense `2n×2n` covariance with interleaved coordinate pairs:
/// entry `(2i+a, 2j+b) = C[i,j]·V[a,b]`, plus `φ²ᵢ` on the diagonal.
pub(crate) fn assemble_pn_cov(
    corr: &DMatrix<f64>,
    v: &Matrix2<f64>,
    nugget: &[f64],
    out: &mut DMatrix<f64>,
) {
    let n = nugget.len();
    if out.nrows() != 2 * n {
        *out = DMatrix::zeros(2 * n, 2 * n);
    }
    for j in 0..n {
        for i in 0..n {
            let c = corr[(i, j)];
            out[(2 * i, 2 * j)] = c * v[(0, 0)];
            out[(2 * i + 1, 2 * j)] = c * v[(1, 0)];
            out[(2 * i, 2 * j + 1)] = c * v[(0, 1)];
            out[(2 * i + 1, 2 * j + 1)] = c * v[(1, 1)];
        }
        out[(2 * j, 2 * j)] += nugget[j];
        out[(2 * j + 1, 2 * j + 1)] += nugget[j];
    }
}

fn pn_cov(points: &[SpaceTimePoint], params: &PnParams) -> Result<(DMatrix<f64>, SpdFactor)> {
    let lag = LagTable::new(points);
    let corr = lag.corr_matrix(params.corr());
    let mut cov = DMatrix::zeros(2 * points.len(), 2 * points.len());
    assemble_pn_cov(
        &corr,
        &params.v_matrix(),
        &vec![params.nugget(); points.len()],
        &mut cov,
    );
    let factor = SpdFactor::new(&cov)?;
    Ok((cov, factor))
}

fn stacked_mean(n: usize, mu1: f64, mu2: f64) -> DVector<f64> {
    DVector::from_fn(2 * n, |i, _| if i % 2 == 0 { mu1 } else { mu2 })
}

/// Draws angles from the projected model at the given points.  Returns the
/// angles and the latent coordinate pairs.
pub fn simulate_pn(
    points: &[SpaceTimePoint],
    params: &PnParams,
    seed: u64,
) -> Result<(Vec<Angle>, Vec<(f64, f64)>)> {
    if points.is_empty() {
        return Err(Error::Empty { context: "points" });
    }
    let (_, factor) = pn_cov(points, params)?;
    let mean = stacked_mean(points.len(), params.mu1(), params.mu2());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let z = factor.sample_mvn(&mean, &mut rng);
    let mut angles = Vec::with_capacity(points.len());
    let mut pairs = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        let (z1, z2) = (z[2 * i], z[2 * i + 1]);
        angles.push(atan_star(z1, z2)?);
        pairs.push((z1, z2));
    }
    Ok((angles, pairs))
}

/// Gaussian log-likelihood of latent coordinate pairs under the model.
pub fn pn_log_likelihood(
    points: &[SpaceTimePoint],
    z: &[(f64, f64)],
    params: &PnParams,
) -> Result<f64> {
    if points.len() != z.len() {
        return Err(Error::LengthMismatch {
            context: "points vs coordinate pairs",
            left: points.len(),
            right: z.len(),
        });
    }
    let (_, factor) = pn_cov(points, params)?;
    let mean = stacked_mean(points.len(), params.mu1(), params.mu2());
    let zv = DVector::from_fn(2 * points.len(), |i, _| {
        if i % 2 == 0 {
            z[i / 2].0
        } else {
            z[i / 2].1
        }
    });
    Ok(factor.mvn_log_density(&zv, &mean))
}

/// Conditional mean and covariance of the latent pair at one target given
/// coordinate pairs `z` at the observed points.  The returned covariance
/// includes the target's own nugget (`V + φ²I₂` in the no-information limit).
pub fn pn_conditional_moments(
    points: &[SpaceTimePoint],
    z: &[(f64, f64)],
    params: &PnParams,
    target: &SpaceTimePoint,
) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    if points.len() != z.len() {
        return Err(Error::LengthMismatch {
            context: "points vs coordinate pairs",
            left: points.len(),
            right: z.len(),
        });
    }
    let n = points.len();
    let (_, factor) = pn_cov(points, params)?;
    let mu = params.proj.mean();
    let resid = DVector::from_fn(2 * n, |i, _| {
        let p = z[i / 2];
        if i % 2 == 0 {
            p.0 - mu[0]
        } else {
            p.1 - mu[1]
        }
    });
    let v = params.v_matrix();
    let c0 = cross_cov_pn(points, target, params, &v);
    let w = factor.solve(&resid);
    let s = factor.solve_mat(&c0);
    let m = mu + c0.transpose() * &w;
    let mut vpred = v + Matrix2::identity() * params.nugget() - c0.transpose() * s;
    // Enforce exact symmetry lost to rounding.
    let off = 0.5 * (vpred[(0, 1)] + vpred[(1, 0)]);
    vpred[(0, 1)] = off;
    vpred[(1, 0)] = off;
    Ok((Vector2::new(m[0], m[1]), vpred))
}

/// Cross-covariance between the observed stack and one target pair: block
/// rows `C(s−s₀, t−t₀)·V`, never a nugget.
fn cross_cov_pn(
    points: &[SpaceTimePoint],
    target: &SpaceTimePoint,
    params: &PnParams,
    v: &Matrix2<f64>,
) -> DMatrix<f64> {
    DMatrix::from_fn(2 * points.len(), 2, |row, col| {
        let i = row / 2;
        let c = gneiting_corr(
            points[i].spatial_distance(target),
            points[i].time_lag(target),
            params.corr(),
        );
        c * v[(row % 2, col)]
    })
}

/// Draws one bivariate normal sample, tolerating a numerically semi-definite
/// covariance (inner square roots clamped at zero).
fn sample_bivariate<R: Rng + ?Sized>(
    mean: &Vector2<f64>,
    cov: &Matrix2<f64>,
    rng: &mut R,
) -> Vector2<f64> {
    let l11 = cov[(0, 0)].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { cov[(1, 0)] / l11 } else { 0.0 };
    let l22 = (cov[(1, 1)] - l21 * l21).max(0.0).sqrt();
    let z1 = standard_normal(rng);
    let z2 = standard_normal(rng);
    Vector2::new(mean[0] + l11 * z1, mean[1] + l21 * z1 + l22 * z2)
}

// ---------------------------------------------------------------------------
// Sampling engine
// ---------------------------------------------------------------------------

/// Mean structure of a projected-model fit.  Both coordinates always share
/// one design; the coefficient vector interleaves or stacks accordingly.
#[derive(Debug, Clone)]
pub(crate) enum PnMeanSpec {
    /// One `(μ₁, μ₂)` pair per factor cell, independent normal priors per
    /// coordinate shared across cells.
    CellMeans(NormalPrior, NormalPrior),
    /// One coefficient vector per coordinate through a common design;
    /// identity link; one shared prior per coefficient.
    Regression(RegressionDesign, NormalPrior),
}

/// Full model specification handed to the engine.
#[derive(Debug, Clone)]
pub(crate) struct PnModelSpec {
    pub cells: Vec<usize>,
    pub n_cells: usize,
    pub cell_labels: Vec<String>,
    pub mean: PnMeanSpec,
    pub sigma2_prior: InvGammaPrior,
    pub rho_prior: TruncNormalPrior,
    /// Per-cell nugget prior (the coordinate covariance is shared).
    pub nugget_prior: InvGammaPrior,
    pub corr: CorrPriors,
}

impl PnModelSpec {
    pub fn constant(priors: &PnPriors, n: usize) -> Self {
        PnModelSpec {
            cells: vec![0; n],
            n_cells: 1,
            cell_labels: vec!["all".to_string()],
            mean: PnMeanSpec::CellMeans(priors.mu1, priors.mu2),
            sigma2_prior: priors.sigma2_1,
            rho_prior: priors.rho,
            nugget_prior: priors.nugget,
            corr: priors.corr,
        }
    }
}

const INITIAL_STEP: f64 = 0.5;

/// Metropolis-within-Gibbs engine for the projected model and its variants.
///
/// Update order per sweep: latent radii (per-site slice sampling), mean
/// coefficients (joint conjugate Gibbs), `σ²₁` (log walk), `ρ` (Fisher-z
/// walk), per-cell nuggets (log walk), correlation parameters (log/logit
/// walks).  The dense `2n×2n` factorization is rebuilt only by blocks that
/// change the covariance.
pub(crate) struct PnEngine {
    n: usize,
    /// Unit direction (cos θᵢ, sin θᵢ) per observation.
    u: Vec<(f64, f64)>,
    lag: LagTable,
    spec: PnModelSpec,

    /// Mean coefficients: cell models interleave (μ₁, μ₂) per cell;
    /// regression stacks the Z₁ coefficients then the Z₂ coefficients.
    w: DVector<f64>,
    sigma2_1: f64,
    rho: f64,
    nugget: Vec<f64>,
    corr: GneitingParams,
    r: Vec<f64>,

    /// 2n×d mean design (fixed).
    umat: DMatrix<f64>,
    prior_mean: DVector<f64>,
    prior_prec: DVector<f64>,

    z: DVector<f64>,
    mean_vec: DVector<f64>,
    resid: DVector<f64>,
    obs_nugget: Vec<f64>,
    corr_mat: DMatrix<f64>,
    cov: DMatrix<f64>,
    factor: SpdFactor,
    loglik: f64,

    cov_work: DMatrix<f64>,
    corr_work: DMatrix<f64>,

    s2_scale: AdaptiveScale,
    rho_scale: AdaptiveScale,
    nug_scales: Vec<AdaptiveScale>,
    corr_scales: Vec<AdaptiveScale>,
}

impl PnEngine {
    pub fn new(points: &[SpaceTimePoint], angles: &[Angle], spec: PnModelSpec) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Empty { context: "dataset" });
        }
        if angles.len() != n || spec.cells.len() != n {
            return Err(Error::LengthMismatch {
                context: "engine inputs",
                left: angles.len(),
                right: n,
            });
        }
        if spec.cells.iter().any(|&c| c >= spec.n_cells) {
            return Err(Error::config("cell index out of range"));
        }

        // Mean design and per-coefficient priors.
        let (umat, prior_mean, prior_prec, w0) = match &spec.mean {
            PnMeanSpec::CellMeans(p1, p2) => {
                let d = 2 * spec.n_cells;
                let mut umat = DMatrix::zeros(2 * n, d);
                for i in 0..n {
                    let c = spec.cells[i];
                    umat[(2 * i, 2 * c)] = 1.0;
                    umat[(2 * i + 1, 2 * c + 1)] = 1.0;
                }
                let pm = DVector::from_fn(d, |j, _| {
                    if j % 2 == 0 {
                        p1.mean()
                    } else {
                        p2.mean()
                    }
                });
                let pp = DVector::from_fn(d, |j, _| {
                    1.0 / if j % 2 == 0 { p1.variance() } else { p2.variance() }
                });
                // Initialize each cell mean at the coordinate sample means
                // (the resultant-scaled direction) of its observations.
                let mut sums = vec![(0.0, 0.0, 0usize); spec.n_cells];
                for (i, a) in angles.iter().enumerate() {
                    let c = spec.cells[i];
                    sums[c].0 += a.cos();
                    sums[c].1 += a.sin();
                    sums[c].2 += 1;
                }
                let mut w0 = DVector::zeros(d);
                for (c, &(sc, ss, cnt)) in sums.iter().enumerate() {
                    if cnt == 0 {
                        return Err(Error::config(format!(
                            "factor cell '{}' has no observations",
                            spec.cell_labels.get(c).map(String::as_str).unwrap_or("?")
                        )));
                    }
                    w0[2 * c] = sc / cnt as f64;
                    w0[2 * c + 1] = ss / cnt as f64;
                }
                (umat, pm, pp, w0)
            }
            PnMeanSpec::Regression(design, prior) => {
                if design.n_rows() != n {
                    return Err(Error::LengthMismatch {
                        context: "design rows vs observations",
                        left: design.n_rows(),
                        right: n,
                    });
                }
                let p = design.n_coeffs();
                let d = 2 * p;
                let h = design.matrix();
                let mut umat = DMatrix::zeros(2 * n, d);
                for i in 0..n {
                    for j in 0..p {
                        umat[(2 * i, j)] = h[(i, j)];
                        umat[(2 * i + 1, p + j)] = h[(i, j)];
                    }
                }
                let pm = DVector::from_element(d, prior.mean());
                let pp = DVector::from_element(d, 1.0 / prior.variance());
                (umat, pm, pp, DVector::zeros(d))
            }
        };

        let corr = GneitingParams::new(
            spec.corr.a.mean(),
            spec.corr.c.mean(),
            spec.corr.alpha.mean(),
            spec.corr.beta.mean(),
            spec.corr.gamma.mean(),
        )?;
        let sigma2_1 = spec.sigma2_prior.central_value();
        let nugget = vec![spec.nugget_prior.central_value(); spec.n_cells];

        let mut engine = PnEngine {
            n,
            u: angles.iter().map(|a| (a.cos(), a.sin())).collect(),
            lag: LagTable::new(points),
            spec,
            w: w0,
            sigma2_1,
            rho: 0.0,
            nugget,
            corr,
            r: vec![1.0; n],
            umat,
            prior_mean,
            prior_prec,
            z: DVector::zeros(2 * n),
            mean_vec: DVector::zeros(2 * n),
            resid: DVector::zeros(2 * n),
            obs_nugget: vec![0.0; n],
            corr_mat: DMatrix::zeros(n, n),
            cov: DMatrix::zeros(2 * n, 2 * n),
            factor: SpdFactor::new(&DMatrix::identity(2 * n, 2 * n))?,
            loglik: 0.0,
            cov_work: DMatrix::zeros(2 * n, 2 * n),
            corr_work: DMatrix::zeros(n, n),
            s2_scale: AdaptiveScale::new(INITIAL_STEP),
            rho_scale: AdaptiveScale::new(INITIAL_STEP),
            nug_scales: vec![AdaptiveScale::new(INITIAL_STEP); 0],
            corr_scales: vec![AdaptiveScale::new(INITIAL_STEP); 5],
        };
        engine.nug_scales = vec![AdaptiveScale::new(INITIAL_STEP); engine.spec.n_cells];
        engine.refresh_all()?;
        if !engine.loglik.is_finite() {
            return Err(Error::config(
                "non-finite likelihood at initialization; check the data scale",
            ));
        }
        Ok(engine)
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// Stacked per-pair mean vector `U w` at the current coefficients.
    pub fn pair_means(&self) -> &DVector<f64> {
        &self.mean_vec
    }

    pub fn mean_spec(&self) -> &PnMeanSpec {
        &self.spec.mean
    }

    /// Cholesky factor of the current 2n-dimensional covariance.
    pub fn cov_factor(&self) -> &SpdFactor {
        &self.factor
    }
    pub fn coeffs(&self) -> &DVector<f64> {
        &self.w
    }
    pub fn sigma2_1(&self) -> f64 {
        self.sigma2_1
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn nuggets(&self) -> &[f64] {
        &self.nugget
    }
    pub fn corr_params(&self) -> &GneitingParams {
        &self.corr
    }
    #[cfg(test)]
    pub fn loglik(&self) -> f64 {
        self.loglik
    }

    /// Parameters of a single-cell (plain) model.
    pub fn constant_params(&self) -> Result<PnParams> {
        if self.spec.n_cells != 1 || self.w.len() != 2 {
            return Err(Error::config("not a single-cell constant-mean model"));
        }
        PnParams::new(
            self.w[0],
            self.w[1],
            self.sigma2_1,
            self.rho,
            self.nugget[0],
            self.corr,
        )
    }

    /// Replaces the full parameter state (latent radii unchanged).
    pub fn set_state(
        &mut self,
        w: DVector<f64>,
        sigma2_1: f64,
        rho: f64,
        nugget: Vec<f64>,
        corr: GneitingParams,
    ) -> Result<()> {
        if w.len() != self.w.len() || nugget.len() != self.spec.n_cells {
            return Err(Error::config("state shape mismatch"));
        }
        if sigma2_1 <= 0.0 || !sigma2_1.is_finite() || rho.abs() >= 1.0 {
            return Err(Error::config("invalid coordinate covariance state"));
        }
        self.w = w;
        self.sigma2_1 = sigma2_1;
        self.rho = rho;
        self.nugget = nugget;
        self.corr = corr;
        self.refresh_all()
    }

    /// Replaces the observed angles and latent radii (parameters kept).
    pub fn set_data(&mut self, angles: &[Angle], r: &[f64]) -> Result<()> {
        if angles.len() != self.n || r.len() != self.n {
            return Err(Error::LengthMismatch {
                context: "replacement data",
                left: angles.len(),
                right: self.n,
            });
        }
        if r.iter().any(|&ri| !ri.is_finite() || ri <= 0.0) {
            return Err(Error::config("latent radii must be positive and finite"));
        }
        self.u = angles.iter().map(|a| (a.cos(), a.sin())).collect();
        self.r.copy_from_slice(r);
        self.refresh_observation_caches();
        Ok(())
    }

    fn v_matrix(&self) -> Matrix2<f64> {
        let s1 = self.sigma2_1.sqrt();
        Matrix2::new(self.sigma2_1, self.rho * s1, self.rho * s1, 1.0)
    }

    fn refresh_all(&mut self) -> Result<()> {
        for i in 0..self.n {
            self.obs_nugget[i] = self.nugget[self.spec.cells[i]];
        }
        self.lag.fill_corr(&self.corr, &mut self.corr_mat);
        assemble_pn_cov(
            &self.corr_mat,
            &self.v_matrix(),
            &self.obs_nugget,
            &mut self.cov,
        );
        self.factor = SpdFactor::new(&self.cov)?;
        self.refresh_observation_caches();
        Ok(())
    }

    fn refresh_observation_caches(&mut self) {
        self.mean_vec = &self.umat * &self.w;
        for i in 0..self.n {
            self.z[2 * i] = self.r[i] * self.u[i].0;
            self.z[2 * i + 1] = self.r[i] * self.u[i].1;
            self.resid[2 * i] = self.z[2 * i] - self.mean_vec[2 * i];
            self.resid[2 * i + 1] = self.z[2 * i + 1] - self.mean_vec[2 * i + 1];
        }
        self.loglik = self.gaussian_loglik(&self.resid, &self.factor);
    }

    fn gaussian_loglik(&self, resid: &DVector<f64>, factor: &SpdFactor) -> f64 {
        -0.5 * (2.0 * self.n as f64 * TAU.ln() + factor.log_det() + factor.inv_quad(resid))
    }

    /// One full sweep.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, adapting: bool) {
        let omega = self.factor.inverse();
        self.update_r(rng, &omega);
        self.update_mean(rng, &omega);
        self.update_sigma2(rng, adapting);
        self.update_rho(rng, adapting);
        self.update_nugget(rng, adapting);
        self.update_corr(rng, adapting);
    }

    /// Per-site slice update of the radius.  Conditional on everything else
    /// the pair moves along its ray `r·u`, giving the log-density
    /// `ln r - ½Ar² - Br` with `A = uᵀΩ_PP u` and `B = uᵀg_P - r·A` where
    /// `g = Ω·resid`.
    fn update_r<R: Rng + ?Sized>(&mut self, rng: &mut R, omega: &DMatrix<f64>) {
        let two_n = 2 * self.n;
        for i in 0..self.n {
            let (p0, p1) = (2 * i, 2 * i + 1);
            let (u0, u1) = self.u[i];
            let col0 = omega.column(p0);
            let col1 = omega.column(p1);
            let mut g0 = 0.0;
            let mut g1 = 0.0;
            for k in 0..two_n {
                g0 += col0[k] * self.resid[k];
                g1 += col1[k] * self.resid[k];
            }
            let a = u0 * u0 * omega[(p0, p0)]
                + 2.0 * u0 * u1 * omega[(p0, p1)]
                + u1 * u1 * omega[(p1, p1)];
            let b = u0 * g0 + u1 * g1 - self.r[i] * a;
            let log_f = |r: f64| {
                if r <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    r.ln() - 0.5 * a * r * r - b * r
                }
            };
            let width = 2.0 / a.sqrt();
            let r_new = crate::mcmc::slice_sample_positive(log_f, self.r[i], width, rng);
            self.r[i] = r_new;
            self.z[p0] = r_new * u0;
            self.z[p1] = r_new * u1;
            self.resid[p0] = self.z[p0] - self.mean_vec[p0];
            self.resid[p1] = self.z[p1] - self.mean_vec[p1];
        }
        self.loglik = self.gaussian_loglik(&self.resid, &self.factor);
    }

    /// Joint conjugate Gibbs draw of the mean coefficients: with likelihood
    /// `N(z; Uw, Σ)` and independent normal priors, `w | ... ~ N(Λ⁻¹b, Λ⁻¹)`
    /// with `Λ = UᵀΩU + Λ₀` and `b = UᵀΩz + Λ₀m₀`.
    fn update_mean<R: Rng + ?Sized>(&mut self, rng: &mut R, omega: &DMatrix<f64>) {
        let t = omega * &self.umat; // 2n×d
        let mut lambda = self.umat.transpose() * &t; // d×d
        let d = self.w.len();
        for j in 0..d {
            lambda[(j, j)] += self.prior_prec[j];
        }
        let mut b = t.transpose() * &self.z;
        for j in 0..d {
            b[j] += self.prior_prec[j] * self.prior_mean[j];
        }
        // d is tiny; invert the precision and sample through its factor.
        let lf = match SpdFactor::new(&lambda) {
            Ok(f) => f,
            Err(_) => return, // keep the current draw on numerical refusal
        };
        let mean = lf.solve(&b);
        let cov = lf.inverse();
        let cf = match SpdFactor::new(&cov) {
            Ok(f) => f,
            Err(_) => return,
        };
        self.w = cf.sample_mvn(&mean, rng);
        self.mean_vec = &self.umat * &self.w;
        for k in 0..2 * self.n {
            self.resid[k] = self.z[k] - self.mean_vec[k];
        }
        self.loglik = self.gaussian_loglik(&self.resid, &self.factor);
    }

    /// Shared accept/reject for any proposal that changes the covariance.
    fn try_cov_move<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        v_new: Matrix2<f64>,
        nugget_new: Option<(usize, f64)>,
        corr_new: Option<GneitingParams>,
        log_prior_and_jac: f64,
    ) -> bool {
        let mut ng = self.obs_nugget.clone();
        if let Some((cell, val)) = nugget_new {
            for i in 0..self.n {
                if self.spec.cells[i] == cell {
                    ng[i] = val;
                }
            }
        }
        let corr_mat = if let Some(cp) = &corr_new {
            self.lag.fill_corr(cp, &mut self.corr_work);
            &self.corr_work
        } else {
            &self.corr_mat
        };
        assemble_pn_cov(corr_mat, &v_new, &ng, &mut self.cov_work);
        let factor_new = match SpdFactor::new(&self.cov_work) {
            Ok(f) => f,
            Err(_) => return false,
        };
        let ll_new = self.gaussian_loglik(&self.resid, &factor_new);
        if metropolis_accept(rng, ll_new - self.loglik + log_prior_and_jac) {
            if let Some((cell, val)) = nugget_new {
                self.nugget[cell] = val;
                self.obs_nugget = ng;
            }
            if let Some(cp) = corr_new {
                self.corr = cp;
                std::mem::swap(&mut self.corr_mat, &mut self.corr_work);
            }
            std::mem::swap(&mut self.cov, &mut self.cov_work);
            self.factor = factor_new;
            self.loglik = ll_new;
            true
        } else {
            false
        }
    }

    fn update_sigma2<R: Rng + ?Sized>(&mut self, rng: &mut R, adapting: bool) {
        let current = self.sigma2_1;
        let prop = (current.ln() + self.s2_scale.step() * standard_normal(rng)).exp();
        let accepted = if prop.is_finite() && prop > 0.0 {
            let s1 = prop.sqrt();
            let v_new = Matrix2::new(prop, self.rho * s1, self.rho * s1, 1.0);
            let lp = self.spec.sigma2_prior.log_pdf(prop)
                - self.spec.sigma2_prior.log_pdf(current)
                + prop.ln()
                - current.ln();
            let ok = self.try_cov_move(rng, v_new, None, None, lp);
            if ok {
                self.sigma2_1 = prop;
            }
            ok
        } else {
            false
        };
        self.s2_scale.record(accepted, adapting);
    }

    fn update_rho<R: Rng + ?Sized>(&mut self, rng: &mut R, adapting: bool) {
        let current = self.rho;
        let zf = current.atanh() + self.rho_scale.step() * standard_normal(rng);
        let prop = zf.tanh();
        let accepted = if prop.abs() < 1.0 {
            let s1 = self.sigma2_1.sqrt();
            let v_new = Matrix2::new(self.sigma2_1, prop * s1, prop * s1, 1.0);
            let lp = self.spec.rho_prior.log_pdf(prop) - self.spec.rho_prior.log_pdf(current)
                + (1.0 - prop * prop).ln()
                - (1.0 - current * current).ln();
            let ok = self.try_cov_move(rng, v_new, None, None, lp);
            if ok {
                self.rho = prop;
            }
            ok
        } else {
            false
        };
        self.rho_scale.record(accepted, adapting);
    }

    fn update_nugget<R: Rng + ?Sized>(&mut self, rng: &mut R, adapting: bool) {
        for c in 0..self.spec.n_cells {
            let current = self.nugget[c];
            let prop = (current.ln() + self.nug_scales[c].step() * standard_normal(rng)).exp();
            let accepted = if prop.is_finite() && prop > 0.0 {
                let lp = self.spec.nugget_prior.log_pdf(prop)
                    - self.spec.nugget_prior.log_pdf(current)
                    + prop.ln()
                    - current.ln();
                self.try_cov_move(rng, self.v_matrix(), Some((c, prop)), None, lp)
            } else {
                false
            };
            self.nug_scales[c].record(accepted, adapting);
        }
    }

    fn update_corr<R: Rng + ?Sized>(&mut self, rng: &mut R, adapting: bool) {
        for idx in 0..5 {
            let step = self.corr_scales[idx].step();
            let zstep = step * standard_normal(rng);
            let cur = self.corr;
            let (prop_params, log_jac_diff, lp_diff) = match idx {
                0 => {
                    let prop = (cur.a().ln() + zstep).exp();
                    (
                        GneitingParams::new(prop, cur.c(), cur.alpha(), cur.beta(), cur.gamma()),
                        prop.ln() - cur.a().ln(),
                        self.spec.corr.a.log_pdf(prop) - self.spec.corr.a.log_pdf(cur.a()),
                    )
                }
                1 => {
                    let prop = (cur.c().ln() + zstep).exp();
                    (
                        GneitingParams::new(cur.a(), prop, cur.alpha(), cur.beta(), cur.gamma()),
                        prop.ln() - cur.c().ln(),
                        self.spec.corr.c.log_pdf(prop) - self.spec.corr.c.log_pdf(cur.c()),
                    )
                }
                2 => {
                    let prop = logistic(logit(cur.alpha()) + zstep);
                    (
                        GneitingParams::new(cur.a(), cur.c(), prop, cur.beta(), cur.gamma()),
                        logit_jacobian(prop) - logit_jacobian(cur.alpha()),
                        self.spec.corr.alpha.log_pdf(prop)
                            - self.spec.corr.alpha.log_pdf(cur.alpha()),
                    )
                }
                3 => {
                    let prop = logistic(logit(cur.beta()) + zstep);
                    (
                        GneitingParams::new(cur.a(), cur.c(), cur.alpha(), prop, cur.gamma()),
                        logit_jacobian(prop) - logit_jacobian(cur.beta()),
                        self.spec.corr.beta.log_pdf(prop)
                            - self.spec.corr.beta.log_pdf(cur.beta()),
                    )
                }
                _ => {
                    let prop = logistic(logit(cur.gamma()) + zstep);
                    (
                        GneitingParams::new(cur.a(), cur.c(), cur.alpha(), cur.beta(), prop),
                        logit_jacobian(prop) - logit_jacobian(cur.gamma()),
                        self.spec.corr.gamma.log_pdf(prop)
                            - self.spec.corr.gamma.log_pdf(cur.gamma()),
                    )
                }
            };
            let accepted = match prop_params {
                Ok(pp) if !lp_diff.is_nan() => {
                    self.try_cov_move(rng, self.v_matrix(), None, Some(pp), lp_diff + log_jac_diff)
                }
                _ => false,
            };
            self.corr_scales[idx].record(accepted, adapting);
        }
    }

    /// Post-adaptation acceptance rates for the Metropolis blocks (the radius
    /// and mean blocks are exact draws and not listed).
    pub fn block_rates(&self) -> Vec<BlockRate> {
        let single = self.spec.n_cells == 1;
        let mut out = vec![
            BlockRate {
                name: "sigma2_1".to_string(),
                rate: self.s2_scale.frozen_rate(),
            },
            BlockRate {
                name: "rho".to_string(),
                rate: self.rho_scale.frozen_rate(),
            },
        ];
        for (c, s) in self.nug_scales.iter().enumerate() {
            let name = if single {
                "nugget".to_string()
            } else {
                format!("nugget[{}]", self.spec.cell_labels[c])
            };
            out.push(BlockRate {
                name,
                rate: s.frozen_rate(),
            });
        }
        for (idx, s) in self.corr_scales.iter().enumerate() {
            out.push(BlockRate {
                name: ["a", "c", "alpha", "beta", "gamma"][idx].to_string(),
                rate: s.frozen_rate(),
            });
        }
        out
    }
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit_jacobian(x: f64) -> f64 {
    (x * (1.0 - x)).ln()
}

// ---------------------------------------------------------------------------
// Public fitting / prediction entry points
// ---------------------------------------------------------------------------

/// Fits the projected model by Metropolis-within-Gibbs with latent radii.
/// Deterministic given the seed.
pub fn fit_pn(
    dataset: &Dataset,
    priors: &PnPriors,
    mcmc: &McmcConfig,
    seed: u64,
) -> Result<PnChain> {
    mcmc.validate()?;
    require_two_distinct(dataset.points())?;
    let spec = PnModelSpec::constant(priors, dataset.len());
    let mut engine = PnEngine::new(dataset.points(), dataset.angles(), spec)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(mcmc.retained());
    for iter in 0..mcmc.iterations {
        let adapting = mcmc.adapt && iter < mcmc.burn_in;
        engine.sweep(&mut rng, adapting);
        if iter >= mcmc.burn_in && (iter - mcmc.burn_in) % mcmc.thin == 0 {
            draws.push(PnDraw {
                params: engine.constant_params()?,
                r: engine.r().to_vec(),
            });
        }
    }
    Ok(PnChain {
        draws,
        meta: ChainMeta {
            iterations: mcmc.iterations,
            burn_in: mcmc.burn_in,
            thin: mcmc.thin,
            seed,
            acceptance: engine.block_rates(),
        },
    })
}

/// Composition-sampling prediction: per retained draw, reconstructs the
/// latent pairs from the angles and radii, draws the target pair from the
/// bivariate conditional, and projects back to an angle.
pub fn krige_pn(
    chain: &PnChain,
    dataset: &Dataset,
    targets: &[SpaceTimePoint],
    seed: u64,
) -> Result<PredictiveSamples> {
    if chain.draws.is_empty() {
        return Err(Error::ChainTooShort { len: 0, min: 1 });
    }
    if targets.is_empty() {
        return Err(Error::Empty { context: "targets" });
    }
    let n = dataset.len();
    let lag = LagTable::new(dataset.points());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut corr = DMatrix::zeros(n, n);
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    let mut per_target: Vec<Vec<Angle>> =
        vec![Vec::with_capacity(chain.draws.len()); targets.len()];
    for draw in &chain.draws {
        if draw.r.len() != n {
            return Err(Error::LengthMismatch {
                context: "radii vs dataset",
                left: draw.r.len(),
                right: n,
            });
        }
        let p = &draw.params;
        let v = p.v_matrix();
        lag.fill_corr(p.corr(), &mut corr);
        assemble_pn_cov(&corr, &v, &vec![p.nugget(); n], &mut cov);
        let factor = SpdFactor::new(&cov)?;
        let mu = p.projected().mean();
        let resid = DVector::from_fn(2 * n, |k, _| {
            let i = k / 2;
            let a = dataset.angles()[i];
            let zi = draw.r[i] * if k % 2 == 0 { a.cos() } else { a.sin() };
            zi - mu[k % 2]
        });
        let w = factor.solve(&resid);
        for (j, bucket) in per_target.iter_mut().enumerate() {
            let c0 = cross_cov_pn(dataset.points(), &targets[j], p, &v);
            let s = factor.solve_mat(&c0);
            let m = mu + c0.transpose() * &w;
            let vpred = v + Matrix2::identity() * p.nugget() - c0.transpose() * s;
            let zstar = sample_bivariate(&Vector2::new(m[0], m[1]), &vpred, &mut rng);
            bucket.push(atan_star(zstar[0], zstar[1])?);
        }
    }
    PredictiveSamples::from_target_draws(targets.to_vec(), per_target)
}

/// Posterior summary table: means and equal-tailed 95% intervals (all
/// projected-model parameters live on the line, so no circular arcs).
pub fn summarize_pn(chain: &PnChain) -> Result<Vec<ParamSummary>> {
    if chain.draws.len() < 100 {
        return Err(Error::ChainTooShort {
            len: chain.draws.len(),
            min: 100,
        });
    }
    let pull = |f: fn(&PnParams) -> f64| -> Vec<f64> {
        chain.draws.iter().map(|d| f(&d.params)).collect()
    };
    Ok(vec![
        summarize_linear("mu1", &pull(|p| p.mu1()))?,
        summarize_linear("mu2", &pull(|p| p.mu2()))?,
        summarize_linear("sigma2_1", &pull(|p| p.sigma2_1()))?,
        summarize_linear("rho", &pull(|p| p.rho()))?,
        summarize_linear("nugget", &pull(|p| p.nugget()))?,
        summarize_linear("a", &pull(|p| p.corr().a()))?,
        summarize_linear("c", &pull(|p| p.corr().c()))?,
        summarize_linear("alpha", &pull(|p| p.corr().alpha()))?,
        summarize_linear("beta", &pull(|p| p.corr().beta()))?,
        summarize_linear("gamma", &pull(|p| p.corr().gamma()))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::{BetaPrior, GammaPrior};
    use approx::assert_relative_eq;

    fn toy_points(n_sites: usize, n_times: u32) -> Vec<SpaceTimePoint> {
        let mut out = Vec::new();
        for s in 0..n_sites {
            let x = (s as f64 * 2.399) % 10.0;
            let y = (s as f64 * 1.618 + 3.0) % 10.0;
            for t in 0..n_times {
                out.push(SpaceTimePoint::new(x, y, t).unwrap());
            }
        }
        out
    }

    fn toy_params() -> PnParams {
        PnParams::new(
            2.5,
            2.5,
            1.0,
            0.0,
            0.01,
            GneitingParams::new(1.0, 0.2, 0.5, 0.5, 0.5).unwrap(),
        )
        .unwrap()
    }

    fn toy_priors() -> PnPriors {
        PnPriors {
            mu1: NormalPrior::new(1.0, 1.0).unwrap(),
            mu2: NormalPrior::new(1.0, 1.0).unwrap(),
            sigma2_1: InvGammaPrior::new(3.0, 2.0).unwrap(),
            rho: TruncNormalPrior::new(0.0, 1.0).unwrap(),
            nugget: InvGammaPrior::new(3.0, 0.2).unwrap(),
            corr: CorrPriors {
                a: GammaPrior::new(2.0, 2.0).unwrap(),
                c: GammaPrior::new(2.0, 2.0).unwrap(),
                alpha: BetaPrior::new(2.0, 2.0).unwrap(),
                beta: BetaPrior::new(2.0, 2.0).unwrap(),
                gamma: BetaPrior::new(2.0, 2.0).unwrap(),
            },
        }
    }

    #[test]
    fn simulate_mean_dominates_noise() {
        let points = toy_points(4, 3);
        let p = PnParams::new(
            1e6,
            0.0,
            1.0,
            0.0,
            0.01,
            GneitingParams::new(1.0, 0.2, 0.5, 0.5, 0.5).unwrap(),
        )
        .unwrap();
        let (angles, _) = simulate_pn(&points, &p, 9).unwrap();
        for a in angles {
            let d = a.radians().min(TAU - a.radians());
            assert!(d < 1e-3, "angle {} not near 0", a.radians());
        }
    }

    #[test]
    fn simulate_is_deterministic() {
        let points = toy_points(3, 2);
        let p = toy_params();
        let (a1, z1) = simulate_pn(&points, &p, 4).unwrap();
        let (a2, z2) = simulate_pn(&points, &p, 4).unwrap();
        assert_eq!(z1, z2);
        for (u, v) in a1.iter().zip(&a2) {
            assert_eq!(u.radians(), v.radians());
        }
    }

    #[test]
    fn projection_scale_invariance() {
        // Scaling a latent pair by powers of two leaves the angle bit-exact;
        // arbitrary positive scales agree to rounding.
        let pairs = [(0.3, -1.2), (-2.0, 0.7), (1e-3, 1e-3), (-5.0, -0.1)];
        for &(z1, z2) in &pairs {
            let base = atan_star(z1, z2).unwrap();
            for &lam in &[2.0_f64, 0.25, 1024.0] {
                let scaled = atan_star(lam * z1, lam * z2).unwrap();
                assert_eq!(base.radians(), scaled.radians());
            }
            for &lam in &[3.7_f64, 0.013] {
                let scaled = atan_star(lam * z1, lam * z2).unwrap();
                assert_relative_eq!(base.radians(), scaled.radians(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn engine_likelihood_matches_public_marginal() {
        let points = toy_points(3, 2);
        let p = toy_params();
        let (angles, pairs) = simulate_pn(&points, &p, 2).unwrap();
        let r: Vec<f64> = pairs.iter().map(|&(a, b)| a.hypot(b)).collect();
        let spec = PnModelSpec::constant(&toy_priors(), 6);
        let mut e = PnEngine::new(&points, &angles, spec).unwrap();
        e.set_state(
            DVector::from_column_slice(&[p.mu1(), p.mu2()]),
            p.sigma2_1(),
            p.rho(),
            vec![p.nugget()],
            *p.corr(),
        )
        .unwrap();
        e.set_data(&angles, &r).unwrap();
        // The reconstruction r·(cosθ, sinθ) reproduces the latent pairs.
        let expected = pn_log_likelihood(&points, &pairs, &p).unwrap();
        assert_relative_eq!(e.loglik(), expected, epsilon = 1e-8);
    }

    #[test]
    fn fit_is_deterministic_and_keeps_identification() {
        let points = toy_points(4, 3);
        let (angles, _) = simulate_pn(&points, &toy_params(), 1).unwrap();
        let ds = Dataset::new(points, angles).unwrap();
        let cfg = McmcConfig {
            iterations: 150,
            burn_in: 75,
            thin: 3,
            ..Default::default()
        };
        let c1 = fit_pn(&ds, &toy_priors(), &cfg, 5).unwrap();
        let c2 = fit_pn(&ds, &toy_priors(), &cfg, 5).unwrap();
        assert_eq!(c1.draws.len(), cfg.retained());
        for (a, b) in c1.draws.iter().zip(&c2.draws) {
            assert_eq!(a.params.mu1(), b.params.mu1());
            assert_eq!(a.params.rho(), b.params.rho());
            assert_eq!(a.r, b.r);
            // Identification: V₂₂ pinned at 1 in every draw.
            assert_eq!(a.params.v_matrix()[(1, 1)], 1.0);
            assert!(a.r.iter().all(|&ri| ri > 0.0 && ri.is_finite()));
        }
        assert_eq!(c1.meta.acceptance.len(), 8); // sigma2_1, rho, nugget, 5 corr
    }

    #[test]
    fn conditional_moments_interpolate_noiseless_data() {
        let points = toy_points(3, 2);
        let p = PnParams::new(
            1.0,
            1.0,
            0.8,
            0.3,
            1e-12,
            GneitingParams::new(0.5, 0.3, 0.5, 0.5, 0.5).unwrap(),
        )
        .unwrap();
        let (_, pairs) = simulate_pn(&points, &p, 6).unwrap();
        let (m, v) = pn_conditional_moments(&points, &pairs, &p, &points[1]).unwrap();
        assert_relative_eq!(m[0], pairs[1].0, epsilon = 1e-4);
        assert_relative_eq!(m[1], pairs[1].1, epsilon = 1e-4);
        assert!(v.norm() < 1e-3);
    }

    #[test]
    fn far_target_moments_are_unconditional() {
        let points = toy_points(2, 2);
        let p = toy_params();
        let (_, pairs) = simulate_pn(&points, &p, 8).unwrap();
        let far = SpaceTimePoint::new(1e4, 1e4, 3000).unwrap();
        let (m, v) = pn_conditional_moments(&points, &pairs, &p, &far).unwrap();
        assert_relative_eq!(m[0], p.mu1(), epsilon = 1e-8);
        assert_relative_eq!(m[1], p.mu2(), epsilon = 1e-8);
        let expected = p.v_matrix() + Matrix2::identity() * p.nugget();
        assert!((v - expected).norm() < 1e-8);
    }

    #[test]
    fn summarize_constant_chain() {
        let chain = PnChain {
            draws: vec![
                PnDraw {
                    params: toy_params(),
                    r: vec![1.0; 4],
                };
                120
            ],
            meta: ChainMeta {
                iterations: 120,
                burn_in: 0,
                thin: 1,
                seed: 0,
                acceptance: vec![],
            },
        };
        let rows = summarize_pn(&chain).unwrap();
        assert_eq!(rows.len(), 10);
        match &rows[0].estimate {
            crate::summary::Estimate::Linear { mean, lower, upper } => {
                assert_relative_eq!(*mean, 2.5, epsilon = 1e-12);
                assert_eq!(lower, upper);
            }
            _ => panic!("mu1 should be linear"),
        }
    }
}
