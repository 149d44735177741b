//! The wrapped-process model: a scalar space-time Gaussian process pushed
//! onto the circle by `X = Y mod 2π`, with latent winding numbers `K`
//! restoring `Y = X + 2πK` during inference.

use crate::angle::{circ_summary, wrap, Angle, TAU};
use crate::covariance::{
    build_covariance, cross_covariance, GneitingParams, LagTable, Nugget, SpaceTimePoint,
};
use crate::covariates::RegressionDesign;
use crate::dataset::Dataset;
use crate::linalg::SpdFactor;
use crate::mcmc::{
    metropolis_accept, AdaptiveScale, BlockRate, ChainMeta, KMaxPolicy, McmcConfig,
};
use crate::predict::PredictiveSamples;
use crate::priors::{CorrPriors, InvGammaPrior, NormalPrior, WnPriors, WrappedNormalPrior};
use crate::summary::{summarize_circular, summarize_linear, ParamSummary};
use crate::{density, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Parameters of the wrapped space-time model.
#[derive(Debug, Clone, Copy)]
pub struct WnParams {
    mu: Angle,
    sigma2: f64,
    nugget: f64,
    corr: GneitingParams,
}

impl WnParams {
    pub fn new(mu: Angle, sigma2: f64, nugget: f64, corr: GneitingParams) -> Result<Self> {
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::InvalidParam {
                name: "sigma2",
                value: sigma2,
                constraint: "sigma2 > 0 and finite",
            });
        }
        if !nugget.is_finite() || nugget <= 0.0 {
            return Err(Error::InvalidParam {
                name: "nugget",
                value: nugget,
                constraint: "nugget > 0 and finite",
            });
        }
        Ok(WnParams {
            mu,
            sigma2,
            nugget,
            corr,
        })
    }

    pub fn mu(&self) -> Angle {
        self.mu
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn nugget(&self) -> f64 {
        self.nugget
    }
    pub fn corr(&self) -> &GneitingParams {
        &self.corr
    }
}

/// One retained draw: parameters plus the winding-number vector.
#[derive(Debug, Clone)]
pub struct WnDraw {
    pub params: WnParams,
    pub k: Vec<i32>,
}

/// Posterior chain for the wrapped model.
#[derive(Debug, Clone)]
pub struct WnChain {
    pub draws: Vec<WnDraw>,
    pub meta: ChainMeta,
}

/// Draws angles from the wrapped model at the given points.  Returns both
/// the wrapped angles and the underlying linear values.
pub fn simulate_wn(
    points: &[SpaceTimePoint],
    params: &WnParams,
    seed: u64,
) -> Result<(Vec<Angle>, Vec<f64>)> {
    let cov = build_covariance(
        points,
        params.corr(),
        params.sigma2(),
        &Nugget::Scalar(params.nugget()),
    )?;
    let mean = DVector::from_element(points.len(), params.mu().radians());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let y = cov.factor().sample_mvn(&mean, &mut rng);
    let angles = y
        .iter()
        .map(|&v| wrap(v))
        .collect::<Result<Vec<Angle>>>()?;
    Ok((angles, y.iter().copied().collect()))
}

/// Winding numbers implied by a linear value and its wrapped angle.
pub(crate) fn winding_numbers(angles: &[Angle], y: &[f64]) -> Vec<i32> {
    angles
        .iter()
        .zip(y)
        .map(|(a, &v)| ((v - a.radians()) / TAU).round() as i32)
        .collect()
}

/// Marginal Gaussian log-likelihood of unwrapped values `y` under the model.
pub fn wn_log_likelihood(
    points: &[SpaceTimePoint],
    y: &[f64],
    params: &WnParams,
) -> Result<f64> {
    if points.len() != y.len() {
        return Err(Error::LengthMismatch {
            context: "points vs unwrapped values",
            left: points.len(),
            right: y.len(),
        });
    }
    let cov = build_covariance(
        points,
        params.corr(),
        params.sigma2(),
        &Nugget::Scalar(params.nugget()),
    )?;
    let mean = DVector::from_element(points.len(), params.mu().radians());
    let yv = DVector::from_column_slice(y);
    Ok(cov.factor().mvn_log_density(&yv, &mean))
}

/// Conditional mean and variance of the linear process at one target given
/// unwrapped data `y`:
/// `M = μ + c₀ᵀ(σ²C+φ²I)⁻¹(y-μ1)`, `V = σ²+φ² - c₀ᵀ(σ²C+φ²I)⁻¹c₀`.
pub fn wn_conditional_moments(
    points: &[SpaceTimePoint],
    y: &[f64],
    params: &WnParams,
    target: &SpaceTimePoint,
) -> Result<(f64, f64)> {
    let cov = build_covariance(
        points,
        params.corr(),
        params.sigma2(),
        &Nugget::Scalar(params.nugget()),
    )?;
    let mu = params.mu().radians();
    let resid = DVector::from_fn(y.len(), |i, _| y[i] - mu);
    let c0 = cross_covariance(points, target, params.corr(), params.sigma2());
    let w = cov.factor().solve(&resid);
    let s = cov.factor().solve(&c0);
    let m = mu + c0.dot(&w);
    let v = params.sigma2() + params.nugget() - c0.dot(&s);
    Ok((m, v))
}

// ---------------------------------------------------------------------------
// Sampling engine
// ---------------------------------------------------------------------------

/// Mean structure of a wrapped-model fit.
#[derive(Debug, Clone)]
pub(crate) enum WnMeanSpec {
    /// One circular mean per factor cell (a single cell for the plain model).
    CellMeans(WrappedNormalPrior),
    /// Linear predictor through the inverse-tan link; independent normal
    /// priors per coefficient.
    Regression(RegressionDesign, NormalPrior),
}

/// Full model specification handed to the engine.
#[derive(Debug, Clone)]
pub(crate) struct WnModelSpec {
    /// Factor cell per observation (all zero for the plain model).
    pub cells: Vec<usize>,
    pub n_cells: usize,
    pub cell_labels: Vec<String>,
    pub mean: WnMeanSpec,
    pub sigma2_prior: InvGammaPrior,
    pub nugget_prior: InvGammaPrior,
    pub corr: CorrPriors,
}

impl WnModelSpec {
    pub fn constant(priors: &WnPriors, n: usize) -> Self {
        WnModelSpec {
            cells: vec![0; n],
            n_cells: 1,
            cell_labels: vec!["all".to_string()],
            mean: WnMeanSpec::CellMeans(priors.mu),
            sigma2_prior: priors.sigma2,
            nugget_prior: priors.nugget,
            corr: priors.corr,
        }
    }
}

/// Current mean-state of the engine.
#[derive(Debug, Clone)]
pub(crate) enum WnMeanState {
    /// Cell means in `[0, 2π)`.
    CellMeans(Vec<f64>),
    /// Regression coefficients.
    Regression(Vec<f64>),
}

const INITIAL_STEP: f64 = 0.5;
/// Hard cap on the winding-number window half-width.
const K_MAX_CAP: u32 = 50;

/// Metropolis-within-Gibbs engine for all wrapped-model variants.
///
/// Update order per sweep: winding numbers (discrete Gibbs per observation),
/// mean block (random walk), per-cell variances and nuggets (log-scale random
/// walk), correlation parameters (log/logit-scale random walk).  The
/// covariance factorization is reused across blocks that do not change it.
pub(crate) struct WnEngine {
    n: usize,
    x: Vec<f64>,
    lag: LagTable,
    spec: WnModelSpec,
    k_max: i32,

    mean_state: WnMeanState,
    sigma2: Vec<f64>,
    nugget: Vec<f64>,
    corr: GneitingParams,
    k: Vec<i32>,

    y: DVector<f64>,
    mean_vec: DVector<f64>,
    resid: DVector<f64>,
    obs_sd: Vec<f64>,
    obs_nugget: Vec<f64>,
    corr_mat: DMatrix<f64>,
    cov: DMatrix<f64>,
    factor: SpdFactor,
    loglik: f64,

    corr_work: DMatrix<f64>,
    cov_work: DMatrix<f64>,

    mean_scales: Vec<AdaptiveScale>,
    s2_scales: Vec<AdaptiveScale>,
    nug_scales: Vec<AdaptiveScale>,
    corr_scales: Vec<AdaptiveScale>,
    /// Winding-number clamps forced by mean recentering at the window edge
    /// (expected to stay at zero; a nonzero count flags a too-small k_max).
    pub k_clamp_events: u64,
}

/// Conservative reference variance for the winding window: a high prior
/// quantile of `σ² + φ²`, floored by the initialization values.
fn k_max_reference(
    sigma2_prior: &InvGammaPrior,
    nugget_prior: &InvGammaPrior,
    init_sigma2: f64,
    init_nugget: f64,
) -> f64 {
    let q = |p: &InvGammaPrior| p.quantile(0.999).min(1e6);
    (q(sigma2_prior) + q(nugget_prior)).max(init_sigma2 + init_nugget)
}

impl WnEngine {
    pub fn new(
        points: &[SpaceTimePoint],
        angles: &[Angle],
        spec: WnModelSpec,
        k_max_policy: KMaxPolicy,
    ) -> Result<Self> {
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

        // Initialization: per-cell circular means, variances from the
        // resultant length via σ² = -2·log(R̄), winding numbers at zero,
        // correlation parameters at their prior means.
        let mut cell_members: Vec<Vec<usize>> = vec![Vec::new(); spec.n_cells];
        for (i, &c) in spec.cells.iter().enumerate() {
            cell_members[c].push(i);
        }
        let mut init_mu = vec![0.0; spec.n_cells];
        let mut init_s2 = vec![spec.sigma2_prior.central_value(); spec.n_cells];
        for c in 0..spec.n_cells {
            if cell_members[c].is_empty() {
                return Err(Error::config(format!(
                    "factor cell '{}' has no observations",
                    spec.cell_labels.get(c).map(String::as_str).unwrap_or("?")
                )));
            }
            let cell_angles: Vec<Angle> = cell_members[c].iter().map(|&i| angles[i]).collect();
            let s = circ_summary(&cell_angles)?;
            init_mu[c] = match (&spec.mean, s.mean_direction) {
                (WnMeanSpec::CellMeans(prior), None) => prior.mean().radians(),
                (_, Some(d)) => d.radians(),
                (WnMeanSpec::Regression(..), None) => 0.0,
            };
            if s.mean_resultant_length > 1e-6 {
                init_s2[c] = (-2.0 * s.mean_resultant_length.ln()).clamp(1e-4, 100.0);
            }
        }
        let init_nugget = vec![spec.nugget_prior.central_value(); spec.n_cells];

        let mean_state = match &spec.mean {
            WnMeanSpec::CellMeans(_) => WnMeanState::CellMeans(init_mu),
            WnMeanSpec::Regression(design, _) => {
                if design.n_rows() != n {
                    return Err(Error::LengthMismatch {
                        context: "design rows vs observations",
                        left: design.n_rows(),
                        right: n,
                    });
                }
                WnMeanState::Regression(vec![0.0; design.n_coeffs()])
            }
        };

        let corr = GneitingParams::new(
            spec.corr.a.mean(),
            spec.corr.c.mean(),
            spec.corr.alpha.mean(),
            spec.corr.beta.mean(),
            spec.corr.gamma.mean(),
        )?;

        let max_s2 = init_s2.iter().cloned().fold(0.0, f64::max);
        let max_ng = init_nugget.iter().cloned().fold(0.0, f64::max);
        let k_max = match k_max_policy {
            KMaxPolicy::Fixed(k) => k.max(1),
            KMaxPolicy::Auto => density::default_k_max(k_max_reference(
                &spec.sigma2_prior,
                &spec.nugget_prior,
                max_s2,
                max_ng,
            )),
        }
        .min(K_MAX_CAP) as i32;

        let n_mean_blocks = match &mean_state {
            WnMeanState::CellMeans(v) => v.len(),
            WnMeanState::Regression(v) => v.len(),
        };
        let mut engine = WnEngine {
            n,
            x: angles.iter().map(|a| a.radians()).collect(),
            lag: LagTable::new(points),
            spec,
            k_max,
            mean_state,
            sigma2: init_s2,
            nugget: init_nugget,
            corr,
            k: vec![0; n],
            y: DVector::zeros(n),
            mean_vec: DVector::zeros(n),
            resid: DVector::zeros(n),
            obs_sd: vec![0.0; n],
            obs_nugget: vec![0.0; n],
            corr_mat: DMatrix::zeros(n, n),
            cov: DMatrix::zeros(n, n),
            // Placeholder factor; refresh() installs the real one.
            factor: SpdFactor::new(&DMatrix::identity(n, n))?,
            loglik: 0.0,
            corr_work: DMatrix::zeros(n, n),
            cov_work: DMatrix::zeros(n, n),
            mean_scales: vec![AdaptiveScale::new(INITIAL_STEP); n_mean_blocks],
            s2_scales: vec![AdaptiveScale::new(INITIAL_STEP); 0],
            nug_scales: vec![AdaptiveScale::new(INITIAL_STEP); 0],
            corr_scales: vec![AdaptiveScale::new(INITIAL_STEP); 5],
            k_clamp_events: 0,
        };
        engine.s2_scales = vec![AdaptiveScale::new(INITIAL_STEP); engine.spec.n_cells];
        engine.nug_scales = vec![AdaptiveScale::new(INITIAL_STEP); engine.spec.n_cells];
        engine.refresh_all()?;
        if !engine.loglik.is_finite() {
            return Err(Error::config(
                "non-finite likelihood at initialization; consider a wider k_max or checking the data scale",
            ));
        }
        Ok(engine)
    }

    pub fn k_max(&self) -> u32 {
        self.k_max as u32
    }

    pub fn k(&self) -> &[i32] {
        &self.k
    }

    pub fn sigma2s(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn nuggets(&self) -> &[f64] {
        &self.nugget
    }

    pub fn corr_params(&self) -> &GneitingParams {
        &self.corr
    }

    /// Per-observation process mean implied by the current mean state.
    pub fn point_means(&self) -> &DVector<f64> {
        &self.mean_vec
    }

    /// Cholesky factor of the current observation covariance.
    pub fn cov_factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub fn mean_state(&self) -> &WnMeanState {
        &self.mean_state
    }

    #[cfg(test)]
    pub fn loglik(&self) -> f64 {
        self.loglik
    }

    /// Parameters of a single-cell (plain) model.
    pub fn constant_params(&self) -> Result<WnParams> {
        let mu = match &self.mean_state {
            WnMeanState::CellMeans(v) if v.len() == 1 => wrap(v[0])?,
            _ => return Err(Error::config("not a single-cell constant-mean model")),
        };
        WnParams::new(mu, self.sigma2[0], self.nugget[0], self.corr)
    }

    /// Replaces the full parameter state (latent winding numbers unchanged),
    /// rebuilding every cache.
    pub fn set_state(
        &mut self,
        mean: WnMeanState,
        sigma2: Vec<f64>,
        nugget: Vec<f64>,
        corr: GneitingParams,
    ) -> Result<()> {
        match (&self.mean_state, &mean) {
            (WnMeanState::CellMeans(a), WnMeanState::CellMeans(b)) if a.len() == b.len() => {}
            (WnMeanState::Regression(a), WnMeanState::Regression(b)) if a.len() == b.len() => {}
            _ => return Err(Error::config("mean-state shape mismatch")),
        }
        if sigma2.len() != self.spec.n_cells || nugget.len() != self.spec.n_cells {
            return Err(Error::config("variance vector length mismatch"));
        }
        self.mean_state = mean;
        self.sigma2 = sigma2;
        self.nugget = nugget;
        self.corr = corr;
        self.refresh_all()
    }

    /// Replaces the observed angles and winding numbers (parameters kept).
    pub fn set_data(&mut self, angles: &[Angle], k: &[i32]) -> Result<()> {
        if angles.len() != self.n || k.len() != self.n {
            return Err(Error::LengthMismatch {
                context: "replacement data",
                left: angles.len(),
                right: self.n,
            });
        }
        if k.iter().any(|&ki| ki.unsigned_abs() > self.k_max as u32) {
            return Err(Error::config("winding number outside the truncation window"));
        }
        self.x = angles.iter().map(|a| a.radians()).collect();
        self.k.copy_from_slice(k);
        self.refresh_observation_caches();
        Ok(())
    }

    fn refresh_all(&mut self) -> Result<()> {
        self.refresh_mean_vec();
        for i in 0..self.n {
            let c = self.spec.cells[i];
            self.obs_sd[i] = self.sigma2[c].sqrt();
            self.obs_nugget[i] = self.nugget[c];
        }
        self.lag.fill_corr(&self.corr, &mut self.corr_mat);
        assemble_cov(
            &self.corr_mat,
            &self.obs_sd,
            &self.obs_nugget,
            &mut self.cov,
        );
        self.factor = SpdFactor::new(&self.cov)?;
        self.refresh_observation_caches();
        Ok(())
    }

    fn refresh_observation_caches(&mut self) {
        for i in 0..self.n {
            self.y[i] = self.x[i] + TAU * self.k[i] as f64;
            self.resid[i] = self.y[i] - self.mean_vec[i];
        }
        self.loglik = self.gaussian_loglik(&self.resid, &self.factor);
    }

    fn refresh_mean_vec(&mut self) {
        match (&self.mean_state, &self.spec.mean) {
            (WnMeanState::CellMeans(mu), _) => {
                for i in 0..self.n {
                    self.mean_vec[i] = mu[self.spec.cells[i]];
                }
            }
            (WnMeanState::Regression(eta), WnMeanSpec::Regression(design, _)) => {
                let lp = design.matrix() * DVector::from_column_slice(eta);
                for i in 0..self.n {
                    self.mean_vec[i] = 2.0 * lp[i].atan();
                }
            }
            _ => unreachable!("state/spec mean kinds always match"),
        }
    }

    fn gaussian_loglik(&self, resid: &DVector<f64>, factor: &SpdFactor) -> f64 {
        -0.5 * (self.n as f64 * TAU.ln() + factor.log_det() + factor.inv_quad(resid))
    }

    /// One full Metropolis-within-Gibbs sweep.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, adapting: bool) {
        let precision = self.factor.inverse();
        self.update_k(rng, &precision);
        self.update_mean(rng, adapting);
        self.update_variances(rng, adapting);
        self.update_corr(rng, adapting);
    }

    /// Discrete Gibbs update of every winding number.  The conditional of
    /// `yᵢ` given the rest is Gaussian; each candidate `xᵢ + 2πk` in the
    /// window is weighted by that conditional.
    fn update_k<R: Rng + ?Sized>(&mut self, rng: &mut R, omega: &DMatrix<f64>) {
        let width = (2 * self.k_max + 1) as usize;
        let mut logw = vec![0.0; width];
        for i in 0..self.n {
            let col = omega.column(i);
            let oii = col[i];
            let mut g = 0.0;
            for j in 0..self.n {
                g += col[j] * self.resid[j];
            }
            let ci = g - oii * self.resid[i];
            let base = self.x[i] - self.mean_vec[i];
            let mut max = f64::NEG_INFINITY;
            for (idx, lw) in logw.iter_mut().enumerate() {
                let v = base + TAU * (idx as i32 - self.k_max) as f64;
                *lw = -0.5 * oii * v * v - v * ci;
                if *lw > max {
                    max = *lw;
                }
            }
            let mut total = 0.0;
            for lw in logw.iter_mut() {
                *lw = (*lw - max).exp();
                total += *lw;
            }
            let u = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = width - 1;
            for (idx, w) in logw.iter().enumerate() {
                acc += *w;
                if u <= acc {
                    chosen = idx;
                    break;
                }
            }
            let k_new = chosen as i32 - self.k_max;
            self.k[i] = k_new;
            self.y[i] = self.x[i] + TAU * k_new as f64;
            self.resid[i] = self.y[i] - self.mean_vec[i];
        }
        self.loglik = self.gaussian_loglik(&self.resid, &self.factor);
    }

    fn update_mean<R: Rng + ?Sized>(&mut self, rng: &mut R, adapting: bool) {
        match &self.spec.mean {
            WnMeanSpec::CellMeans(prior) => {
                let prior = *prior;
                self.update_cell_means(rng, adapting, &prior);
            }
            WnMeanSpec::Regression(_, prior) => {
                let prior = *prior;
                self.update_regression(rng, adapting, &prior);
            }
        }
    }

    fn update_cell_means<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        adapting: bool,
        prior: &WrappedNormalPrior,
    ) {
        let n_cells = self.spec.n_cells;
        for c in 0..n_cells {
            let current = match &self.mean_state {
                WnMeanState::CellMeans(v) => v[c],
                _ => unreachable!(),
            };
            let step = self.mean_scales[c].step();
            let prop = current + step * standard_normal(rng);
            let lp_diff = prior.log_pdf_unwrapped(prop) - prior.log_pdf_unwrapped(current);
            let delta = prop - current;
            let mut resid_new = self.resid.clone();
            for i in 0..self.n {
                if self.spec.cells[i] == c {
                    resid_new[i] -= delta;
                }
            }
            let ll_new = self.gaussian_loglik(&resid_new, &self.factor);
            let accepted = lp_diff.is_finite()
                && metropolis_accept(rng, ll_new - self.loglik + lp_diff);
            if accepted {
                if let WnMeanState::CellMeans(v) = &mut self.mean_state {
                    v[c] = prop;
                }
                self.resid = resid_new;
                self.loglik = ll_new;
                for i in 0..self.n {
                    if self.spec.cells[i] == c {
                        self.mean_vec[i] = prop;
                    }
                }
                self.recenter_cell(c);
            }
            self.mean_scales[c].record(accepted, adapting);
        }
    }

    /// Folds an accepted cell mean back into `[0, 2π)`, shifting the cell's
    /// winding numbers and unwrapped values by whole turns so the residuals
    /// (and hence the likelihood) are untouched.  Without this the chain
    /// could not cross the 0/2π cut: a move of μ across the cut changes
    /// every `yᵢ - μ` by ±2π unless the `kᵢ` come along.
    fn recenter_cell(&mut self, c: usize) {
        let current = match &self.mean_state {
            WnMeanState::CellMeans(v) => v[c],
            _ => unreachable!(),
        };
        if (0.0..TAU).contains(&current) {
            return;
        }
        let wrapped = current.rem_euclid(TAU);
        let wrapped = if wrapped >= TAU { 0.0 } else { wrapped };
        let turns = ((current - wrapped) / TAU).round() as i32;
        if let WnMeanState::CellMeans(v) = &mut self.mean_state {
            v[c] = wrapped;
        }
        let mut clamped = false;
        for i in 0..self.n {
            if self.spec.cells[i] != c {
                continue;
            }
            let mut k_new = self.k[i] - turns;
            if k_new.unsigned_abs() > self.k_max as u32 {
                k_new = k_new.clamp(-self.k_max, self.k_max);
                clamped = true;
                self.k_clamp_events += 1;
            }
            self.k[i] = k_new;
            self.y[i] = self.x[i] + TAU * k_new as f64;
            self.mean_vec[i] = wrapped;
            self.resid[i] = self.y[i] - self.mean_vec[i];
        }
        if clamped {
            // The clamp moved some y by a full turn; the cached likelihood
            // is stale.  (Practically unreachable with the default window.)
            self.loglik = self.gaussian_loglik(&self.resid, &self.factor);
        }
    }

    fn update_regression<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        adapting: bool,
        prior: &NormalPrior,
    ) {
        let p = match &self.mean_state {
            WnMeanState::Regression(eta) => eta.len(),
            _ => unreachable!(),
        };
        for j in 0..p {
            let eta = match &self.mean_state {
                WnMeanState::Regression(v) => v.clone(),
                _ => unreachable!(),
            };
            let step = self.mean_scales[j].step();
            let mut eta_new = eta.clone();
            eta_new[j] += step * standard_normal(rng);
            let lp_diff = prior.log_pdf(eta_new[j]) - prior.log_pdf(eta[j]);
            let design = match &self.spec.mean {
                WnMeanSpec::Regression(d, _) => d,
                _ => unreachable!(),
            };
            let lp = design.matrix() * DVector::from_column_slice(&eta_new);
            let mut resid_new = DVector::zeros(self.n);
            let mut mean_new = DVector::zeros(self.n);
            for i in 0..self.n {
                mean_new[i] = 2.0 * lp[i].atan();
                resid_new[i] = self.y[i] - mean_new[i];
            }
            let ll_new = self.gaussian_loglik(&resid_new, &self.factor);
            let accepted = metropolis_accept(rng, ll_new - self.loglik + lp_diff);
            if accepted {
                if let WnMeanState::Regression(v) = &mut self.mean_state {
                    *v = eta_new;
                }
                self.mean_vec = mean_new;
                self.resid = resid_new;
                self.loglik = ll_new;
            }
            self.mean_scales[j].record(accepted, adapting);
        }
    }

    fn update_variances<R: Rng + ?Sized>(&mut self, rng: &mut R, adapting: bool) {
        for c in 0..self.spec.n_cells {
            // Process variance, log scale.
            let current = self.sigma2[c];
            let step = self.s2_scales[c].step();
            let prop = (current.ln() + step * standard_normal(rng)).exp();
            let prior = self.spec.sigma2_prior;
            let accepted = self.try_variance_move(rng, c, prop, true, &prior);
            self.s2_scales[c].record(accepted, adapting);

            // Nugget, log scale.
            let current = self.nugget[c];
            let step = self.nug_scales[c].step();
            let prop = (current.ln() + step * standard_normal(rng)).exp();
            let prior = self.spec.nugget_prior;
            let accepted = self.try_variance_move(rng, c, prop, false, &prior);
            self.nug_scales[c].record(accepted, adapting);
        }
    }

    /// Shared accept/reject for a per-cell variance or nugget proposal
    /// (`is_sigma2` selects which).  Includes the log-scale Jacobian.
    fn try_variance_move<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        c: usize,
        prop: f64,
        is_sigma2: bool,
        prior: &InvGammaPrior,
    ) -> bool {
        if !prop.is_finite() || prop <= 0.0 {
            return false;
        }
        let current = if is_sigma2 {
            self.sigma2[c]
        } else {
            self.nugget[c]
        };
        let mut sd_new = self.obs_sd.clone();
        let mut ng_new = self.obs_nugget.clone();
        for i in 0..self.n {
            if self.spec.cells[i] == c {
                if is_sigma2 {
                    sd_new[i] = prop.sqrt();
                } else {
                    ng_new[i] = prop;
                }
            }
        }
        assemble_cov(&self.corr_mat, &sd_new, &ng_new, &mut self.cov_work);
        let factor_new = match SpdFactor::new(&self.cov_work) {
            Ok(f) => f,
            Err(_) => return false, // numerically refused proposal
        };
        let ll_new = self.gaussian_loglik(&self.resid, &factor_new);
        let log_ratio = ll_new - self.loglik + prior.log_pdf(prop) - prior.log_pdf(current)
            + prop.ln()
            - current.ln();
        if metropolis_accept(rng, log_ratio) {
            if is_sigma2 {
                self.sigma2[c] = prop;
            } else {
                self.nugget[c] = prop;
            }
            self.obs_sd = sd_new;
            self.obs_nugget = ng_new;
            std::mem::swap(&mut self.cov, &mut self.cov_work);
            self.factor = factor_new;
            self.loglik = ll_new;
            true
        } else {
            false
        }
    }

    fn update_corr<R: Rng + ?Sized>(&mut self, rng: &mut R, adapting: bool) {
        for idx in 0..5 {
            let step = self.corr_scales[idx].step();
            let z = standard_normal(rng);
            let cur = self.corr;
            // Positive parameters walk on log scale, unit-interval ones on
            // logit scale; the Jacobian terms below make the walk target the
            // prior on the natural scale.
            let (prop_params, log_jac_diff, lp_diff) = match idx {
                0 => {
                    let prop = (cur.a().ln() + step * z).exp();
                    (
                        GneitingParams::new(prop, cur.c(), cur.alpha(), cur.beta(), cur.gamma()),
                        prop.ln() - cur.a().ln(),
                        self.spec.corr.a.log_pdf(prop) - self.spec.corr.a.log_pdf(cur.a()),
                    )
                }
                1 => {
                    let prop = (cur.c().ln() + step * z).exp();
                    (
                        GneitingParams::new(cur.a(), prop, cur.alpha(), cur.beta(), cur.gamma()),
                        prop.ln() - cur.c().ln(),
                        self.spec.corr.c.log_pdf(prop) - self.spec.corr.c.log_pdf(cur.c()),
                    )
                }
                2 => {
                    let prop = logistic(logit(cur.alpha()) + step * z);
                    (
                        GneitingParams::new(cur.a(), cur.c(), prop, cur.beta(), cur.gamma()),
                        logit_jacobian(prop) - logit_jacobian(cur.alpha()),
                        self.spec.corr.alpha.log_pdf(prop)
                            - self.spec.corr.alpha.log_pdf(cur.alpha()),
                    )
                }
                3 => {
                    let prop = logistic(logit(cur.beta()) + step * z);
                    (
                        GneitingParams::new(cur.a(), cur.c(), cur.alpha(), prop, cur.gamma()),
                        logit_jacobian(prop) - logit_jacobian(cur.beta()),
                        self.spec.corr.beta.log_pdf(prop)
                            - self.spec.corr.beta.log_pdf(cur.beta()),
                    )
                }
                _ => {
                    let prop = logistic(logit(cur.gamma()) + step * z);
                    (
                        GneitingParams::new(cur.a(), cur.c(), cur.alpha(), cur.beta(), prop),
                        logit_jacobian(prop) - logit_jacobian(cur.gamma()),
                        self.spec.corr.gamma.log_pdf(prop)
                            - self.spec.corr.gamma.log_pdf(cur.gamma()),
                    )
                }
            };
            let accepted = match prop_params {
                Ok(prop_params) if lp_diff.is_finite() || lp_diff == f64::NEG_INFINITY => {
                    self.try_corr_move(rng, prop_params, lp_diff + log_jac_diff)
                }
                _ => false,
            };
            self.corr_scales[idx].record(accepted, adapting);
        }
    }

    fn try_corr_move<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        prop: GneitingParams,
        log_prior_and_jac: f64,
    ) -> bool {
        self.lag.fill_corr(&prop, &mut self.corr_work);
        // Reuse cov storage by assembling into the spare buffer.
        let mut cov_new = std::mem::replace(&mut self.cov_work, DMatrix::zeros(0, 0));
        assemble_cov(&self.corr_work, &self.obs_sd, &self.obs_nugget, &mut cov_new);
        let factor_new = match SpdFactor::new(&cov_new) {
            Ok(f) => f,
            Err(_) => {
                self.cov_work = cov_new;
                return false;
            }
        };
        let ll_new = self.gaussian_loglik(&self.resid, &factor_new);
        if metropolis_accept(rng, ll_new - self.loglik + log_prior_and_jac) {
            self.corr = prop;
            std::mem::swap(&mut self.corr_mat, &mut self.corr_work);
            self.cov_work = std::mem::replace(&mut self.cov, cov_new);
            self.factor = factor_new;
            self.loglik = ll_new;
            true
        } else {
            self.cov_work = cov_new;
            false
        }
    }

    /// Post-adaptation acceptance rates for every Metropolis block.
    pub fn block_rates(&self) -> Vec<BlockRate> {
        let mut out = Vec::new();
        let single = self.spec.n_cells == 1;
        let mean_name = |j: usize| match &self.spec.mean {
            WnMeanSpec::CellMeans(_) if single => "mu".to_string(),
            WnMeanSpec::CellMeans(_) => format!("mu[{}]", self.spec.cell_labels[j]),
            WnMeanSpec::Regression(design, _) => format!("eta[{}]", design.names()[j]),
        };
        for (j, s) in self.mean_scales.iter().enumerate() {
            out.push(BlockRate {
                name: mean_name(j),
                rate: s.frozen_rate(),
            });
        }
        for (c, s) in self.s2_scales.iter().enumerate() {
            let name = if single {
                "sigma2".to_string()
            } else {
                format!("sigma2[{}]", self.spec.cell_labels[c])
            };
            out.push(BlockRate {
                name,
                rate: s.frozen_rate(),
            });
        }
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

pub(crate) fn assemble_cov(
    corr: &DMatrix<f64>,
    sd: &[f64],
    nugget: &[f64],
    out: &mut DMatrix<f64>,
) {
    let n = sd.len();
    if out.nrows() != n {
        *out = DMatrix::zeros(n, n);
    }
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] = sd[i] * sd[j] * corr[(i, j)];
        }
        out[(j, j)] += nugget[j];
    }
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(rand_distr::StandardNormal)
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

pub(crate) fn require_two_distinct(points: &[SpaceTimePoint]) -> Result<()> {
    if points.len() < 2 || points.iter().all(|p| p == &points[0]) {
        return Err(Error::config(
            "fitting needs at least two distinct space-time points",
        ));
    }
    Ok(())
}

/// Fits the wrapped model by Metropolis-within-Gibbs.  Deterministic given
/// the seed.
pub fn fit_wn(
    dataset: &Dataset,
    priors: &WnPriors,
    mcmc: &McmcConfig,
    seed: u64,
) -> Result<WnChain> {
    mcmc.validate()?;
    require_two_distinct(dataset.points())?;
    let spec = WnModelSpec::constant(priors, dataset.len());
    let mut engine = WnEngine::new(dataset.points(), dataset.angles(), spec, mcmc.k_max)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(mcmc.retained());
    for iter in 0..mcmc.iterations {
        let adapting = mcmc.adapt && iter < mcmc.burn_in;
        engine.sweep(&mut rng, adapting);
        if iter >= mcmc.burn_in && (iter - mcmc.burn_in) % mcmc.thin == 0 {
            draws.push(WnDraw {
                params: engine.constant_params()?,
                k: engine.k().to_vec(),
            });
        }
    }
    Ok(WnChain {
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

/// Composition-sampling prediction at the target points: every retained draw
/// contributes one predictive angle per target, drawn from the conditional
/// Gaussian law of the linear process and wrapped.
pub fn krige_wn(
    chain: &WnChain,
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
    let mut cov = DMatrix::zeros(n, n);
    let mut per_target: Vec<Vec<Angle>> =
        vec![Vec::with_capacity(chain.draws.len()); targets.len()];
    for draw in &chain.draws {
        if draw.k.len() != n {
            return Err(Error::LengthMismatch {
                context: "winding numbers vs dataset",
                left: draw.k.len(),
                right: n,
            });
        }
        let p = &draw.params;
        lag.fill_corr(p.corr(), &mut corr);
        let sd = vec![p.sigma2().sqrt(); n];
        let ng = vec![p.nugget(); n];
        assemble_cov(&corr, &sd, &ng, &mut cov);
        let factor = SpdFactor::new(&cov)?;
        let mu = p.mu().radians();
        let resid = DVector::from_fn(n, |i, _| {
            dataset.angles()[i].radians() + TAU * draw.k[i] as f64 - mu
        });
        let w = factor.solve(&resid);
        let c0 = DMatrix::from_fn(n, targets.len(), |i, j, | {
            p.sigma2()
                * crate::covariance::gneiting_corr(
                    dataset.points()[i].spatial_distance(&targets[j]),
                    dataset.points()[i].time_lag(&targets[j]),
                    p.corr(),
                )
        });
        let s = factor.solve_mat(&c0);
        for (j, bucket) in per_target.iter_mut().enumerate() {
            let c0j = c0.column(j);
            let m = mu + c0j.dot(&w);
            let v = (p.sigma2() + p.nugget() - c0j.dot(&s.column(j))).max(0.0);
            let y_star = m + v.sqrt() * standard_normal(&mut rng);
            bucket.push(wrap(y_star)?);
        }
    }
    PredictiveSamples::from_target_draws(targets.to_vec(), per_target)
}

/// Posterior summary table: circular mean + shortest 95% arc for the mean
/// direction, means + equal-tailed 95% intervals for everything else.
pub fn summarize_wn(chain: &WnChain) -> Result<Vec<ParamSummary>> {
    if chain.draws.len() < 100 {
        return Err(Error::ChainTooShort {
            len: chain.draws.len(),
            min: 100,
        });
    }
    let mu: Vec<Angle> = chain.draws.iter().map(|d| d.params.mu()).collect();
    let mut out = vec![summarize_circular("mu", &mu)?];
    let pull = |f: fn(&WnParams) -> f64| -> Vec<f64> {
        chain.draws.iter().map(|d| f(&d.params)).collect()
    };
    out.push(summarize_linear("sigma2", &pull(|p| p.sigma2()))?);
    out.push(summarize_linear("nugget", &pull(|p| p.nugget()))?);
    out.push(summarize_linear("a", &pull(|p| p.corr().a()))?);
    out.push(summarize_linear("c", &pull(|p| p.corr().c()))?);
    out.push(summarize_linear("alpha", &pull(|p| p.corr().alpha()))?);
    out.push(summarize_linear("beta", &pull(|p| p.corr().beta()))?);
    out.push(summarize_linear("gamma", &pull(|p| p.corr().gamma()))?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::{BetaPrior, GammaPrior};
    use approx::assert_relative_eq;

    pub(crate) fn toy_points(n_sites: usize, n_times: u32) -> Vec<SpaceTimePoint> {
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

    fn toy_params() -> WnParams {
        WnParams::new(
            wrap(std::f64::consts::PI).unwrap(),
            0.3,
            0.05,
            GneitingParams::new(1.0, 0.2, 0.5, 0.5, 0.5).unwrap(),
        )
        .unwrap()
    }

    fn toy_priors() -> WnPriors {
        WnPriors {
            mu: WrappedNormalPrior::new(wrap(std::f64::consts::PI).unwrap(), 5.0).unwrap(),
            sigma2: InvGammaPrior::new(3.0, 0.6).unwrap(),
            nugget: InvGammaPrior::new(3.0, 0.1).unwrap(),
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
    fn simulate_is_deterministic_and_degenerate_variance_pins_angles() {
        let points = toy_points(4, 3);
        let p = toy_params();
        let (a1, y1) = simulate_wn(&points, &p, 42).unwrap();
        let (a2, y2) = simulate_wn(&points, &p, 42).unwrap();
        assert_eq!(y1, y2);
        assert_eq!(a1.len(), a2.len());
        for (u, v) in a1.iter().zip(&a2) {
            assert_eq!(u.radians(), v.radians());
        }
        let tiny = WnParams::new(p.mu(), 1e-12, 1e-12, *p.corr()).unwrap();
        let (angles, _) = simulate_wn(&points, &tiny, 7).unwrap();
        for a in angles {
            assert!((a.radians() - std::f64::consts::PI).abs() < 1e-4);
        }
    }

    #[test]
    fn winding_numbers_roundtrip() {
        let y = vec![-2.0, 0.5, 7.0, 13.0];
        let angles: Vec<Angle> = y.iter().map(|&v| wrap(v).unwrap()).collect();
        assert_eq!(winding_numbers(&angles, &y), vec![-1, 0, 1, 2]);
    }

    #[test]
    fn fit_is_deterministic_and_records_rates() {
        let points = toy_points(4, 3);
        let p = toy_params();
        let (angles, _) = simulate_wn(&points, &p, 1).unwrap();
        let ds = Dataset::new(points, angles).unwrap();
        let cfg = McmcConfig {
            iterations: 200,
            burn_in: 100,
            thin: 2,
            ..Default::default()
        };
        let c1 = fit_wn(&ds, &toy_priors(), &cfg, 5).unwrap();
        let c2 = fit_wn(&ds, &toy_priors(), &cfg, 5).unwrap();
        assert_eq!(c1.draws.len(), cfg.retained());
        assert_eq!(c1.draws.len(), c2.draws.len());
        for (a, b) in c1.draws.iter().zip(&c2.draws) {
            assert_eq!(a.params.sigma2(), b.params.sigma2());
            assert_eq!(a.params.mu().radians(), b.params.mu().radians());
            assert_eq!(a.k, b.k);
        }
        assert_eq!(c1.meta.acceptance.len(), 8); // mu, sigma2, nugget, 5 corr
        for r in &c1.meta.acceptance {
            assert!(r.rate >= 0.0 && r.rate <= 1.0, "{}: {}", r.name, r.rate);
        }
    }

    #[test]
    fn engine_likelihood_matches_public_marginal() {
        // After set_state/set_data the engine's cached Gaussian likelihood
        // must agree with the standalone evaluation at y = x + 2πk.
        let points = toy_points(3, 2);
        let p = toy_params();
        let y: Vec<f64> = (0..6).map(|i| 2.5 + 2.0 * (i as f64).sin()).collect();
        let angles: Vec<Angle> = y.iter().map(|&v| wrap(v).unwrap()).collect();
        let k = winding_numbers(&angles, &y);
        let spec = WnModelSpec::constant(&toy_priors(), 6);
        let mut e = WnEngine::new(&points, &angles, spec, KMaxPolicy::Fixed(4)).unwrap();
        e.set_state(
            WnMeanState::CellMeans(vec![p.mu().radians()]),
            vec![p.sigma2()],
            vec![p.nugget()],
            *p.corr(),
        )
        .unwrap();
        e.set_data(&angles, &k).unwrap();
        let expected = wn_log_likelihood(&points, &y, &p).unwrap();
        assert_relative_eq!(e.loglik(), expected, epsilon = 1e-10);
    }

    #[test]
    fn conditional_moments_interpolate_noiseless_data() {
        let points = toy_points(3, 2);
        let p = WnParams::new(
            wrap(3.0).unwrap(),
            0.5,
            1e-12,
            GneitingParams::new(0.5, 0.3, 0.5, 0.5, 0.5).unwrap(),
        )
        .unwrap();
        let y: Vec<f64> = (0..points.len()).map(|i| 3.0 + 0.2 * (i as f64).cos()).collect();
        let (m, v) = wn_conditional_moments(&points, &y, &p, &points[2]).unwrap();
        assert_relative_eq!(m, y[2], epsilon = 1e-5);
        assert!(v.abs() < 1e-4);
    }

    #[test]
    fn krige_requires_draws_and_targets() {
        let points = toy_points(3, 2);
        let p = toy_params();
        let (angles, _) = simulate_wn(&points, &p, 3).unwrap();
        let ds = Dataset::new(points.clone(), angles).unwrap();
        let empty = WnChain {
            draws: vec![],
            meta: ChainMeta {
                iterations: 0,
                burn_in: 0,
                thin: 1,
                seed: 0,
                acceptance: vec![],
            },
        };
        assert!(krige_wn(&empty, &ds, &points[..1], 0).is_err());
    }

    #[test]
    fn summarize_needs_a_real_chain() {
        let chain = WnChain {
            draws: vec![
                WnDraw {
                    params: toy_params(),
                    k: vec![0; 6],
                };
                99
            ],
            meta: ChainMeta {
                iterations: 99,
                burn_in: 0,
                thin: 1,
                seed: 0,
                acceptance: vec![],
            },
        };
        assert!(summarize_wn(&chain).is_err());
        let chain_ok = WnChain {
            draws: vec![
                WnDraw {
                    params: toy_params(),
                    k: vec![0; 6],
                };
                100
            ],
            ..chain
        };
        let rows = summarize_wn(&chain_ok).unwrap();
        assert_eq!(rows.len(), 8);
        match &rows[1].estimate {
            crate::summary::Estimate::Linear { mean, lower, upper } => {
                assert_relative_eq!(*mean, 0.3, epsilon = 1e-12);
                assert_eq!(*lower, *upper);
            }
            _ => panic!("sigma2 should be linear"),
        }
    }
}
