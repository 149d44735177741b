//! Joint-distribution self-checks for the samplers.
//!
//! Two ways of drawing from the same joint law of (parameters, data) must
//! agree: independent draws of parameters from the prior with data simulated
//! forward, versus a chain that alternates one parameter sweep with a fresh
//! data draw at the current parameters.  Any error in a conditional update —
//! a wrong Jacobian, a flipped sign, a stale cache — shows up as a mean shift
//! in some functional of the state.  Moments of both streams are compared by
//! z-scores, with batch-means standard errors on the chain side.
//!
//! Priors here are deliberately tight (every functional below has finite
//! variance, comfortably) and unrelated to the ones used for data analysis;
//! the check is about the transition kernels, not the model.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::angle::{atan_star, wrap, Angle};
use crate::covariance::{GneitingParams, SpaceTimePoint};
use crate::covariates::DesignInfo;
use crate::error::{Error, Result};
use crate::mcmc::KMaxPolicy;
use crate::priors::{
    BetaPrior, CorrPriors, GammaPrior, InvGammaPrior, NormalPrior, PnPriors, TruncNormalPrior,
    WnPriors, WrappedNormalPrior,
};
use crate::projected::{PnEngine, PnMeanSpec, PnModelSpec};
use crate::variants::Variant;
use crate::wrapped::{winding_numbers, WnEngine, WnMeanSpec, WnMeanState, WnModelSpec};

/// Budget of one check run.  `sweeps` draws are recorded on each side after
/// `warmup` adaptation sweeps (discarded, and adaptation is frozen afterwards
/// so the recorded kernel is fixed).  `k_max` fixes the winding window for
/// the wrapped families; simulated data falling outside it are redrawn, which
/// matches the truncation the sampler itself works under.
#[derive(Debug, Clone, Copy)]
pub struct GewekeConfig {
    pub sweeps: usize,
    pub warmup: usize,
    pub k_max: u32,
    pub seed: u64,
}

impl Default for GewekeConfig {
    fn default() -> Self {
        GewekeConfig {
            sweeps: 20_000,
            warmup: 2_000,
            k_max: 5,
            seed: 0x9E37,
        }
    }
}

/// One compared moment.
#[derive(Debug, Clone)]
pub struct FunctionalCheck {
    pub name: String,
    pub marginal_mean: f64,
    pub successive_mean: f64,
    pub z: f64,
}

/// All functional comparisons for one model.
#[derive(Debug, Clone)]
pub struct GewekeReport {
    pub model: String,
    pub checks: Vec<FunctionalCheck>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.z.abs())
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, bound: f64) -> bool {
        self.checks.iter().all(|c| c.z.is_finite() && c.z.abs() < bound)
    }
}

/// Checks the plain wrapped sampler on the given layout.
pub fn geweke_wn(points: &[SpaceTimePoint], cfg: &GewekeConfig) -> Result<GewekeReport> {
    let spec = WnModelSpec::constant(&tight_wn_priors()?, points.len());
    run_wn(points, spec, "WN", cfg)
}

/// Checks the plain projected sampler on the given layout.
pub fn geweke_pn(points: &[SpaceTimePoint], cfg: &GewekeConfig) -> Result<GewekeReport> {
    let spec = PnModelSpec::constant(&tight_pn_priors()?, points.len());
    run_pn(points, spec, "PN", cfg)
}

/// Checks a covariate-extended sampler; `design` must describe the same rows
/// as `points` with every factor cell occupied.
pub fn geweke_variant(
    variant: Variant,
    points: &[SpaceTimePoint],
    design: &DesignInfo,
    cfg: &GewekeConfig,
) -> Result<GewekeReport> {
    design.require_all_cells_occupied()?;
    let cells = design.cells();
    if cells.len() != points.len() {
        return Err(Error::LengthMismatch {
            context: "design rows vs points",
            left: cells.len(),
            right: points.len(),
        });
    }
    let n_cells = design.n_cells();
    let cell_labels = design.cell_labels();
    match variant {
        Variant::Wna => {
            let spec = WnModelSpec {
                cells,
                n_cells,
                cell_labels,
                mean: WnMeanSpec::CellMeans(tight_mu()?),
                sigma2_prior: tight_sigma2()?,
                nugget_prior: tight_nugget()?,
                corr: tight_corr()?,
            };
            run_wn(points, spec, variant.name(), cfg)
        }
        Variant::Wnr => {
            let spec = WnModelSpec {
                cells,
                n_cells,
                cell_labels,
                mean: WnMeanSpec::Regression(design.regression_design()?, tight_coeff()?),
                sigma2_prior: tight_sigma2()?,
                nugget_prior: tight_nugget()?,
                corr: tight_corr()?,
            };
            run_wn(points, spec, variant.name(), cfg)
        }
        Variant::Pna => {
            let spec = PnModelSpec {
                cells,
                n_cells,
                cell_labels,
                mean: PnMeanSpec::CellMeans(tight_pn_mean()?, tight_pn_mean()?),
                sigma2_prior: tight_sigma2()?,
                rho_prior: tight_rho()?,
                nugget_prior: tight_nugget()?,
                corr: tight_corr()?,
            };
            run_pn(points, spec, variant.name(), cfg)
        }
        Variant::Pnr => {
            let spec = PnModelSpec {
                cells,
                n_cells,
                cell_labels,
                mean: PnMeanSpec::Regression(design.regression_design()?, tight_coeff()?),
                sigma2_prior: tight_sigma2()?,
                rho_prior: tight_rho()?,
                nugget_prior: tight_nugget()?,
                corr: tight_corr()?,
            };
            run_pn(points, spec, variant.name(), cfg)
        }
    }
}

fn tight_corr() -> Result<CorrPriors> {
    Ok(CorrPriors {
        a: GammaPrior::new(2.0, 2.0)?,
        c: GammaPrior::new(2.0, 2.0)?,
        alpha: BetaPrior::new(2.0, 2.0)?,
        beta: BetaPrior::new(2.0, 2.0)?,
        gamma: BetaPrior::new(2.0, 2.0)?,
    })
}

fn tight_sigma2() -> Result<InvGammaPrior> {
    InvGammaPrior::new(6.0, 1.5)
}

fn tight_nugget() -> Result<InvGammaPrior> {
    InvGammaPrior::new(6.0, 0.6)
}

fn tight_mu() -> Result<WrappedNormalPrior> {
    WrappedNormalPrior::new(Angle::new(std::f64::consts::PI)?, 1.0)
}

fn tight_coeff() -> Result<NormalPrior> {
    NormalPrior::new(0.0, 1.0)
}

fn tight_pn_mean() -> Result<NormalPrior> {
    NormalPrior::new(1.0, 1.0)
}

fn tight_rho() -> Result<TruncNormalPrior> {
    TruncNormalPrior::new(0.0, 1.0)
}

fn tight_wn_priors() -> Result<WnPriors> {
    Ok(WnPriors {
        mu: tight_mu()?,
        sigma2: tight_sigma2()?,
        nugget: tight_nugget()?,
        corr: tight_corr()?,
    })
}

fn tight_pn_priors() -> Result<PnPriors> {
    Ok(PnPriors {
        mu1: tight_pn_mean()?,
        mu2: tight_pn_mean()?,
        sigma2_1: tight_sigma2()?,
        rho: tight_rho()?,
        nugget: tight_nugget()?,
        corr: tight_corr()?,
    })
}

/// Draws correlation parameters from their priors; the loop only retries the
/// measure-zero event of a boundary draw the constructor rejects.
fn draw_corr<R: Rng + ?Sized>(p: &CorrPriors, rng: &mut R) -> Result<GneitingParams> {
    for _ in 0..100 {
        let g = GneitingParams::new(
            p.a.sample(rng),
            p.c.sample(rng),
            p.alpha.sample(rng),
            p.beta.sample(rng),
            p.gamma.sample(rng),
        );
        if let Ok(g) = g {
            return Ok(g);
        }
    }
    Err(Error::config(
        "prior draws of correlation parameters kept landing outside the domain",
    ))
}

fn validate(cfg: &GewekeConfig) -> Result<()> {
    if cfg.sweeps < 16 {
        return Err(Error::config(
            "need at least 16 recorded sweeps to form batch means",
        ));
    }
    if cfg.k_max == 0 {
        return Err(Error::config("winding window must be positive"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Wrapped families
// ---------------------------------------------------------------------------

fn run_wn(
    points: &[SpaceTimePoint],
    spec: WnModelSpec,
    model: &str,
    cfg: &GewekeConfig,
) -> Result<GewekeReport> {
    validate(cfg)?;
    let names = wn_names(&spec);
    let placeholder = vec![Angle::new(0.0)?; points.len()];
    let mut engine = WnEngine::new(points, &placeholder, spec.clone(), KMaxPolicy::Fixed(cfg.k_max))?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    let mut marginal = Series::new(names.len());
    for _ in 0..cfg.sweeps {
        let (mean, sigma2, nugget, corr) = draw_wn_state(&spec, &mut rng)?;
        engine.set_state(mean, sigma2, nugget, corr)?;
        let (_, k) = draw_wn_data(&engine, &mut rng)?;
        marginal.push(&wn_values(&engine, &k));
    }

    let mut successive = Series::new(names.len());
    let (mean0, sigma20, nugget0, corr0) = draw_wn_state(&spec, &mut rng)?;
    engine.set_state(mean0, sigma20, nugget0, corr0)?;
    let (angles0, k0) = draw_wn_data(&engine, &mut rng)?;
    engine.set_data(&angles0, &k0)?;
    for sweep in 0..cfg.warmup + cfg.sweeps {
        engine.sweep(&mut rng, sweep < cfg.warmup);
        let (angles, k) = draw_wn_data(&engine, &mut rng)?;
        engine.set_data(&angles, &k)?;
        if sweep >= cfg.warmup {
            successive.push(&wn_values(&engine, engine.k()));
        }
    }

    Ok(build_report(model, names, &marginal, &successive))
}

/// One forward data draw at the engine's current parameters, redrawn until
/// every winding number fits the truncation window.
fn draw_wn_data<R: Rng + ?Sized>(
    engine: &WnEngine,
    rng: &mut R,
) -> Result<(Vec<Angle>, Vec<i32>)> {
    let k_max = engine.k_max();
    for _ in 0..10_000 {
        let y = engine.cov_factor().sample_mvn(engine.point_means(), rng);
        let angles = y
            .iter()
            .map(|&v| wrap(v))
            .collect::<Result<Vec<Angle>>>()?;
        let k = winding_numbers(&angles, y.as_slice());
        if k.iter().all(|&ki| ki.unsigned_abs() <= k_max) {
            return Ok((angles, k));
        }
    }
    Err(Error::config(
        "simulated winding numbers kept exceeding the truncation window",
    ))
}

fn draw_wn_state<R: Rng + ?Sized>(
    spec: &WnModelSpec,
    rng: &mut R,
) -> Result<(WnMeanState, Vec<f64>, Vec<f64>, GneitingParams)> {
    let mean = match &spec.mean {
        WnMeanSpec::CellMeans(p) => WnMeanState::CellMeans(
            (0..spec.n_cells).map(|_| p.sample(rng).radians()).collect(),
        ),
        WnMeanSpec::Regression(design, p) => WnMeanState::Regression(
            (0..design.n_coeffs()).map(|_| p.sample(rng)).collect(),
        ),
    };
    let sigma2 = (0..spec.n_cells)
        .map(|_| spec.sigma2_prior.sample(rng))
        .collect();
    let nugget = (0..spec.n_cells)
        .map(|_| spec.nugget_prior.sample(rng))
        .collect();
    let corr = draw_corr(&spec.corr, rng)?;
    Ok((mean, sigma2, nugget, corr))
}

fn wn_names(spec: &WnModelSpec) -> Vec<String> {
    let mut names = Vec::new();
    match &spec.mean {
        WnMeanSpec::CellMeans(_) => {
            for label in &spec.cell_labels {
                names.push(format!("mu_cos[{label}]"));
                names.push(format!("mu_sin[{label}]"));
            }
        }
        WnMeanSpec::Regression(design, _) => {
            for coeff in design.names() {
                names.push(format!("eta[{coeff}]"));
                names.push(format!("eta[{coeff}]^2"));
            }
        }
    }
    for label in &spec.cell_labels {
        names.push(format!("sigma2[{label}]"));
        names.push(format!("sigma2[{label}]^2"));
    }
    for label in &spec.cell_labels {
        names.push(format!("nugget[{label}]"));
        names.push(format!("nugget[{label}]^2"));
    }
    push_corr_names(&mut names);
    names.push("mean_winding".to_string());
    names
}

fn wn_values(engine: &WnEngine, k: &[i32]) -> Vec<f64> {
    let mut values = Vec::new();
    match engine.mean_state() {
        WnMeanState::CellMeans(mus) => {
            for &mu in mus {
                values.push(mu.cos());
                values.push(mu.sin());
            }
        }
        WnMeanState::Regression(etas) => {
            for &eta in etas {
                values.push(eta);
                values.push(eta * eta);
            }
        }
    }
    for &s in engine.sigma2s() {
        values.push(s);
        values.push(s * s);
    }
    for &p in engine.nuggets() {
        values.push(p);
        values.push(p * p);
    }
    push_corr_values(&mut values, engine.corr_params());
    values.push(k.iter().map(|&ki| ki as f64).sum::<f64>() / k.len() as f64);
    values
}

// ---------------------------------------------------------------------------
// Projected families
// ---------------------------------------------------------------------------

fn run_pn(
    points: &[SpaceTimePoint],
    spec: PnModelSpec,
    model: &str,
    cfg: &GewekeConfig,
) -> Result<GewekeReport> {
    validate(cfg)?;
    let names = pn_names(&spec);
    let placeholder = vec![Angle::new(0.0)?; points.len()];
    let mut engine = PnEngine::new(points, &placeholder, spec.clone())?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    let mut marginal = Series::new(names.len());
    for _ in 0..cfg.sweeps {
        let (w, sigma2_1, rho, nugget, corr) = draw_pn_state(&spec, engine.coeffs().len(), &mut rng)?;
        engine.set_state(w, sigma2_1, rho, nugget, corr)?;
        let (_, r) = draw_pn_data(&engine, &mut rng)?;
        marginal.push(&pn_values(&engine, &r));
    }

    let mut successive = Series::new(names.len());
    let (w0, s0, rho0, nug0, corr0) = draw_pn_state(&spec, engine.coeffs().len(), &mut rng)?;
    engine.set_state(w0, s0, rho0, nug0, corr0)?;
    let (angles0, r0) = draw_pn_data(&engine, &mut rng)?;
    engine.set_data(&angles0, &r0)?;
    for sweep in 0..cfg.warmup + cfg.sweeps {
        engine.sweep(&mut rng, sweep < cfg.warmup);
        let (angles, r) = draw_pn_data(&engine, &mut rng)?;
        engine.set_data(&angles, &r)?;
        if sweep >= cfg.warmup {
            successive.push(&pn_values(&engine, engine.r()));
        }
    }

    Ok(build_report(model, names, &marginal, &successive))
}

fn draw_pn_data<R: Rng + ?Sized>(
    engine: &PnEngine,
    rng: &mut R,
) -> Result<(Vec<Angle>, Vec<f64>)> {
    let z = engine.cov_factor().sample_mvn(engine.pair_means(), rng);
    let n = z.len() / 2;
    let mut angles = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    for i in 0..n {
        let (z1, z2) = (z[2 * i], z[2 * i + 1]);
        angles.push(atan_star(z1, z2)?);
        r.push(z1.hypot(z2));
    }
    Ok((angles, r))
}

fn draw_pn_state<R: Rng + ?Sized>(
    spec: &PnModelSpec,
    n_coeffs: usize,
    rng: &mut R,
) -> Result<(DVector<f64>, f64, f64, Vec<f64>, GneitingParams)> {
    let w = match &spec.mean {
        PnMeanSpec::CellMeans(p1, p2) => DVector::from_fn(n_coeffs, |j, _| {
            if j % 2 == 0 {
                p1.sample(rng)
            } else {
                p2.sample(rng)
            }
        }),
        PnMeanSpec::Regression(_, p) => DVector::from_fn(n_coeffs, |_, _| p.sample(rng)),
    };
    let sigma2_1 = spec.sigma2_prior.sample(rng);
    let rho = spec.rho_prior.sample(rng);
    let nugget = (0..spec.n_cells)
        .map(|_| spec.nugget_prior.sample(rng))
        .collect();
    let corr = draw_corr(&spec.corr, rng)?;
    Ok((w, sigma2_1, rho, nugget, corr))
}

fn pn_names(spec: &PnModelSpec) -> Vec<String> {
    let mut names = Vec::new();
    match &spec.mean {
        PnMeanSpec::CellMeans(_, _) => {
            for label in &spec.cell_labels {
                names.push(format!("mu1[{label}]"));
                names.push(format!("mu1[{label}]^2"));
                names.push(format!("mu2[{label}]"));
                names.push(format!("mu2[{label}]^2"));
            }
        }
        PnMeanSpec::Regression(design, _) => {
            for coeff in design.names() {
                names.push(format!("eta1[{coeff}]"));
                names.push(format!("eta1[{coeff}]^2"));
            }
            for coeff in design.names() {
                names.push(format!("eta2[{coeff}]"));
                names.push(format!("eta2[{coeff}]^2"));
            }
        }
    }
    names.push("sigma2_1".to_string());
    names.push("sigma2_1^2".to_string());
    names.push("rho".to_string());
    names.push("rho^2".to_string());
    for label in &spec.cell_labels {
        names.push(format!("nugget[{label}]"));
        names.push(format!("nugget[{label}]^2"));
    }
    push_corr_names(&mut names);
    names.push("mean_radius".to_string());
    names.push("mean_radius^2".to_string());
    names
}

fn pn_values(engine: &PnEngine, r: &[f64]) -> Vec<f64> {
    let mut values = Vec::new();
    let w = engine.coeffs();
    match pn_layout(engine) {
        PnLayout::Interleaved => {
            for c in 0..w.len() / 2 {
                let (m1, m2) = (w[2 * c], w[2 * c + 1]);
                values.push(m1);
                values.push(m1 * m1);
                values.push(m2);
                values.push(m2 * m2);
            }
        }
        PnLayout::Stacked => {
            for &eta in w.iter() {
                values.push(eta);
                values.push(eta * eta);
            }
        }
    }
    let s = engine.sigma2_1();
    values.push(s);
    values.push(s * s);
    let rho = engine.rho();
    values.push(rho);
    values.push(rho * rho);
    for &p in engine.nuggets() {
        values.push(p);
        values.push(p * p);
    }
    push_corr_values(&mut values, engine.corr_params());
    let rbar = r.iter().sum::<f64>() / r.len() as f64;
    values.push(rbar);
    values.push(rbar * rbar);
    values
}

enum PnLayout {
    Interleaved,
    Stacked,
}

fn pn_layout(engine: &PnEngine) -> PnLayout {
    match engine.mean_spec() {
        PnMeanSpec::CellMeans(_, _) => PnLayout::Interleaved,
        PnMeanSpec::Regression(_, _) => PnLayout::Stacked,
    }
}

// ---------------------------------------------------------------------------
// Shared accounting
// ---------------------------------------------------------------------------

fn push_corr_names(names: &mut Vec<String>) {
    for base in ["a", "c", "alpha", "beta", "gamma"] {
        names.push(base.to_string());
        names.push(format!("{base}^2"));
    }
}

fn push_corr_values(values: &mut Vec<f64>, corr: &GneitingParams) {
    for v in [corr.a(), corr.c(), corr.alpha(), corr.beta(), corr.gamma()] {
        values.push(v);
        values.push(v * v);
    }
}

/// Column store of recorded functionals.
struct Series {
    columns: Vec<Vec<f64>>,
}

impl Series {
    fn new(n: usize) -> Series {
        Series {
            columns: vec![Vec::new(); n],
        }
    }

    fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        for (col, &v) in self.columns.iter_mut().zip(row) {
            col.push(v);
        }
    }
}

/// Mean and batch-means standard error: √B batches of equal size, trailing
/// remainder dropped.  Valid for the autocorrelated chain side and merely
/// conservative for the independent side.
fn batch_mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let b = (n as f64).sqrt().floor() as usize;
    let m = n / b;
    let used = b * m;
    let mean = xs[..used].iter().sum::<f64>() / used as f64;
    let mut var = 0.0;
    for i in 0..b {
        let bm = xs[i * m..(i + 1) * m].iter().sum::<f64>() / m as f64;
        var += (bm - mean) * (bm - mean);
    }
    var /= (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

fn build_report(model: &str, names: Vec<String>, marginal: &Series, successive: &Series) -> GewekeReport {
    let checks = names
        .into_iter()
        .enumerate()
        .map(|(f, name)| {
            let (m1, se1) = batch_mean_se(&marginal.columns[f]);
            let (m2, se2) = batch_mean_se(&successive.columns[f]);
            let denom = se1.hypot(se2);
            let diff = m1 - m2;
            let z = if denom > 0.0 {
                diff / denom
            } else if diff.abs() < 1e-9 {
                0.0
            } else {
                f64::INFINITY
            };
            FunctionalCheck {
                name,
                marginal_mean: m1,
                successive_mean: m2,
                z,
            }
        })
        .collect();
    GewekeReport {
        model: model.to_string(),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariates::Factor;

    fn grid_points() -> Vec<SpaceTimePoint> {
        let mut pts = Vec::new();
        for (x, y) in [(0.0, 0.0), (3.0, 4.0)] {
            for t in 1..=2 {
                pts.push(SpaceTimePoint::new(x, y, t).unwrap());
            }
        }
        pts
    }

    #[test]
    fn batch_means_recover_iid_scale() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..4096)
            .map(|_| crate::linalg::standard_normal_vec(1, &mut rng)[0])
            .collect();
        let (mean, se) = batch_mean_se(&xs);
        assert!(mean.abs() < 0.08, "mean {mean}");
        let theory = 1.0 / (xs.len() as f64).sqrt();
        assert!(se > 0.5 * theory && se < 2.0 * theory, "se {se} vs {theory}");

        let flat = vec![2.5; 64];
        let (m, s) = batch_mean_se(&flat);
        assert_eq!(m, 2.5);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn reports_are_deterministic_given_the_seed() {
        let cfg = GewekeConfig {
            sweeps: 64,
            warmup: 16,
            ..GewekeConfig::default()
        };
        let a = geweke_wn(&grid_points(), &cfg).unwrap();
        let b = geweke_wn(&grid_points(), &cfg).unwrap();
        for (x, y) in a.checks.iter().zip(&b.checks) {
            assert_eq!(x.z.to_bits(), y.z.to_bits(), "{}", x.name);
        }
    }

    #[test]
    fn wrapped_chain_agrees_with_prior_simulation() {
        let cfg = GewekeConfig {
            sweeps: 4000,
            warmup: 400,
            k_max: 5,
            seed: 21,
        };
        let report = geweke_wn(&grid_points(), &cfg).unwrap();
        assert_eq!(report.model, "WN");
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"mu_cos[all]"));
        assert!(names.contains(&"mean_winding"));
        assert!(
            report.max_abs_z() < 5.0,
            "max |z| = {:.2}: {:?}",
            report.max_abs_z(),
            report
                .checks
                .iter()
                .map(|c| format!("{} {:.2}", c.name, c.z))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn projected_chain_agrees_with_prior_simulation() {
        let cfg = GewekeConfig {
            sweeps: 2500,
            warmup: 250,
            ..GewekeConfig::default()
        };
        let report = geweke_pn(&grid_points(), &cfg).unwrap();
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"mu1[all]"));
        assert!(names.contains(&"mean_radius"));
        assert!(names.contains(&"rho^2"));
        assert!(
            report.max_abs_z() < 5.0,
            "max |z| = {:.2}",
            report.max_abs_z()
        );
    }

    #[test]
    fn variant_checks_use_the_design() {
        let pts = grid_points();
        let f = Factor::new(
            "sector",
            vec!["n".into(), "s".into()],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let design = DesignInfo::new(4).add_factor(f).unwrap();
        let cfg = GewekeConfig {
            sweeps: 64,
            warmup: 8,
            ..GewekeConfig::default()
        };
        let wna = geweke_variant(Variant::Wna, &pts, &design, &cfg).unwrap();
        assert_eq!(wna.model, "WNA");
        let names: Vec<&str> = wna.checks.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"mu_cos[n]"));
        assert!(names.contains(&"sigma2[s]"));

        let with_cov = DesignInfo::new(4)
            .add_continuous("height", vec![0.1, 0.4, -0.2, 0.3])
            .unwrap();
        let wnr = geweke_variant(Variant::Wnr, &pts, &with_cov, &cfg).unwrap();
        let names: Vec<&str> = wnr.checks.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"eta[intercept]^2"));
        let pnr = geweke_variant(Variant::Pnr, &pts, &with_cov, &cfg).unwrap();
        let names: Vec<&str> = pnr.checks.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"eta2[height]"));
    }
}
