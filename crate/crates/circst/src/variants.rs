//! The four covariate-extended model variants layered on the two process
//! engines:
//!
//! * WNA / PNA — factor-cell means (and, for the wrapped family, per-cell
//!   variances); per-cell nuggets in both families.
//! * WNR / PNR — regression means through the inverse-tan link (wrapped) or
//!   the identity (projected), with per-cell variances/nuggets retained.
//!
//! The projected variants share `σ²₁` and `ρ` across cells; only their
//! nugget is cell-specific.

use crate::angle::{wrap, Angle, TAU};
use crate::covariance::{gneiting_corr, GneitingParams, LagTable, SpaceTimePoint};
use crate::covariates::DesignInfo;
use crate::dataset::Dataset;
use crate::linalg::SpdFactor;
use crate::mcmc::{ChainMeta, McmcConfig};
use crate::predict::PredictiveSamples;
use crate::priors::{
    CorrPriors, InvGammaPrior, NormalPrior, PnPriors, TruncNormalPrior, WnPriors,
};
use crate::projected::{assemble_pn_cov, PnEngine, PnMeanSpec, PnModelSpec};
use crate::summary::{summarize_circular, summarize_linear, ParamSummary};
use crate::wrapped::{
    assemble_cov, require_two_distinct, standard_normal, WnEngine, WnMeanSpec, WnMeanState,
    WnModelSpec,
};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The covariate-extended model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Wrapped model with factor-cell means, variances and nuggets.
    Wna,
    /// Wrapped model with a regression mean; per-cell variances and nuggets.
    Wnr,
    /// Projected model with factor-cell mean pairs; per-cell nuggets.
    Pna,
    /// Projected model with regression mean pairs; per-cell nuggets.
    Pnr,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Wna => "WNA",
            Variant::Wnr => "WNR",
            Variant::Pna => "PNA",
            Variant::Pnr => "PNR",
        }
    }

    pub fn is_projected(&self) -> bool {
        matches!(self, Variant::Pna | Variant::Pnr)
    }
}

/// Priors for the wrapped regression variant: one shared prior per
/// regression coefficient, the rest as in the plain wrapped model.
#[derive(Debug, Clone, Copy)]
pub struct WnrPriors {
    pub eta: NormalPrior,
    pub sigma2: InvGammaPrior,
    pub nugget: InvGammaPrior,
    pub corr: CorrPriors,
}

/// Priors for the projected regression variant.
#[derive(Debug, Clone, Copy)]
pub struct PnrPriors {
    pub eta: NormalPrior,
    pub sigma2_1: InvGammaPrior,
    pub rho: TruncNormalPrior,
    pub nugget: InvGammaPrior,
    pub corr: CorrPriors,
}

/// Prior specification matching one [`Variant`].  Cell-structured variants
/// share one prior across cells for each per-cell parameter.
#[derive(Debug, Clone, Copy)]
pub enum VariantPriors {
    Wna(WnPriors),
    Wnr(WnrPriors),
    Pna(PnPriors),
    Pnr(PnrPriors),
}

/// Mean state of one retained wrapped-variant draw.
#[derive(Debug, Clone)]
pub enum WnMeanDraw {
    /// One angle per factor cell.
    CellMeans(Vec<Angle>),
    /// Regression coefficients (mean through the inverse-tan link).
    Coeffs(Vec<f64>),
}

/// One retained draw of a wrapped variant.
#[derive(Debug, Clone)]
pub struct WnVariantDraw {
    pub mean: WnMeanDraw,
    /// Per-cell process variances.
    pub sigma2: Vec<f64>,
    /// Per-cell nuggets.
    pub nugget: Vec<f64>,
    pub corr: GneitingParams,
    pub k: Vec<i32>,
}

/// Mean state of one retained projected-variant draw.
#[derive(Debug, Clone)]
pub enum PnMeanDraw {
    /// One coordinate pair per factor cell.
    CellMeans(Vec<(f64, f64)>),
    /// Regression coefficients per coordinate.
    Coeffs { z1: Vec<f64>, z2: Vec<f64> },
}

/// One retained draw of a projected variant.
#[derive(Debug, Clone)]
pub struct PnVariantDraw {
    pub mean: PnMeanDraw,
    /// Shared across cells.
    pub sigma2_1: f64,
    /// Shared across cells.
    pub rho: f64,
    /// Per-cell nuggets.
    pub nugget: Vec<f64>,
    pub corr: GneitingParams,
    pub r: Vec<f64>,
}

/// Retained draws of a variant chain, by family.
#[derive(Debug, Clone)]
pub enum VariantDraws {
    Wn(Vec<WnVariantDraw>),
    Pn(Vec<PnVariantDraw>),
}

impl VariantDraws {
    pub fn len(&self) -> usize {
        match self {
            VariantDraws::Wn(v) => v.len(),
            VariantDraws::Pn(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Posterior chain of a covariate-extended model.
#[derive(Debug, Clone)]
pub struct VariantChain {
    pub variant: Variant,
    /// Factor-cell labels in cell order ("all" when the design has none).
    pub cell_labels: Vec<String>,
    /// Regression coefficient names (empty for cell-mean variants).
    pub coeff_names: Vec<String>,
    pub draws: VariantDraws,
    pub meta: ChainMeta,
}

/// Fits a covariate-extended variant.  The dataset must carry covariate
/// information, every factor cell must be occupied, and the priors must
/// match the requested variant.
pub fn fit_variant(
    dataset: &Dataset,
    variant: Variant,
    priors: &VariantPriors,
    mcmc: &McmcConfig,
    seed: u64,
) -> Result<VariantChain> {
    mcmc.validate()?;
    require_two_distinct(dataset.points())?;
    let design = dataset.require_design()?;
    design.require_all_cells_occupied()?;
    let cells = design.cells();
    let n_cells = design.n_cells();
    let cell_labels = design.cell_labels();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    match (variant, priors) {
        (Variant::Wna, VariantPriors::Wna(p)) => {
            let spec = WnModelSpec {
                cells,
                n_cells,
                cell_labels: cell_labels.clone(),
                mean: WnMeanSpec::CellMeans(p.mu),
                sigma2_prior: p.sigma2,
                nugget_prior: p.nugget,
                corr: p.corr,
            };
            let engine = WnEngine::new(dataset.points(), dataset.angles(), spec, mcmc.k_max)?;
            run_wn(engine, variant, cell_labels, Vec::new(), mcmc, seed, &mut rng)
        }
        (Variant::Wnr, VariantPriors::Wnr(p)) => {
            let rd = design.regression_design()?;
            let coeff_names = rd.names().to_vec();
            let spec = WnModelSpec {
                cells,
                n_cells,
                cell_labels: cell_labels.clone(),
                mean: WnMeanSpec::Regression(rd, p.eta),
                sigma2_prior: p.sigma2,
                nugget_prior: p.nugget,
                corr: p.corr,
            };
            let engine = WnEngine::new(dataset.points(), dataset.angles(), spec, mcmc.k_max)?;
            run_wn(engine, variant, cell_labels, coeff_names, mcmc, seed, &mut rng)
        }
        (Variant::Pna, VariantPriors::Pna(p)) => {
            let spec = PnModelSpec {
                cells,
                n_cells,
                cell_labels: cell_labels.clone(),
                mean: PnMeanSpec::CellMeans(p.mu1, p.mu2),
                sigma2_prior: p.sigma2_1,
                rho_prior: p.rho,
                nugget_prior: p.nugget,
                corr: p.corr,
            };
            let engine = PnEngine::new(dataset.points(), dataset.angles(), spec)?;
            run_pn(engine, variant, cell_labels, Vec::new(), mcmc, seed, &mut rng)
        }
        (Variant::Pnr, VariantPriors::Pnr(p)) => {
            let rd = design.regression_design()?;
            let coeff_names = rd.names().to_vec();
            let spec = PnModelSpec {
                cells,
                n_cells,
                cell_labels: cell_labels.clone(),
                mean: PnMeanSpec::Regression(rd, p.eta),
                sigma2_prior: p.sigma2_1,
                rho_prior: p.rho,
                nugget_prior: p.nugget,
                corr: p.corr,
            };
            let engine = PnEngine::new(dataset.points(), dataset.angles(), spec)?;
            run_pn(engine, variant, cell_labels, coeff_names, mcmc, seed, &mut rng)
        }
        _ => Err(Error::config(format!(
            "prior specification does not match variant {}",
            variant.name()
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_wn(
    mut engine: WnEngine,
    variant: Variant,
    cell_labels: Vec<String>,
    coeff_names: Vec<String>,
    mcmc: &McmcConfig,
    seed: u64,
    rng: &mut ChaCha12Rng,
) -> Result<VariantChain> {
    let mut draws = Vec::with_capacity(mcmc.retained());
    for iter in 0..mcmc.iterations {
        let adapting = mcmc.adapt && iter < mcmc.burn_in;
        engine.sweep(rng, adapting);
        if iter >= mcmc.burn_in && (iter - mcmc.burn_in) % mcmc.thin == 0 {
            let mean = match engine.mean_state() {
                WnMeanState::CellMeans(v) => {
                    WnMeanDraw::CellMeans(v.iter().map(|&m| wrap(m)).collect::<Result<_>>()?)
                }
                WnMeanState::Regression(eta) => WnMeanDraw::Coeffs(eta.clone()),
            };
            draws.push(WnVariantDraw {
                mean,
                sigma2: engine.sigma2s().to_vec(),
                nugget: engine.nuggets().to_vec(),
                corr: *engine.corr_params(),
                k: engine.k().to_vec(),
            });
        }
    }
    Ok(VariantChain {
        variant,
        cell_labels,
        coeff_names,
        draws: VariantDraws::Wn(draws),
        meta: ChainMeta {
            iterations: mcmc.iterations,
            burn_in: mcmc.burn_in,
            thin: mcmc.thin,
            seed,
            acceptance: engine.block_rates(),
        },
    })
}

#[allow(clippy::too_many_arguments)]
fn run_pn(
    mut engine: PnEngine,
    variant: Variant,
    cell_labels: Vec<String>,
    coeff_names: Vec<String>,
    mcmc: &McmcConfig,
    seed: u64,
    rng: &mut ChaCha12Rng,
) -> Result<VariantChain> {
    let n_cells = cell_labels.len();
    let mut draws = Vec::with_capacity(mcmc.retained());
    for iter in 0..mcmc.iterations {
        let adapting = mcmc.adapt && iter < mcmc.burn_in;
        engine.sweep(rng, adapting);
        if iter >= mcmc.burn_in && (iter - mcmc.burn_in) % mcmc.thin == 0 {
            let w = engine.coeffs();
            let mean = if coeff_names.is_empty() {
                PnMeanDraw::CellMeans((0..n_cells).map(|c| (w[2 * c], w[2 * c + 1])).collect())
            } else {
                let p = coeff_names.len();
                PnMeanDraw::Coeffs {
                    z1: (0..p).map(|j| w[j]).collect(),
                    z2: (0..p).map(|j| w[p + j]).collect(),
                }
            };
            draws.push(PnVariantDraw {
                mean,
                sigma2_1: engine.sigma2_1(),
                rho: engine.rho(),
                nugget: engine.nuggets().to_vec(),
                corr: *engine.corr_params(),
                r: engine.r().to_vec(),
            });
        }
    }
    Ok(VariantChain {
        variant,
        cell_labels,
        coeff_names,
        draws: VariantDraws::Pn(draws),
        meta: ChainMeta {
            iterations: mcmc.iterations,
            burn_in: mcmc.burn_in,
            thin: mcmc.thin,
            seed,
            acceptance: engine.block_rates(),
        },
    })
}

/// Composition-sampling prediction for a variant chain.  `target_design`
/// supplies covariate rows for the targets (in the same schema as the
/// training design); it is validated against the dataset's design.
pub fn krige_variant(
    chain: &VariantChain,
    dataset: &Dataset,
    targets: &[SpaceTimePoint],
    target_design: &DesignInfo,
    seed: u64,
) -> Result<PredictiveSamples> {
    if chain.draws.is_empty() {
        return Err(Error::ChainTooShort { len: 0, min: 1 });
    }
    if targets.is_empty() {
        return Err(Error::Empty { context: "targets" });
    }
    if target_design.n_rows() != targets.len() {
        return Err(Error::LengthMismatch {
            context: "target design rows vs targets",
            left: target_design.n_rows(),
            right: targets.len(),
        });
    }
    let design = dataset.require_design()?;
    design.schema_matches(target_design)?;
    let cells = design.cells();
    let target_cells: Vec<usize> = (0..targets.len()).map(|j| target_design.cell_of(j)).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    match &chain.draws {
        VariantDraws::Wn(draws) => krige_wn_variant(
            chain, draws, dataset, &cells, targets, target_design, &target_cells, &mut rng,
        ),
        VariantDraws::Pn(draws) => krige_pn_variant(
            chain, draws, dataset, &cells, targets, target_design, &target_cells, &mut rng,
        ),
    }
}

/// Per-observation means implied by one wrapped-variant draw, on the
/// engine's internal (unwrapped) scale.
fn wn_draw_means(
    mean: &WnMeanDraw,
    cells: &[usize],
    design: &DesignInfo,
    rows: &[usize],
) -> Result<Vec<f64>> {
    match mean {
        WnMeanDraw::CellMeans(mu) => rows
            .iter()
            .map(|&i| {
                mu.get(cells[i])
                    .map(|a| a.radians())
                    .ok_or_else(|| Error::config("cell index outside the fitted cells"))
            })
            .collect(),
        WnMeanDraw::Coeffs(eta) => rows
            .iter()
            .map(|&i| {
                let h = design.regression_row(i);
                if h.len() != eta.len() {
                    return Err(Error::LengthMismatch {
                        context: "regression row vs coefficients",
                        left: h.len(),
                        right: eta.len(),
                    });
                }
                let lp: f64 = h.iter().zip(eta).map(|(x, e)| x * e).sum();
                Ok(2.0 * lp.atan())
            })
            .collect(),
    }
}

fn pn_draw_means(
    mean: &PnMeanDraw,
    cells: &[usize],
    design: &DesignInfo,
    rows: &[usize],
) -> Result<Vec<(f64, f64)>> {
    match mean {
        PnMeanDraw::CellMeans(mu) => rows
            .iter()
            .map(|&i| {
                mu.get(cells[i])
                    .copied()
                    .ok_or_else(|| Error::config("cell index outside the fitted cells"))
            })
            .collect(),
        PnMeanDraw::Coeffs { z1, z2 } => rows
            .iter()
            .map(|&i| {
                let h = design.regression_row(i);
                if h.len() != z1.len() || h.len() != z2.len() {
                    return Err(Error::LengthMismatch {
                        context: "regression row vs coefficients",
                        left: h.len(),
                        right: z1.len(),
                    });
                }
                let lp1: f64 = h.iter().zip(z1).map(|(x, e)| x * e).sum();
                let lp2: f64 = h.iter().zip(z2).map(|(x, e)| x * e).sum();
                Ok((lp1, lp2))
            })
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn krige_wn_variant(
    chain: &VariantChain,
    draws: &[WnVariantDraw],
    dataset: &Dataset,
    cells: &[usize],
    targets: &[SpaceTimePoint],
    target_design: &DesignInfo,
    target_cells: &[usize],
    rng: &mut ChaCha12Rng,
) -> Result<PredictiveSamples> {
    let n = dataset.len();
    let design = dataset.require_design()?;
    let all_rows: Vec<usize> = (0..n).collect();
    let target_rows: Vec<usize> = (0..targets.len()).collect();
    let lag = LagTable::new(dataset.points());
    let mut corr = DMatrix::zeros(n, n);
    let mut cov = DMatrix::zeros(n, n);
    let mut per_target: Vec<Vec<Angle>> = vec![Vec::with_capacity(draws.len()); targets.len()];
    let n_cells = chain.cell_labels.len();
    for draw in draws {
        if draw.k.len() != n {
            return Err(Error::LengthMismatch {
                context: "winding numbers vs dataset",
                left: draw.k.len(),
                right: n,
            });
        }
        if draw.sigma2.len() != n_cells || draw.nugget.len() != n_cells {
            return Err(Error::config("draw cell count differs from chain labels"));
        }
        let means = wn_draw_means(&draw.mean, cells, design, &all_rows)?;
        let target_means = wn_draw_means(&draw.mean, target_cells, target_design, &target_rows)?;
        let sd: Vec<f64> = cells.iter().map(|&c| draw.sigma2[c].sqrt()).collect();
        let ng: Vec<f64> = cells.iter().map(|&c| draw.nugget[c]).collect();
        lag.fill_corr(&draw.corr, &mut corr);
        assemble_cov(&corr, &sd, &ng, &mut cov);
        let factor = SpdFactor::new(&cov)?;
        let resid = DVector::from_fn(n, |i, _| {
            dataset.angles()[i].radians() + TAU * draw.k[i] as f64 - means[i]
        });
        let w = factor.solve(&resid);
        for (j, bucket) in per_target.iter_mut().enumerate() {
            let tc = target_cells[j];
            if tc >= n_cells {
                return Err(Error::config("target cell outside the fitted cells"));
            }
            let sd_t = draw.sigma2[tc].sqrt();
            let ng_t = draw.nugget[tc];
            let c0 = DVector::from_fn(n, |i, _| {
                sd_t * sd[i]
                    * gneiting_corr(
                        dataset.points()[i].spatial_distance(&targets[j]),
                        dataset.points()[i].time_lag(&targets[j]),
                        &draw.corr,
                    )
            });
            let s = factor.solve(&c0);
            let m = target_means[j] + c0.dot(&w);
            let v = (sd_t * sd_t + ng_t - c0.dot(&s)).max(0.0);
            bucket.push(wrap(m + v.sqrt() * standard_normal(rng))?);
        }
    }
    PredictiveSamples::from_target_draws(targets.to_vec(), per_target)
}

#[allow(clippy::too_many_arguments)]
fn krige_pn_variant(
    chain: &VariantChain,
    draws: &[PnVariantDraw],
    dataset: &Dataset,
    cells: &[usize],
    targets: &[SpaceTimePoint],
    target_design: &DesignInfo,
    target_cells: &[usize],
    rng: &mut ChaCha12Rng,
) -> Result<PredictiveSamples> {
    let n = dataset.len();
    let design = dataset.require_design()?;
    let all_rows: Vec<usize> = (0..n).collect();
    let target_rows: Vec<usize> = (0..targets.len()).collect();
    let lag = LagTable::new(dataset.points());
    let mut corr = DMatrix::zeros(n, n);
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    let mut per_target: Vec<Vec<Angle>> = vec![Vec::with_capacity(draws.len()); targets.len()];
    let n_cells = chain.cell_labels.len();
    for draw in draws {
        if draw.r.len() != n {
            return Err(Error::LengthMismatch {
                context: "radii vs dataset",
                left: draw.r.len(),
                right: n,
            });
        }
        if draw.nugget.len() != n_cells {
            return Err(Error::config("draw cell count differs from chain labels"));
        }
        let s1 = draw.sigma2_1.sqrt();
        let v = Matrix2::new(draw.sigma2_1, draw.rho * s1, draw.rho * s1, 1.0);
        let means = pn_draw_means(&draw.mean, cells, design, &all_rows)?;
        let target_means = pn_draw_means(&draw.mean, target_cells, target_design, &target_rows)?;
        let ng: Vec<f64> = cells.iter().map(|&c| draw.nugget[c]).collect();
        lag.fill_corr(&draw.corr, &mut corr);
        assemble_pn_cov(&corr, &v, &ng, &mut cov);
        let factor = SpdFactor::new(&cov)?;
        let resid = DVector::from_fn(2 * n, |kk, _| {
            let i = kk / 2;
            let a = dataset.angles()[i];
            let zi = draw.r[i] * if kk % 2 == 0 { a.cos() } else { a.sin() };
            zi - if kk % 2 == 0 { means[i].0 } else { means[i].1 }
        });
        let w = factor.solve(&resid);
        for (j, bucket) in per_target.iter_mut().enumerate() {
            let tc = target_cells[j];
            if tc >= n_cells {
                return Err(Error::config("target cell outside the fitted cells"));
            }
            let c0 = DMatrix::from_fn(2 * n, 2, |row, col| {
                let i = row / 2;
                gneiting_corr(
                    dataset.points()[i].spatial_distance(&targets[j]),
                    dataset.points()[i].time_lag(&targets[j]),
                    &draw.corr,
                ) * v[(row % 2, col)]
            });
            let s = factor.solve_mat(&c0);
            let m = Vector2::new(target_means[j].0, target_means[j].1) + c0.transpose() * &w;
            let vpred = v + Matrix2::identity() * draw.nugget[tc] - c0.transpose() * s;
            let l11 = vpred[(0, 0)].max(0.0).sqrt();
            let l21 = if l11 > 0.0 { vpred[(1, 0)] / l11 } else { 0.0 };
            let l22 = (vpred[(1, 1)] - l21 * l21).max(0.0).sqrt();
            let z1 = standard_normal(rng);
            let z2 = standard_normal(rng);
            bucket.push(crate::angle::atan_star(
                m[0] + l11 * z1,
                m[1] + l21 * z1 + l22 * z2,
            )?);
        }
    }
    PredictiveSamples::from_target_draws(targets.to_vec(), per_target)
}

/// Posterior summary table with per-cell parameters labelled by their cell.
pub fn summarize_variant(chain: &VariantChain) -> Result<Vec<ParamSummary>> {
    if chain.draws.len() < 100 {
        return Err(Error::ChainTooShort {
            len: chain.draws.len(),
            min: 100,
        });
    }
    let labels = &chain.cell_labels;
    let mut out = Vec::new();
    match &chain.draws {
        VariantDraws::Wn(draws) => {
            match &draws[0].mean {
                WnMeanDraw::CellMeans(_) => {
                    for (c, l) in labels.iter().enumerate() {
                        let angles: Vec<Angle> = draws
                            .iter()
                            .map(|d| match &d.mean {
                                WnMeanDraw::CellMeans(v) => Ok(v[c]),
                                _ => Err(Error::config("mixed mean kinds in chain")),
                            })
                            .collect::<Result<_>>()?;
                        out.push(summarize_circular(&format!("mu[{l}]"), &angles)?);
                    }
                }
                WnMeanDraw::Coeffs(_) => {
                    for (j, name) in chain.coeff_names.iter().enumerate() {
                        let vals: Vec<f64> = draws
                            .iter()
                            .map(|d| match &d.mean {
                                WnMeanDraw::Coeffs(eta) => Ok(eta[j]),
                                _ => Err(Error::config("mixed mean kinds in chain")),
                            })
                            .collect::<Result<_>>()?;
                        out.push(summarize_linear(&format!("eta[{name}]"), &vals)?);
                    }
                }
            }
            for (c, l) in labels.iter().enumerate() {
                let vals: Vec<f64> = draws.iter().map(|d| d.sigma2[c]).collect();
                out.push(summarize_linear(&format!("sigma2[{l}]"), &vals)?);
            }
            for (c, l) in labels.iter().enumerate() {
                let vals: Vec<f64> = draws.iter().map(|d| d.nugget[c]).collect();
                out.push(summarize_linear(&format!("nugget[{l}]"), &vals)?);
            }
            for (name, f) in corr_pulls() {
                let vals: Vec<f64> = draws.iter().map(|d| f(&d.corr)).collect();
                out.push(summarize_linear(name, &vals)?);
            }
        }
        VariantDraws::Pn(draws) => {
            match &draws[0].mean {
                PnMeanDraw::CellMeans(_) => {
                    for coord in 0..2 {
                        for (c, l) in labels.iter().enumerate() {
                            let vals: Vec<f64> = draws
                                .iter()
                                .map(|d| match &d.mean {
                                    PnMeanDraw::CellMeans(v) => {
                                        Ok(if coord == 0 { v[c].0 } else { v[c].1 })
                                    }
                                    _ => Err(Error::config("mixed mean kinds in chain")),
                                })
                                .collect::<Result<_>>()?;
                            out.push(summarize_linear(
                                &format!("mu{}[{l}]", coord + 1),
                                &vals,
                            )?);
                        }
                    }
                }
                PnMeanDraw::Coeffs { .. } => {
                    for coord in 0..2 {
                        for (j, name) in chain.coeff_names.iter().enumerate() {
                            let vals: Vec<f64> = draws
                                .iter()
                                .map(|d| match &d.mean {
                                    PnMeanDraw::Coeffs { z1, z2 } => {
                                        Ok(if coord == 0 { z1[j] } else { z2[j] })
                                    }
                                    _ => Err(Error::config("mixed mean kinds in chain")),
                                })
                                .collect::<Result<_>>()?;
                            out.push(summarize_linear(
                                &format!("eta{}[{name}]", coord + 1),
                                &vals,
                            )?);
                        }
                    }
                }
            }
            out.push(summarize_linear(
                "sigma2_1",
                &draws.iter().map(|d| d.sigma2_1).collect::<Vec<_>>(),
            )?);
            out.push(summarize_linear(
                "rho",
                &draws.iter().map(|d| d.rho).collect::<Vec<_>>(),
            )?);
            for (c, l) in labels.iter().enumerate() {
                let vals: Vec<f64> = draws.iter().map(|d| d.nugget[c]).collect();
                out.push(summarize_linear(&format!("nugget[{l}]"), &vals)?);
            }
            for (name, f) in corr_pulls() {
                let vals: Vec<f64> = draws.iter().map(|d| f(&d.corr)).collect();
                out.push(summarize_linear(name, &vals)?);
            }
        }
    }
    Ok(out)
}

fn corr_pulls() -> [(&'static str, fn(&GneitingParams) -> f64); 5] {
    [
        ("a", |g| g.a()),
        ("c", |g| g.c()),
        ("alpha", |g| g.alpha()),
        ("beta", |g| g.beta()),
        ("gamma", |g| g.gamma()),
    ]
}
