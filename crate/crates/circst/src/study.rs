//! Factorial simulation study: synthetic fields on a fixed monitoring layout,
//! refitted with truth-centered priors and scored on held-out points.
//!
//! The grid crosses two space/time scale regimes with three separability
//! levels, two smoothness settings per domain, and two noise regimes, for 48
//! datasets per process family.  Everything downstream of the seed is
//! deterministic, so a study can be regenerated row for row.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::angle::{circ_dist, Angle};
use crate::covariance::{GneitingParams, SpaceTimePoint};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mcmc::McmcConfig;
use crate::priors::{
    BetaPrior, CorrPriors, GammaPrior, InvGammaPrior, NormalPrior, PnPriors, TruncNormalPrior,
    WnPriors, WrappedNormalPrior,
};
use crate::projected::{fit_pn, krige_pn, simulate_pn, PnParams};
use crate::scoring::crps_mc;
use crate::wrapped::{fit_wn, krige_wn, simulate_wn, WnParams};

/// Number of monitoring sites, drawn uniformly on the square region.
const N_SITES: usize = 20;
/// Time steps per site; estimation data come from the first ten.
const N_TIMES: u32 = 12;
/// Side length (km) of the square holding the sites.
const REGION_KM: f64 = 10.0;

/// Which process family a study dataset is simulated from and refitted with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessModel {
    Wn,
    Pn,
}

impl ProcessModel {
    pub fn name(self) -> &'static str {
        match self {
            ProcessModel::Wn => "WN",
            ProcessModel::Pn => "PN",
        }
    }
}

/// Noise regime of a study cell.  "Low" pairs small process and nugget
/// variances (concentrated angles); "high" inflates both tenfold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceGroup {
    Low,
    High,
}

impl VarianceGroup {
    pub fn name(self) -> &'static str {
        match self {
            VarianceGroup::Low => "low",
            VarianceGroup::High => "high",
        }
    }
}

/// One cell of the factorial design, with the seed that makes it
/// reproducible.
#[derive(Debug, Clone, Copy)]
pub struct StudyCombo {
    pub model: ProcessModel,
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub variance_group: VarianceGroup,
    pub seed: u64,
}

impl StudyCombo {
    pub fn corr(&self) -> Result<GneitingParams> {
        GneitingParams::new(self.a, self.c, self.alpha, self.beta, self.gamma)
    }

    /// The generating parameters for this cell.
    pub fn truth(&self) -> Result<StudyTruth> {
        let corr = self.corr()?;
        match self.model {
            ProcessModel::Wn => {
                let (sigma2, nugget) = match self.variance_group {
                    VarianceGroup::Low => (0.1, 0.01),
                    VarianceGroup::High => (1.0, 0.1),
                };
                let mu = Angle::new(std::f64::consts::PI)?;
                Ok(StudyTruth::Wn(WnParams::new(mu, sigma2, nugget, corr)?))
            }
            ProcessModel::Pn => {
                let (mu, nugget) = match self.variance_group {
                    VarianceGroup::Low => (2.5, 0.01),
                    VarianceGroup::High => (0.85, 0.1),
                };
                Ok(StudyTruth::Pn(PnParams::new(mu, mu, 1.0, 0.0, nugget, corr)?))
            }
        }
    }
}

/// Generating parameters of one study dataset.
#[derive(Debug, Clone)]
pub enum StudyTruth {
    Wn(WnParams),
    Pn(PnParams),
}

/// The full crossed design for one process family.
#[derive(Debug, Clone)]
pub struct StudyDesign {
    pub combos: Vec<StudyCombo>,
}

impl StudyDesign {
    /// All 48 cells: {(a,c) = (1, 0.2), (0.2, 1)} × {α = 0.5, 0.8} ×
    /// {β = 0, 0.5, 0.9} × {γ = 0.5, 0.8} × {low, high} variance.  Per-cell
    /// seeds are derived from `base_seed`, so the design is itself a pure
    /// function of its arguments.
    pub fn full(model: ProcessModel, base_seed: u64) -> StudyDesign {
        let mut combos = Vec::with_capacity(48);
        for &(a, c) in &[(1.0, 0.2), (0.2, 1.0)] {
            for &alpha in &[0.5, 0.8] {
                for &beta in &[0.0, 0.5, 0.9] {
                    for &gamma in &[0.5, 0.8] {
                        for &variance_group in &[VarianceGroup::Low, VarianceGroup::High] {
                            let seed = mix_seed(base_seed, combos.len() as u64 + 1);
                            combos.push(StudyCombo {
                                model,
                                a,
                                c,
                                alpha,
                                beta,
                                gamma,
                                variance_group,
                                seed,
                            });
                        }
                    }
                }
            }
        }
        StudyDesign { combos }
    }
}

/// SplitMix64 finalizer over `base ⊕ f(salt)`; decorrelates the streams that
/// share one base seed (design cells, fitting, prediction).
fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// How a simulated dataset is divided into estimation and validation parts.
///
/// Estimation points are drawn uniformly without replacement from the rows
/// observed at `t ≤ estimation_max_time`; everything else is validation, so
/// the validation set mixes interpolation (early times at unsampled rows)
/// and forecasting (the final time steps).
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub n_estimation: usize,
    pub n_validation: usize,
    pub estimation_max_time: u32,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            n_estimation: 170,
            n_validation: 70,
            estimation_max_time: 10,
        }
    }
}

/// One simulated dataset with its provenance and split.
#[derive(Debug, Clone)]
pub struct StudyDataset {
    pub combo: StudyCombo,
    /// All simulated rows, site-major (site 0 at times 1..=12, then site 1, …).
    pub dataset: Dataset,
    pub truth: StudyTruth,
    /// Sorted row indices used for fitting.
    pub estimation: Vec<usize>,
    /// Sorted complement of `estimation`.
    pub validation: Vec<usize>,
}

impl StudyDataset {
    pub fn estimation_dataset(&self) -> Result<Dataset> {
        self.dataset.subset(&self.estimation)
    }

    pub fn validation_points(&self) -> Vec<SpaceTimePoint> {
        self.validation
            .iter()
            .map(|&i| self.dataset.points()[i])
            .collect()
    }

    pub fn validation_angles(&self) -> Vec<Angle> {
        self.validation
            .iter()
            .map(|&i| self.dataset.angles()[i])
            .collect()
    }
}

/// Simulates every cell of `design`: 20 uniform sites on a 10 km square
/// observed at 12 consecutive time steps, the process drawn from the cell's
/// truth, and rows split per `split`.  Reproducible from the cell seeds.
pub fn generate_study(design: &StudyDesign, split: &SplitSpec) -> Result<Vec<StudyDataset>> {
    design
        .combos
        .iter()
        .map(|combo| generate_one(combo, split))
        .collect()
}

fn generate_one(combo: &StudyCombo, split: &SplitSpec) -> Result<StudyDataset> {
    let mut rng = ChaCha12Rng::seed_from_u64(combo.seed);
    let mut points = Vec::with_capacity(N_SITES * N_TIMES as usize);
    for _ in 0..N_SITES {
        let x = rng.gen::<f64>() * REGION_KM;
        let y = rng.gen::<f64>() * REGION_KM;
        for t in 1..=N_TIMES {
            points.push(SpaceTimePoint::new(x, y, t)?);
        }
    }
    let truth = combo.truth()?;
    let sim_seed = rng.gen::<u64>();
    let angles = match &truth {
        StudyTruth::Wn(p) => simulate_wn(&points, p, sim_seed)?.0,
        StudyTruth::Pn(p) => simulate_pn(&points, p, sim_seed)?.0,
    };

    let eligible: Vec<usize> = (0..points.len())
        .filter(|&i| points[i].t <= split.estimation_max_time)
        .collect();
    if split.n_estimation > eligible.len() {
        return Err(Error::config(format!(
            "cannot draw {} estimation rows from {} rows with t <= {}",
            split.n_estimation,
            eligible.len(),
            split.estimation_max_time
        )));
    }
    if split.n_estimation + split.n_validation != points.len() {
        return Err(Error::config(format!(
            "split sizes {} + {} do not cover the {} simulated rows",
            split.n_estimation,
            split.n_validation,
            points.len()
        )));
    }
    // Partial Fisher-Yates over the eligible rows: the first n_estimation
    // entries are a uniform draw without replacement.
    let mut pool = eligible;
    for i in 0..split.n_estimation {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut estimation = pool[..split.n_estimation].to_vec();
    estimation.sort_unstable();
    let mut in_estimation = vec![false; points.len()];
    for &i in &estimation {
        in_estimation[i] = true;
    }
    let validation: Vec<usize> = (0..points.len()).filter(|&i| !in_estimation[i]).collect();

    let dataset = Dataset::new(points, angles)?;
    Ok(StudyDataset {
        combo: *combo,
        dataset,
        truth,
        estimation,
        validation,
    })
}

/// Priors for refitting a study dataset, one variant per process family.
#[derive(Debug, Clone, Copy)]
pub enum StudyPriors {
    Wn(WnPriors),
    Pn(PnPriors),
}

/// Maps a generating parameter set to the fixed table of refitting priors,
/// each centered loosely on the true value.  Only the design-grid values are
/// in the table; anything else is an error rather than a silent improvisation.
pub fn truth_centered_priors(truth: &StudyTruth) -> Result<StudyPriors> {
    match truth {
        StudyTruth::Wn(p) => {
            if !near(p.mu().radians(), std::f64::consts::PI) {
                return Err(off_grid("process mean", p.mu().radians()));
            }
            let mu = WrappedNormalPrior::new(p.mu(), 5.0)?;
            let sigma2 = variance_prior("process variance", p.sigma2())?;
            let nugget = nugget_prior(p.nugget())?;
            let corr = corr_priors(&p.corr())?;
            Ok(StudyPriors::Wn(WnPriors {
                mu,
                sigma2,
                nugget,
                corr,
            }))
        }
        StudyTruth::Pn(p) => {
            let mu1 = mean_component_prior(p.mu1())?;
            let mu2 = mean_component_prior(p.mu2())?;
            let sigma2_1 = variance_prior("first-component variance", p.sigma2_1())?;
            if !near(p.rho(), 0.0) {
                return Err(off_grid("component correlation", p.rho()));
            }
            let rho = TruncNormalPrior::new(0.0, 1.0)?;
            let nugget = nugget_prior(p.nugget())?;
            let corr = corr_priors(&p.corr())?;
            Ok(StudyPriors::Pn(PnPriors {
                mu1,
                mu2,
                sigma2_1,
                rho,
                nugget,
                corr,
            }))
        }
    }
}

fn near(x: f64, v: f64) -> bool {
    (x - v).abs() < 1e-9
}

fn off_grid(what: &str, value: f64) -> Error {
    Error::config(format!(
        "no truth-centered prior for {what} = {value}: not on the study grid"
    ))
}

fn scale_prior(what: &str, value: f64) -> Result<GammaPrior> {
    if near(value, 0.2) {
        GammaPrior::new(2.0, 5.0)
    } else if near(value, 1.0) {
        GammaPrior::new(5.0, 4.0)
    } else {
        Err(off_grid(what, value))
    }
}

fn smoothness_prior(what: &str, value: f64) -> Result<BetaPrior> {
    if near(value, 0.5) {
        BetaPrior::new(5.0, 5.0)
    } else if near(value, 0.8) {
        BetaPrior::new(6.0, 1.5)
    } else {
        Err(off_grid(what, value))
    }
}

fn separability_prior(value: f64) -> Result<BetaPrior> {
    if near(value, 0.0) {
        BetaPrior::new(1.0, 4.0)
    } else if near(value, 0.5) {
        BetaPrior::new(5.0, 5.0)
    } else if near(value, 0.9) {
        BetaPrior::new(6.0, 1.5)
    } else {
        Err(off_grid("space-time interaction", value))
    }
}

fn corr_priors(corr: &GneitingParams) -> Result<CorrPriors> {
    Ok(CorrPriors {
        a: scale_prior("temporal scale", corr.a())?,
        c: scale_prior("spatial scale", corr.c())?,
        alpha: smoothness_prior("temporal smoothness", corr.alpha())?,
        beta: separability_prior(corr.beta())?,
        gamma: smoothness_prior("spatial smoothness", corr.gamma())?,
    })
}

fn variance_prior(what: &str, value: f64) -> Result<InvGammaPrior> {
    if near(value, 0.1) {
        InvGammaPrior::new(4.5, 0.55)
    } else if near(value, 1.0) {
        InvGammaPrior::new(2.01, 4.01)
    } else {
        Err(off_grid(what, value))
    }
}

fn nugget_prior(value: f64) -> Result<InvGammaPrior> {
    if near(value, 0.01) {
        InvGammaPrior::new(2.001, 0.03)
    } else if near(value, 0.1) {
        InvGammaPrior::new(4.5, 0.55)
    } else {
        Err(off_grid("nugget variance", value))
    }
}

fn mean_component_prior(value: f64) -> Result<NormalPrior> {
    if near(value, 2.5) || near(value, 0.85) {
        NormalPrior::new(value, 5.0)
    } else {
        Err(off_grid("mean component", value))
    }
}

/// Outcome of one study cell.  `error` is set (and the scores are NaN) when
/// the fit or prediction failed; a failed cell never aborts the study.
#[derive(Debug, Clone)]
pub struct StudyResultRow {
    pub model: &'static str,
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub variance_group: &'static str,
    pub seed: u64,
    pub mean_crps: f64,
    pub mean_ape: f64,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

/// Fits and scores every dataset on a pool of `workers` threads (0 = one per
/// core).  Row order matches input order regardless of scheduling, and each
/// row's chains are seeded from its combo alone, so results do not depend on
/// the worker count.
pub fn run_study(
    datasets: &[StudyDataset],
    mcmc: &McmcConfig,
    workers: usize,
) -> Result<Vec<StudyResultRow>> {
    mcmc.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(|| {
        datasets
            .par_iter()
            .map(|sd| run_one(sd, mcmc))
            .collect::<Vec<_>>()
    }))
}

fn run_one(sd: &StudyDataset, mcmc: &McmcConfig) -> StudyResultRow {
    let start = Instant::now();
    let scores = score_one(sd, mcmc);
    let wall_seconds = start.elapsed().as_secs_f64();
    let c = &sd.combo;
    let (mean_crps, mean_ape, error) = match scores {
        Ok((crps, ape)) => (crps, ape, None),
        Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
    };
    StudyResultRow {
        model: c.model.name(),
        a: c.a,
        c: c.c,
        alpha: c.alpha,
        beta: c.beta,
        gamma: c.gamma,
        variance_group: c.variance_group.name(),
        seed: c.seed,
        mean_crps,
        mean_ape,
        wall_seconds,
        error,
    }
}

fn score_one(sd: &StudyDataset, mcmc: &McmcConfig) -> Result<(f64, f64)> {
    let est = sd.estimation_dataset()?;
    let targets = sd.validation_points();
    let holdout = sd.validation_angles();
    if holdout.is_empty() {
        return Err(Error::Empty {
            context: "validation rows",
        });
    }
    let fit_seed = mix_seed(sd.combo.seed, 0xF17);
    let krige_seed = mix_seed(sd.combo.seed, 0x0B5E);
    let samples = match truth_centered_priors(&sd.truth)? {
        StudyPriors::Wn(priors) => {
            let chain = fit_wn(&est, &priors, mcmc, fit_seed)?;
            krige_wn(&chain, &est, &targets, krige_seed)?
        }
        StudyPriors::Pn(priors) => {
            let chain = fit_pn(&est, &priors, mcmc, fit_seed)?;
            krige_pn(&chain, &est, &targets, krige_seed)?
        }
    };
    let mut crps_sum = 0.0;
    let mut dist_sum = 0.0;
    for (target, &obs) in samples.targets().iter().zip(&holdout) {
        crps_sum += crps_mc(&target.draws, obs)?;
        let dir = target.mean_direction.ok_or(Error::UndefinedDirection)?;
        dist_sum += circ_dist(dir, obs);
    }
    let m = holdout.len() as f64;
    Ok((crps_sum / m, dist_sum / m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_design_is_the_48_cell_grid() {
        let design = StudyDesign::full(ProcessModel::Wn, 7);
        assert_eq!(design.combos.len(), 48);
        let mut keys: Vec<_> = design
            .combos
            .iter()
            .map(|c| {
                (
                    format!("{:.1}-{:.1}-{:.1}-{:.1}-{:.1}", c.a, c.c, c.alpha, c.beta, c.gamma),
                    c.variance_group.name(),
                )
            })
            .collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 48, "design cells must be distinct");
        let low = design
            .combos
            .iter()
            .filter(|c| c.variance_group == VarianceGroup::Low)
            .count();
        assert_eq!(low, 24);
        let mut seeds: Vec<u64> = design.combos.iter().map(|c| c.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 48, "cell seeds must be distinct");
    }

    #[test]
    fn generation_is_deterministic_and_split_is_valid() {
        let combo = StudyDesign::full(ProcessModel::Wn, 11).combos[5];
        let split = SplitSpec::default();
        let sd = generate_one(&combo, &split).unwrap();
        assert_eq!(sd.dataset.len(), 240);
        assert_eq!(sd.estimation.len(), 170);
        assert_eq!(sd.validation.len(), 70);
        for &i in &sd.estimation {
            assert!(sd.dataset.points()[i].t <= 10);
        }
        let mut all: Vec<usize> = sd
            .estimation
            .iter()
            .chain(sd.validation.iter())
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..240).collect::<Vec<_>>());

        let again = generate_one(&combo, &split).unwrap();
        for (a, b) in sd.dataset.angles().iter().zip(again.dataset.angles()) {
            assert_eq!(a.radians(), b.radians());
        }
        assert_eq!(sd.estimation, again.estimation);

        let mut other = combo;
        other.seed ^= 1;
        let changed = generate_one(&other, &split).unwrap();
        assert_ne!(
            sd.dataset.angles()[0].radians(),
            changed.dataset.angles()[0].radians()
        );
    }

    #[test]
    fn prior_table_matches_the_grid() {
        let combo = StudyCombo {
            model: ProcessModel::Wn,
            a: 1.0,
            c: 0.2,
            alpha: 0.5,
            beta: 0.9,
            gamma: 0.8,
            variance_group: VarianceGroup::Low,
            seed: 1,
        };
        let truth = combo.truth().unwrap();
        let StudyPriors::Wn(p) = truth_centered_priors(&truth).unwrap() else {
            panic!("wrapped truth must map to wrapped priors");
        };
        assert_eq!((p.corr.a.shape(), p.corr.a.rate()), (5.0, 4.0));
        assert_eq!((p.corr.c.shape(), p.corr.c.rate()), (2.0, 5.0));
        assert_eq!(p.corr.alpha.shapes(), (5.0, 5.0));
        assert_eq!(p.corr.beta.shapes(), (6.0, 1.5));
        assert_eq!(p.corr.gamma.shapes(), (6.0, 1.5));
        assert_eq!((p.sigma2.shape(), p.sigma2.scale()), (4.5, 0.55));
        assert_eq!((p.nugget.shape(), p.nugget.scale()), (2.001, 0.03));
        assert_eq!(p.mu.variance(), 5.0);

        let pn_combo = StudyCombo {
            model: ProcessModel::Pn,
            variance_group: VarianceGroup::High,
            ..combo
        };
        let StudyPriors::Pn(p) = truth_centered_priors(&pn_combo.truth().unwrap()).unwrap() else {
            panic!("projected truth must map to projected priors");
        };
        assert_eq!((p.mu1.mean(), p.mu1.variance()), (0.85, 5.0));
        assert_eq!((p.sigma2_1.shape(), p.sigma2_1.scale()), (2.01, 4.01));
        assert_eq!((p.nugget.shape(), p.nugget.scale()), (4.5, 0.55));
    }

    #[test]
    fn off_grid_truth_is_refused() {
        let corr = GneitingParams::new(1.0, 0.2, 0.5, 0.0, 0.5).unwrap();
        let truth = StudyTruth::Wn(
            WnParams::new(Angle::new(std::f64::consts::PI).unwrap(), 0.3, 0.01, corr).unwrap(),
        );
        let err = match truth_centered_priors(&truth) {
            Err(e) => e.to_string(),
            Ok(_) => panic!("variance 0.3 is not on the grid"),
        };
        assert!(err.contains("0.3"), "error should name the value: {err}");

        let bad_corr = GneitingParams::new(0.7, 0.2, 0.5, 0.0, 0.5).unwrap();
        let truth = StudyTruth::Wn(
            WnParams::new(Angle::new(1.0).unwrap(), 0.1, 0.01, bad_corr).unwrap(),
        );
        assert!(truth_centered_priors(&truth).is_err());
    }

    #[test]
    fn tiny_study_runs_both_families_and_records_failures() {
        let wn = StudyDesign::full(ProcessModel::Wn, 3).combos[0];
        let pn = StudyDesign::full(ProcessModel::Pn, 3).combos[1];
        let split = SplitSpec::default();
        let mut datasets = generate_study(
            &StudyDesign {
                combos: vec![wn, pn],
            },
            &split,
        )
        .unwrap();
        // Sabotage a third copy: every estimation row is the same observation,
        // which the fitter must reject, and the study must keep going.
        let mut broken = datasets[0].clone();
        broken.estimation = vec![0; 12];
        broken.validation = (12..240).collect();
        datasets.push(broken);

        let mcmc = McmcConfig {
            iterations: 40,
            burn_in: 20,
            thin: 1,
            ..McmcConfig::default()
        };
        let rows = run_study(&datasets, &mcmc, 2).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].model, "WN");
        assert_eq!(rows[1].model, "PN");
        for row in &rows[..2] {
            assert!(row.error.is_none(), "unexpected failure: {:?}", row.error);
            assert!(row.mean_crps.is_finite() && row.mean_crps > 0.0);
            assert!(row.mean_ape.is_finite() && row.mean_ape > 0.0);
            assert!(row.wall_seconds > 0.0);
        }
        assert!(rows[2].error.is_some(), "sabotaged cell must fail");
        assert!(rows[2].mean_crps.is_nan());

        let again = run_study(&datasets[..1], &mcmc, 1).unwrap();
        assert_eq!(again[0].mean_crps, rows[0].mean_crps);
        assert_eq!(again[0].mean_ape, rows[0].mean_ape);
    }

    #[test]
    fn swapping_split_labels_changes_scores() {
        let combo = StudyDesign::full(ProcessModel::Wn, 9).combos[47];
        let split = SplitSpec::default();
        let sd = generate_one(&combo, &split).unwrap();
        let mut swapped = sd.clone();
        std::mem::swap(&mut swapped.estimation, &mut swapped.validation);
        let mcmc = McmcConfig {
            iterations: 30,
            burn_in: 10,
            thin: 1,
            ..McmcConfig::default()
        };
        let (crps, _) = score_one(&sd, &mcmc).unwrap();
        let (crps_swapped, _) = score_one(&swapped, &mcmc).unwrap();
        assert_ne!(crps, crps_swapped);
    }
}
