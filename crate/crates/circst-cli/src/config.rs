//! Configuration files for fitting and simulation.
//!
//! Plain TOML, validated strictly: every model parameter must have exactly
//! one prior entry of the right distribution family, and unknown keys
//! anywhere are rejected by name.  The raw file bytes are hashed so chains
//! and downstream artifacts can be tied back to the configuration that
//! produced them.

use std::path::Path;

use sha2::{Digest, Sha256};
use toml::map::Map;
use toml::Value;

use circst::angle::Angle;
use circst::covariance::GneitingParams;
use circst::mcmc::{KMaxPolicy, McmcConfig};
use circst::priors::{
    BetaPrior, CorrPriors, GammaPrior, InvGammaPrior, NormalPrior, PnPriors, TruncNormalPrior,
    WnPriors, WrappedNormalPrior,
};
use circst::projected::PnParams;
use circst::variants::{PnrPriors, Variant, VariantPriors, WnrPriors};
use circst::wrapped::WnParams;

use crate::errors::{validation, CliResult};

/// Which sampler a configuration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Wn,
    Pn,
    Variant(Variant),
}

impl ModelChoice {
    pub fn parse(s: &str) -> CliResult<ModelChoice> {
        match s {
            "WN" => Ok(ModelChoice::Wn),
            "PN" => Ok(ModelChoice::Pn),
            "WNA" => Ok(ModelChoice::Variant(Variant::Wna)),
            "WNR" => Ok(ModelChoice::Variant(Variant::Wnr)),
            "PNA" => Ok(ModelChoice::Variant(Variant::Pna)),
            "PNR" => Ok(ModelChoice::Variant(Variant::Pnr)),
            other => Err(validation(format!(
                "unknown model '{other}': expected WN, PN, WNA, WNR, PNA, or PNR"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelChoice::Wn => "WN",
            ModelChoice::Pn => "PN",
            ModelChoice::Variant(v) => v.name(),
        }
    }

    pub fn is_projected(&self) -> bool {
        matches!(
            self,
            ModelChoice::Pn | ModelChoice::Variant(Variant::Pna) | ModelChoice::Variant(Variant::Pnr)
        )
    }
}

/// Priors matching the chosen model.
#[derive(Debug, Clone)]
pub enum ModelPriors {
    Wn(WnPriors),
    Pn(PnPriors),
    Variant(VariantPriors),
}

/// A validated fitting configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelChoice,
    pub priors: ModelPriors,
    pub mcmc: McmcConfig,
    /// Seed from the file, if present; the --seed flag wins over it.
    pub seed: Option<u64>,
    pub hash: String,
}

/// A validated simulation configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub truth: SimTruth,
    pub sites: usize,
    pub times: u32,
    pub region_km: f64,
    pub seed: Option<u64>,
    pub hash: String,
}

#[derive(Debug, Clone)]
pub enum SimTruth {
    Wn(WnParams),
    Pn(PnParams),
}

pub fn file_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

pub fn k_max_label(policy: KMaxPolicy) -> String {
    match policy {
        KMaxPolicy::Auto => "auto".to_string(),
        KMaxPolicy::Fixed(k) => k.to_string(),
    }
}

pub fn load_run_config(path: &Path) -> CliResult<RunConfig> {
    let bytes = std::fs::read(path)
        .map_err(|e| validation(format!("cannot read config {}: {e}", path.display())))?;
    let hash = file_hash(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| validation(format!("config {} is not UTF-8", path.display())))?;
    let root: Value = text
        .parse()
        .map_err(|e| validation(format!("config {}: {e}", path.display())))?;
    let root = as_table(&root, "config")?;
    reject_unknown(root, &["model", "mcmc", "priors"], "config")?;

    let model = ModelChoice::parse(str_of(require(root, "model", "config")?, "model")?)?;
    let (mcmc, seed) = parse_mcmc(as_table(require(root, "mcmc", "config")?, "mcmc")?)?;
    let priors_table = as_table(require(root, "priors", "config")?, "priors")?;
    let priors = parse_priors(model, priors_table)?;
    Ok(RunConfig {
        model,
        priors,
        mcmc,
        seed,
        hash,
    })
}

pub fn load_sim_config(path: &Path) -> CliResult<SimConfig> {
    let bytes = std::fs::read(path)
        .map_err(|e| validation(format!("cannot read config {}: {e}", path.display())))?;
    let hash = file_hash(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| validation(format!("config {} is not UTF-8", path.display())))?;
    let root: Value = text
        .parse()
        .map_err(|e| validation(format!("config {}: {e}", path.display())))?;
    let root = as_table(&root, "config")?;
    reject_unknown(root, &["model", "truth", "layout"], "config")?;

    let model = ModelChoice::parse(str_of(require(root, "model", "config")?, "model")?)?;
    let truth_table = as_table(require(root, "truth", "config")?, "truth")?;
    let truth = match model {
        ModelChoice::Wn => {
            reject_unknown(
                truth_table,
                &["mu", "sigma2", "nugget", "a", "c", "alpha", "beta", "gamma"],
                "truth",
            )?;
            let corr = corr_truth(truth_table)?;
            let mu = Angle::new(float_field(truth_table, "mu", "truth")?)
                .map_err(|e| validation(format!("truth.mu: {e}")))?;
            SimTruth::Wn(
                WnParams::new(
                    mu,
                    float_field(truth_table, "sigma2", "truth")?,
                    float_field(truth_table, "nugget", "truth")?,
                    corr,
                )
                .map_err(|e| validation(format!("truth: {e}")))?,
            )
        }
        ModelChoice::Pn => {
            reject_unknown(
                truth_table,
                &[
                    "mu1", "mu2", "sigma2_1", "rho", "nugget", "a", "c", "alpha", "beta", "gamma",
                ],
                "truth",
            )?;
            let corr = corr_truth(truth_table)?;
            SimTruth::Pn(
                PnParams::new(
                    float_field(truth_table, "mu1", "truth")?,
                    float_field(truth_table, "mu2", "truth")?,
                    float_field(truth_table, "sigma2_1", "truth")?,
                    float_field(truth_table, "rho", "truth")?,
                    float_field(truth_table, "nugget", "truth")?,
                    corr,
                )
                .map_err(|e| validation(format!("truth: {e}")))?,
            )
        }
        ModelChoice::Variant(v) => {
            return Err(validation(format!(
                "simulate supports WN and PN truths only, not {}",
                v.name()
            )))
        }
    };

    let layout = as_table(require(root, "layout", "config")?, "layout")?;
    reject_unknown(layout, &["sites", "times", "region_km", "seed"], "layout")?;
    let sites = usize_field(layout, "sites", "layout")?;
    let times = usize_field(layout, "times", "layout")? as u32;
    if sites == 0 || times == 0 {
        return Err(validation("layout.sites and layout.times must be positive"));
    }
    let region_km = match layout.get("region_km") {
        Some(v) => f64_of(v, "layout.region_km")?,
        None => 10.0,
    };
    if !(region_km.is_finite() && region_km > 0.0) {
        return Err(validation("layout.region_km must be positive"));
    }
    let seed = match layout.get("seed") {
        Some(v) => Some(u64_of(v, "layout.seed")?),
        None => None,
    };
    Ok(SimConfig {
        truth,
        sites,
        times,
        region_km,
        seed,
        hash,
    })
}

// ---------------------------------------------------------------------------
// Section parsers
// ---------------------------------------------------------------------------

fn parse_mcmc(t: &Map<String, Value>) -> CliResult<(McmcConfig, Option<u64>)> {
    reject_unknown(
        t,
        &["iterations", "burn_in", "thin", "adapt", "seed", "k_max"],
        "mcmc",
    )?;
    let iterations = usize_field(t, "iterations", "mcmc")?;
    let burn_in = usize_field(t, "burn_in", "mcmc")?;
    let thin = match t.get("thin") {
        Some(v) => usize_of(v, "mcmc.thin")?,
        None => 1,
    };
    let adapt = match t.get("adapt") {
        Some(Value::Boolean(b)) => *b,
        Some(_) => return Err(validation("mcmc.adapt must be a boolean")),
        None => true,
    };
    let k_max = match t.get("k_max") {
        None => KMaxPolicy::Auto,
        Some(Value::String(s)) if s == "auto" => KMaxPolicy::Auto,
        Some(Value::Integer(n)) if *n >= 1 => KMaxPolicy::Fixed(*n as u32),
        Some(other) => {
            return Err(validation(format!(
                "mcmc.k_max must be \"auto\" or a positive integer, got {other}"
            )))
        }
    };
    let seed = match t.get("seed") {
        Some(v) => Some(u64_of(v, "mcmc.seed")?),
        None => None,
    };
    let cfg = McmcConfig {
        iterations,
        burn_in,
        thin,
        adapt,
        k_max,
    };
    cfg.validate()
        .map_err(|e| validation(format!("mcmc: {e}")))?;
    Ok((cfg, seed))
}

fn parse_priors(model: ModelChoice, t: &Map<String, Value>) -> CliResult<ModelPriors> {
    const CORR: [&str; 5] = ["a", "c", "alpha", "beta", "gamma"];
    let with_corr = |base: &[&'static str]| -> Vec<&'static str> {
        base.iter().chain(CORR.iter()).copied().collect()
    };
    match model {
        ModelChoice::Wn | ModelChoice::Variant(Variant::Wna) => {
            reject_unknown(t, &with_corr(&["mu", "sigma2", "nugget"]), "priors")?;
            let p = WnPriors {
                mu: wrapped_normal_prior(t, "mu")?,
                sigma2: inv_gamma_prior(t, "sigma2")?,
                nugget: inv_gamma_prior(t, "nugget")?,
                corr: corr_priors(t)?,
            };
            Ok(match model {
                ModelChoice::Wn => ModelPriors::Wn(p),
                _ => ModelPriors::Variant(VariantPriors::Wna(p)),
            })
        }
        ModelChoice::Variant(Variant::Wnr) => {
            reject_unknown(t, &with_corr(&["eta", "sigma2", "nugget"]), "priors")?;
            Ok(ModelPriors::Variant(VariantPriors::Wnr(WnrPriors {
                eta: normal_prior(t, "eta")?,
                sigma2: inv_gamma_prior(t, "sigma2")?,
                nugget: inv_gamma_prior(t, "nugget")?,
                corr: corr_priors(t)?,
            })))
        }
        ModelChoice::Pn | ModelChoice::Variant(Variant::Pna) => {
            reject_unknown(
                t,
                &with_corr(&["mu1", "mu2", "sigma2_1", "rho", "nugget"]),
                "priors",
            )?;
            let p = PnPriors {
                mu1: normal_prior(t, "mu1")?,
                mu2: normal_prior(t, "mu2")?,
                sigma2_1: inv_gamma_prior(t, "sigma2_1")?,
                rho: trunc_normal_prior(t, "rho")?,
                nugget: inv_gamma_prior(t, "nugget")?,
                corr: corr_priors(t)?,
            };
            Ok(match model {
                ModelChoice::Pn => ModelPriors::Pn(p),
                _ => ModelPriors::Variant(VariantPriors::Pna(p)),
            })
        }
        ModelChoice::Variant(Variant::Pnr) => {
            reject_unknown(
                t,
                &with_corr(&["eta", "sigma2_1", "rho", "nugget"]),
                "priors",
            )?;
            Ok(ModelPriors::Variant(VariantPriors::Pnr(PnrPriors {
                eta: normal_prior(t, "eta")?,
                sigma2_1: inv_gamma_prior(t, "sigma2_1")?,
                rho: trunc_normal_prior(t, "rho")?,
                nugget: inv_gamma_prior(t, "nugget")?,
                corr: corr_priors(t)?,
            })))
        }
    }
}

fn corr_priors(t: &Map<String, Value>) -> CliResult<CorrPriors> {
    Ok(CorrPriors {
        a: gamma_prior(t, "a")?,
        c: gamma_prior(t, "c")?,
        alpha: beta_prior(t, "alpha")?,
        beta: beta_prior(t, "beta")?,
        gamma: beta_prior(t, "gamma")?,
    })
}

fn corr_truth(t: &Map<String, Value>) -> CliResult<GneitingParams> {
    GneitingParams::new(
        float_field(t, "a", "truth")?,
        float_field(t, "c", "truth")?,
        float_field(t, "alpha", "truth")?,
        float_field(t, "beta", "truth")?,
        float_field(t, "gamma", "truth")?,
    )
    .map_err(|e| validation(format!("truth: {e}")))
}

// ---------------------------------------------------------------------------
// Individual prior tables
// ---------------------------------------------------------------------------

fn prior_entry<'a>(
    t: &'a Map<String, Value>,
    key: &str,
    expected_dist: &str,
    fields: &[&str],
) -> CliResult<&'a Map<String, Value>> {
    let entry = t.get(key).ok_or_else(|| {
        validation(format!("missing prior entry 'priors.{key}'"))
    })?;
    let entry = as_table(entry, &format!("priors.{key}"))?;
    let mut allowed = vec!["dist"];
    allowed.extend_from_slice(fields);
    reject_unknown(entry, &allowed, &format!("priors.{key}"))?;
    let dist = str_of(
        require(entry, "dist", &format!("priors.{key}"))?,
        &format!("priors.{key}.dist"),
    )?;
    if dist != expected_dist {
        return Err(validation(format!(
            "priors.{key} must use dist = \"{expected_dist}\", got \"{dist}\""
        )));
    }
    Ok(entry)
}

fn gamma_prior(t: &Map<String, Value>, key: &str) -> CliResult<GammaPrior> {
    let e = prior_entry(t, key, "gamma", &["shape", "rate"])?;
    GammaPrior::new(
        float_field(e, "shape", &format!("priors.{key}"))?,
        float_field(e, "rate", &format!("priors.{key}"))?,
    )
    .map_err(|err| validation(format!("priors.{key}: {err}")))
}

fn inv_gamma_prior(t: &Map<String, Value>, key: &str) -> CliResult<InvGammaPrior> {
    let e = prior_entry(t, key, "inv_gamma", &["shape", "scale"])?;
    InvGammaPrior::new(
        float_field(e, "shape", &format!("priors.{key}"))?,
        float_field(e, "scale", &format!("priors.{key}"))?,
    )
    .map_err(|err| validation(format!("priors.{key}: {err}")))
}

fn beta_prior(t: &Map<String, Value>, key: &str) -> CliResult<BetaPrior> {
    let e = prior_entry(t, key, "beta", &["a", "b"])?;
    BetaPrior::new(
        float_field(e, "a", &format!("priors.{key}"))?,
        float_field(e, "b", &format!("priors.{key}"))?,
    )
    .map_err(|err| validation(format!("priors.{key}: {err}")))
}

fn normal_prior(t: &Map<String, Value>, key: &str) -> CliResult<NormalPrior> {
    let e = prior_entry(t, key, "normal", &["mean", "variance"])?;
    NormalPrior::new(
        float_field(e, "mean", &format!("priors.{key}"))?,
        float_field(e, "variance", &format!("priors.{key}"))?,
    )
    .map_err(|err| validation(format!("priors.{key}: {err}")))
}

fn trunc_normal_prior(t: &Map<String, Value>, key: &str) -> CliResult<TruncNormalPrior> {
    let e = prior_entry(t, key, "trunc_normal", &["mean", "variance"])?;
    TruncNormalPrior::new(
        float_field(e, "mean", &format!("priors.{key}"))?,
        float_field(e, "variance", &format!("priors.{key}"))?,
    )
    .map_err(|err| validation(format!("priors.{key}: {err}")))
}

fn wrapped_normal_prior(t: &Map<String, Value>, key: &str) -> CliResult<WrappedNormalPrior> {
    let e = prior_entry(t, key, "wrapped_normal", &["mean", "variance"])?;
    let mean = Angle::new(float_field(e, "mean", &format!("priors.{key}"))?)
        .map_err(|err| validation(format!("priors.{key}: {err}")))?;
    WrappedNormalPrior::new(mean, float_field(e, "variance", &format!("priors.{key}"))?)
        .map_err(|err| validation(format!("priors.{key}: {err}")))
}

// ---------------------------------------------------------------------------
// TOML plumbing
// ---------------------------------------------------------------------------

fn as_table<'a>(v: &'a Value, what: &str) -> CliResult<&'a Map<String, Value>> {
    v.as_table()
        .ok_or_else(|| validation(format!("{what} must be a table")))
}

fn require<'a>(t: &'a Map<String, Value>, key: &str, context: &str) -> CliResult<&'a Value> {
    t.get(key)
        .ok_or_else(|| validation(format!("{context} is missing required key '{key}'")))
}

fn reject_unknown(t: &Map<String, Value>, allowed: &[&str], context: &str) -> CliResult<()> {
    let unknown: Vec<&str> = t
        .keys()
        .map(String::as_str)
        .filter(|k| !allowed.contains(k))
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(validation(format!(
            "unknown {context} key(s): {}",
            unknown.join(", ")
        )))
    }
}

fn str_of<'a>(v: &'a Value, what: &str) -> CliResult<&'a str> {
    v.as_str()
        .ok_or_else(|| validation(format!("{what} must be a string")))
}

fn f64_of(v: &Value, what: &str) -> CliResult<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(n) => Ok(*n as f64),
        _ => Err(validation(format!("{what} must be a number"))),
    }
}

fn u64_of(v: &Value, what: &str) -> CliResult<u64> {
    match v {
        Value::Integer(n) if *n >= 0 => Ok(*n as u64),
        _ => Err(validation(format!("{what} must be a non-negative integer"))),
    }
}

fn usize_of(v: &Value, what: &str) -> CliResult<usize> {
    match v {
        Value::Integer(n) if *n >= 0 => Ok(*n as usize),
        _ => Err(validation(format!("{what} must be a non-negative integer"))),
    }
}

fn float_field(t: &Map<String, Value>, key: &str, context: &str) -> CliResult<f64> {
    f64_of(require(t, key, context)?, &format!("{context}.{key}"))
}

fn usize_field(t: &Map<String, Value>, key: &str, context: &str) -> CliResult<usize> {
    usize_of(require(t, key, context)?, &format!("{context}.{key}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const WN_CONFIG: &str = r#"
model = "WN"

[mcmc]
iterations = 100
burn_in = 50
thin = 2
seed = 9

[priors.mu]
dist = "wrapped_normal"
mean = 3.14159
variance = 5.0

[priors.sigma2]
dist = "inv_gamma"
shape = 4.5
scale = 0.55

[priors.nugget]
dist = "inv_gamma"
shape = 2.001
scale = 0.03

[priors.a]
dist = "gamma"
shape = 5.0
rate = 4.0

[priors.c]
dist = "gamma"
shape = 2.0
rate = 5.0

[priors.alpha]
dist = "beta"
a = 5.0
b = 5.0

[priors.beta]
dist = "beta"
a = 5.0
b = 5.0

[priors.gamma]
dist = "beta"
a = 5.0
b = 5.0
"#;

    #[test]
    fn well_formed_wrapped_config_loads() {
        let f = write_temp(WN_CONFIG);
        let cfg = load_run_config(f.path()).unwrap();
        assert_eq!(cfg.model.name(), "WN");
        assert_eq!(cfg.mcmc.iterations, 100);
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.hash.len(), 64);
        match cfg.priors {
            ModelPriors::Wn(p) => assert_eq!(p.sigma2.shape(), 4.5),
            _ => panic!("expected wrapped priors"),
        }
    }

    #[test]
    fn unknown_keys_are_named() {
        let f = write_temp(&WN_CONFIG.replace("[priors.gamma]", "[priors.typo]"));
        let err = load_run_config(f.path()).unwrap_err();
        let msg = err.message();
        assert!(msg.contains("typo") || msg.contains("gamma"), "{msg}");

        let f = write_temp(&format!("{WN_CONFIG}\nstray = 1\n"));
        let err = load_run_config(f.path()).unwrap_err();
        assert!(err.message().contains("stray"), "{}", err.message());
    }

    #[test]
    fn wrong_distribution_family_is_rejected() {
        let broken = WN_CONFIG.replace(
            "[priors.sigma2]\ndist = \"inv_gamma\"",
            "[priors.sigma2]\ndist = \"gamma\"",
        );
        let f = write_temp(&broken);
        let err = load_run_config(f.path()).unwrap_err();
        assert!(err.message().contains("inv_gamma"), "{}", err.message());
    }

    #[test]
    fn simulate_config_round_trips_truth() {
        let f = write_temp(
            r#"
model = "PN"

[truth]
mu1 = 2.5
mu2 = 2.5
sigma2_1 = 1.0
rho = 0.0
nugget = 0.01
a = 1.0
c = 0.2
alpha = 0.5
beta = 0.5
gamma = 0.5

[layout]
sites = 4
times = 3
seed = 11
"#,
        );
        let cfg = load_sim_config(f.path()).unwrap();
        assert_eq!(cfg.sites, 4);
        assert_eq!(cfg.times, 3);
        assert_eq!(cfg.seed, Some(11));
        assert_eq!(cfg.region_km, 10.0);
        match cfg.truth {
            SimTruth::Pn(p) => assert_eq!(p.mu1(), 2.5),
            _ => panic!("expected projected truth"),
        }
    }

    #[test]
    fn variant_truth_is_refused_for_simulation() {
        let f = write_temp(
            "model = \"WNA\"\n[truth]\n[layout]\nsites = 2\ntimes = 2\n",
        );
        let err = load_sim_config(f.path()).unwrap_err();
        assert!(err.message().contains("WNA"), "{}", err.message());
    }
}
