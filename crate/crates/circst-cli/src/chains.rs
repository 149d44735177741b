//! Chain persistence: posterior draws as CSV plus a JSON metadata sidecar.
//!
//! The draw file has one column per scalar parameter and one row per
//! retained iteration, written with 17 significant digits so reloading
//! reproduces every value bit-for-bit.  Latent states (winding numbers or
//! radii) go to a separate `.latent.csv` because they dominate file size;
//! kriging needs them, summaries do not.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use circst::angle::Angle;
use circst::covariance::GneitingParams;
use circst::mcmc::{BlockRate, ChainMeta};
use circst::projected::{PnChain, PnDraw, PnParams};
use circst::variants::{
    PnMeanDraw, PnVariantDraw, Variant, VariantChain, VariantDraws, WnMeanDraw, WnVariantDraw,
};
use circst::wrapped::{WnChain, WnDraw, WnParams};

use crate::config::ModelChoice;
use crate::data::{comment_line, read_comment_hash, write_atomic, TOOL_VERSION};
use crate::errors::{validation, CliResult};

/// Any fitted chain the CLI can persist.
#[derive(Debug, Clone)]
pub enum FittedChain {
    Wn(WnChain),
    Pn(PnChain),
    Variant(VariantChain),
}

impl FittedChain {
    pub fn model_name(&self) -> &'static str {
        match self {
            FittedChain::Wn(_) => "WN",
            FittedChain::Pn(_) => "PN",
            FittedChain::Variant(c) => c.variant.name(),
        }
    }

    pub fn meta(&self) -> &ChainMeta {
        match self {
            FittedChain::Wn(c) => &c.meta,
            FittedChain::Pn(c) => &c.meta,
            FittedChain::Variant(c) => &c.meta,
        }
    }

    pub fn retained(&self) -> usize {
        match self {
            FittedChain::Wn(c) => c.draws.len(),
            FittedChain::Pn(c) => c.draws.len(),
            FittedChain::Variant(c) => c.draws.len(),
        }
    }

    fn cell_labels(&self) -> Vec<String> {
        match self {
            FittedChain::Variant(c) => c.cell_labels.clone(),
            _ => Vec::new(),
        }
    }

    fn coeff_names(&self) -> Vec<String> {
        match self {
            FittedChain::Variant(c) => c.coeff_names.clone(),
            _ => Vec::new(),
        }
    }
}

/// Provenance recorded next to the draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaFile {
    pub tool_version: String,
    pub model: String,
    pub config_hash: String,
    pub dataset_hash: String,
    pub n_obs: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub retained: usize,
    pub k_max: String,
    pub save_latent: bool,
    pub cell_labels: Vec<String>,
    pub coeff_names: Vec<String>,
    pub acceptance: Vec<AcceptanceEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcceptanceEntry {
    pub name: String,
    pub rate: f64,
}

/// Fit-time facts that the chain itself does not carry.
#[derive(Debug, Clone)]
pub struct ChainContext {
    pub config_hash: String,
    pub dataset_hash: String,
    pub n_obs: usize,
    pub k_max: String,
    pub save_latent: bool,
}

pub fn meta_path(chain: &Path) -> PathBuf {
    chain.with_extension("meta.json")
}

pub fn latent_path(chain: &Path) -> PathBuf {
    chain.with_extension("latent.csv")
}

/// Full-precision decimal: 17 significant digits round-trips any f64.
pub fn full(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------------
// Column layout (shared by save and load)
// ---------------------------------------------------------------------------

const CORR_COLS: [&str; 5] = ["a", "c", "alpha", "beta", "gamma"];

fn columns(model: ModelChoice, labels: &[String], coeffs: &[String]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    let each = |prefix: &str, names: &[String], cols: &mut Vec<String>| {
        for n in names {
            cols.push(format!("{prefix}[{n}]"));
        }
    };
    match model {
        ModelChoice::Wn => {
            cols.extend(["mu", "sigma2", "nugget"].map(String::from));
        }
        ModelChoice::Pn => {
            cols.extend(["mu1", "mu2", "sigma2_1", "rho", "nugget"].map(String::from));
        }
        ModelChoice::Variant(Variant::Wna) => {
            each("mu", labels, &mut cols);
            each("sigma2", labels, &mut cols);
            each("nugget", labels, &mut cols);
        }
        ModelChoice::Variant(Variant::Wnr) => {
            each("eta", coeffs, &mut cols);
            each("sigma2", labels, &mut cols);
            each("nugget", labels, &mut cols);
        }
        ModelChoice::Variant(Variant::Pna) => {
            each("mu1", labels, &mut cols);
            each("mu2", labels, &mut cols);
            cols.extend(["sigma2_1", "rho"].map(String::from));
            each("nugget", labels, &mut cols);
        }
        ModelChoice::Variant(Variant::Pnr) => {
            each("eta1", coeffs, &mut cols);
            each("eta2", coeffs, &mut cols);
            cols.extend(["sigma2_1", "rho"].map(String::from));
            each("nugget", labels, &mut cols);
        }
    }
    cols.extend(CORR_COLS.map(String::from));
    cols
}

fn corr_values(g: &GneitingParams) -> [f64; 5] {
    [g.a(), g.c(), g.alpha(), g.beta(), g.gamma()]
}

fn row_values(chain: &FittedChain, i: usize) -> Vec<f64> {
    let mut v = Vec::new();
    match chain {
        FittedChain::Wn(c) => {
            let p = &c.draws[i].params;
            v.extend([p.mu().radians(), p.sigma2(), p.nugget()]);
            v.extend(corr_values(p.corr()));
        }
        FittedChain::Pn(c) => {
            let p = &c.draws[i].params;
            v.extend([p.mu1(), p.mu2(), p.sigma2_1(), p.rho(), p.nugget()]);
            v.extend(corr_values(p.corr()));
        }
        FittedChain::Variant(c) => match &c.draws {
            VariantDraws::Wn(draws) => {
                let d = &draws[i];
                match &d.mean {
                    WnMeanDraw::CellMeans(m) => v.extend(m.iter().map(|a| a.radians())),
                    WnMeanDraw::Coeffs(eta) => v.extend_from_slice(eta),
                }
                v.extend_from_slice(&d.sigma2);
                v.extend_from_slice(&d.nugget);
                v.extend(corr_values(&d.corr));
            }
            VariantDraws::Pn(draws) => {
                let d = &draws[i];
                match &d.mean {
                    PnMeanDraw::CellMeans(m) => {
                        v.extend(m.iter().map(|p| p.0));
                        v.extend(m.iter().map(|p| p.1));
                    }
                    PnMeanDraw::Coeffs { z1, z2 } => {
                        v.extend_from_slice(z1);
                        v.extend_from_slice(z2);
                    }
                }
                v.extend([d.sigma2_1, d.rho]);
                v.extend_from_slice(&d.nugget);
                v.extend(corr_values(&d.corr));
            }
        },
    }
    v
}

// ---------------------------------------------------------------------------
// Save
// ---------------------------------------------------------------------------

pub fn save_chain(path: &Path, chain: &FittedChain, ctx: &ChainContext) -> CliResult<()> {
    let model = ModelChoice::parse(chain.model_name())?;
    let labels = chain.cell_labels();
    let coeffs = chain.coeff_names();
    let cols = columns(model, &labels, &coeffs);
    let retained = chain.retained();

    let mut out = comment_line(&ctx.config_hash);
    out.push_str(&cols.join(","));
    out.push('\n');
    for i in 0..retained {
        let vals = row_values(chain, i);
        debug_assert_eq!(vals.len(), cols.len());
        let mut first = true;
        for v in vals {
            if !first {
                out.push(',');
            }
            out.push_str(&full(v));
            first = false;
        }
        out.push('\n');
    }
    write_atomic(path, &out)?;

    if ctx.save_latent {
        save_latents(&latent_path(path), chain, ctx)?;
    }

    let meta = MetaFile {
        tool_version: TOOL_VERSION.to_string(),
        model: chain.model_name().to_string(),
        config_hash: ctx.config_hash.clone(),
        dataset_hash: ctx.dataset_hash.clone(),
        n_obs: ctx.n_obs,
        iterations: chain.meta().iterations,
        burn_in: chain.meta().burn_in,
        thin: chain.meta().thin,
        seed: chain.meta().seed,
        retained,
        k_max: ctx.k_max.clone(),
        save_latent: ctx.save_latent,
        cell_labels: labels,
        coeff_names: coeffs,
        acceptance: chain
            .meta()
            .acceptance
            .iter()
            .map(|b| AcceptanceEntry {
                name: b.name.clone(),
                rate: b.rate,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| validation(format!("cannot serialize metadata: {e}")))?;
    write_atomic(&meta_path(path), &format!("{json}\n"))
}

fn save_latents(path: &Path, chain: &FittedChain, ctx: &ChainContext) -> CliResult<()> {
    let (prefix, wrapped) = match chain {
        FittedChain::Wn(_) => ("k", true),
        FittedChain::Pn(_) => ("r", false),
        FittedChain::Variant(c) => match &c.draws {
            VariantDraws::Wn(_) => ("k", true),
            VariantDraws::Pn(_) => ("r", false),
        },
    };
    let n = ctx.n_obs;
    let mut out = comment_line(&ctx.config_hash);
    out.push_str(
        &(0..n)
            .map(|i| format!("{prefix}{i}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for i in 0..chain.retained() {
        let line = if wrapped {
            let k: &[i32] = match chain {
                FittedChain::Wn(c) => &c.draws[i].k,
                FittedChain::Variant(c) => match &c.draws {
                    VariantDraws::Wn(d) => &d[i].k,
                    _ => unreachable!(),
                },
                _ => unreachable!(),
            };
            k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        } else {
            let r: &[f64] = match chain {
                FittedChain::Pn(c) => &c.draws[i].r,
                FittedChain::Variant(c) => match &c.draws {
                    VariantDraws::Pn(d) => &d[i].r,
                    _ => unreachable!(),
                },
                _ => unreachable!(),
            };
            r.iter().map(|v| full(*v)).collect::<Vec<_>>().join(",")
        };
        out.push_str(&line);
        out.push('\n');
    }
    write_atomic(path, &out)
}

// ---------------------------------------------------------------------------
// Load
// ---------------------------------------------------------------------------

pub fn load_chain(path: &Path) -> CliResult<(FittedChain, MetaFile)> {
    let mpath = meta_path(path);
    let meta_text = std::fs::read_to_string(&mpath).map_err(|e| {
        validation(format!(
            "cannot read chain metadata {} (expected next to the chain file): {e}",
            mpath.display()
        ))
    })?;
    let meta: MetaFile = serde_json::from_str(&meta_text)
        .map_err(|e| validation(format!("chain metadata {}: {e}", mpath.display())))?;

    let file_hash = read_comment_hash(path)?;
    if file_hash != meta.config_hash {
        return Err(validation(format!(
            "config hash mismatch: chain file records {file_hash}, metadata records {}",
            meta.config_hash
        )));
    }

    let model = ModelChoice::parse(&meta.model)?;
    let expected = columns(model, &meta.cell_labels, &meta.coeff_names);
    let rows = read_numeric_csv(path, &expected, "chain")?;
    if rows.len() != meta.retained {
        return Err(validation(format!(
            "chain has {} draw rows but metadata records {} retained",
            rows.len(),
            meta.retained
        )));
    }

    let latents = if meta.save_latent {
        let lpath = latent_path(path);
        let prefix = if model.is_projected() { "r" } else { "k" };
        let cols: Vec<String> = (0..meta.n_obs).map(|i| format!("{prefix}{i}")).collect();
        let l = read_numeric_csv(&lpath, &cols, "latent")?;
        if l.len() != meta.retained {
            return Err(validation(format!(
                "latent file has {} rows but metadata records {} retained",
                l.len(),
                meta.retained
            )));
        }
        Some(l)
    } else {
        None
    };

    let chain_meta = ChainMeta {
        iterations: meta.iterations,
        burn_in: meta.burn_in,
        thin: meta.thin,
        seed: meta.seed,
        acceptance: meta
            .acceptance
            .iter()
            .map(|a| BlockRate {
                name: a.name.clone(),
                rate: a.rate,
            })
            .collect(),
    };

    let chain = rebuild(model, &meta, rows, latents, chain_meta)?;
    Ok((chain, meta))
}

fn rebuild(
    model: ModelChoice,
    meta: &MetaFile,
    rows: Vec<Vec<f64>>,
    latents: Option<Vec<Vec<f64>>>,
    chain_meta: ChainMeta,
) -> CliResult<FittedChain> {
    let latent_row = |i: usize| -> Vec<f64> {
        latents.as_ref().map_or_else(Vec::new, |l| l[i].clone())
    };
    let wrapped_latent = |i: usize| -> CliResult<Vec<i32>> {
        latent_row(i)
            .iter()
            .map(|&v| {
                if v.fract() == 0.0 && v.abs() < i32::MAX as f64 {
                    Ok(v as i32)
                } else {
                    Err(validation(format!("latent winding number {v} is not an integer")))
                }
            })
            .collect()
    };
    let corr_of = |row: &[f64], at: usize| -> CliResult<GneitingParams> {
        GneitingParams::new(row[at], row[at + 1], row[at + 2], row[at + 3], row[at + 4])
            .map_err(|e| validation(format!("chain row: {e}")))
    };

    match model {
        ModelChoice::Wn => {
            let mut draws = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                let corr = corr_of(row, 3)?;
                let mu = Angle::new(row[0]).map_err(|e| validation(format!("chain row: {e}")))?;
                let params = WnParams::new(mu, row[1], row[2], corr)
                    .map_err(|e| validation(format!("chain row: {e}")))?;
                draws.push(WnDraw {
                    params,
                    k: wrapped_latent(i)?,
                });
            }
            Ok(FittedChain::Wn(WnChain {
                draws,
                meta: chain_meta,
            }))
        }
        ModelChoice::Pn => {
            let mut draws = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                let corr = corr_of(row, 5)?;
                let params = PnParams::new(row[0], row[1], row[2], row[3], row[4], corr)
                    .map_err(|e| validation(format!("chain row: {e}")))?;
                draws.push(PnDraw {
                    params,
                    r: latent_row(i),
                });
            }
            Ok(FittedChain::Pn(PnChain {
                draws,
                meta: chain_meta,
            }))
        }
        ModelChoice::Variant(variant) => {
            let n_cells = meta.cell_labels.len();
            let n_coeffs = meta.coeff_names.len();
            let draws = match variant {
                Variant::Wna | Variant::Wnr => {
                    let n_mean = if variant == Variant::Wna { n_cells } else { n_coeffs };
                    let mut draws = Vec::with_capacity(rows.len());
                    for (i, row) in rows.iter().enumerate() {
                        let mean = if variant == Variant::Wna {
                            WnMeanDraw::CellMeans(
                                row[..n_mean]
                                    .iter()
                                    .map(|&v| {
                                        Angle::new(v)
                                            .map_err(|e| validation(format!("chain row: {e}")))
                                    })
                                    .collect::<CliResult<_>>()?,
                            )
                        } else {
                            WnMeanDraw::Coeffs(row[..n_mean].to_vec())
                        };
                        let sigma2 = row[n_mean..n_mean + n_cells].to_vec();
                        let nugget = row[n_mean + n_cells..n_mean + 2 * n_cells].to_vec();
                        let corr = corr_of(row, n_mean + 2 * n_cells)?;
                        draws.push(WnVariantDraw {
                            mean,
                            sigma2,
                            nugget,
                            corr,
                            k: wrapped_latent(i)?,
                        });
                    }
                    VariantDraws::Wn(draws)
                }
                Variant::Pna | Variant::Pnr => {
                    let n_mean = if variant == Variant::Pna { n_cells } else { n_coeffs };
                    let mut draws = Vec::with_capacity(rows.len());
                    for (i, row) in rows.iter().enumerate() {
                        let mean = if variant == Variant::Pna {
                            PnMeanDraw::CellMeans(
                                (0..n_mean).map(|c| (row[c], row[n_mean + c])).collect(),
                            )
                        } else {
                            PnMeanDraw::Coeffs {
                                z1: row[..n_mean].to_vec(),
                                z2: row[n_mean..2 * n_mean].to_vec(),
                            }
                        };
                        let base = 2 * n_mean;
                        let sigma2_1 = row[base];
                        let rho = row[base + 1];
                        let nugget = row[base + 2..base + 2 + n_cells].to_vec();
                        let corr = corr_of(row, base + 2 + n_cells)?;
                        draws.push(PnVariantDraw {
                            mean,
                            sigma2_1,
                            rho,
                            nugget,
                            corr,
                            r: latent_row(i),
                        });
                    }
                    VariantDraws::Pn(draws)
                }
            };
            Ok(FittedChain::Variant(VariantChain {
                variant,
                cell_labels: meta.cell_labels.clone(),
                coeff_names: meta.coeff_names.clone(),
                draws,
                meta: chain_meta,
            }))
        }
    }
}

/// Reads a tool-written CSV whose header must equal `expected` exactly.
fn read_numeric_csv(path: &Path, expected: &[String], what: &str) -> CliResult<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read {what} file {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| validation(format!("{what} file {} is empty", path.display())))?;
    let got: Vec<&str> = header.split(',').collect();
    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(validation(format!(
            "{what} file header does not match its metadata\n  expected: {}\n  found:    {}",
            expected.join(","),
            header
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected.len() {
            return Err(validation(format!(
                "{what} row {}: expected {} fields, found {}",
                i + 1,
                expected.len(),
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(fields.len());
        for (f, name) in fields.iter().zip(expected) {
            row.push(f.parse::<f64>().map_err(|_| {
                validation(format!("{what} row {}: {name} is not a number: '{f}'", i + 1))
            })?);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wn_chain() -> FittedChain {
        let corr = GneitingParams::new(0.7, 0.3, 0.5, 0.4, 0.6).unwrap();
        let draws = (0..4)
            .map(|i| WnDraw {
                params: WnParams::new(
                    Angle::new(0.1 + 0.7 * i as f64).unwrap(),
                    0.2 + 0.01 * i as f64,
                    0.05,
                    corr,
                )
                .unwrap(),
                k: vec![0, -1, 2],
            })
            .collect();
        FittedChain::Wn(WnChain {
            draws,
            meta: ChainMeta {
                iterations: 20,
                burn_in: 12,
                thin: 2,
                seed: 99,
                acceptance: vec![BlockRate {
                    name: "corr".into(),
                    rate: 0.31,
                }],
            },
        })
    }

    fn ctx(save_latent: bool) -> ChainContext {
        ChainContext {
            config_hash: "deadbeef".into(),
            dataset_hash: "cafe".into(),
            n_obs: 3,
            k_max: "auto".into(),
            save_latent,
        }
    }

    #[test]
    fn wrapped_chain_round_trips_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.csv");
        let chain = wn_chain();
        save_chain(&path, &chain, &ctx(true)).unwrap();
        let (loaded, meta) = load_chain(&path).unwrap();
        assert_eq!(meta.model, "WN");
        assert_eq!(meta.retained, 4);
        assert_eq!(meta.acceptance[0].name, "corr");
        match (&chain, &loaded) {
            (FittedChain::Wn(a), FittedChain::Wn(b)) => {
                for (x, y) in a.draws.iter().zip(&b.draws) {
                    assert_eq!(x.params.mu().radians().to_bits(), y.params.mu().radians().to_bits());
                    assert_eq!(x.params.sigma2().to_bits(), y.params.sigma2().to_bits());
                    assert_eq!(x.params.corr().a().to_bits(), y.params.corr().a().to_bits());
                    assert_eq!(x.k, y.k);
                }
                assert_eq!(a.meta.seed, b.meta.seed);
            }
            _ => panic!("model mismatch"),
        }
    }

    #[test]
    fn tampered_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.csv");
        save_chain(&path, &wn_chain(), &ctx(false)).unwrap();

        // Header tamper.
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("sigma2", "sigma")).unwrap();
        assert!(load_chain(&path).unwrap_err().message().contains("header"));

        // Row-count tamper.
        save_chain(&path, &wn_chain(), &ctx(false)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let truncated: Vec<&str> = text.lines().take(4).collect();
        std::fs::write(&path, truncated.join("\n")).unwrap();
        let err = load_chain(&path).unwrap_err();
        assert!(err.message().contains("retained"), "{}", err.message());

        // Hash tamper.
        save_chain(&path, &wn_chain(), &ctx(false)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("deadbeef", "feedface")).unwrap();
        let err = load_chain(&path).unwrap_err();
        assert!(err.message().contains("hash mismatch"), "{}", err.message());
    }

    #[test]
    fn projected_variant_round_trips() {
        let corr = GneitingParams::new(0.5, 0.5, 0.5, 0.0, 0.5).unwrap();
        let draws = (0..3)
            .map(|i| PnVariantDraw {
                mean: PnMeanDraw::CellMeans(vec![(1.0 + i as f64, -0.5), (0.3, 2.0)]),
                sigma2_1: 1.2,
                rho: 0.1,
                nugget: vec![0.05, 0.01],
                corr,
                r: vec![1.0, 2.0, 0.5, 1.5],
            })
            .collect();
        let chain = FittedChain::Variant(VariantChain {
            variant: Variant::Pna,
            cell_labels: vec!["calm".into(), "storm".into()],
            coeff_names: vec![],
            draws: VariantDraws::Pn(draws),
            meta: ChainMeta {
                iterations: 10,
                burn_in: 4,
                thin: 2,
                seed: 7,
                acceptance: vec![],
            },
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.csv");
        let mut c = ctx(true);
        c.n_obs = 4;
        save_chain(&path, &chain, &c).unwrap();

        let header = std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .nth(1)
            .unwrap()
            .to_string();
        assert_eq!(
            header,
            "mu1[calm],mu1[storm],mu2[calm],mu2[storm],sigma2_1,rho,nugget[calm],nugget[storm],a,c,alpha,beta,gamma"
        );

        let (loaded, _) = load_chain(&path).unwrap();
        match loaded {
            FittedChain::Variant(vc) => {
                assert_eq!(vc.cell_labels, vec!["calm", "storm"]);
                match vc.draws {
                    VariantDraws::Pn(d) => {
                        match &d[1].mean {
                            PnMeanDraw::CellMeans(m) => assert_eq!(m[0], (2.0, -0.5)),
                            _ => panic!("mean kind mismatch"),
                        }
                        assert_eq!(d[0].r, vec![1.0, 2.0, 0.5, 1.5]);
                    }
                    _ => panic!("family mismatch"),
                }
            }
            _ => panic!("expected variant chain"),
        }
    }
}
