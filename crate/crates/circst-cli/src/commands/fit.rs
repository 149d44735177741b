//! `fit`: sample the posterior for a configured model on a dataset.

use std::path::Path;

use circst::projected::fit_pn;
use circst::variants::fit_variant;
use circst::wrapped::fit_wn;

use crate::chains::{save_chain, ChainContext, FittedChain};
use crate::config::{k_max_label, load_run_config, ModelChoice, ModelPriors};
use crate::data::load_dataset;
use crate::errors::{validation, CliResult};

pub fn run(
    config: &Path,
    data: &Path,
    out: &Path,
    seed: Option<u64>,
    save_latent: bool,
) -> CliResult<()> {
    let cfg = load_run_config(config)?;
    let loaded = load_dataset(data)?;
    let seed = seed.or(cfg.seed).ok_or_else(|| {
        validation("no seed given: pass --seed or set mcmc.seed in the config")
    })?;

    let chain = match (&cfg.model, &cfg.priors) {
        (ModelChoice::Wn, ModelPriors::Wn(p)) => {
            FittedChain::Wn(fit_wn(&loaded.dataset, p, &cfg.mcmc, seed)?)
        }
        (ModelChoice::Pn, ModelPriors::Pn(p)) => {
            FittedChain::Pn(fit_pn(&loaded.dataset, p, &cfg.mcmc, seed)?)
        }
        (ModelChoice::Variant(v), ModelPriors::Variant(p)) => {
            FittedChain::Variant(fit_variant(&loaded.dataset, *v, p, &cfg.mcmc, seed)?)
        }
        _ => unreachable!("config parser pairs priors with the model"),
    };

    let ctx = ChainContext {
        config_hash: cfg.hash.clone(),
        dataset_hash: loaded.hash.clone(),
        n_obs: loaded.dataset.len(),
        k_max: k_max_label(cfg.mcmc.k_max),
        save_latent,
    };
    save_chain(out, &chain, &ctx)?;

    for block in &chain.meta().acceptance {
        println!("block {}: acceptance {:.3}", block.name, block.rate);
    }
    let mut sites: Vec<&String> = loaded.site_ids.iter().collect();
    sites.sort();
    sites.dedup();
    println!(
        "retained {} draws ({} model, {} rows at {} sites) -> {}",
        chain.retained(),
        cfg.model.name(),
        loaded.dataset.len(),
        sites.len(),
        out.display()
    );
    Ok(())
}
