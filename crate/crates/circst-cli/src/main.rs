//! `circst`: simulate, fit, predict, score, and study circular space-time
//! data from the command line.
//!
//! Exit codes: 0 on success, 2 on validation errors (bad files, schemas,
//! configuration), 3 on numerical failures.  Errors go to standard error as
//! single-line JSON records.

mod chains;
mod commands;
mod config;
mod data;
mod errors;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "circst", version, about = "Bayesian space-time models for circular data")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw a synthetic dataset from a configured truth
    Simulate {
        /// Truth + layout configuration (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Output dataset CSV
        #[arg(long)]
        out: PathBuf,
        /// Overrides layout.seed from the config
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample the posterior for a configured model on a dataset
    Fit {
        /// Model, priors, and sampler configuration (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Input dataset CSV
        #[arg(long)]
        data: PathBuf,
        /// Output chain CSV (metadata goes to a .meta.json sibling)
        #[arg(long)]
        out: PathBuf,
        /// Overrides mcmc.seed from the config
        #[arg(long)]
        seed: Option<u64>,
        /// Also persist latent states (winding numbers or radii); required
        /// for later kriging
        #[arg(long)]
        save_latent: bool,
    },
    /// Composition-sample predictive angles at target points
    Predict {
        /// Chain CSV written by fit
        #[arg(long)]
        chain: PathBuf,
        /// The dataset the chain was fitted on
        #[arg(long)]
        data: PathBuf,
        /// Target points CSV (x_km, y_km, t, plus covariates for variants)
        #[arg(long)]
        targets: PathBuf,
        /// Output summary CSV (draws go to a .draws.csv sibling)
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
    },
    /// Score predictions against holdout observations
    Score {
        /// Summary CSV written by predict
        #[arg(long)]
        predictions: PathBuf,
        /// Holdout dataset CSV with observed angles
        #[arg(long)]
        holdout: PathBuf,
        /// Output per-target score CSV
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the 48-cell simulation study for one model family
    Study {
        /// Study design: wn_full or pn_full
        #[arg(long)]
        design: String,
        /// Output result CSV (one row per cell)
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Worker threads (default: CIRCST_WORKERS, else one per core)
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value_t = 4000)]
        iterations: usize,
        #[arg(long, default_value_t = 2000)]
        burn_in: usize,
        #[arg(long, default_value_t = 1)]
        thin: usize,
    },
    /// Print the posterior summary table for a saved chain
    Summarize {
        #[arg(long)]
        chain: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Simulate { config, out, seed } => commands::simulate::run(&config, &out, seed),
        Cmd::Fit {
            config,
            data,
            out,
            seed,
            save_latent,
        } => commands::fit::run(&config, &data, &out, seed, save_latent),
        Cmd::Predict {
            chain,
            data,
            targets,
            out,
            seed,
        } => commands::predict::run(&chain, &data, &targets, &out, seed),
        Cmd::Score {
            predictions,
            holdout,
            out,
        } => commands::score::run(&predictions, &holdout, &out),
        Cmd::Study {
            design,
            out,
            seed,
            workers,
            iterations,
            burn_in,
            thin,
        } => commands::study::run(&design, &out, seed, workers, iterations, burn_in, thin),
        Cmd::Summarize { chain } => commands::summarize::run(&chain),
    };
    if let Err(e) = result {
        eprintln!("{}", e.record());
        std::process::exit(e.exit_code());
    }
}
