//! `predict`: composition-sample predictive angles at target points.
//!
//! Needs the chain, the dataset it was fitted on (verified by hash), and a
//! target list.  Writes a summary CSV plus a sibling `.draws.csv` holding
//! every predictive draw, which `score` consumes.

use std::path::{Path, PathBuf};

use circst::predict::PredictiveSamples;
use circst::projected::krige_pn;
use circst::variants::krige_variant;
use circst::wrapped::krige_wn;

use crate::chains::{load_chain, FittedChain};
use crate::data::{comment_line, load_dataset, load_targets, write_atomic};
use crate::errors::{validation, CliResult};

pub fn draws_path(predictions: &Path) -> PathBuf {
    predictions.with_extension("draws.csv")
}

pub fn run(chain: &Path, data: &Path, targets: &Path, out: &Path, seed: u64) -> CliResult<()> {
    let (fitted, meta) = load_chain(chain)?;
    if !meta.save_latent {
        return Err(validation(
            "chain was saved without latent states; kriging needs them — re-run fit with --save-latent",
        ));
    }
    let loaded = load_dataset(data)?;
    if loaded.hash != meta.dataset_hash {
        return Err(validation(format!(
            "dataset {} is not the one the chain was fitted on (hash mismatch)",
            data.display()
        )));
    }

    let schema = match &fitted {
        FittedChain::Variant(_) => loaded.extras.as_slice(),
        _ => &[],
    };
    let (points, target_design) = load_targets(targets, schema)?;

    let samples = match &fitted {
        FittedChain::Wn(c) => krige_wn(c, &loaded.dataset, &points, seed)?,
        FittedChain::Pn(c) => krige_pn(c, &loaded.dataset, &points, seed)?,
        FittedChain::Variant(c) => {
            let design = target_design.as_ref().ok_or_else(|| {
                validation("variant chains need covariate columns in the target file")
            })?;
            krige_variant(c, &loaded.dataset, &points, design, seed)?
        }
    };

    write_predictions(out, &meta.config_hash, &samples)?;
    println!(
        "wrote {} targets x {} draws -> {} (+ {})",
        samples.len(),
        samples.targets()[0].draws.len(),
        out.display(),
        draws_path(out).display()
    );
    Ok(())
}

fn write_predictions(out: &Path, config_hash: &str, samples: &PredictiveSamples) -> CliResult<()> {
    let mut summary = comment_line(config_hash);
    summary.push_str("x_km,y_km,t,mean_direction,arc_start,arc_end\n");
    for t in samples.targets() {
        let dir = t
            .mean_direction
            .map_or(f64::NAN, |a| a.radians());
        summary.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.point.x,
            t.point.y,
            t.point.t,
            dir,
            t.arc_start.radians(),
            t.arc_end.radians()
        ));
    }
    write_atomic(out, &summary)?;

    let n_draws = samples.targets()[0].draws.len();
    let mut draws = comment_line(config_hash);
    draws.push_str(
        &(0..samples.len())
            .map(|j| format!("target_{j}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    draws.push('\n');
    for i in 0..n_draws {
        let mut first = true;
        for t in samples.targets() {
            if !first {
                draws.push(',');
            }
            draws.push_str(&t.draws[i].radians().to_string());
            first = false;
        }
        draws.push('\n');
    }
    write_atomic(&draws_path(out), &draws)
}
