//! `summarize`: print the posterior point-estimate / credible-interval table
//! for a saved chain.  Circular parameters report a mean direction and the
//! shortest 95% arc; everything else a posterior mean and equal-tailed
//! interval.  Values are rounded to 3 decimals.

use std::path::Path;

use circst::projected::summarize_pn;
use circst::summary::Estimate;
use circst::variants::summarize_variant;
use circst::wrapped::summarize_wn;

use crate::chains::{load_chain, FittedChain};
use crate::errors::CliResult;

pub fn run(chain: &Path) -> CliResult<()> {
    let (fitted, meta) = load_chain(chain)?;
    let table = match &fitted {
        FittedChain::Wn(c) => summarize_wn(c)?,
        FittedChain::Pn(c) => summarize_pn(c)?,
        FittedChain::Variant(c) => summarize_variant(c)?,
    };

    println!(
        "model {}  retained {}  seed {}",
        meta.model, meta.retained, meta.seed
    );
    println!("{:<22} {:>10} {:>10} {:>10}", "parameter", "estimate", "lower", "upper");
    for row in table {
        match row.estimate {
            Estimate::Linear { mean, lower, upper } => {
                println!("{:<22} {:>10.3} {:>10.3} {:>10.3}", row.name, mean, lower, upper);
            }
            Estimate::Circular {
                mean_direction,
                arc_start,
                arc_end,
            } => {
                let dir = mean_direction.map_or("undef".to_string(), |a| format!("{:.3}", a.radians()));
                println!(
                    "{:<22} {:>10} {:>10.3} {:>10.3}",
                    row.name,
                    dir,
                    arc_start.radians(),
                    arc_end.radians()
                );
            }
        }
    }
    Ok(())
}
