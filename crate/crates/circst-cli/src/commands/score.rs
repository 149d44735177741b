//! `score`: CRPS and mean-angle error of predictions against holdout data.
//!
//! Reads the summary CSV written by `predict`, its sibling draws file, and
//! a holdout dataset.  Holdout rows are matched to targets by position and
//! their coordinates must agree.

use std::path::Path;

use csv::{ReaderBuilder, Trim};

use circst::angle::Angle;
use circst::covariance::SpaceTimePoint;
use circst::predict::PredictiveSamples;
use circst::scoring::score_windows;

use crate::commands::predict::draws_path;
use crate::data::{comment_line, load_dataset, read_comment_hash, write_atomic};
use crate::errors::{validation, CliResult};

const COORD_TOL: f64 = 1e-9;

pub fn run(predictions: &Path, holdout: &Path, out: &Path) -> CliResult<()> {
    let config_hash = read_comment_hash(predictions)?;
    let targets = read_prediction_points(predictions)?;
    let draws = read_draws(&draws_path(predictions), targets.len())?;
    let hold = load_dataset(holdout)?;

    if hold.dataset.len() != targets.len() {
        return Err(validation(format!(
            "holdout has {} rows but predictions cover {} targets",
            hold.dataset.len(),
            targets.len()
        )));
    }
    for (i, (h, p)) in hold.dataset.points().iter().zip(&targets).enumerate() {
        if (h.x - p.x).abs() > COORD_TOL || (h.y - p.y).abs() > COORD_TOL || h.t != p.t {
            return Err(validation(format!(
                "holdout row {} is at ({}, {}, {}) but the matching prediction is at ({}, {}, {})",
                i + 1,
                h.x,
                h.y,
                h.t,
                p.x,
                p.y,
                p.t
            )));
        }
    }

    let samples = PredictiveSamples::from_target_draws(targets, draws)
        .map_err(|e| validation(format!("predictions: {e}")))?;
    let report = score_windows(
        &[("all".to_string(), samples)],
        &[("all".to_string(), hold.dataset.angles().to_vec())],
    )?;

    let window = &report.windows[0];
    let mut text = comment_line(&config_hash);
    text.push_str("window,x_km,y_km,t,crps,ape\n");
    for (i, p) in hold.dataset.points().iter().enumerate() {
        text.push_str(&format!(
            "all,{},{},{},{},{}\n",
            p.x, p.y, p.t, window.crps[i], window.dist[i]
        ));
    }
    write_atomic(out, &text)?;

    println!(
        "mean CRPS {:.3}  mean APE {:.3}  ({} targets) -> {}",
        report.mean_crps,
        report.mean_ape,
        hold.dataset.len(),
        out.display()
    );
    Ok(())
}

fn read_prediction_points(path: &Path) -> CliResult<Vec<SpaceTimePoint>> {
    let bytes = std::fs::read(path)
        .map_err(|e| validation(format!("cannot read predictions {}: {e}", path.display())))?;
    let mut reader = ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(Trim::All)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .map_err(|e| validation(format!("predictions {}: {e}", path.display())))?
        .clone();
    let col = |name: &str| -> CliResult<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| validation(format!("predictions file is missing column '{name}'")))
    };
    let (xc, yc, tc) = (col("x_km")?, col("y_km")?, col("t")?);
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| validation(format!("prediction row: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize| -> CliResult<&str> {
            record
                .get(i)
                .ok_or_else(|| validation(format!("line {line}: row has too few fields")))
        };
        let x: f64 = get(xc)?
            .parse()
            .map_err(|_| validation(format!("line {line}: x_km is not a number")))?;
        let y: f64 = get(yc)?
            .parse()
            .map_err(|_| validation(format!("line {line}: y_km is not a number")))?;
        let t: u32 = get(tc)?
            .parse()
            .map_err(|_| validation(format!("line {line}: t is not a non-negative integer")))?;
        points.push(
            SpaceTimePoint::new(x, y, t).map_err(|e| validation(format!("line {line}: {e}")))?,
        );
    }
    if points.is_empty() {
        return Err(validation("predictions file has no rows"));
    }
    Ok(points)
}

/// Reads the draws file and transposes it into per-target draw vectors.
fn read_draws(path: &Path, n_targets: usize) -> CliResult<Vec<Vec<Angle>>> {
    let text = std::fs::read_to_string(path).map_err(|_| {
        validation(format!(
            "prediction draws file {} not found; score needs the draws written by predict",
            path.display()
        ))
    })?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| validation(format!("draws file {} is empty", path.display())))?;
    let n_cols = header.split(',').count();
    if n_cols != n_targets {
        return Err(validation(format!(
            "draws file has {n_cols} target columns but predictions cover {n_targets}"
        )));
    }
    let mut per_target: Vec<Vec<Angle>> = vec![Vec::new(); n_targets];
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_targets {
            return Err(validation(format!(
                "draws row {}: expected {} fields, found {}",
                i + 1,
                n_targets,
                fields.len()
            )));
        }
        for (j, f) in fields.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| {
                validation(format!("draws row {}: '{f}' is not a number", i + 1))
            })?;
            per_target[j].push(
                Angle::new(v).map_err(|e| validation(format!("draws row {}: {e}", i + 1)))?,
            );
        }
    }
    if per_target[0].is_empty() {
        return Err(validation("draws file has no rows"));
    }
    Ok(per_target)
}
