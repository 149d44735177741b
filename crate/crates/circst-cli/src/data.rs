//! CSV ingestion and emission: datasets, target lists, and atomic writes.
//!
//! Dataset files carry `site_id, x_km, y_km, t, theta_rad` plus any number
//! of covariate columns.  Extra columns are typed automatically: if every
//! value parses as a number the column is a continuous covariate, otherwise
//! it is a factor whose levels are the sorted distinct values.  Angles may
//! alternatively arrive in degrees via an explicit `theta_deg` column.
//! Every angle is wrapped to `[0, 2π)` at ingestion.

use std::io::Write as _;
use std::path::Path;

use csv::{ReaderBuilder, Trim};

use circst::angle::Angle;
use circst::covariance::SpaceTimePoint;
use circst::covariates::{DesignInfo, Factor};
use circst::dataset::Dataset;

use crate::config::file_hash;
use crate::errors::{validation, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schema of the covariate columns of a dataset file, in header order.
/// Target files are validated against this when the model needs a design.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtraColumn {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnKind {
    Continuous,
    Factor { levels: Vec<String> },
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub site_ids: Vec<String>,
    pub extras: Vec<ExtraColumn>,
    pub hash: String,
}

const REQUIRED: [&str; 4] = ["site_id", "x_km", "y_km", "t"];

pub fn load_dataset(path: &Path) -> CliResult<LoadedDataset> {
    let bytes = std::fs::read(path)
        .map_err(|e| validation(format!("cannot read dataset {}: {e}", path.display())))?;
    let hash = file_hash(&bytes);
    let mut reader = ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(Trim::All)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .map_err(|e| validation(format!("dataset {}: {e}", path.display())))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);

    let mut missing: Vec<&str> = REQUIRED.iter().copied().filter(|c| col(c).is_none()).collect();
    let theta_rad = col("theta_rad");
    let theta_deg = col("theta_deg");
    let (theta_col, degrees) = match (theta_rad, theta_deg) {
        (Some(_), Some(_)) => {
            return Err(validation(
                "dataset has both theta_rad and theta_deg columns; provide exactly one",
            ))
        }
        (Some(i), None) => (i, false),
        (None, Some(i)) => (i, true),
        (None, None) => {
            missing.push("theta_rad");
            (0, false)
        }
    };
    if !missing.is_empty() {
        return Err(validation(format!(
            "dataset is missing required column(s): {}",
            missing.join(", ")
        )));
    }

    let known = [col("site_id"), col("x_km"), col("y_km"), col("t"), Some(theta_col)];
    let extra_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !known.contains(&Some(*i)))
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut site_ids = Vec::new();
    let mut points = Vec::new();
    let mut angles = Vec::new();
    let mut extra_values: Vec<Vec<String>> = vec![Vec::new(); extra_cols.len()];

    for record in reader.records() {
        let record = record.map_err(|e| validation(format!("dataset row: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> CliResult<&str> {
            record.get(i).ok_or_else(|| {
                validation(format!("line {line}: row has too few fields"))
            })
        };
        site_ids.push(field(col("site_id").unwrap())?.to_string());
        let x = parse_f64(field(col("x_km").unwrap())?, "x_km", line)?;
        let y = parse_f64(field(col("y_km").unwrap())?, "y_km", line)?;
        let t = parse_time(field(col("t").unwrap())?, line)?;
        points.push(
            SpaceTimePoint::new(x, y, t)
                .map_err(|e| validation(format!("line {line}: {e}")))?,
        );
        let theta_name = if degrees { "theta_deg" } else { "theta_rad" };
        let mut theta = parse_f64(field(theta_col)?, theta_name, line)?;
        if degrees {
            theta = theta.to_radians();
        }
        angles.push(
            Angle::new(theta).map_err(|e| validation(format!("line {line}: {e}")))?,
        );
        for (slot, (i, name)) in extra_values.iter_mut().zip(&extra_cols) {
            let v = field(*i)?;
            if v.is_empty() {
                return Err(validation(format!(
                    "line {line}: empty value in column '{name}'"
                )));
            }
            slot.push(v.to_string());
        }
    }
    if points.is_empty() {
        return Err(validation("dataset has no data rows"));
    }

    let mut extras = Vec::with_capacity(extra_cols.len());
    let mut design = DesignInfo::new(points.len());
    for ((_, name), values) in extra_cols.iter().zip(extra_values) {
        let kind = type_column(&values);
        match &kind {
            ColumnKind::Continuous => {
                let nums = values.iter().map(|v| v.parse::<f64>().unwrap()).collect();
                design = design
                    .add_continuous(name.clone(), nums)
                    .map_err(|e| validation(format!("column '{name}': {e}")))?;
            }
            ColumnKind::Factor { levels } => {
                let idx = values
                    .iter()
                    .map(|v| levels.iter().position(|l| l == v).unwrap())
                    .collect();
                design = design
                    .add_factor(
                        Factor::new(name.clone(), levels.clone(), idx)
                            .map_err(|e| validation(format!("column '{name}': {e}")))?,
                    )
                    .map_err(|e| validation(format!("column '{name}': {e}")))?;
            }
        }
        extras.push(ExtraColumn {
            name: name.clone(),
            kind,
        });
    }

    let mut dataset = Dataset::new(points, angles).map_err(|e| validation(format!("dataset: {e}")))?;
    if !extras.is_empty() {
        dataset = dataset
            .with_design(design)
            .map_err(|e| validation(format!("dataset design: {e}")))?;
    }
    Ok(LoadedDataset {
        dataset,
        site_ids,
        extras,
        hash,
    })
}

/// Loads prediction targets: `x_km, y_km, t` plus, when `schema` is
/// non-empty, the same covariate columns as the training data.  Columns
/// outside the schema are ignored, so a holdout dataset file works directly
/// as a target list.
pub fn load_targets(
    path: &Path,
    schema: &[ExtraColumn],
) -> CliResult<(Vec<SpaceTimePoint>, Option<DesignInfo>)> {
    let bytes = std::fs::read(path)
        .map_err(|e| validation(format!("cannot read targets {}: {e}", path.display())))?;
    let mut reader = ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(Trim::All)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .map_err(|e| validation(format!("targets {}: {e}", path.display())))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);

    let missing: Vec<&str> = ["x_km", "y_km", "t"]
        .into_iter()
        .filter(|c| col(c).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(validation(format!(
            "target file is missing required column(s): {}",
            missing.join(", ")
        )));
    }
    let missing: Vec<&str> = schema
        .iter()
        .map(|e| e.name.as_str())
        .filter(|c| col(c).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(validation(format!(
            "target file is missing covariate column(s): {}",
            missing.join(", ")
        )));
    }

    let mut points = Vec::new();
    let mut extra_values: Vec<Vec<String>> = vec![Vec::new(); schema.len()];
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| validation(format!("target row: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> CliResult<&str> {
            record.get(i).ok_or_else(|| {
                validation(format!("line {line}: row has too few fields"))
            })
        };
        let x = parse_f64(field(col("x_km").unwrap())?, "x_km", line)?;
        let y = parse_f64(field(col("y_km").unwrap())?, "y_km", line)?;
        let t = parse_time(field(col("t").unwrap())?, line)?;
        points.push(
            SpaceTimePoint::new(x, y, t)
                .map_err(|e| validation(format!("line {line}: {e}")))?,
        );
        for (slot, extra) in extra_values.iter_mut().zip(schema) {
            slot.push(field(col(&extra.name).unwrap())?.to_string());
        }
        lines.push(line);
    }
    if points.is_empty() {
        return Err(validation("target file has no data rows"));
    }
    if schema.is_empty() {
        return Ok((points, None));
    }

    let mut design = DesignInfo::new(points.len());
    for (extra, values) in schema.iter().zip(extra_values) {
        match &extra.kind {
            ColumnKind::Continuous => {
                let mut nums = Vec::with_capacity(values.len());
                for (v, line) in values.iter().zip(&lines) {
                    nums.push(parse_f64(v, &extra.name, *line)?);
                }
                design = design
                    .add_continuous(extra.name.clone(), nums)
                    .map_err(|e| validation(format!("column '{}': {e}", extra.name)))?;
            }
            ColumnKind::Factor { levels } => {
                let mut idx = Vec::with_capacity(values.len());
                for (v, line) in values.iter().zip(&lines) {
                    let i = levels.iter().position(|l| l == v).ok_or_else(|| {
                        validation(format!(
                            "line {line}: unknown level '{v}' for factor '{}' (known: {})",
                            extra.name,
                            levels.join(", ")
                        ))
                    })?;
                    idx.push(i);
                }
                design = design
                    .add_factor(
                        Factor::new(extra.name.clone(), levels.clone(), idx)
                            .map_err(|e| validation(format!("column '{}': {e}", extra.name)))?,
                    )
                    .map_err(|e| validation(format!("column '{}': {e}", extra.name)))?;
            }
        }
    }
    Ok((points, Some(design)))
}

fn type_column(values: &[String]) -> ColumnKind {
    if values.iter().all(|v| v.parse::<f64>().map_or(false, |x| x.is_finite())) {
        ColumnKind::Continuous
    } else {
        let mut levels: Vec<String> = values.to_vec();
        levels.sort();
        levels.dedup();
        ColumnKind::Factor { levels }
    }
}

fn parse_f64(s: &str, what: &str, line: u64) -> CliResult<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| validation(format!("line {line}: {what} must be a number, got '{s}'")))?;
    if !v.is_finite() {
        return Err(validation(format!(
            "line {line}: {what} must be finite, got '{s}'"
        )));
    }
    Ok(v)
}

fn parse_time(s: &str, line: u64) -> CliResult<u32> {
    s.parse::<u32>().map_err(|_| {
        validation(format!(
            "line {line}: t must be a non-negative integer, got '{s}'"
        ))
    })
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// The first line of every file this tool writes.
pub fn comment_line(config_hash: &str) -> String {
    format!("# circst {TOOL_VERSION} config_hash={config_hash}\n")
}

/// Recovers the config hash from a file previously written by this tool.
pub fn read_comment_hash(path: &Path) -> CliResult<String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read {}: {e}", path.display())))?;
    let first = text.lines().next().unwrap_or("");
    first
        .strip_prefix("# circst ")
        .and_then(|rest| rest.split("config_hash=").nth(1))
        .map(|h| h.trim().to_string())
        .ok_or_else(|| {
            validation(format!(
                "{} lacks the tool comment line; was it written by this tool?",
                path.display()
            ))
        })
}

/// Writes a file atomically: contents land under a temporary name in the
/// same directory and are renamed into place.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| validation(format!("cannot create temp file in {}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| validation(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| validation(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn write_dataset(
    path: &Path,
    config_hash: &str,
    site_ids: &[String],
    points: &[SpaceTimePoint],
    angles: &[Angle],
) -> CliResult<()> {
    let mut out = comment_line(config_hash);
    out.push_str("site_id,x_km,y_km,t,theta_rad\n");
    for ((id, p), a) in site_ids.iter().zip(points).zip(angles) {
        out.push_str(&format!(
            "{id},{},{},{},{}\n",
            p.x,
            p.y,
            p.t,
            a.radians()
        ));
    }
    write_atomic(path, &out)
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

    #[test]
    fn well_formed_file_loads_and_wraps() {
        let f = write_temp(
            "site_id,x_km,y_km,t,theta_rad\nA,0.0,0.0,1,6.9\nA,1.0,0.5,2,0.4\nB,2.0,1.0,1,3.0\n",
        );
        let d = load_dataset(f.path()).unwrap();
        assert_eq!(d.dataset.len(), 3);
        assert_eq!(d.site_ids, ["A", "A", "B"]);
        assert!(d.extras.is_empty());
        let wrapped = d.dataset.angles()[0].radians();
        assert!((wrapped - (6.9 - std::f64::consts::TAU)).abs() < 1e-12);
        assert!((wrapped - 0.6168).abs() < 1e-3);
    }

    #[test]
    fn missing_columns_are_listed_together() {
        let f = write_temp("site_id,y_km,t\nA,0.0,1\n");
        let err = load_dataset(f.path()).unwrap_err();
        let msg = err.message();
        assert!(msg.contains("x_km") && msg.contains("theta_rad"), "{msg}");
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let f = write_temp(
            "site_id,x_km,y_km,t,theta_rad\nA,0.0,0.0,1,0.5\nA,oops,0.0,2,0.5\n",
        );
        let err = load_dataset(f.path()).unwrap_err();
        assert!(err.message().contains("line 3"), "{}", err.message());

        let f = write_temp("site_id,x_km,y_km,t,theta_rad\nA,0.0,0.0,-1,0.5\n");
        let err = load_dataset(f.path()).unwrap_err();
        assert!(err.message().contains("non-negative"), "{}", err.message());

        let f = write_temp("site_id,x_km,y_km,t,theta_rad\nA,0.0,NaN,1,0.5\n");
        assert!(load_dataset(f.path()).is_err());
    }

    #[test]
    fn degree_and_radian_columns_are_exclusive() {
        let f = write_temp("site_id,x_km,y_km,t,theta_rad,theta_deg\nA,0,0,1,0.5,30\n");
        let err = load_dataset(f.path()).unwrap_err();
        assert!(err.message().contains("exactly one"), "{}", err.message());

        let f = write_temp("site_id,x_km,y_km,t,theta_deg\nA,0,0,1,90\n");
        let d = load_dataset(f.path()).unwrap();
        let theta = d.dataset.angles()[0].radians();
        assert!((theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn extra_columns_are_auto_typed() {
        let f = write_temp(
            "site_id,x_km,y_km,t,theta_rad,height,state\n\
             A,0,0,1,0.5,1.2,calm\nA,1,0,2,0.6,0.8,storm\nB,0,1,1,0.7,2.0,calm\n",
        );
        let d = load_dataset(f.path()).unwrap();
        assert_eq!(d.extras.len(), 2);
        assert_eq!(d.extras[0].name, "height");
        assert_eq!(d.extras[0].kind, ColumnKind::Continuous);
        match &d.extras[1].kind {
            ColumnKind::Factor { levels } => assert_eq!(levels, &["calm", "storm"]),
            _ => panic!("state should be a factor"),
        }
        let design = d.dataset.design().unwrap();
        assert_eq!(design.cell_labels(), vec!["calm", "storm"]);
    }

    #[test]
    fn target_levels_must_come_from_training() {
        let train = write_temp(
            "site_id,x_km,y_km,t,theta_rad,state\nA,0,0,1,0.5,calm\nB,1,0,1,0.6,storm\n",
        );
        let d = load_dataset(train.path()).unwrap();

        let good = write_temp("x_km,y_km,t,state\n0.5,0.5,2,calm\n");
        let (pts, design) = load_targets(good.path(), &d.extras).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(design.unwrap().cells(), vec![0]);

        let bad = write_temp("x_km,y_km,t,state\n0.5,0.5,2,tsunami\n");
        let err = load_targets(bad.path(), &d.extras).unwrap_err();
        let msg = err.message();
        assert!(msg.contains("tsunami") && msg.contains("state"), "{msg}");

        let missing = write_temp("x_km,y_km,t\n0.5,0.5,2\n");
        let err = load_targets(missing.path(), &d.extras).unwrap_err();
        assert!(err.message().contains("state"), "{}", err.message());
    }

    #[test]
    fn comment_lines_are_skipped_and_recovered() {
        let f = write_temp(
            "# circst 0.1.0 config_hash=abc123\nsite_id,x_km,y_km,t,theta_rad\nA,0,0,1,0.5\n",
        );
        let d = load_dataset(f.path()).unwrap();
        assert_eq!(d.dataset.len(), 1);
        assert_eq!(read_comment_hash(f.path()).unwrap(), "abc123");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "first\n").unwrap();
        write_atomic(&path, "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
    }
}
