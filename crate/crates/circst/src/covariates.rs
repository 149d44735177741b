//! Covariate and factor structure: link-function regression means and
//! per-factor-cell (analysis-of-variance style) means, variances and nuggets.

use crate::angle::Angle;
use crate::{Error, Result};
use nalgebra::DMatrix;

/// A categorical covariate: named levels plus one level index per observation.
#[derive(Debug, Clone)]
pub struct Factor {
    name: String,
    levels: Vec<String>,
    idx: Vec<usize>,
}

impl Factor {
    pub fn new(name: impl Into<String>, levels: Vec<String>, idx: Vec<usize>) -> Result<Self> {
        let name = name.into();
        if levels.is_empty() {
            return Err(Error::config(format!("factor {name} has no levels")));
        }
        for &i in &idx {
            if i >= levels.len() {
                return Err(Error::config(format!(
                    "factor {name}: level index {i} out of range ({} levels)",
                    levels.len()
                )));
            }
        }
        Ok(Factor { name, levels, idx })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn level_of(&self, row: usize) -> usize {
        self.idx[row]
    }
}

/// Per-observation covariate information: continuous columns and up to two
/// factors.  Factor combinations index "cells"; with factors of `m₁` and `m₂`
/// levels, the cell of an observation with levels `(i, j)` is `i·m₂ + j`.
#[derive(Debug, Clone)]
pub struct DesignInfo {
    n_rows: usize,
    continuous: Vec<(String, Vec<f64>)>,
    factors: Vec<Factor>,
}

impl DesignInfo {
    pub fn new(n_rows: usize) -> Self {
        DesignInfo {
            n_rows,
            continuous: Vec::new(),
            factors: Vec::new(),
        }
    }

    pub fn add_continuous(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                context: "continuous covariate rows",
                left: values.len(),
                right: self.n_rows,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!("covariate {name} contains non-finite values")));
        }
        self.continuous.push((name, values));
        Ok(self)
    }

    pub fn add_factor(mut self, factor: Factor) -> Result<Self> {
        if factor.idx.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                context: "factor rows",
                left: factor.idx.len(),
                right: self.n_rows,
            });
        }
        if self.factors.len() >= 2 {
            return Err(Error::config("at most two factors are supported"));
        }
        self.factors.push(factor);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn continuous(&self) -> &[(String, Vec<f64>)] {
        &self.continuous
    }

    /// Total number of factor cells (1 when there are no factors).
    pub fn n_cells(&self) -> usize {
        self.factors.iter().map(|f| f.levels.len()).product::<usize>().max(1)
    }

    /// Cell index of one observation.
    pub fn cell_of(&self, row: usize) -> usize {
        match self.factors.len() {
            0 => 0,
            1 => self.factors[0].idx[row],
            _ => {
                let m2 = self.factors[1].levels.len();
                self.factors[0].idx[row] * m2 + self.factors[1].idx[row]
            }
        }
    }

    /// Cell index per observation, in row order.
    pub fn cells(&self) -> Vec<usize> {
        (0..self.n_rows).map(|i| self.cell_of(i)).collect()
    }

    /// Human-readable label per cell ("all" without factors, otherwise the
    /// level names joined by ':').
    pub fn cell_labels(&self) -> Vec<String> {
        match self.factors.len() {
            0 => vec!["all".to_string()],
            1 => self.factors[0].levels.clone(),
            _ => {
                let f1 = &self.factors[0];
                let f2 = &self.factors[1];
                let mut out = Vec::with_capacity(f1.levels.len() * f2.levels.len());
                for l1 in &f1.levels {
                    for l2 in &f2.levels {
                        out.push(format!("{l1}:{l2}"));
                    }
                }
                out
            }
        }
    }

    /// Number of observations in each cell.
    pub fn cell_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_cells()];
        for row in 0..self.n_rows {
            counts[self.cell_of(row)] += 1;
        }
        counts
    }

    /// Errors if any factor cell has no observations.  Models with per-cell
    /// parameters refuse such designs: a cell coefficient with no data would
    /// silently be pure prior extrapolation.
    pub fn require_all_cells_occupied(&self) -> Result<()> {
        let counts = self.cell_counts();
        let labels = self.cell_labels();
        let empty: Vec<&str> = counts
            .iter()
            .zip(&labels)
            .filter(|(&c, _)| c == 0)
            .map(|(_, l)| l.as_str())
            .collect();
        if empty.is_empty() {
            Ok(())
        } else {
            Err(Error::config(format!(
                "factor cells without observations: {}",
                empty.join(", ")
            )))
        }
    }

    /// Rows `idx` as a new design (factors keep their full level sets).
    pub fn subset(&self, idx: &[usize]) -> DesignInfo {
        DesignInfo {
            n_rows: idx.len(),
            continuous: self
                .continuous
                .iter()
                .map(|(n, v)| (n.clone(), idx.iter().map(|&i| v[i]).collect()))
                .collect(),
            factors: self
                .factors
                .iter()
                .map(|f| Factor {
                    name: f.name.clone(),
                    levels: f.levels.clone(),
                    idx: idx.iter().map(|&i| f.idx[i]).collect(),
                })
                .collect(),
        }
    }

    /// Materializes the regression design matrix.
    ///
    /// Without factors: an intercept column followed by the continuous
    /// covariates.  With factors: one intercept indicator per cell followed
    /// by per-cell slopes (indicator × covariate) for each continuous
    /// covariate, so every cell gets its own intercept and slopes.
    pub fn regression_design(&self) -> Result<RegressionDesign> {
        let n_cells = self.n_cells();
        let has_factors = !self.factors.is_empty();
        let labels = self.cell_labels();
        let mut names = Vec::new();
        if has_factors {
            self.require_all_cells_occupied()?;
            for l in &labels {
                names.push(format!("intercept[{l}]"));
            }
            for (cn, _) in &self.continuous {
                for l in &labels {
                    names.push(format!("{cn}[{l}]"));
                }
            }
        } else {
            names.push("intercept".to_string());
            for (cn, _) in &self.continuous {
                names.push(cn.clone());
            }
        }
        let p = names.len();
        let mut h = DMatrix::zeros(self.n_rows, p);
        for row in 0..self.n_rows {
            if has_factors {
                let cell = self.cell_of(row);
                h[(row, cell)] = 1.0;
                for (k, (_, v)) in self.continuous.iter().enumerate() {
                    h[(row, n_cells * (k + 1) + cell)] = v[row];
                }
            } else {
                h[(row, 0)] = 1.0;
                for (k, (_, v)) in self.continuous.iter().enumerate() {
                    h[(row, k + 1)] = v[row];
                }
            }
        }
        Ok(RegressionDesign { names, h })
    }

    /// One row in the column layout of [`regression_design`], without
    /// demanding that every cell be occupied.  Prediction targets need rows
    /// in the fitted layout but rarely cover all cells.
    ///
    /// [`regression_design`]: DesignInfo::regression_design
    pub fn regression_row(&self, row: usize) -> Vec<f64> {
        let n_cells = self.n_cells();
        if self.factors.is_empty() {
            let mut out = vec![1.0];
            out.extend(self.continuous.iter().map(|(_, v)| v[row]));
            out
        } else {
            let cell = self.cell_of(row);
            let mut out = vec![0.0; n_cells * (1 + self.continuous.len())];
            out[cell] = 1.0;
            for (k, (_, v)) in self.continuous.iter().enumerate() {
                out[n_cells * (k + 1) + cell] = v[row];
            }
            out
        }
    }

    /// Errors unless `other` has the same factor names and level sets and the
    /// same continuous covariate names, in the same order.  Designs with
    /// matching schemas produce compatible cell indices and regression rows.
    pub fn schema_matches(&self, other: &DesignInfo) -> Result<()> {
        if self.factors.len() != other.factors.len()
            || self
                .factors
                .iter()
                .zip(&other.factors)
                .any(|(a, b)| a.name != b.name || a.levels != b.levels)
        {
            return Err(Error::config(
                "factor names or level sets differ between designs",
            ));
        }
        let names = |d: &DesignInfo| d.continuous.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
        if names(self) != names(other) {
            return Err(Error::config(
                "continuous covariate names differ between designs",
            ));
        }
        Ok(())
    }
}

/// A materialized regression design: column names plus the matrix `H`.
#[derive(Debug, Clone)]
pub struct RegressionDesign {
    names: Vec<String>,
    h: DMatrix<f64>,
}

impl RegressionDesign {
    /// Design with only an intercept column (for covariate-free data).
    pub fn intercept_only(n_rows: usize) -> Self {
        RegressionDesign {
            names: vec!["intercept".to_string()],
            h: DMatrix::from_element(n_rows, 1, 1.0),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn n_coeffs(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.h.nrows()
    }

    /// `Hᵢ·η` for one row.
    pub fn linear_predictor(&self, eta: &[f64], row: usize) -> Result<f64> {
        if eta.len() != self.h.ncols() {
            return Err(Error::LengthMismatch {
                context: "regression coefficients vs design columns",
                left: eta.len(),
                right: self.h.ncols(),
            });
        }
        Ok((0..self.h.ncols()).map(|j| self.h[(row, j)] * eta[j]).sum())
    }
}

/// One coefficient per factor cell; cells may be absent (no coefficient).
#[derive(Debug, Clone)]
pub struct AnovaCoeffs<T> {
    values: Vec<Option<T>>,
}

impl<T: Copy> AnovaCoeffs<T> {
    /// One coefficient for every cell.
    pub fn full(values: Vec<T>) -> Self {
        AnovaCoeffs {
            values: values.into_iter().map(Some).collect(),
        }
    }

    /// Coefficients for selected cells only.
    pub fn sparse(n_cells: usize, entries: &[(usize, T)]) -> Result<Self> {
        let mut values = vec![None; n_cells];
        for &(cell, v) in entries {
            if cell >= n_cells {
                return Err(Error::config(format!(
                    "cell index {cell} out of range ({n_cells} cells)"
                )));
            }
            values[cell] = Some(v);
        }
        Ok(AnovaCoeffs { values })
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, cell: usize) -> Option<T> {
        self.values.get(cell).copied().flatten()
    }
}

/// The monotone link from the line onto a length-2π interval:
/// `x ↦ wrap(2·atan(x))`, with image `(-π, π)` before wrapping.
pub fn inverse_tan_link(x: f64) -> Angle {
    assert!(x.is_finite(), "link argument must be finite");
    Angle::new(2.0 * x.atan()).expect("2·atan of a finite value is finite")
}

fn missing_cell_error(design: &DesignInfo, cell: usize, what: &str) -> Error {
    let labels = design.cell_labels();
    Error::config(format!(
        "no {what} coefficient for factor cell '{}'",
        labels.get(cell).map(String::as_str).unwrap_or("?")
    ))
}

/// Selects the factor-cell coefficient for one observation.
///
/// The coefficient type is whatever the caller stores per cell: an [`Angle`]
/// for wrapped-model means, a real pair for projected-model means.
pub fn anova_mean<T: Copy>(
    design: &DesignInfo,
    coeffs: &AnovaCoeffs<T>,
    row: usize,
) -> Result<T> {
    if coeffs.n_cells() != design.n_cells() {
        return Err(Error::LengthMismatch {
            context: "mean coefficients vs design cells",
            left: coeffs.n_cells(),
            right: design.n_cells(),
        });
    }
    let cell = design.cell_of(row);
    coeffs
        .get(cell)
        .ok_or_else(|| missing_cell_error(design, cell, "mean"))
}

/// Process variance per cell, or one value shared by every cell (the
/// projected model shares its variance; only its nugget varies by cell).
#[derive(Debug, Clone)]
pub enum CellVariance {
    Shared(f64),
    PerCell(AnovaCoeffs<f64>),
}

/// Per-cell variance structure: process variance and nugget.
#[derive(Debug, Clone)]
pub struct AnovaVariances {
    pub sigma2: CellVariance,
    pub nugget: AnovaCoeffs<f64>,
}

/// Resolves `(σ², φ²)` for one observation from its factor cell.
pub fn anova_variance(
    design: &DesignInfo,
    variances: &AnovaVariances,
    row: usize,
) -> Result<(f64, f64)> {
    let cell = design.cell_of(row);
    let sigma2 = match &variances.sigma2 {
        CellVariance::Shared(v) => *v,
        CellVariance::PerCell(c) => c
            .get(cell)
            .ok_or_else(|| missing_cell_error(design, cell, "variance"))?,
    };
    let nugget = variances
        .nugget
        .get(cell)
        .ok_or_else(|| missing_cell_error(design, cell, "nugget"))?;
    Ok((sigma2, nugget))
}

/// Regression mean for the wrapped model: the linear predictor pushed
/// through the inverse-tan link.
pub fn regression_mean_wn(design: &RegressionDesign, eta: &[f64], row: usize) -> Result<Angle> {
    Ok(inverse_tan_link(design.linear_predictor(eta, row)?))
}

/// Regression mean for the projected model: identity link, one linear
/// predictor per coordinate.
pub fn regression_mean_pn(
    design: &RegressionDesign,
    eta1: &[f64],
    eta2: &[f64],
    row: usize,
) -> Result<(f64, f64)> {
    Ok((
        design.linear_predictor(eta1, row)?,
        design.linear_predictor(eta2, row)?,
    ))
}
