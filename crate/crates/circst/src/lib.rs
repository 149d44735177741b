//! Bayesian space-time models for circular data.
//!
//! Two latent-Gaussian constructions for angles observed over space and time:
//! wrapping a scalar Gaussian process onto the circle, and projecting a
//! bivariate Gaussian process through `atan*`.  Both share a non-separable
//! space-time correlation family, Metropolis-within-Gibbs samplers over the
//! latent augmentations (winding numbers, radii), conditional simulation at
//! unobserved points, and circular scoring rules.
//!
//! Module map:
//!
//! - [`angle`]: wrapping, the `atan*` two-argument angle, circular distance
//!   and summaries.
//! - [`density`]: wrapped-normal and projected-normal densities.
//! - [`covariance`]: the non-separable space-time correlation family and
//!   covariance assembly.
//! - [`linalg`]: symmetric positive-definite factorizations and Gaussian
//!   sampling helpers.
//! - [`dataset`]: observed angles tied to space-time coordinates, plus
//!   covariate/factor designs.
//! - [`priors`]: prior families for every model parameter.
//! - [`mcmc`]: sampler configuration, adaptive step sizes, slice sampling.
//! - [`wrapped`] / [`projected`]: simulation, fitting and conditional
//!   prediction for the two process families.
//! - [`covariates`]: factor-cell (analysis-of-variance) and regression
//!   structure on means, variances and nuggets.
//! - [`variants`]: the four covariate-extended models (WNA, WNR, PNA, PNR)
//!   built from that structure.
//! - [`predict`], [`scoring`], [`summary`]: predictive draws, proper scores
//!   for circular forecasts, posterior interval summaries.
//! - [`study`]: the simulation-study harness (data generation, truth-centered
//!   priors, parallel scoring runs).
//! - [`geweke`]: joint-distribution self-consistency tests for the samplers.

pub mod angle;
pub mod covariance;
pub mod covariates;
pub mod dataset;
pub mod density;
mod error;
pub mod geweke;
pub mod linalg;
pub mod mcmc;
pub mod predict;
pub mod priors;
pub mod projected;
pub mod scoring;
pub mod study;
pub mod summary;
pub mod variants;
pub mod wrapped;

pub use error::{Error, Result};
