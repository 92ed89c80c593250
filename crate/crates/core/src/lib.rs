//! Simulation engine and metrics library for studying how heterogeneity in
//! predictor measurement between model derivation and external validation
//! affects the discrimination, calibration, and overall accuracy of binary
//! logistic prediction models.
//!
//! The crate is organised around the pipeline of a measurement-heterogeneity
//! experiment:
//!
//! * [`measurement`] — the taxonomy of linear measurement-error models
//!   (random, systematic, differential) and how they turn exact predictor
//!   values into error-prone measurements.
//! * [`cohort`] — synthetic populations: correlated Gaussian predictors,
//!   logistic outcomes, and measured-predictor views.
//! * [`glm`] — maximum-likelihood logistic regression with offset support,
//!   recalibration slopes, and calibration-in-the-large.
//! * [`metrics`] — concordance, binormal AUC approximations, the decomposed
//!   Brier score, and loess calibration curves.
//! * [`simgrid`] — scenario definitions, the factorial grid, the replicate
//!   runner, large-sample experiments, and result aggregation.

pub mod cohort;
pub mod error;
pub mod glm;
pub mod measurement;
pub mod metrics;
pub mod rng;
pub mod simgrid;

pub use error::{Error, Result};
