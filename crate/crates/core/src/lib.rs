//! Defect growth forecasting.
//!
//! Cumulative defect curves are forecast with three-stage adjusted
//! regression (TSARF): block-wise line fits whose coefficients are
//! themselves extrapolated, residual-corrected and blended with a moving
//! average. Goel-Okumoto, delayed S-shaped and Weibull NHPP growth models
//! serve as baselines, and all models are scored with predictive measures
//! over a held-out test partition.
//!
//! - [`dataset`]: failure-time ingestion, growth curves, train/test splits
//! - [`regression`]: ordinary least squares
//! - [`tsarf`]: the three-stage forecaster
//! - [`srgm`]: NHPP growth models, fitting and simulation
//! - [`metrics`]: PMSE, PRR and PP
//! - [`report`]: comparison runs, sweeps and their serialized reports

pub mod dataset;
pub mod error;
pub mod metrics;
pub mod regression;
pub mod report;
mod simplex;
pub mod srgm;
pub mod tsarf;

pub use error::{Error, ErrorClass, Result};
