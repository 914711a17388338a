//! Predictive goodness-of-fit over a held-out partition.
//!
//! `f` is the model prediction and `y` the observed cumulative count.
//!
//! * PMSE: `(1/n) Σ (f − y)²`
//! * PRR:  `Σ ((f − y) / f)²`, which punishes underestimates harder
//! * PP:   `Σ ((f − y) / y)²`, which punishes overestimates harder

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub pmse: f64,
    pub prr: f64,
    pub pp: f64,
    pub n_test: usize,
}

fn check_lengths(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::usage("no test points to score"));
    }
    if pred.len() != actual.len() {
        return Err(Error::usage(format!(
            "{} predictions for {} observations",
            pred.len(),
            actual.len()
        )));
    }
    Ok(())
}

pub fn pmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred, actual)?;
    let total: f64 = pred.iter().zip(actual).map(|(f, y)| (f - y).powi(2)).sum();
    Ok(total / pred.len() as f64)
}

pub fn prr(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred, actual)?;
    ratio_sum(pred, actual, pred, "prediction")
}

pub fn pp(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred, actual)?;
    ratio_sum(pred, actual, actual, "observation")
}

fn ratio_sum(pred: &[f64], actual: &[f64], denom: &[f64], what: &'static str) -> Result<f64> {
    let mut total = 0.0;
    for (i, ((f, y), d)) in pred.iter().zip(actual).zip(denom).enumerate() {
        if *d == 0.0 {
            return Err(Error::DivisionDomain { index: i, what });
        }
        total += ((f - y) / d).powi(2);
    }
    Ok(total)
}

/// All three measures for one model.
pub fn evaluate(model: &str, pred: &[f64], actual: &[f64]) -> Result<MetricsReport> {
    Ok(MetricsReport {
        model: model.to_string(),
        pmse: pmse(pred, actual)?,
        prr: prr(pred, actual)?,
        pp: pp(pred, actual)?,
        n_test: pred.len(),
    })
}
