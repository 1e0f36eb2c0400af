use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::measurement::{fringe_metrics, max_abs_deviation, total_variation, Distribution, FringeMetrics};

/// Deviation between two distributions on compatible lattices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareReport {
    pub total_variation: f64,
    pub max_abs_deviation: f64,
    pub fringe_a: Option<FringeMetrics>,
    pub fringe_b: Option<FringeMetrics>,
    /// `b - a`, when both show a fringe.
    pub period_delta: Option<f64>,
    pub visibility_delta: Option<f64>,
}

pub fn compare(a: &Distribution, b: &Distribution) -> Result<CompareReport> {
    let fa = fringe_metrics(a).ok();
    let fb = fringe_metrics(b).ok();
    let (period_delta, visibility_delta) = match (fa, fb) {
        (Some(x), Some(y)) => (Some(y.period - x.period), Some(y.visibility - x.visibility)),
        _ => (None, None),
    };
    Ok(CompareReport {
        total_variation: total_variation(a, b)?,
        max_abs_deviation: max_abs_deviation(a, b)?,
        fringe_a: fa,
        fringe_b: fb,
        period_delta,
        visibility_delta,
    })
}

/// Compares two distribution CSV files.
pub fn compare_files(a: impl AsRef<Path>, b: impl AsRef<Path>) -> Result<CompareReport> {
    let da = Distribution::from_csv(&fs::read_to_string(a)?)?;
    let db = Distribution::from_csv(&fs::read_to_string(b)?)?;
    compare(&da, &db)
}
