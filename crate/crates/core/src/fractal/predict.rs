//! Per-path dimension predictions from the index along the path, compared with
//! estimates.

use serde::Serialize;

use super::stats::{mean_and_se, spearman};
use crate::error::{Error, Result};
use crate::index::IndexFunction;
use crate::path::SamplePath;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionKind {
    Range,
    Graph,
}

/// Predicted dimension given `s = sup β(M_t)` over the interval: `d ∧ s` for the
/// range; `1 ∨ (2 - 1/s)` in `d = 1` and `1 ∨ s` in `d >= 2` for the graph.
pub fn predicted_dimension(kind: DimensionKind, sup_beta: f64, d: usize) -> f64 {
    match kind {
        DimensionKind::Range => sup_beta.min(d as f64),
        DimensionKind::Graph if d == 1 => (2.0 - 1.0 / sup_beta).max(1.0),
        DimensionKind::Graph => sup_beta.max(1.0),
    }
}

/// Prediction for one path on `[start, end]`.
pub fn path_prediction<T: Scalar>(
    kind: DimensionKind,
    path: &SamplePath<T>,
    beta: &IndexFunction<T>,
    start: f64,
    end: f64,
) -> Result<f64> {
    let s = path.sup_index_along(beta, T::lit(start), T::lit(end))?.to_f64_lossless();
    Ok(predicted_dimension(kind, s, path.dim()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub predictions: Vec<f64>,
    pub estimates: Vec<f64>,
    pub mean_absolute_error: f64,
    /// `None` when either column is constant.
    pub rank_correlation: Option<f64>,
    pub mean_estimate: f64,
    pub mean_estimate_se: f64,
}

/// Aggregates `(prediction, estimate)` pairs.
pub fn dimension_vs_prediction(pairs: &[(f64, f64)]) -> Result<PredictionReport> {
    if pairs.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let predictions: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let estimates: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mae = pairs.iter().map(|(p, e)| (p - e).abs()).sum::<f64>() / pairs.len() as f64;
    let (mean, se) = mean_and_se(&estimates);
    Ok(PredictionReport {
        rank_correlation: spearman(&predictions, &estimates),
        predictions,
        estimates,
        mean_absolute_error: mae,
        mean_estimate: mean,
        mean_estimate_se: se,
    })
}
