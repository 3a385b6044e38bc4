//! Regression metrics over valid pixels (or samples) and class accuracy.
//!
//! RMSElog uses base-10 logarithms.

use crate::error::{Error, Result};
use crate::estimate::classify;
use crate::field::{ensure_same, Mask, ScalarField};
use crate::math::{log10, sqrt};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionMetrics {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub valid_count: usize,
}

/// Flat report: the four regression metrics, accuracy and `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub accuracy: f64,
    pub valid_count: usize,
}

impl MetricReport {
    pub fn new(regression: RegressionMetrics, accuracy: f64) -> Self {
        Self {
            abs_rel: regression.abs_rel,
            sq_rel: regression.sq_rel,
            rmse: regression.rmse,
            rmse_log: regression.rmse_log,
            accuracy,
            valid_count: regression.valid_count,
        }
    }
}

/// AbsRel, SqRel, RMSE and RMSElog over entries where `valid` is set (all
/// entries when `valid` is `None`).
///
/// Valid entries need `gt > 0` and `pred > 0`.
pub fn regression_metrics(pred: &[f64], gt: &[f64], valid: Option<&[bool]>) -> Result<RegressionMetrics> {
    if pred.len() != gt.len() || valid.is_some_and(|v| v.len() != pred.len()) {
        return Err(Error::Shape("prediction, ground truth and mask lengths differ"));
    }
    let mut abs_rel = 0.0;
    let mut sq_rel = 0.0;
    let mut sq = 0.0;
    let mut sq_log = 0.0;
    let mut n = 0usize;
    for i in 0..pred.len() {
        if valid.is_some_and(|v| !v[i]) {
            continue;
        }
        let (p, g) = (pred[i], gt[i]);
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::Domain { what: "ground truth", value: g });
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Domain { what: "prediction", value: p });
        }
        let d = p - g;
        let rel = d / g;
        abs_rel += rel.abs();
        sq_rel += rel * rel;
        sq += d * d;
        let dl = log10(p) - log10(g);
        sq_log += dl * dl;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let nf = n as f64;
    Ok(RegressionMetrics {
        abs_rel: abs_rel / nf,
        sq_rel: sq_rel / nf,
        rmse: sqrt(sq / nf),
        rmse_log: sqrt(sq_log / nf),
        valid_count: n,
    })
}

/// Pixel-wise metrics between two fields under a validity mask.
pub fn field_metrics(pred: &ScalarField, gt: &ScalarField, mask: &Mask) -> Result<RegressionMetrics> {
    ensure_same(pred.dims(), gt.dims())?;
    ensure_same(pred.dims(), mask.dims())?;
    regression_metrics(pred.values(), gt.values(), Some(mask.bits()))
}

/// Fraction of entries whose predicted and true visibility share a class.
pub fn classification_accuracy(pred_vis: &[f64], gt_vis: &[f64]) -> Result<f64> {
    if pred_vis.len() != gt_vis.len() {
        return Err(Error::Shape("prediction and ground truth lengths differ"));
    }
    if pred_vis.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut hits = 0usize;
    for (&p, &g) in pred_vis.iter().zip(gt_vis) {
        if classify(p)? == classify(g)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / pred_vis.len() as f64)
}
