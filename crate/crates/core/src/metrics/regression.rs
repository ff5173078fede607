use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeStats {
    pub mae: f64,
    /// Pearson correlation; `None` when either side has zero variance or fewer than 2 samples.
    pub pearson_r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub samples: usize,
    pub per_attribute: Vec<AttributeStats>,
    pub mean_mae: f64,
}

pub fn mean_absolute_error(predicted: &[f64], truth: &[f64]) -> f64 {
    predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / predicted.len() as f64
}

/// Two-pass Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Per-attribute MAE and Pearson r over row-major `samples × attributes` data.
pub fn regression_metrics(predicted: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<RegressionReport> {
    let attrs = truth.first().map_or(0, Vec::len);
    let ragged =
        predicted.len() != truth.len() || predicted.iter().chain(truth).any(|r| r.len() != attrs);
    if ragged || truth.is_empty() || attrs == 0 {
        return Err(Error::invalid(
            "regression_metrics",
            "predictions and targets must have equal nonempty shapes",
        ));
    }
    let per_attribute: Vec<AttributeStats> = (0..attrs)
        .map(|a| {
            let p: Vec<f64> = predicted.iter().map(|r| r[a]).collect();
            let t: Vec<f64> = truth.iter().map(|r| r[a]).collect();
            AttributeStats {
                mae: mean_absolute_error(&p, &t),
                pearson_r: pearson(&p, &t),
            }
        })
        .collect();
    let mean_mae = per_attribute.iter().map(|s| s.mae).sum::<f64>() / attrs as f64;
    Ok(RegressionReport {
        samples: truth.len(),
        per_attribute,
        mean_mae,
    })
}
