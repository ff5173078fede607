use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    /// Number of utterances whose true label is this class.
    pub support: usize,
    pub predicted: usize,
    /// `None` when the class is never predicted.
    pub precision: Option<f64>,
    /// Per-class accuracy; `None` when the class never occurs.
    pub recall: Option<f64>,
    /// `None` only when the class is neither present nor predicted.
    pub f1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub total: usize,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassStats>,
    pub accuracy: f64,
    /// Support-weighted mean of per-class accuracy.
    pub weighted_accuracy: f64,
    /// Support-weighted mean of per-class F1.
    pub weighted_f1: f64,
}

pub fn classification_metrics(
    predicted: &[usize],
    truth: &[usize],
    classes: usize,
) -> Result<ClassificationReport> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::invalid(
            "classification_metrics",
            format!(
                "need equal nonzero lengths, got {} predictions and {} labels",
                predicted.len(),
                truth.len()
            ),
        ));
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &y) in predicted.iter().zip(truth) {
        if p >= classes || y >= classes {
            return Err(Error::invalid(
                "classification_metrics",
                format!("label {} outside [0, {classes})", p.max(y)),
            ));
        }
        confusion[y][p] += 1;
    }
    let total = truth.len();

    let per_class: Vec<ClassStats> = (0..classes)
        .map(|c| {
            let tp = confusion[c][c];
            let support: usize = confusion[c].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[c]).sum();
            let precision = (predicted > 0).then(|| tp as f64 / predicted as f64);
            let recall = (support > 0).then(|| tp as f64 / support as f64);
            let f1 = if support == 0 && predicted == 0 {
                None
            } else if tp == 0 {
                Some(0.0)
            } else {
                let (p, r) = (precision.unwrap(), recall.unwrap());
                Some(2.0 * p * r / (p + r))
            };
            ClassStats {
                support,
                predicted,
                precision,
                recall,
                f1,
            }
        })
        .collect();

    let weighted = |f: &dyn Fn(&ClassStats) -> Option<f64>| -> f64 {
        per_class
            .iter()
            .map(|s| s.support as f64 * f(s).unwrap_or(0.0))
            .sum::<f64>()
            / total as f64
    };
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    Ok(ClassificationReport {
        total,
        accuracy: correct as f64 / total as f64,
        weighted_accuracy: weighted(&|s| s.recall),
        weighted_f1: weighted(&|s| s.f1),
        confusion,
        per_class,
    })
}
