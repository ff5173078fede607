//! Evaluation metrics, ablations and attention analyses.

mod ablation;
mod attention;
mod classification;
mod regression;
mod shift;

pub use ablation::{ablation_run, compare_configs, AblationTable, ConfigScores};
pub use attention::{
    attention_distance_histogram, attention_rows, export_attention, import_attention,
    AttentionKind, AttentionRow, DistanceHistogram,
};
pub use classification::{classification_metrics, ClassStats, ClassificationReport};
pub use regression::{
    mean_absolute_error, pearson, regression_metrics, AttributeStats, RegressionReport,
};
pub use shift::{emotion_shift_accuracy, shift_mask, ShiftAccuracy};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::model::{ForwardTrace, Mode, Model};

/// Metrics for one evaluated corpus. Serialized with stable key names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: Mode,
    pub dialogues: usize,
    pub utterances: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emotion_shift: Option<ShiftAccuracy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regression: Option<RegressionReport>,
}

impl MetricsReport {
    /// Weighted F1 for classification, mean MAE for regression.
    pub fn headline(&self) -> f64 {
        match (&self.classification, &self.regression) {
            (Some(c), _) => c.weighted_f1,
            (_, Some(r)) => r.mean_mae,
            _ => f64::NAN,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    /// One trace per dialogue, in corpus order.
    pub traces: Vec<ForwardTrace>,
    pub report: MetricsReport,
}

/// Runs the model over every dialogue and scores the result.
pub fn evaluate(model: &Model, corpus: &Corpus) -> Result<Evaluation> {
    if corpus.dialogues.is_empty() {
        return Err(Error::invalid("evaluate", "empty corpus"));
    }
    let traces = corpus
        .dialogues
        .par_iter()
        .map(|d| {
            model.forward(d).map_err(|e| Error::InDialogue {
                dialogue: d.id.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = score(model.config.mode, model.config.outputs, &traces, corpus)?;
    Ok(Evaluation { traces, report })
}

/// Builds a report from traces aligned with `corpus.dialogues`.
pub fn score(
    mode: Mode,
    outputs: usize,
    traces: &[ForwardTrace],
    corpus: &Corpus,
) -> Result<MetricsReport> {
    let mut report = MetricsReport {
        mode,
        dialogues: corpus.dialogues.len(),
        utterances: corpus.utterance_count(),
        classification: None,
        emotion_shift: None,
        regression: None,
    };
    match mode {
        Mode::Classification => {
            let predicted: Vec<usize> = traces.iter().flat_map(|t| t.predictions.clone()).collect();
            let truth: Vec<usize> = corpus
                .dialogues
                .iter()
                .flat_map(|d| &d.utterances)
                .map(|u| {
                    u.label
                        .ok_or_else(|| Error::invalid("score", "unlabeled utterance"))
                })
                .collect::<Result<_>>()?;
            report.classification = Some(classification_metrics(&predicted, &truth, outputs)?);
            let per_dialogue: Vec<Vec<usize>> =
                traces.iter().map(|t| t.predictions.clone()).collect();
            report.emotion_shift = Some(emotion_shift_accuracy(&per_dialogue, &corpus.dialogues));
        }
        Mode::Regression => {
            let predicted: Vec<Vec<f64>> = traces.iter().flat_map(|t| t.outputs.clone()).collect();
            let truth: Vec<Vec<f64>> = corpus
                .dialogues
                .iter()
                .flat_map(|d| &d.utterances)
                .map(|u| {
                    u.targets
                        .clone()
                        .ok_or_else(|| Error::invalid("score", "utterance without targets"))
                })
                .collect::<Result<_>>()?;
            report.regression = Some(regression_metrics(&predicted, &truth)?);
        }
    }
    Ok(report)
}
