//! Attention exports and attention-distance analysis.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ForwardTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionKind {
    Alpha,
    Beta,
}

/// One row of the attention CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionRow {
    pub dialogue_id: String,
    pub t: usize,
    pub source_index: usize,
    pub weight: f64,
    pub kind: AttentionKind,
}

/// Flattens forward-direction α and (when present) β weights into rows.
pub fn attention_rows(dialogue_id: &str, trace: &ForwardTrace) -> Vec<AttentionRow> {
    let mut rows = Vec::new();
    let mut emit = |rowset: &[Vec<f64>], kind| {
        for (t, row) in rowset.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                rows.push(AttentionRow {
                    dialogue_id: dialogue_id.to_string(),
                    t,
                    source_index: j,
                    weight: w,
                    kind,
                });
            }
        }
    };
    emit(&trace.alpha, AttentionKind::Alpha);
    if let Some(beta) = &trace.beta {
        emit(beta, AttentionKind::Beta);
    }
    rows
}

/// Writes `dialogue_id,t,source_index,weight,kind` rows with round-trip float precision.
pub fn export_attention(traces: &[(&str, &ForwardTrace)], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for (id, trace) in traces {
        for row in attention_rows(id, trace) {
            w.serialize(row).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn import_attention(path: &Path) -> Result<Vec<AttentionRow>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Counts of utterance distances, grouped in buckets of `bucket_width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    pub bucket_width: usize,
    /// `counts[k]` covers distances `[k·w, (k+1)·w)`.
    pub counts: Vec<usize>,
}

impl DistanceHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Highest-weight position other than `exclude`; ties go to the lowest index.
fn top_excluding(row: &[f64], exclude: Option<usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, &w) in row.iter().enumerate() {
        if Some(j) == exclude {
            continue;
        }
        if best.is_none_or(|b| w > row[b]) {
            best = Some(j);
        }
    }
    best
}

/// Distance from each correctly classified utterance to its most-attended
/// context utterance.
///
/// Uses β rows when present: the target itself is excluded, so the context
/// utterance is the highest-ranked other position (the second-highest overall
/// whenever the target attends most to itself). Without β, α rows (which
/// only cover the past) are used as-is. Rows shorter than 2 are skipped.
pub fn attention_distance_histogram(
    traces: &[&ForwardTrace],
    labels: &[Vec<usize>],
    bucket_width: usize,
) -> DistanceHistogram {
    let bucket_width = bucket_width.max(1);
    let mut counts: Vec<usize> = Vec::new();
    for (trace, truth) in traces.iter().zip(labels) {
        let (rows, exclude_self) = match &trace.beta {
            Some(beta) => (beta, true),
            None => (&trace.alpha, false),
        };
        for (t, row) in rows.iter().enumerate() {
            let correct = trace
                .predictions
                .get(t)
                .is_some_and(|p| Some(p) == truth.get(t));
            if !correct || row.len() < 2 {
                continue;
            }
            let Some(j) = top_excluding(row, exclude_self.then_some(t)) else {
                continue;
            };
            let bucket = t.abs_diff(j) / bucket_width;
            if counts.len() <= bucket {
                counts.resize(bucket + 1, 0);
            }
            counts[bucket] += 1;
        }
    }
    DistanceHistogram {
        bucket_width,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_with_beta(beta: Vec<Vec<f64>>, predictions: Vec<usize>) -> ForwardTrace {
        let n = beta.len();
        ForwardTrace {
            alpha: (0..n).map(|t| vec![1.0 / t.max(1) as f64; t]).collect(),
            beta: Some(beta),
            predictions,
            ..Default::default()
        }
    }

    #[test]
    fn two_utterances_give_distance_one() {
        for beta in [
            vec![vec![0.9, 0.1], vec![0.3, 0.7]],
            vec![vec![0.2, 0.8], vec![0.6, 0.4]],
        ] {
            let tr = trace_with_beta(beta, vec![0, 1]);
            let h = attention_distance_histogram(&[&tr], &[vec![0, 1]], 1);
            assert_eq!(h.counts, vec![0, 2]);
        }
    }

    #[test]
    fn uniform_rows_break_ties_low() {
        let tr = trace_with_beta(vec![vec![0.25; 4]; 4], vec![0; 4]);
        let h = attention_distance_histogram(&[&tr], &[vec![0; 4]], 1);
        // every row resolves to position 0, except t=0 which resolves to 1
        assert_eq!(h.counts, vec![0, 2, 1, 1]);
    }

    #[test]
    fn alpha_rows_used_without_beta() {
        let tr = ForwardTrace {
            alpha: vec![vec![], vec![1.0], vec![0.2, 0.8], vec![0.5, 0.3, 0.2]],
            predictions: vec![0, 0, 0, 0],
            ..Default::default()
        };
        let h = attention_distance_histogram(&[&tr], &[vec![0, 0, 0, 0]], 1);
        // t=2 picks 1 (distance 1), t=3 picks 0 (distance 3)
        assert_eq!(h.counts, vec![0, 1, 0, 1]);
    }

    #[test]
    fn row_counts() {
        let tr = ForwardTrace {
            alpha: vec![vec![], vec![1.0], vec![0.5, 0.5]],
            ..Default::default()
        };
        assert_eq!(attention_rows("d", &tr).len(), 3);
        let tr = trace_with_beta(vec![vec![0.25; 4]; 4], vec![0; 4]);
        let beta_rows = attention_rows("d", &tr)
            .into_iter()
            .filter(|r| r.kind == AttentionKind::Beta)
            .count();
        assert_eq!(beta_rows, 16);
    }
}
