use serde::{Deserialize, Serialize};

use crate::corpus::Dialogue;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftAccuracy {
    pub shift_turns: usize,
    pub no_shift_turns: usize,
    /// `None` when there are no shift turns.
    pub shift_accuracy: Option<f64>,
    pub no_shift_accuracy: Option<f64>,
}

/// Marks turns whose true label differs from the same party's previous turn.
/// A party's first turn is never a shift.
pub fn shift_mask(labels: &[usize], speakers: &[usize]) -> Vec<bool> {
    let parties = speakers.iter().copied().max().map_or(0, |m| m + 1);
    let mut last: Vec<Option<usize>> = vec![None; parties];
    labels
        .iter()
        .zip(speakers)
        .map(|(&y, &s)| {
            let shifted = last[s].is_some_and(|prev| prev != y);
            last[s] = Some(y);
            shifted
        })
        .collect()
}

/// Accuracy on shift turns and on all other turns. `predictions[i]` aligns with `dialogues[i]`.
pub fn emotion_shift_accuracy(predictions: &[Vec<usize>], dialogues: &[Dialogue]) -> ShiftAccuracy {
    let (mut shift, mut shift_ok, mut stay, mut stay_ok) = (0, 0, 0, 0);
    for (pred, d) in predictions.iter().zip(dialogues) {
        let labels: Vec<usize> = d.utterances.iter().map(|u| u.label.unwrap_or(0)).collect();
        let mask = shift_mask(&labels, &d.speaker_indices());
        for ((&p, &y), &m) in pred.iter().zip(&labels).zip(&mask) {
            if m {
                shift += 1;
                shift_ok += usize::from(p == y);
            } else {
                stay += 1;
                stay_ok += usize::from(p == y);
            }
        }
    }
    let rate = |ok: usize, n: usize| (n > 0).then(|| ok as f64 / n as f64);
    ShiftAccuracy {
        shift_turns: shift,
        no_shift_turns: stay,
        shift_accuracy: rate(shift_ok, shift),
        no_shift_accuracy: rate(stay_ok, stay),
    }
}
