use serde::{Deserialize, Serialize};

use crate::model::Mode;

/// One turn of a dialogue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    /// Party index within the dialogue (0-based).
    pub speaker: usize,
    pub features: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<f64>>,
    /// Optional per-party cue vectors, indexed by party.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub listener_cues: Option<Vec<Vec<f64>>>,
}

impl Utterance {
    pub fn labeled(speaker: usize, features: Vec<f64>, label: usize) -> Self {
        Utterance {
            speaker,
            features,
            label: Some(label),
            targets: None,
            listener_cues: None,
        }
    }

    pub fn with_targets(speaker: usize, features: Vec<f64>, targets: Vec<f64>) -> Self {
        Utterance {
            speaker,
            features,
            label: None,
            targets: Some(targets),
            listener_cues: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    /// Global speaker identity of each party, used for speaker-disjoint splits.
    pub speakers: Vec<String>,
    pub utterances: Vec<Utterance>,
}

impl Dialogue {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// True labels in order; `None` if any utterance is unlabeled.
    pub fn labels(&self) -> Option<Vec<usize>> {
        self.utterances.iter().map(|u| u.label).collect()
    }

    pub fn speaker_indices(&self) -> Vec<usize> {
        self.utterances.iter().map(|u| u.speaker).collect()
    }
}

/// Corpus-level metadata stored next to the data file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub mode: Mode,
    pub feature_size: usize,
    /// Class names (classification) or attribute names (regression).
    pub label_names: Vec<String>,
    pub parties: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub listener_cue_size: Option<usize>,
    pub dialogue_count: usize,
    pub utterance_count: usize,
}

impl Manifest {
    /// Class count or attribute count.
    pub fn outputs(&self) -> usize {
        self.label_names.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub manifest: Manifest,
    pub dialogues: Vec<Dialogue>,
}

impl Corpus {
    pub fn utterance_count(&self) -> usize {
        self.dialogues.iter().map(Dialogue::len).sum()
    }

    /// A corpus with the same metadata holding the given dialogues, counts refreshed.
    pub fn with_dialogues(&self, dialogues: Vec<Dialogue>) -> Corpus {
        let mut manifest = self.manifest.clone();
        manifest.dialogue_count = dialogues.len();
        manifest.utterance_count = dialogues.iter().map(Dialogue::len).sum();
        Corpus {
            manifest,
            dialogues,
        }
    }
}
