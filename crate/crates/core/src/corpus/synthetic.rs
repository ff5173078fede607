//! Synthetic two-party dialogues with Markov emotion dynamics.
//!
//! Each party keeps its previous label with probability `p_self`, copies the
//! other party's most recent label with probability `p_other`, and otherwise
//! draws uniformly. Features are a class mean plus a party offset plus
//! Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::types::{Corpus, Dialogue, Manifest, Utterance};
use crate::error::{Error, Result};
use crate::model::Mode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub dialogues: usize,
    pub min_length: usize,
    pub max_length: usize,
    pub classes: usize,
    pub feature_size: usize,
    pub p_self: f64,
    pub p_other: f64,
    /// Standard deviation of per-utterance feature noise.
    pub noise: f64,
    /// Standard deviation of the class-mean entries.
    pub class_scale: f64,
    /// Standard deviation of the per-party offset entries.
    pub offset_scale: f64,
    /// Number of distinct speaker pairs; dialogue `i` uses pair `i mod speaker_pairs`.
    pub speaker_pairs: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            dialogues: 125,
            min_length: 12,
            max_length: 12,
            classes: 6,
            feature_size: 16,
            p_self: 0.7,
            p_other: 0.2,
            noise: 1.0,
            class_scale: 0.5,
            offset_scale: 0.5,
            speaker_pairs: 25,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::invalid("generate_synthetic", reason));
        let probs_ok = (0.0..=1.0).contains(&self.p_self)
            && (0.0..=1.0).contains(&self.p_other)
            && self.p_self + self.p_other <= 1.0;
        if !probs_ok {
            return bad(format!(
                "need p_self, p_other ≥ 0 with p_self + p_other ≤ 1, got {} and {}",
                self.p_self, self.p_other
            ));
        }
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.dialogues == 0 || self.feature_size == 0 || self.speaker_pairs == 0 {
            return bad("dialogues, feature_size and speaker_pairs must be positive".into());
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return bad(format!(
                "invalid length range {}..={}",
                self.min_length, self.max_length
            ));
        }
        for (name, v) in [
            ("noise", self.noise),
            ("class_scale", self.class_scale),
            ("offset_scale", self.offset_scale),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!(
                    "{name} must be a finite non-negative number, got {v}"
                ));
            }
        }
        Ok(())
    }
}

/// A generated corpus with the latent quantities used to build it.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub class_means: Vec<Vec<f64>>,
    pub party_offsets: Vec<Vec<f64>>,
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect::<Vec<f64>>()
}

pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let class_means: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| gaussian_vec(&mut rng, spec.feature_size, spec.class_scale))
        .collect();
    let party_offsets: Vec<Vec<f64>> = (0..2)
        .map(|_| gaussian_vec(&mut rng, spec.feature_size, spec.offset_scale))
        .collect();
    let noise = Normal::new(0.0, spec.noise).expect("validated noise");

    let mut dialogues = Vec::with_capacity(spec.dialogues);
    for i in 0..spec.dialogues {
        let pair = i % spec.speaker_pairs;
        let len = rng.random_range(spec.min_length..=spec.max_length);
        let mut last: [Option<usize>; 2] = [None, None];
        let mut utterances = Vec::with_capacity(len);
        for t in 0..len {
            let speaker = t % 2;
            let other = 1 - speaker;
            let r: f64 = rng.random();
            let label = match (last[speaker], last[other]) {
                (Some(own), _) if r < spec.p_self => own,
                (Some(_), Some(theirs)) if r < spec.p_self + spec.p_other => theirs,
                _ => rng.random_range(0..spec.classes),
            };
            last[speaker] = Some(label);
            let features = class_means[label]
                .iter()
                .zip(&party_offsets[speaker])
                .map(|(m, o)| m + o + noise.sample(&mut rng))
                .collect();
            utterances.push(Utterance::labeled(speaker, features, label));
        }
        dialogues.push(Dialogue {
            id: format!("syn{i:05}"),
            speakers: vec![format!("pair{pair:03}_a"), format!("pair{pair:03}_b")],
            utterances,
        });
    }

    let manifest = Manifest {
        mode: Mode::Classification,
        feature_size: spec.feature_size,
        label_names: (0..spec.classes).map(|c| format!("class{c}")).collect(),
        parties: 2,
        listener_cue_size: None,
        dialogue_count: 0,
        utterance_count: 0,
    };
    let corpus = Corpus {
        manifest,
        dialogues: Vec::new(),
    }
    .with_dialogues(dialogues);
    Ok(SyntheticCorpus {
        corpus,
        class_means,
        party_offsets,
    })
}
