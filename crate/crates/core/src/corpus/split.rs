use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::types::{Corpus, Dialogue};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub target_test_fraction: f64,
    /// Share of utterances that ended up in the test partition.
    pub achieved_test_fraction: f64,
    pub train_dialogues: usize,
    pub test_dialogues: usize,
    pub train_speakers: Vec<String>,
    pub test_speakers: Vec<String>,
}

/// Groups of speakers connected through shared dialogues. Every dialogue
/// belongs to exactly one group; groups are returned in a canonical order.
fn speaker_groups(dialogues: &[Dialogue]) -> Vec<(BTreeSet<String>, Vec<usize>)> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for d in dialogues {
        for s in &d.speakers {
            let n = index.len();
            index.entry(s.as_str()).or_insert(n);
        }
    }
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for d in dialogues {
        let ids: Vec<usize> = d.speakers.iter().map(|s| index[s.as_str()]).collect();
        for w in ids.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }

    let mut groups: BTreeMap<usize, (BTreeSet<String>, Vec<usize>)> = BTreeMap::new();
    for (i, d) in dialogues.iter().enumerate() {
        let Some(first) = d.speakers.first() else {
            continue;
        };
        let root = find(&mut parent, index[first.as_str()]);
        let entry = groups.entry(root).or_default();
        entry.0.extend(d.speakers.iter().cloned());
        entry.1.push(i);
    }
    let mut out: Vec<_> = groups.into_values().collect();
    out.sort_by(|a, b| a.0.iter().next().cmp(&b.0.iter().next()));
    out
}

/// Speaker-disjoint train/test split.
///
/// Speakers linked through shared dialogues move together. Groups are visited
/// in seeded random order and assigned to test until the test share of
/// utterances first reaches `test_fraction`.
pub fn speaker_disjoint_split(
    corpus: &Corpus,
    test_fraction: f64,
    seed: u64,
) -> Result<(Corpus, Corpus, SplitReport)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if let Some(d) = corpus.dialogues.iter().find(|d| d.speakers.is_empty()) {
        return Err(Error::Split(format!("dialogue {} lists no speakers", d.id)));
    }
    let distinct: BTreeSet<&String> = corpus.dialogues.iter().flat_map(|d| &d.speakers).collect();
    if distinct.len() < 2 {
        return Err(Error::Split(format!(
            "need at least 2 distinct speakers, found {}",
            distinct.len()
        )));
    }

    let mut groups = speaker_groups(&corpus.dialogues);
    if groups.len() < 2 {
        return Err(Error::Split(
            "every dialogue is connected through shared speakers, so no speaker-disjoint \
             partition exists"
                .into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);

    let total = corpus.utterance_count() as f64;
    let mut test_idx = BTreeSet::new();
    let mut test_utts = 0usize;
    let mut taken = 0;
    for (_, dialogues) in &groups {
        if test_utts as f64 / total >= test_fraction {
            break;
        }
        for &i in dialogues {
            test_idx.insert(i);
            test_utts += corpus.dialogues[i].len();
        }
        taken += 1;
    }
    if taken == groups.len() {
        return Err(Error::Split(format!(
            "reaching a test fraction of {test_fraction} would leave the training \
             partition empty"
        )));
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    let (mut train_spk, mut test_spk) = (BTreeSet::new(), BTreeSet::new());
    for (i, d) in corpus.dialogues.iter().enumerate() {
        if test_idx.contains(&i) {
            test_spk.extend(d.speakers.iter().cloned());
            test.push(d.clone());
        } else {
            train_spk.extend(d.speakers.iter().cloned());
            train.push(d.clone());
        }
    }
    debug_assert!(train_spk.is_disjoint(&test_spk));
    let report = SplitReport {
        target_test_fraction: test_fraction,
        achieved_test_fraction: test_utts as f64 / total,
        train_dialogues: train.len(),
        test_dialogues: test.len(),
        train_speakers: train_spk.into_iter().collect(),
        test_speakers: test_spk.into_iter().collect(),
    };
    Ok((
        corpus.with_dialogues(train),
        corpus.with_dialogues(test),
        report,
    ))
}

/// Seeded dialogue-level holdout: `round(fraction · n)` dialogues go to
/// validation (at least one when the fraction is positive and `n ≥ 2`).
/// Both parts keep the original dialogue order.
pub fn train_validation_split(
    corpus: &Corpus,
    fraction: f64,
    seed: u64,
) -> Result<(Corpus, Corpus)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Split(format!(
            "validation fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let n = corpus.dialogues.len();
    let mut k = (fraction * n as f64).round() as usize;
    if fraction > 0.0 && n >= 2 {
        k = k.clamp(1, n - 1);
    } else if n < 2 {
        k = 0;
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let val: BTreeSet<usize> = order[..k].iter().copied().collect();
    let (mut tr, mut va) = (Vec::new(), Vec::new());
    for (i, d) in corpus.dialogues.iter().enumerate() {
        if val.contains(&i) {
            va.push(d.clone());
        } else {
            tr.push(d.clone());
        }
    }
    Ok((corpus.with_dialogues(tr), corpus.with_dialogues(va)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Manifest, Utterance};
    use crate::model::Mode;

    fn corpus(pairs: &[(&str, &str)], len: usize) -> Corpus {
        let dialogues: Vec<Dialogue> = pairs
            .iter()
            .enumerate()
            .map(|(i, (a, b))| Dialogue {
                id: format!("d{i}"),
                speakers: vec![a.to_string(), b.to_string()],
                utterances: (0..len)
                    .map(|t| Utterance::labeled(t % 2, vec![0.0], 0))
                    .collect(),
            })
            .collect();
        let manifest = Manifest {
            mode: Mode::Classification,
            feature_size: 1,
            label_names: vec!["a".into(), "b".into()],
            parties: 2,
            listener_cue_size: None,
            dialogue_count: 0,
            utterance_count: 0,
        };
        Corpus {
            manifest,
            dialogues: Vec::new(),
        }
        .with_dialogues(dialogues)
    }

    #[test]
    fn shared_speaker_everywhere_is_rejected() {
        let c = corpus(&[("A", "b"), ("A", "c"), ("A", "d")], 4);
        assert!(matches!(
            speaker_disjoint_split(&c, 0.2, 0),
            Err(Error::Split(_))
        ));
    }

    #[test]
    fn five_pairs_put_exactly_one_pair_in_test() {
        let pairs: Vec<(String, String)> = (0..5)
            .flat_map(|k| {
                let p = (format!("s{k}a"), format!("s{k}b"));
                [p.clone(), p]
            })
            .collect();
        let refs: Vec<(&str, &str)> = pairs
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        let c = corpus(&refs, 6);
        for seed in 0..20 {
            let (train, test, report) = speaker_disjoint_split(&c, 0.2, seed).unwrap();
            assert_eq!(test.dialogues.len(), 2);
            assert_eq!(train.dialogues.len(), 8);
            assert_eq!(report.test_speakers.len(), 2);
            assert_eq!(test.dialogues[0].speakers, test.dialogues[1].speakers);
            assert_eq!(report.achieved_test_fraction, 0.2);
        }
    }

    #[test]
    fn train_validation_holdout_sizes() {
        let c = corpus(&[("a", "b"); 10], 2);
        let (tr, va) = train_validation_split(&c, 0.1, 3).unwrap();
        assert_eq!((tr.dialogues.len(), va.dialogues.len()), (9, 1));
        let (tr, va) = train_validation_split(&c, 0.0, 3).unwrap();
        assert_eq!((tr.dialogues.len(), va.dialogues.len()), (10, 0));
    }
}
