use super::types::Corpus;
use crate::error::{Error, Result};

fn mismatch(msg: String) -> Error {
    Error::invalid("fuse_modalities", msg)
}

/// Concatenates per-utterance features across structurally identical corpora,
/// in the order given.
pub fn fuse_modalities(modalities: &[Corpus]) -> Result<Corpus> {
    let (first, rest) = modalities
        .split_first()
        .ok_or_else(|| mismatch("no modalities given".into()))?;
    let mut fused = first.clone();
    for (m, other) in rest.iter().enumerate() {
        let m = m + 1;
        let (a, b) = (&fused.manifest, &other.manifest);
        if a.mode != b.mode || a.parties != b.parties || a.label_names != b.label_names {
            return Err(mismatch(format!(
                "modality {m}: manifest mode, parties or label names differ"
            )));
        }
        if fused.dialogues.len() != other.dialogues.len() {
            return Err(mismatch(format!(
                "modality {m}: {} dialogues vs {}",
                other.dialogues.len(),
                fused.dialogues.len()
            )));
        }
        for (d, od) in fused.dialogues.iter_mut().zip(&other.dialogues) {
            if d.id != od.id || d.speakers != od.speakers || d.len() != od.len() {
                return Err(mismatch(format!(
                    "modality {m}: dialogue {} differs in id, speakers or length",
                    d.id
                )));
            }
            for (t, (u, ou)) in d.utterances.iter_mut().zip(&od.utterances).enumerate() {
                if u.speaker != ou.speaker || u.label != ou.label || u.targets != ou.targets {
                    return Err(mismatch(format!(
                        "modality {m}: dialogue {} utterance {t} differs in speaker or annotation",
                        d.id
                    )));
                }
                u.features.extend_from_slice(&ou.features);
            }
        }
        fused.manifest.feature_size += other.manifest.feature_size;
    }
    Ok(fused)
}
