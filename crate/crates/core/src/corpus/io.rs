//! On-disk corpus format: a JSON manifest plus a JSON-lines data file with one
//! dialogue per line.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::types::{Corpus, Dialogue, Manifest};
use crate::error::{Error, Result};
use crate::model::Mode;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "dialogues.jsonl";

/// Reads both files and returns the corpus iff every invariant holds.
pub fn load_and_validate(data: &Path, manifest: &Path) -> Result<Corpus> {
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let manifest_value: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: manifest.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;

    let file = fs::File::open(data).map_err(|e| Error::io(data, e))?;
    let mut dialogues = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(data, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let d: Dialogue = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: data.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        dialogues.push(d);
    }
    let corpus = Corpus {
        manifest: manifest_value,
        dialogues,
    };
    validate(&corpus)?;
    Ok(corpus)
}

/// Loads `manifest.json` and `dialogues.jsonl` from a directory.
pub fn load_dir(dir: &Path) -> Result<Corpus> {
    load_and_validate(&dir.join(DATA_FILE), &dir.join(MANIFEST_FILE))
}

/// Collects every invariant violation; `Ok` only if there are none.
pub fn validate(corpus: &Corpus) -> Result<()> {
    let m = &corpus.manifest;
    let mut v = Vec::new();

    if m.feature_size == 0 {
        v.push("manifest: feature_size must be at least 1".to_string());
    }
    if m.parties < 2 {
        v.push(format!(
            "manifest: at least 2 parties required, got {}",
            m.parties
        ));
    }
    match m.mode {
        Mode::Classification if m.label_names.len() < 2 => v.push(format!(
            "manifest: classification needs at least 2 class names, got {}",
            m.label_names.len()
        )),
        Mode::Regression if m.label_names.is_empty() => {
            v.push("manifest: regression needs at least 1 attribute name".to_string())
        }
        _ => {}
    }
    if m.dialogue_count != corpus.dialogues.len() {
        v.push(format!(
            "manifest dialogue_count {} but data has {} dialogues",
            m.dialogue_count,
            corpus.dialogues.len()
        ));
    }
    if m.utterance_count != corpus.utterance_count() {
        v.push(format!(
            "manifest utterance_count {} but data has {} utterances",
            m.utterance_count,
            corpus.utterance_count()
        ));
    }

    let mut seen = HashSet::new();
    for d in &corpus.dialogues {
        let id = &d.id;
        if !seen.insert(id.as_str()) {
            v.push(format!("dialogue {id}: duplicate id"));
        }
        if d.utterances.is_empty() {
            v.push(format!("dialogue {id}: empty dialogue"));
        }
        if d.speakers.len() != m.parties {
            v.push(format!(
                "dialogue {id}: {} speaker ids for {} parties",
                d.speakers.len(),
                m.parties
            ));
        }
        for (t, u) in d.utterances.iter().enumerate() {
            let at = format!("dialogue {id} utterance {t}");
            if u.speaker >= m.parties {
                v.push(format!(
                    "{at}: speaker {} out of range for {} parties",
                    u.speaker, m.parties
                ));
            }
            if u.features.len() != m.feature_size {
                v.push(format!(
                    "{at}: {} features, expected {}",
                    u.features.len(),
                    m.feature_size
                ));
            }
            if u.features.iter().any(|x| !x.is_finite()) {
                v.push(format!("{at}: non-finite feature value"));
            }
            match m.mode {
                Mode::Classification => {
                    match u.label {
                        None => v.push(format!("{at}: missing label")),
                        Some(l) if l >= m.label_names.len() => v.push(format!(
                            "{at}: label {l} out of range for {} classes",
                            m.label_names.len()
                        )),
                        Some(_) => {}
                    }
                    if u.targets.is_some() {
                        v.push(format!(
                            "{at}: regression targets in a classification corpus"
                        ));
                    }
                }
                Mode::Regression => {
                    match &u.targets {
                        None => v.push(format!("{at}: missing targets")),
                        Some(ts) if ts.len() != m.label_names.len() => v.push(format!(
                            "{at}: {} targets, expected {}",
                            ts.len(),
                            m.label_names.len()
                        )),
                        Some(ts) if ts.iter().any(|x| !x.is_finite()) => {
                            v.push(format!("{at}: non-finite target"))
                        }
                        Some(_) => {}
                    }
                    if u.label.is_some() {
                        v.push(format!("{at}: class label in a regression corpus"));
                    }
                }
            }
            if let Some(cues) = &u.listener_cues {
                match m.listener_cue_size {
                    None => v.push(format!(
                        "{at}: listener cues present but manifest declares no listener_cue_size"
                    )),
                    Some(size) => {
                        if cues.len() != m.parties || cues.iter().any(|c| c.len() != size) {
                            v.push(format!(
                                "{at}: listener cues must be {} vectors of length {size}",
                                m.parties
                            ));
                        }
                    }
                }
            }
        }
    }

    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(v))
    }
}

/// Writes the manifest and data files. Floats use shortest round-trip form.
pub fn save(corpus: &Corpus, data: &Path, manifest: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&corpus.manifest).expect("manifest serializes");
    fs::write(manifest, text + "\n").map_err(|e| Error::io(manifest, e))?;

    let file = fs::File::create(data).map_err(|e| Error::io(data, e))?;
    let mut w = BufWriter::new(file);
    for d in &corpus.dialogues {
        let line = serde_json::to_string(d).expect("dialogue serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(data, e))?;
    }
    w.flush().map_err(|e| Error::io(data, e))
}

pub fn save_dir(corpus: &Corpus, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save(corpus, &dir.join(DATA_FILE), &dir.join(MANIFEST_FILE))
}
