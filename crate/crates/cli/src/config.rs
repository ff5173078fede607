//! Run configuration: one TOML file, command-line overrides, resolved against the corpus.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use partyrnn_core::corpus::Manifest;
use partyrnn_core::model::{Ablation, ListenerUpdate, ModelConfig, Variant};
use partyrnn_core::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the root for per-run output directories.
pub const OUTPUT_ROOT_VAR: &str = "PARTYRNN_OUTPUT_ROOT";

/// Name of the resolved-config echo written into every output directory.
pub const ECHO_FILE: &str = "config.toml";

/// Hidden extents used when neither the file nor the flags set them.
pub const DEFAULT_HIDDEN: usize = 100;

/// Model settings as written in a config file; unset fields come from the
/// corpus manifest or the defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelFile {
    /// Sets all four hidden extents at once.
    pub hidden: Option<usize>,
    pub global_size: Option<usize>,
    pub party_size: Option<usize>,
    pub emotion_size: Option<usize>,
    pub classifier_size: Option<usize>,
    pub listener_cue_size: Option<usize>,
    pub listener_update: Option<ListenerUpdate>,
    pub ablation: Option<Ablation>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunFile {
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    /// Holdout share of the training corpus used for checkpoint selection
    /// when no validation corpus is given.
    pub validation_fraction: Option<f64>,
    pub model: ModelFile,
    pub train: TrainConfig,
}

/// Flag values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub l2: Option<f64>,
    pub hidden: Option<usize>,
    pub ablation: Option<Ablation>,
    pub validation_fraction: Option<f64>,
}

/// Everything a run depends on, fixed before it starts.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub command: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_fraction: Option<f64>,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

pub fn read_run_file(path: Option<&Path>) -> Result<RunFile, CliError> {
    match path {
        None => Ok(RunFile::default()),
        Some(p) => read_toml(p),
    }
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(
        command: &str,
        file: RunFile,
        flags: &Overrides,
        manifest: &Manifest,
    ) -> Result<Self, CliError> {
        let m = &file.model;
        let hidden = flags.hidden.or(m.hidden).unwrap_or(DEFAULT_HIDDEN);
        let mut model =
            ModelConfig::classification(manifest.feature_size, hidden, manifest.outputs());
        model.mode = manifest.mode;
        model.parties = manifest.parties;
        if flags.hidden.is_none() {
            model.global_size = m.global_size.unwrap_or(hidden);
            model.party_size = m.party_size.unwrap_or(hidden);
            model.emotion_size = m.emotion_size.unwrap_or(hidden);
            model.classifier_size = m.classifier_size.unwrap_or(hidden);
        }
        if let Some(n) = m.listener_cue_size.or(manifest.listener_cue_size) {
            model.listener_cue_size = n;
        }
        model.listener_update = m.listener_update.unwrap_or_default();
        model.ablation = flags.ablation.or(m.ablation).unwrap_or_default();
        model = model.with_variant(flags.variant.or(file.variant).unwrap_or(Variant::Base));
        model.validate()?;

        let mut train = file.train;
        let seed = flags.seed.or(file.seed).unwrap_or(train.seed);
        train.seed = seed;
        if let Some(e) = flags.epochs {
            train.epochs = e;
        }
        if let Some(lr) = flags.learning_rate {
            train.learning_rate = lr;
        }
        if let Some(l2) = flags.l2 {
            train.l2 = l2;
        }
        train.validate()?;

        let validation_fraction = flags.validation_fraction.or(file.validation_fraction);
        if let Some(f) = validation_fraction {
            if !(0.0..1.0).contains(&f) {
                return Err(CliError::Validation(format!(
                    "validation fraction must lie in [0, 1), got {f}"
                )));
            }
        }
        Ok(RunConfig {
            seed,
            command: command.to_string(),
            inputs: BTreeMap::new(),
            validation_fraction,
            model,
            train,
        })
    }

    pub fn with_input(mut self, name: &str, path: &Path) -> Self {
        self.inputs.insert(name.to_string(), path.to_path_buf());
        self
    }

    pub fn echo(&self, dir: &Path) -> Result<(), CliError> {
        write_toml(&dir.join(ECHO_FILE), self)
    }
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = toml::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing {}: {e}", path.display())))?;
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// `--out` when given, otherwise `<root>/<timestamp>-seed<seed>` under
/// `$PARTYRNN_OUTPUT_ROOT` (default `runs`). The directory is created.
pub fn output_dir(out: Option<&Path>, seed: u64) -> Result<PathBuf, CliError> {
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let root = std::env::var_os(OUTPUT_ROOT_VAR)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs"));
            let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S");
            root.join(format!("{stamp}-seed{seed}"))
        }
    };
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

/// Seed lists: `3`, `0,2,5` or an inclusive range `0..4`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|e| format!("bad seed `{t}`: {e}"))
    };
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty seed range {s}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(num).collect()
}
