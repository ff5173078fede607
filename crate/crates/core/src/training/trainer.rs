use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::{classification_loss, regression_loss, Loss};
use crate::autodiff::{Tape, Tensor};
use crate::corpus::{Corpus, Dialogue};
use crate::error::{Error, Result};
use crate::metrics::evaluate;
use crate::model::{forward_dialogue, Mode, Model, ModelConfig, Parameters};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Weight of the squared-norm penalty.
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Stop after this many epochs without validation improvement.
    pub patience: Option<usize>,
    /// Record wall-clock time per epoch. Off by default so logs are reproducible.
    pub record_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l2: 1e-4,
            epochs: 60,
            seed: 0,
            patience: None,
            record_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..1.0;
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.learning_rate) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !unit.contains(&self.beta1) || !unit.contains(&self.beta2) {
            return Err(Error::Config(format!(
                "Adam betas must lie in [0, 1), got {} and {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) || !positive(self.epsilon) {
            return Err(Error::Config(format!(
                "need l2 ≥ 0 and epsilon > 0, got {} and {}",
                self.l2, self.epsilon
            )));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// One line of the per-epoch log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Weighted F1 (classification) or mean MAE (regression) on the validation set.
    pub val_metric: Option<f64>,
    pub wall_ms: u64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Best-validation model, or the final model without validation data.
    pub model: Model,
    pub log: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    /// Steps dropped because of non-finite gradients.
    pub rejected_steps: usize,
}

/// Column names of the epoch log.
pub const EPOCH_LOG_HEADER: [&str; 4] = ["epoch", "train_loss", "val_metric", "wall_ms"];

/// Writes the epoch log as CSV: `epoch,train_loss,val_metric,wall_ms`.
/// The header is written even for an empty log.
pub fn write_epoch_log(log: &[EpochRecord], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(EPOCH_LOG_HEADER).map_err(csv_err)?;
    for r in log {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Appends a single record, writing the header when the file is new or empty.
pub fn append_epoch_record(record: &EpochRecord, path: &Path) -> Result<()> {
    let fresh = std::fs::metadata(path)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    w.serialize(record).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

/// Forward pass plus loss for one dialogue on a fresh tape.
fn dialogue_loss_on_tape(
    tape: &mut Tape,
    config: &ModelConfig,
    params: &Parameters<Tensor>,
    dialogue: &Dialogue,
    l2: f64,
) -> Result<(Parameters<crate::autodiff::Var>, Loss)> {
    let vars = params.bind(tape);
    let pass = forward_dialogue(tape, &vars, config, dialogue)?;
    let tables: Vec<_> = vars.tables().into_iter().copied().collect();
    let loss = match config.mode {
        Mode::Classification => {
            let labels = dialogue
                .labels()
                .ok_or_else(|| Error::invalid("classification_loss", "unlabeled utterance"))?;
            classification_loss(tape, &pass.outputs, &labels, &tables, l2)?
        }
        Mode::Regression => {
            let targets: Vec<Vec<f64>> = dialogue
                .utterances
                .iter()
                .map(|u| u.targets.clone())
                .collect::<Option<_>>()
                .ok_or_else(|| Error::invalid("regression_loss", "utterance without targets"))?;
            regression_loss(tape, &pass.outputs, &targets, &tables, l2)?
        }
    };
    Ok((vars, loss))
}

/// Loss value of one dialogue (mean over its utterances plus the penalty).
pub fn dialogue_loss(model: &Model, dialogue: &Dialogue, l2: f64) -> Result<f64> {
    let mut tape = Tape::new();
    let (_, loss) = dialogue_loss_on_tape(&mut tape, &model.config, &model.params, dialogue, l2)?;
    Ok(tape.value(loss.total).item())
}

/// Loss and gradient of every parameter table (in naming order) for one dialogue.
pub fn dialogue_gradients(
    model: &Model,
    dialogue: &Dialogue,
    l2: f64,
) -> Result<(f64, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let (vars, loss) =
        dialogue_loss_on_tape(&mut tape, &model.config, &model.params, dialogue, l2)?;
    let grads = tape.backward(loss.total)?;
    let per_table = vars
        .tables()
        .into_iter()
        .map(|&v| grads.wrt(v, &tape))
        .collect();
    Ok((tape.value(loss.total).item(), per_table))
}

/// Checks that corpus metadata is compatible with the model configuration.
pub fn check_compatible(corpus: &Corpus, config: &ModelConfig) -> Result<()> {
    let m = &corpus.manifest;
    let mut problems = Vec::new();
    if m.mode != config.mode {
        problems.push(format!(
            "corpus mode {:?} vs model mode {:?}",
            m.mode, config.mode
        ));
    }
    if m.feature_size != config.utterance_size {
        problems.push(format!(
            "corpus feature_size {} vs model utterance_size {}",
            m.feature_size, config.utterance_size
        ));
    }
    if m.outputs() != config.outputs {
        problems.push(format!(
            "corpus has {} labels/attributes vs model outputs {}",
            m.outputs(),
            config.outputs
        ));
    }
    if m.parties != config.parties {
        problems.push(format!(
            "corpus parties {} vs model parties {}",
            m.parties, config.parties
        ));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems.join("; ")))
    }
}

fn better(mode: Mode, candidate: f64, best: f64) -> bool {
    match mode {
        Mode::Classification => candidate > best,
        Mode::Regression => candidate < best,
    }
}

/// Trains a freshly initialized model; see [`train_model`].
pub fn train(
    corpus: &Corpus,
    validation: Option<&Corpus>,
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let model = Model::new(model_config.clone(), config.seed)?;
    train_model(model, corpus, validation, config, |_| {})
}

/// Trains `model` on `corpus`, one Adam step per dialogue, dialogues visited
/// in seeded shuffled order. `on_epoch` sees every log record as it is produced.
pub fn train_model(
    mut model: Model,
    corpus: &Corpus,
    validation: Option<&Corpus>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    model.config.validate()?;
    if corpus.dialogues.is_empty() {
        return Err(Error::invalid("train", "empty training corpus"));
    }
    check_compatible(corpus, &model.config)?;
    if let Some(v) = validation {
        check_compatible(v, &model.config)?;
    }

    let names = model.params.names();
    let adam = config.adam();
    let mut state = AdamState::new(model.params.tables());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..corpus.dialogues.len()).collect();

    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, Parameters<Tensor>)> = None;
    let mut rejected_steps = 0;
    let mut stale = 0;
    for epoch in 1..=config.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &i in &order {
            let d = &corpus.dialogues[i];
            let (loss, grads) =
                dialogue_gradients(&model, d, config.l2).map_err(|e| Error::InDialogue {
                    dialogue: d.id.clone(),
                    source: Box::new(e),
                })?;
            loss_sum += loss;
            let mut tables = model.params.tables_mut();
            match adam_step(&mut tables, &names, &grads, &mut state, &adam) {
                Ok(()) => {}
                Err(Error::NonFiniteGradient { name }) => {
                    log::warn!(
                        "epoch {epoch}, dialogue {}: non-finite gradient in `{name}`, step skipped",
                        d.id
                    );
                    rejected_steps += 1;
                }
                Err(e) => return Err(e),
            }
        }

        let val_metric = match validation {
            Some(v) if !v.dialogues.is_empty() => Some(evaluate(&model, v)?.report.headline()),
            _ => None,
        };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / corpus.dialogues.len() as f64,
            val_metric,
            wall_ms: if config.record_time {
                start.elapsed().as_millis() as u64
            } else {
                0
            },
        };
        on_epoch(&record);
        log.push(record);

        if let Some(metric) = val_metric {
            if best
                .as_ref()
                .is_none_or(|(b, _, _)| better(model.config.mode, metric, *b))
            {
                best = Some((metric, epoch, model.params.clone()));
                stale = 0;
            } else {
                stale += 1;
                if config.patience.is_some_and(|p| stale >= p) {
                    break;
                }
            }
        }
    }

    let best_epoch = best.as_ref().map(|(_, e, _)| *e);
    if let Some((_, _, params)) = best {
        model.params = params;
    }
    Ok(TrainOutcome {
        model,
        log,
        best_epoch,
        rejected_steps,
    })
}
