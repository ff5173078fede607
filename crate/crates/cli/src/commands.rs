use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use partyrnn_core::corpus::{
    generate_synthetic, load_dir, save_dir, speaker_disjoint_split, train_validation_split, Corpus,
    SyntheticSpec,
};
use partyrnn_core::metrics::{ablation_run, evaluate, export_attention};
use partyrnn_core::model::Model;
use partyrnn_core::training::{
    append_epoch_record, check_compatible, grid_search, train_model, write_epoch_log, GridSpec,
};
use serde::Serialize;

use crate::config::{self, Overrides, RunConfig};
use crate::error::CliError;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const EPOCH_LOG_FILE: &str = "epochs.csv";

fn runtime(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(runtime(path))
}

#[derive(Serialize)]
struct GenerateEcho<'a> {
    seed: u64,
    spec: &'a SyntheticSpec,
}

pub fn generate(spec_path: &Path, out: Option<&Path>, seed: u64) -> Result<PathBuf, CliError> {
    let spec: SyntheticSpec = config::read_toml(spec_path)?;
    let syn = generate_synthetic(&spec, seed)?;
    let dir = config::output_dir(out, seed)?;
    save_dir(&syn.corpus, &dir)?;
    config::write_toml(
        &dir.join(config::ECHO_FILE),
        &GenerateEcho { seed, spec: &spec },
    )?;
    info!(
        "wrote {} dialogues ({} utterances) to {}",
        syn.corpus.dialogues.len(),
        syn.corpus.utterance_count(),
        dir.display()
    );
    Ok(dir)
}

pub struct TrainArgs<'a> {
    pub config: Option<&'a Path>,
    pub corpus: &'a Path,
    pub validation: Option<&'a Path>,
    pub out: Option<&'a Path>,
    pub overrides: Overrides,
}

pub fn train(args: TrainArgs) -> Result<PathBuf, CliError> {
    let corpus = load_dir(args.corpus)?;
    let file = config::read_run_file(args.config)?;
    let mut run = RunConfig::resolve("train", file, &args.overrides, &corpus.manifest)?
        .with_input("corpus", args.corpus);
    let (train_set, validation) = match (args.validation, run.validation_fraction) {
        (Some(v), _) => {
            run = run.with_input("validation", v);
            (corpus, Some(load_dir(v)?))
        }
        (None, Some(f)) if f > 0.0 => {
            let (t, v) = train_validation_split(&corpus, f, run.seed)?;
            (t, Some(v))
        }
        _ => (corpus, None),
    };
    let dir = config::output_dir(args.out, run.seed)?;
    run.echo(&dir)?;

    let log_path = dir.join(EPOCH_LOG_FILE);
    write_epoch_log(&[], &log_path)?;
    let model = Model::new(run.model.clone(), run.seed)?;
    let mut log_error = None;
    let outcome = train_model(model, &train_set, validation.as_ref(), &run.train, |r| {
        info!(
            "epoch {:>4}  loss {:.6}  val {}",
            r.epoch,
            r.train_loss,
            r.val_metric.map_or("-".into(), |v| format!("{v:.4}"))
        );
        if log_error.is_none() {
            log_error = append_epoch_record(r, &log_path).err();
        }
    })?;
    if let Some(e) = log_error {
        return Err(e.into());
    }
    if outcome.rejected_steps > 0 {
        log::warn!(
            "{} steps rejected for non-finite gradients",
            outcome.rejected_steps
        );
    }
    outcome.model.save(&dir.join(CHECKPOINT_FILE))?;
    info!(
        "checkpoint written to {}",
        dir.join(CHECKPOINT_FILE).display()
    );
    Ok(dir)
}

pub fn eval(
    checkpoint: &Path,
    corpus_dir: &Path,
    report: Option<&Path>,
    attention: Option<&Path>,
) -> Result<(), CliError> {
    let model = Model::load(checkpoint)?;
    let corpus = load_dir(corpus_dir)?;
    check_compatible(&corpus, &model.config)?;
    let evaluation = evaluate(&model, &corpus)?;
    let text = evaluation.report.to_json();
    match report {
        Some(p) => std::fs::write(p, &text).map_err(runtime(p))?,
        None => print!("{text}"),
    }
    if let Some(p) = attention {
        let pairs: Vec<(&str, _)> = corpus
            .dialogues
            .iter()
            .map(|d| d.id.as_str())
            .zip(&evaluation.traces)
            .collect();
        export_attention(&pairs, p)?;
    }
    Ok(())
}

pub struct AblateArgs<'a> {
    pub train: TrainArgs<'a>,
    pub test: &'a Path,
    pub seeds: Vec<u64>,
}

pub fn ablate(args: AblateArgs) -> Result<PathBuf, CliError> {
    let t = &args.train;
    let corpus = load_dir(t.corpus)?;
    let test = load_dir(args.test)?;
    let file = config::read_run_file(t.config)?;
    let run = RunConfig::resolve("ablate", file, &t.overrides, &corpus.manifest)?
        .with_input("corpus", t.corpus)
        .with_input("test", args.test);
    let dir = config::output_dir(t.out, run.seed)?;
    run.echo(&dir)?;
    let table = ablation_run(&corpus, &test, &run.model, &run.train, &args.seeds)?;
    write_json(&dir.join("ablation.json"), &table)?;

    let mut summary = String::from("config            mean weighted F1    sd\n");
    for row in &table.rows {
        let _ = writeln!(
            summary,
            "{:<16}  {:>16.4}  {:.4}",
            row.name, row.mean, row.sd
        );
    }
    print!("{summary}");
    info!("{} models trained", table.trained_models());
    Ok(dir)
}

pub fn split(
    corpus_dir: &Path,
    test_fraction: f64,
    seed: u64,
    out: Option<&Path>,
) -> Result<PathBuf, CliError> {
    let corpus = load_dir(corpus_dir)?;
    let (train, test, report) = speaker_disjoint_split(&corpus, test_fraction, seed)?;
    let dir = config::output_dir(out, seed)?;
    save_dir(&train, &dir.join("train"))?;
    save_dir(&test, &dir.join("test"))?;
    write_json(&dir.join("split.json"), &report)?;
    println!(
        "achieved test fraction {:.4} (target {}): {} train / {} test dialogues",
        report.achieved_test_fraction, test_fraction, report.train_dialogues, report.test_dialogues
    );
    Ok(dir)
}

pub struct GridArgs<'a> {
    pub train: TrainArgs<'a>,
    pub grid: &'a Path,
}

pub fn grid(args: GridArgs) -> Result<PathBuf, CliError> {
    let t = &args.train;
    let corpus = load_dir(t.corpus)?;
    let validation: Corpus = match t.validation {
        Some(v) => load_dir(v)?,
        None => {
            return Err(CliError::Validation(
                "grid search needs --validation".into(),
            ))
        }
    };
    let spec: GridSpec = config::read_toml(args.grid)?;
    let file = config::read_run_file(t.config)?;
    let run = RunConfig::resolve("grid", file, &t.overrides, &corpus.manifest)?
        .with_input("corpus", t.corpus)
        .with_input("validation", t.validation.unwrap())
        .with_input("grid", args.grid);
    let dir = config::output_dir(t.out, run.seed)?;
    run.echo(&dir)?;
    let outcome = grid_search(&corpus, &validation, &run.model, &run.train, &spec)?;

    let path = dir.join("grid.csv");
    let mut csv = format!(
        "rank,index,{},learning_rate,l2,epochs,global_size,party_size,emotion_size,classifier_size\n",
        outcome.criterion
    );
    for (rank, trial) in outcome.trials.iter().enumerate() {
        let p = &trial.point;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            rank + 1,
            trial.index,
            trial.score,
            p.learning_rate,
            p.l2,
            p.epochs,
            p.global_size,
            p.party_size,
            p.emotion_size,
            p.classifier_size
        );
    }
    std::fs::write(&path, &csv).map_err(runtime(&path))?;
    print!("{csv}");
    if let Some(best) = outcome.trials.first() {
        best.model.save(&dir.join("best.json"))?;
    }
    Ok(dir)
}
