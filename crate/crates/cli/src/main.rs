//! `partyrnn`: generate corpora, train, evaluate and compare party-state models.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use partyrnn_core::model::{Ablation, Variant};

use commands::{AblateArgs, GridArgs, TrainArgs};
use config::Overrides;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "partyrnn",
    version,
    about = "Party-state recurrent emotion recognition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus from a TOML spec.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train one model and write its checkpoint and epoch log.
    Train(RunArgs),
    /// Score a checkpoint on a corpus.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Report file; printed to stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write α/β weights as CSV.
        #[arg(long)]
        export_attention: Option<PathBuf>,
    },
    /// Train the full model and both ablations over several seeds.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        test: PathBuf,
        /// `0..4` (inclusive), `0,2,5` or a single seed.
        #[arg(long, default_value = "0..4", value_parser = config::parse_seeds)]
        seeds: Seeds,
    },
    /// Split a corpus so that no speaker appears in both halves.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hyperparameter grid search ranked on a validation corpus.
    Grid {
        #[command(flatten)]
        run: RunArgs,
        /// TOML file listing candidate values per hyperparameter.
        #[arg(long)]
        grid: PathBuf,
    },
}

type Seeds = Vec<u64>;

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    validation: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// base, bi, att or bi+att.
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    /// Sets every hidden extent.
    #[arg(long)]
    hidden: Option<usize>,
    /// none, no-party-state or no-emotion-gru.
    #[arg(long, value_parser = parse_ablation)]
    ablation: Option<Ablation>,
    /// Hold out this share of the training corpus for checkpoint selection.
    #[arg(long)]
    validation_fraction: Option<f64>,
}

fn parse_ablation(s: &str) -> Result<Ablation, String> {
    match s {
        "none" => Ok(Ablation::None),
        "no-party-state" => Ok(Ablation::NoPartyState),
        "no-emotion-gru" => Ok(Ablation::NoEmotionGru),
        other => Err(format!("unknown ablation `{other}`")),
    }
}

impl RunArgs {
    fn train_args(&self) -> TrainArgs<'_> {
        TrainArgs {
            config: self.config.as_deref(),
            corpus: &self.corpus,
            validation: self.validation.as_deref(),
            out: self.out.as_deref(),
            overrides: Overrides {
                seed: self.seed,
                variant: self.variant,
                epochs: self.epochs,
                learning_rate: self.learning_rate,
                l2: self.l2,
                hidden: self.hidden,
                ablation: self.ablation,
                validation_fraction: self.validation_fraction,
            },
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { spec, out, seed } => {
            commands::generate(&spec, out.as_deref(), seed)?;
        }
        Command::Train(run) => {
            let dir = commands::train(run.train_args())?;
            println!("{}", dir.display());
        }
        Command::Eval {
            checkpoint,
            corpus,
            report,
            export_attention,
        } => commands::eval(
            &checkpoint,
            &corpus,
            report.as_deref(),
            export_attention.as_deref(),
        )?,
        Command::Ablate { run, test, seeds } => {
            commands::ablate(AblateArgs {
                train: run.train_args(),
                test: &test,
                seeds,
            })?;
        }
        Command::Split {
            corpus,
            test_fraction,
            seed,
            out,
        } => {
            commands::split(&corpus, test_fraction, seed, out.as_deref())?;
        }
        Command::Grid { run, grid } => {
            commands::grid(GridArgs {
                train: run.train_args(),
                grid: &grid,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors; 2 is reserved here for invalid input
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
