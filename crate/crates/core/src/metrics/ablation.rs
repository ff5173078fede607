use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::model::{Ablation, Mode, ModelConfig};
use crate::training::{train, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigScores {
    pub name: String,
    /// Test weighted F1 per seed, in seed order.
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (0 for a single seed).
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub seeds: Vec<u64>,
    pub rows: Vec<ConfigScores>,
}

impl AblationTable {
    pub fn row(&self, name: &str) -> Option<&ConfigScores> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn trained_models(&self) -> usize {
        self.rows.len() * self.seeds.len()
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Trains every named configuration once per seed and scores each on `test`.
/// Trials run in parallel; results are ordered by configuration then seed.
pub fn compare_configs(
    train_corpus: &Corpus,
    test: &Corpus,
    configs: &[(String, ModelConfig)],
    train_config: &TrainConfig,
    seeds: &[u64],
) -> Result<AblationTable> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed required".into()));
    }
    if let Some((name, _)) = configs.iter().find(|(_, c)| c.mode != Mode::Classification) {
        return Err(Error::ModeMismatch {
            op: "compare_configs",
            expected: "classification",
        })
        .map_err(|e| Error::Config(format!("{name}: {e}")));
    }
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let t = TrainConfig {
                seed,
                ..train_config.clone()
            };
            let outcome = train(train_corpus, None, &configs[c].1, &t)?;
            Ok(evaluate(&outcome.model, test)?.report.headline())
        })
        .collect::<Result<Vec<f64>>>()?;

    let rows = configs
        .iter()
        .enumerate()
        .map(|(c, (name, _))| {
            let s = scores[c * seeds.len()..(c + 1) * seeds.len()].to_vec();
            let (mean, sd) = mean_sd(&s);
            ConfigScores {
                name: name.clone(),
                scores: s,
                mean,
                sd,
            }
        })
        .collect();
    Ok(AblationTable {
        seeds: seeds.to_vec(),
        rows,
    })
}

/// Full model against the party-state and emotion-GRU ablations.
pub fn ablation_run(
    train_corpus: &Corpus,
    test: &Corpus,
    base: &ModelConfig,
    train_config: &TrainConfig,
    seeds: &[u64],
) -> Result<AblationTable> {
    let with = |a: Ablation| ModelConfig {
        ablation: a,
        ..base.clone()
    };
    let configs = vec![
        ("full".to_string(), with(Ablation::None)),
        ("no-party-state".to_string(), with(Ablation::NoPartyState)),
        ("no-emotion-gru".to_string(), with(Ablation::NoEmotionGru)),
    ];
    compare_configs(train_corpus, test, &configs, train_config, seeds)
}
