use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trainer::{train, TrainConfig};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsReport};
use crate::model::{Mode, Model, ModelConfig};

/// Candidate values per hyperparameter. Absent axes keep the base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub learning_rate: Option<Vec<f64>>,
    pub l2: Option<Vec<f64>>,
    pub epochs: Option<Vec<usize>>,
    pub global_size: Option<Vec<usize>>,
    pub party_size: Option<Vec<usize>>,
    pub emotion_size: Option<Vec<usize>>,
    pub classifier_size: Option<Vec<usize>>,
}

/// The hyperparameter values of one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub global_size: usize,
    pub party_size: usize,
    pub emotion_size: usize,
    pub classifier_size: usize,
}

impl GridSpec {
    fn axes(&self) -> [(&'static str, Option<usize>); 7] {
        [
            ("learning_rate", self.learning_rate.as_ref().map(Vec::len)),
            ("l2", self.l2.as_ref().map(Vec::len)),
            ("epochs", self.epochs.as_ref().map(Vec::len)),
            ("global_size", self.global_size.as_ref().map(Vec::len)),
            ("party_size", self.party_size.as_ref().map(Vec::len)),
            ("emotion_size", self.emotion_size.as_ref().map(Vec::len)),
            (
                "classifier_size",
                self.classifier_size.as_ref().map(Vec::len),
            ),
        ]
    }

    pub fn cardinality(&self) -> usize {
        self.axes().iter().map(|(_, n)| n.unwrap_or(1)).product()
    }

    /// Cartesian product in row-major order (the first axis varies slowest).
    pub fn points(&self, model: &ModelConfig, train: &TrainConfig) -> Result<Vec<GridPoint>> {
        let axes = self.axes();
        if axes.iter().all(|(_, n)| n.is_none()) {
            return Err(Error::Config(
                "grid specifies no hyperparameter axes".into(),
            ));
        }
        if let Some((name, _)) = axes.iter().find(|(_, n)| *n == Some(0)) {
            return Err(Error::Config(format!("grid axis `{name}` has no values")));
        }
        fn axis<T: Copy>(v: &Option<Vec<T>>, base: T) -> Vec<T> {
            v.clone().unwrap_or_else(|| vec![base])
        }
        let mut out = Vec::with_capacity(self.cardinality());
        for &learning_rate in &axis(&self.learning_rate, train.learning_rate) {
            for &l2 in &axis(&self.l2, train.l2) {
                for &epochs in &axis(&self.epochs, train.epochs) {
                    for &global_size in &axis(&self.global_size, model.global_size) {
                        for &party_size in &axis(&self.party_size, model.party_size) {
                            for &emotion_size in &axis(&self.emotion_size, model.emotion_size) {
                                for &classifier_size in
                                    &axis(&self.classifier_size, model.classifier_size)
                                {
                                    out.push(GridPoint {
                                        learning_rate,
                                        l2,
                                        epochs,
                                        global_size,
                                        party_size,
                                        emotion_size,
                                        classifier_size,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

impl GridPoint {
    pub fn apply(&self, model: &ModelConfig, train: &TrainConfig) -> (ModelConfig, TrainConfig) {
        let mut m = model.clone();
        m.global_size = self.global_size;
        m.party_size = self.party_size;
        m.emotion_size = self.emotion_size;
        m.classifier_size = self.classifier_size;
        let mut t = train.clone();
        t.learning_rate = self.learning_rate;
        t.l2 = self.l2;
        t.epochs = self.epochs;
        (m, t)
    }
}

#[derive(Clone, Debug)]
pub struct Trial {
    /// Position in grid order.
    pub index: usize,
    pub point: GridPoint,
    /// Weighted F1 or mean MAE on the validation corpus.
    pub score: f64,
    pub report: MetricsReport,
    /// Validation predictions: class labels (classification) or outputs (regression).
    pub predictions: Vec<Vec<Vec<f64>>>,
    pub model: Model,
}

/// Trials sorted best first.
#[derive(Clone, Debug)]
pub struct GridOutcome {
    pub criterion: &'static str,
    pub trials: Vec<Trial>,
}

/// Trains one model per grid point (in parallel) and ranks them on `validation`.
/// Ties keep grid order.
pub fn grid_search(
    train_corpus: &Corpus,
    validation: &Corpus,
    model: &ModelConfig,
    train_config: &TrainConfig,
    grid: &GridSpec,
) -> Result<GridOutcome> {
    if validation.dialogues.is_empty() {
        return Err(Error::Config(
            "grid search needs a nonempty validation corpus".into(),
        ));
    }
    let points = grid.points(model, train_config)?;
    let mut trials = points
        .into_par_iter()
        .enumerate()
        .map(|(index, point)| {
            let (m, t) = point.apply(model, train_config);
            let outcome = train(train_corpus, None, &m, &t)?;
            let eval = evaluate(&outcome.model, validation)?;
            let predictions = eval
                .traces
                .iter()
                .map(|tr| match m.mode {
                    Mode::Classification => {
                        tr.predictions.iter().map(|&p| vec![p as f64]).collect()
                    }
                    Mode::Regression => tr.outputs.clone(),
                })
                .collect();
            Ok(Trial {
                index,
                point,
                score: eval.report.headline(),
                report: eval.report,
                predictions,
                model: outcome.model,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let criterion = match model.mode {
        Mode::Classification => {
            trials.sort_by(|a, b| b.score.total_cmp(&a.score));
            "weighted_f1"
        }
        Mode::Regression => {
            trials.sort_by(|a, b| a.score.total_cmp(&b.score));
            "mean_mae"
        }
    };
    Ok(GridOutcome { criterion, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinality_and_order() {
        let grid = GridSpec {
            learning_rate: Some(vec![1e-3, 1e-2]),
            epochs: Some(vec![1, 2, 3]),
            ..Default::default()
        };
        let m = ModelConfig::classification(3, 4, 2);
        let pts = grid.points(&m, &TrainConfig::default()).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(grid.cardinality(), 6);
        assert_eq!((pts[0].learning_rate, pts[0].epochs), (1e-3, 1));
        assert_eq!((pts[1].learning_rate, pts[1].epochs), (1e-3, 2));
        assert_eq!((pts[5].learning_rate, pts[5].epochs), (1e-2, 3));
        assert!(pts.iter().all(|p| p.global_size == 4));
    }

    #[test]
    fn empty_grid_rejected() {
        let m = ModelConfig::classification(3, 4, 2);
        let t = TrainConfig::default();
        assert!(GridSpec::default().points(&m, &t).is_err());
        let grid = GridSpec {
            l2: Some(vec![]),
            ..Default::default()
        };
        assert!(grid.points(&m, &t).is_err());
    }
}
