use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Probabilities at the true label are clamped to this floor before the log.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// A loss recorded on a tape.
#[derive(Clone, Copy, Debug)]
pub struct Loss {
    pub total: Var,
    /// Number of true-label probabilities that hit [`PROBABILITY_FLOOR`].
    pub clamped: usize,
}

/// `λ · Σ θ²` over the given tables, or `None` when `λ = 0`.
pub fn l2_penalty(tape: &mut Tape, params: &[Var], lambda: f64) -> Option<Var> {
    if lambda == 0.0 || params.is_empty() {
        return None;
    }
    let mut acc: Option<Var> = None;
    for &p in params {
        let s = tape.sum_squares(p);
        acc = Some(match acc {
            None => s,
            Some(a) => tape.add(a, s).expect("scalars"),
        });
    }
    acc.map(|a| tape.scale(a, lambda))
}

fn sum_scalars(tape: &mut Tape, terms: &[Var]) -> Result<Var> {
    let (&first, rest) = terms
        .split_first()
        .ok_or_else(|| Error::invalid("loss", "no utterances"))?;
    rest.iter().try_fold(first, |acc, &t| tape.add(acc, t))
}

/// Mean negative log-likelihood of the true labels plus `λ · Σ θ²`.
pub fn classification_loss(
    tape: &mut Tape,
    probabilities: &[Var],
    labels: &[usize],
    params: &[Var],
    lambda: f64,
) -> Result<Loss> {
    if probabilities.len() != labels.len() {
        return Err(Error::invalid(
            "classification_loss",
            format!(
                "{} predictions for {} labels",
                probabilities.len(),
                labels.len()
            ),
        ));
    }
    let mut clamped = 0;
    let mut terms = Vec::with_capacity(labels.len());
    for (&p, &y) in probabilities.iter().zip(labels) {
        let py = tape.pick(p, y)?;
        if tape.value(py).item() <= PROBABILITY_FLOOR {
            clamped += 1;
        }
        terms.push(tape.ln_clamped(py, PROBABILITY_FLOOR));
    }
    if clamped > 0 {
        log::warn!("{clamped} true-label probabilities clamped at {PROBABILITY_FLOOR:e}");
    }
    let total = sum_scalars(tape, &terms)?;
    let mut total = tape.scale(total, -1.0 / labels.len() as f64);
    if let Some(pen) = l2_penalty(tape, params, lambda) {
        total = tape.add(total, pen)?;
    }
    Ok(Loss { total, clamped })
}

/// Mean absolute error over all utterances and attributes plus `λ · Σ θ²`.
pub fn regression_loss(
    tape: &mut Tape,
    predictions: &[Var],
    targets: &[Vec<f64>],
    params: &[Var],
    lambda: f64,
) -> Result<Loss> {
    if predictions.len() != targets.len() {
        return Err(Error::invalid(
            "regression_loss",
            format!(
                "{} predictions for {} targets",
                predictions.len(),
                targets.len()
            ),
        ));
    }
    let mut terms = Vec::with_capacity(targets.len());
    let mut count = 0usize;
    for (&p, t) in predictions.iter().zip(targets) {
        if tape.value(p).shape() != [t.len()] {
            return Err(Error::Shape {
                op: "regression_loss",
                left: tape.value(p).shape().to_vec(),
                right: vec![t.len()],
            });
        }
        let target = tape.leaf(Tensor::vector(t.clone()));
        let diff = tape.sub(p, target)?;
        let abs = tape.abs(diff);
        terms.push(tape.sum(abs));
        count += t.len();
    }
    let total = sum_scalars(tape, &terms)?;
    let mut total = tape.scale(total, 1.0 / count.max(1) as f64);
    if let Some(pen) = l2_penalty(tape, params, lambda) {
        total = tape.add(total, pen)?;
    }
    Ok(Loss { total, clamped: 0 })
}
