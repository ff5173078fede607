use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment accumulators, one pair per parameter table.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first: Vec<Tensor>,
    pub second: Vec<Tensor>,
    pub step: u64,
}

impl AdamState {
    pub fn new<'a>(tables: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let first: Vec<Tensor> = tables
            .into_iter()
            .map(|t| Tensor::zeros(t.shape()))
            .collect();
        AdamState {
            second: first.clone(),
            first,
            step: 0,
        }
    }
}

/// One bias-corrected Adam update.
///
/// The whole step is rejected, leaving parameters and state untouched, if any
/// gradient entry is non-finite.
pub fn adam_step(
    params: &mut [&mut Tensor],
    names: &[String],
    grads: &[Tensor],
    state: &mut AdamState,
    config: &AdamConfig,
) -> Result<()> {
    let n = params.len();
    if grads.len() != n || state.first.len() != n || names.len() != n {
        return Err(Error::invalid(
            "adam_step",
            format!(
                "{n} parameter tables, {} names, {} gradients, {} moment tables",
                names.len(),
                grads.len(),
                state.first.len()
            ),
        ));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || state.first[i].shape() != p.shape() {
            return Err(Error::Shape {
                op: "adam_step",
                left: p.shape().to_vec(),
                right: g.shape().to_vec(),
            });
        }
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient {
                name: names[i].clone(),
            });
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - config.beta1.powi(t);
    let c2 = 1.0 - config.beta2.powi(t);
    for (i, p) in params.iter_mut().enumerate() {
        let g = grads[i].data();
        let m = state.first[i].data_mut();
        for (mj, gj) in m.iter_mut().zip(g) {
            *mj = config.beta1 * *mj + (1.0 - config.beta1) * gj;
        }
        let v = state.second[i].data_mut();
        for (vj, gj) in v.iter_mut().zip(g) {
            *vj = config.beta2 * *vj + (1.0 - config.beta2) * gj * gj;
        }
        let (m, v) = (state.first[i].data(), state.second[i].data());
        for ((pj, mj), vj) in p.data_mut().iter_mut().zip(m).zip(v) {
            let m_hat = mj / c1;
            let v_hat = vj / c2;
            *pj -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
    Ok(())
}
