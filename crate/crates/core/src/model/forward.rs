//! Per-utterance state updates and the full dialogue pass.

use serde::{Deserialize, Serialize};

use super::config::{ListenerUpdate, Mode, ModelConfig};
use super::params::{DirectionParams, Parameters};
use crate::autodiff::{Activation, Tape, Tensor, Var};
use crate::corpus::{Dialogue, Utterance};
use crate::error::{Error, Result};
use crate::gru::{gru_step, GruParams};

/// Running recurrent state of one reading direction.
#[derive(Clone, Debug)]
pub struct DialogueState {
    /// Global states produced so far, oldest first.
    pub g_history: Vec<Var>,
    /// One state per party.
    pub q: Vec<Var>,
    pub e_prev: Var,
    g_zero: Var,
}

impl DialogueState {
    /// Zero global prior, null party states and zero emotion representation.
    pub fn new(tape: &mut Tape, config: &ModelConfig) -> Self {
        let q = (0..config.parties)
            .map(|_| tape.leaf(Tensor::zeros(&[config.party_size])))
            .collect();
        DialogueState {
            g_history: Vec::new(),
            q,
            e_prev: tape.leaf(Tensor::zeros(&[config.representation_size()])),
            g_zero: tape.leaf(Tensor::zeros(&[config.global_size])),
        }
    }

    pub fn last_global(&self) -> Var {
        self.g_history.last().copied().unwrap_or(self.g_zero)
    }

    fn check_party(&self, speaker: usize) -> Result<()> {
        if speaker < self.q.len() {
            Ok(())
        } else {
            Err(Error::invalid(
                "party index",
                format!("{speaker} is out of range for {} parties", self.q.len()),
            ))
        }
    }
}

/// Context attention over previous global states.
///
/// Returns the pooled context and the attention weights. With an empty
/// history the context is zero and no weights are produced.
pub fn attend_context(
    tape: &mut Tape,
    u: Var,
    g_history: &[Var],
    w_alpha: Var,
) -> Result<(Var, Option<Var>)> {
    let query = tape.vecmat(u, w_alpha)?;
    if g_history.is_empty() {
        let d = tape.value(query).len();
        return Ok((tape.leaf(Tensor::zeros(&[d])), None));
    }
    let history = tape.stack(g_history)?;
    let scores = tape.matvec(history, query)?;
    let alpha = tape.softmax(scores)?;
    let context = tape.vecmat(alpha, history)?;
    Ok((context, Some(alpha)))
}

/// Appends `g_t = GRU_G(g_{t-1}, u_t ⊕ q_speaker)` to the history.
pub fn global_update(
    tape: &mut Tape,
    state: &mut DialogueState,
    u: Var,
    speaker: usize,
    gru: &GruParams<Var>,
) -> Result<Var> {
    state.check_party(speaker)?;
    let x = tape.concat(u, state.q[speaker])?;
    let g = gru_step(tape, gru, state.last_global(), x)?;
    state.g_history.push(g);
    Ok(g)
}

/// `q_speaker ← GRU_P(q_speaker, u_t ⊕ c_t)`; other parties untouched.
pub fn speaker_update(
    tape: &mut Tape,
    state: &mut DialogueState,
    u: Var,
    context: Var,
    speaker: usize,
    gru: &GruParams<Var>,
) -> Result<()> {
    state.check_party(speaker)?;
    let x = tape.concat(u, context)?;
    state.q[speaker] = gru_step(tape, gru, state.q[speaker], x)?;
    Ok(())
}

/// Updates every non-speaking party. `cues[i]` is party `i`'s cue vector.
pub fn listener_update(
    tape: &mut Tape,
    state: &mut DialogueState,
    variant: ListenerUpdate,
    cues: &[Var],
    context: Var,
    speaker: usize,
    gru: Option<&GruParams<Var>>,
) -> Result<()> {
    state.check_party(speaker)?;
    match variant {
        ListenerUpdate::Identity => Ok(()),
        ListenerUpdate::Gru => {
            let gru = gru.ok_or_else(|| {
                Error::invalid("listener_update", "GRU variant without listener parameters")
            })?;
            if cues.len() != state.q.len() {
                return Err(Error::invalid(
                    "listener_update",
                    format!("{} cue vectors for {} parties", cues.len(), state.q.len()),
                ));
            }
            for i in (0..state.q.len()).filter(|&i| i != speaker) {
                let x = tape.concat(cues[i], context)?;
                state.q[i] = gru_step(tape, gru, state.q[i], x)?;
            }
            Ok(())
        }
    }
}

/// `e_t = GRU_E(e_{t-1}, input)`.
pub fn emotion_update(
    tape: &mut Tape,
    e_prev: Var,
    input: Var,
    gru: &GruParams<Var>,
) -> Result<Var> {
    gru_step(tape, gru, e_prev, input)
}

fn hidden_layer(tape: &mut Tape, e: Var, params: &Parameters<Var>) -> Result<Var> {
    let a = tape.matvec(params.w_l, e)?;
    let a = tape.add(a, params.b_l)?;
    Ok(tape.activation(Activation::Relu, a))
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Two-layer perceptron with softmax output. Returns probabilities and the argmax class.
pub fn classify(tape: &mut Tape, e: Var, params: &Parameters<Var>) -> Result<(Var, usize)> {
    if params.mode != Mode::Classification {
        return Err(Error::ModeMismatch {
            op: "classify",
            expected: "classification",
        });
    }
    let l = hidden_layer(tape, e, params)?;
    let logits = tape.matvec(params.w_out, l)?;
    let logits = tape.add(logits, params.b_out)?;
    let p = tape.softmax(logits)?;
    let label = argmax(tape.value(p).data());
    Ok((p, label))
}

/// ReLU hidden layer followed by an unsquashed affine output.
pub fn predict_regression(tape: &mut Tape, e: Var, params: &Parameters<Var>) -> Result<Var> {
    if params.mode != Mode::Regression {
        return Err(Error::ModeMismatch {
            op: "predict_regression",
            expected: "regression",
        });
    }
    let l = hidden_layer(tape, e, params)?;
    let out = tape.matvec(params.w_out, l)?;
    tape.add(out, params.b_out)
}

/// Attention of every representation over all representations of the dialogue.
///
/// Returns the attended representations and the per-position weight rows.
pub fn emotion_attention(
    tape: &mut Tape,
    reps: &[Var],
    w_beta: Var,
) -> Result<(Vec<Var>, Vec<Var>)> {
    if reps.is_empty() {
        return Err(Error::invalid("emotion_attention", "empty dialogue"));
    }
    let all = tape.stack(reps)?;
    let mut attended = Vec::with_capacity(reps.len());
    let mut rows = Vec::with_capacity(reps.len());
    for &e in reps {
        let query = tape.vecmat(e, w_beta)?;
        let scores = tape.matvec(all, query)?;
        let beta = tape.softmax(scores)?;
        attended.push(tape.vecmat(beta, all)?);
        rows.push(beta);
    }
    Ok((attended, rows))
}

/// Per-utterance record of a dialogue pass. Row `t` of every list belongs to utterance `t`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ForwardTrace {
    /// Context attention of the forward direction; row `t` has length `t`.
    pub alpha: Vec<Vec<f64>>,
    /// Context attention of the backward direction, indexed by original position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_backward: Option<Vec<Vec<f64>>>,
    /// Head input before emotion attention (both directions concatenated).
    pub emotion: Vec<Vec<f64>>,
    /// Attention over all emotion representations, `N × N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<Vec<f64>>>,
    /// Class probabilities or regression outputs.
    pub outputs: Vec<Vec<f64>>,
    /// Argmax labels; empty in regression mode.
    pub predictions: Vec<usize>,
}

/// Tape handles of a dialogue pass alongside its trace.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub outputs: Vec<Var>,
    pub trace: ForwardTrace,
}

struct DirectionOutput {
    reps: Vec<Var>,
    alpha: Vec<Vec<f64>>,
}

struct Step {
    u: Var,
    speaker: usize,
    cues: Vec<Var>,
}

fn run_direction(
    tape: &mut Tape,
    params: &DirectionParams<Var>,
    config: &ModelConfig,
    steps: &[Step],
) -> Result<DirectionOutput> {
    let mut state = DialogueState::new(tape, config);
    let mut reps = Vec::with_capacity(steps.len());
    let mut alphas = Vec::with_capacity(steps.len());
    for step in steps {
        // α is taken before g_t joins the history; g_t reads the pre-update q.
        let (context, alpha) = attend_context(tape, step.u, &state.g_history, params.w_alpha)?;
        global_update(tape, &mut state, step.u, step.speaker, &params.global)?;
        if let Some(party) = &params.party {
            speaker_update(tape, &mut state, step.u, context, step.speaker, party)?;
            listener_update(
                tape,
                &mut state,
                config.listener_update,
                &step.cues,
                context,
                step.speaker,
                params.listener.as_ref(),
            )?;
        }
        let rep = match &params.emotion {
            Some(gru) => {
                let input = if config.has_party_state() {
                    state.q[step.speaker]
                } else {
                    context
                };
                let e = emotion_update(tape, state.e_prev, input, gru)?;
                state.e_prev = e;
                e
            }
            None => state.q[step.speaker],
        };
        reps.push(rep);
        alphas.push(alpha.map_or_else(Vec::new, |a| tape.value(a).data().to_vec()));
    }
    Ok(DirectionOutput {
        reps,
        alpha: alphas,
    })
}

fn check_dialogue(dialogue: &Dialogue, config: &ModelConfig) -> Result<()> {
    if dialogue.utterances.is_empty() {
        return Err(Error::invalid("forward", "empty dialogue"));
    }
    for (t, u) in dialogue.utterances.iter().enumerate() {
        if u.features.len() != config.utterance_size {
            return Err(Error::invalid(
                "forward",
                format!(
                    "utterance {t}: feature extent {} != utterance_size {}",
                    u.features.len(),
                    config.utterance_size
                ),
            ));
        }
        if u.speaker >= config.parties {
            return Err(Error::invalid(
                "forward",
                format!(
                    "utterance {t}: speaker {} out of range for {} parties",
                    u.speaker, config.parties
                ),
            ));
        }
        if let Some(cues) = &u.listener_cues {
            if config.listener_update == ListenerUpdate::Gru
                && (cues.len() != config.parties
                    || cues.iter().any(|c| c.len() != config.listener_cue_size))
            {
                return Err(Error::invalid(
                    "forward",
                    format!(
                        "utterance {t}: listener cues must be {} vectors of length {}",
                        config.parties, config.listener_cue_size
                    ),
                ));
            }
        }
    }
    Ok(())
}

fn bind_steps<'a>(
    tape: &mut Tape,
    config: &ModelConfig,
    utterances: impl Iterator<Item = &'a Utterance>,
) -> Vec<Step> {
    utterances
        .map(|u| {
            let cues = if config.has_listener_gru() {
                (0..config.parties)
                    .map(|i| {
                        let cue = u
                            .listener_cues
                            .as_ref()
                            .map(|c| c[i].clone())
                            .unwrap_or_else(|| vec![0.0; config.listener_cue_size]);
                        tape.leaf(Tensor::vector(cue))
                    })
                    .collect()
            } else {
                Vec::new()
            };
            Step {
                u: tape.leaf(Tensor::vector(u.features.clone())),
                speaker: u.speaker,
                cues,
            }
        })
        .collect()
}

/// Runs the configured architecture over a whole dialogue.
pub fn forward_dialogue(
    tape: &mut Tape,
    params: &Parameters<Var>,
    config: &ModelConfig,
    dialogue: &Dialogue,
) -> Result<ForwardPass> {
    check_dialogue(dialogue, config)?;
    let n = dialogue.len();

    let steps = bind_steps(tape, config, dialogue.utterances.iter());
    let fwd = run_direction(tape, &params.forward, config, &steps)?;

    let (reps, alpha_backward) = match (&params.backward, config.bidirectional) {
        (Some(bwd_params), true) => {
            let rev_steps = bind_steps(tape, config, dialogue.utterances.iter().rev());
            let mut bwd = run_direction(tape, bwd_params, config, &rev_steps)?;
            bwd.reps.reverse();
            bwd.alpha.reverse();
            let reps = fwd
                .reps
                .iter()
                .zip(&bwd.reps)
                .map(|(&f, &b)| tape.concat(f, b))
                .collect::<Result<Vec<_>>>()?;
            (reps, Some(bwd.alpha))
        }
        (None, false) => (fwd.reps, None),
        _ => {
            return Err(Error::Config(
                "backward-direction parameters do not match the bidirectional flag".into(),
            ))
        }
    };
    let emotion: Vec<Vec<f64>> = reps
        .iter()
        .map(|&r| tape.value(r).data().to_vec())
        .collect();

    let (head_inputs, beta) = match (&params.w_beta, config.emotion_attention) {
        (Some(w_beta), true) => {
            let (attended, rows) = emotion_attention(tape, &reps, *w_beta)?;
            let beta = rows
                .iter()
                .map(|&b| tape.value(b).data().to_vec())
                .collect();
            (attended, Some(beta))
        }
        (None, false) => (reps, None),
        _ => {
            return Err(Error::Config(
                "emotion-attention parameters do not match the attention flag".into(),
            ))
        }
    };

    let mut outputs = Vec::with_capacity(n);
    let mut predictions = Vec::new();
    for e in head_inputs {
        match config.mode {
            Mode::Classification => {
                let (p, label) = classify(tape, e, params)?;
                outputs.push(p);
                predictions.push(label);
            }
            Mode::Regression => outputs.push(predict_regression(tape, e, params)?),
        }
    }

    let trace = ForwardTrace {
        alpha: fwd.alpha,
        alpha_backward,
        emotion,
        beta,
        outputs: outputs
            .iter()
            .map(|&o| tape.value(o).data().to_vec())
            .collect(),
        predictions,
    };
    Ok(ForwardPass { outputs, trace })
}

/// Same as [`forward_dialogue`] but insists on a bidirectional configuration.
pub fn forward_bidirectional(
    tape: &mut Tape,
    params: &Parameters<Var>,
    config: &ModelConfig,
    dialogue: &Dialogue,
) -> Result<ForwardPass> {
    if !config.bidirectional {
        return Err(Error::Config(
            "forward_bidirectional requires a bidirectional configuration".into(),
        ));
    }
    forward_dialogue(tape, params, config, dialogue)
}
