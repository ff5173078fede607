//! Shared fixtures and a straight-line reference implementation of the model.
//!
//! The reference reads parameter tables by name and uses plain loops over
//! `f64` slices, so it shares no code with the tape-based implementation.
#![allow(dead_code)]

use std::collections::HashMap;

use partyrnn_core::autodiff::Tensor;
use partyrnn_core::corpus::{Corpus, Dialogue, Manifest, Utterance};
use partyrnn_core::model::{Ablation, ListenerUpdate, Mode, Model, ModelConfig, Parameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_dialogue(
    rng: &mut ChaCha8Rng,
    len: usize,
    parties: usize,
    features: usize,
    classes: usize,
) -> Dialogue {
    let utterances = (0..len)
        .map(|_| {
            Utterance::labeled(
                rng.random_range(0..parties),
                uniform_vec(rng, features),
                rng.random_range(0..classes),
            )
        })
        .collect();
    Dialogue {
        id: "d".into(),
        speakers: (0..parties).map(|p| format!("s{p}")).collect(),
        utterances,
    }
}

pub fn corpus_of(config: &ModelConfig, dialogues: Vec<Dialogue>) -> Corpus {
    let manifest = Manifest {
        mode: config.mode,
        feature_size: config.utterance_size,
        label_names: (0..config.outputs).map(|c| format!("c{c}")).collect(),
        parties: config.parties,
        listener_cue_size: None,
        dialogue_count: 0,
        utterance_count: 0,
    };
    Corpus {
        manifest,
        dialogues: Vec::new(),
    }
    .with_dialogues(dialogues)
}

/// Small config used by gradient and property tests.
pub fn small_config(variant: &str) -> ModelConfig {
    let mut c = ModelConfig::classification(5, 4, 3);
    c.bidirectional = variant.contains("bi");
    c.emotion_attention = variant.contains("att");
    c
}

pub const VARIANTS: [&str; 4] = ["base", "bi", "att", "bi+att"];

pub fn named(params: &Parameters<Tensor>) -> HashMap<String, Tensor> {
    let mut map = HashMap::new();
    params.for_each(&mut |name, t| {
        map.insert(name, t.clone());
    });
    map
}

// ---- metric oracles ----

/// Weighted F1 by explicit counting, one class at a time.
pub fn brute_weighted_f1(pred: &[usize], truth: &[usize], classes: usize) -> f64 {
    let n = truth.len() as f64;
    let mut total = 0.0;
    for c in 0..classes {
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for i in 0..truth.len() {
            match (pred[i] == c, truth[i] == c) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                _ => {}
            }
        }
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        total += (tp + fn_) * f1;
    }
    total / n
}

/// Single-pass sums formula, a different algorithm from the two-pass implementation.
pub fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

// ---- reference implementation ----

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `W x` for a row-major `rows × cols` table.
pub fn mat_vec(w: &Tensor, x: &[f64]) -> Vec<f64> {
    let (rows, cols) = (w.shape()[0], w.shape()[1]);
    assert_eq!(cols, x.len());
    (0..rows)
        .map(|r| (0..cols).map(|c| w.data()[r * cols + c] * x[c]).sum())
        .collect()
}

/// `Wᵀ x`.
pub fn mat_t_vec(w: &Tensor, x: &[f64]) -> Vec<f64> {
    let (rows, cols) = (w.shape()[0], w.shape()[1]);
    assert_eq!(rows, x.len());
    (0..cols)
        .map(|c| (0..rows).map(|r| w.data()[r * cols + c] * x[r]).sum())
        .collect()
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cat(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().chain(b).copied().collect()
}

/// One GRU step reading tables `{prefix}.w_x_r` and so on.
pub fn gru(p: &HashMap<String, Tensor>, prefix: &str, h: &[f64], x: &[f64]) -> Vec<f64> {
    let t = |n: &str| &p[&format!("{prefix}.{n}")];
    let n = h.len();
    let wxr = mat_vec(t("w_x_r"), x);
    let whr = mat_vec(t("w_h_r"), h);
    let wxz = mat_vec(t("w_x_z"), x);
    let whz = mat_vec(t("w_h_z"), h);
    let r: Vec<f64> = (0..n)
        .map(|i| sigmoid(wxr[i] + whr[i] + t("b_r").data()[i]))
        .collect();
    let z: Vec<f64> = (0..n)
        .map(|i| sigmoid(wxz[i] + whz[i] + t("b_z").data()[i]))
        .collect();
    let rh: Vec<f64> = (0..n).map(|i| r[i] * h[i]).collect();
    let wxc = mat_vec(t("w_x_c"), x);
    let whc = mat_vec(t("w_h_c"), &rh);
    (0..n)
        .map(|i| {
            let c = (wxc[i] + whc[i] + t("b_c").data()[i]).tanh();
            (1.0 - z[i]) * h[i] + z[i] * c
        })
        .collect()
}

pub struct Reference {
    pub alpha: Vec<Vec<f64>>,
    pub emotion: Vec<Vec<f64>>,
    pub beta: Option<Vec<Vec<f64>>>,
    /// Classifier-layer inputs to the ReLU.
    pub pre_relu: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl Reference {
    /// Smallest |pre-activation| of the ReLU layer; finite differences are
    /// unreliable when this is comparable to the step.
    pub fn relu_margin(&self) -> f64 {
        self.pre_relu
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

fn direction(
    p: &HashMap<String, Tensor>,
    dir: &str,
    cfg: &ModelConfig,
    utts: &[&Utterance],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut g_hist: Vec<Vec<f64>> = Vec::new();
    let mut q = vec![vec![0.0; cfg.party_size]; cfg.parties];
    let rep_size = if cfg.ablation == Ablation::NoEmotionGru {
        cfg.party_size
    } else {
        cfg.emotion_size
    };
    let mut e = vec![0.0; rep_size];
    let mut reps = Vec::new();
    let mut alphas = Vec::new();
    let party_state = cfg.ablation != Ablation::NoPartyState;
    for u in utts {
        let s = u.speaker;
        // context over previous global states
        let (c, a) = if g_hist.is_empty() {
            (vec![0.0; cfg.global_size], vec![])
        } else {
            let query = mat_t_vec(&p[&format!("{dir}.w_alpha")], &u.features);
            let scores: Vec<f64> = g_hist.iter().map(|g| dot(g, &query)).collect();
            let a = softmax(&scores);
            let mut c = vec![0.0; cfg.global_size];
            for (w, g) in a.iter().zip(&g_hist) {
                for k in 0..c.len() {
                    c[k] += w * g[k];
                }
            }
            (c, a)
        };
        let g_prev = g_hist.last().cloned().unwrap_or(vec![0.0; cfg.global_size]);
        let g = gru(
            p,
            &format!("{dir}.global"),
            &g_prev,
            &cat(&u.features, &q[s]),
        );
        g_hist.push(g);
        if party_state {
            q[s] = gru(p, &format!("{dir}.party"), &q[s], &cat(&u.features, &c));
            if cfg.listener_update == ListenerUpdate::Gru {
                for i in 0..cfg.parties {
                    if i != s {
                        let cue = u
                            .listener_cues
                            .as_ref()
                            .map(|v| v[i].clone())
                            .unwrap_or(vec![0.0; cfg.listener_cue_size]);
                        q[i] = gru(p, &format!("{dir}.listener"), &q[i], &cat(&cue, &c));
                    }
                }
            }
        }
        let rep = match cfg.ablation {
            Ablation::NoEmotionGru => q[s].clone(),
            Ablation::NoPartyState => gru(p, &format!("{dir}.emotion"), &e, &c),
            Ablation::None => gru(p, &format!("{dir}.emotion"), &e, &q[s]),
        };
        e = rep.clone();
        reps.push(rep);
        alphas.push(a);
    }
    (reps, alphas)
}

pub fn reference_forward(model: &Model, dialogue: &Dialogue) -> Reference {
    let cfg = &model.config;
    let p = named(&model.params);
    let utts: Vec<&Utterance> = dialogue.utterances.iter().collect();
    let (fwd, alpha) = direction(&p, "fwd", cfg, &utts);
    let reps: Vec<Vec<f64>> = if cfg.bidirectional {
        let rev: Vec<&Utterance> = utts.iter().rev().copied().collect();
        let (mut bwd, _) = direction(&p, "bwd", cfg, &rev);
        bwd.reverse();
        fwd.iter().zip(&bwd).map(|(f, b)| cat(f, b)).collect()
    } else {
        fwd
    };
    let (head_in, beta) = if cfg.emotion_attention {
        let w = &p["w_beta"];
        let mut attended = Vec::new();
        let mut rows = Vec::new();
        for e in &reps {
            let query = mat_t_vec(w, e);
            let b = softmax(&reps.iter().map(|r| dot(r, &query)).collect::<Vec<_>>());
            let mut out = vec![0.0; e.len()];
            for (wj, r) in b.iter().zip(&reps) {
                for k in 0..out.len() {
                    out[k] += wj * r[k];
                }
            }
            attended.push(out);
            rows.push(b);
        }
        (attended, Some(rows))
    } else {
        (reps.clone(), None)
    };
    let (w_out, b_out) = match cfg.mode {
        Mode::Classification => ("w_smax", "b_smax"),
        Mode::Regression => ("w_reg", "b_reg"),
    };
    let pre_relu: Vec<Vec<f64>> = head_in
        .iter()
        .map(|e| {
            mat_vec(&p["w_l"], e)
                .iter()
                .zip(p["b_l"].data())
                .map(|(a, b)| a + b)
                .collect()
        })
        .collect();
    let outputs = pre_relu
        .iter()
        .map(|pre| {
            let l: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
            let o: Vec<f64> = mat_vec(&p[w_out], &l)
                .iter()
                .zip(p[b_out].data())
                .map(|(a, b)| a + b)
                .collect();
            match cfg.mode {
                Mode::Classification => softmax(&o),
                Mode::Regression => o,
            }
        })
        .collect();
    Reference {
        alpha,
        emotion: reps,
        beta,
        pre_relu,
        outputs,
    }
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            assert_eq!(x.len(), y.len());
            x.iter().zip(y).map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}
