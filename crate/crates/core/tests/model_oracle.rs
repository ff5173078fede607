mod common;

use common::*;
use partyrnn_core::autodiff::{Tape, Tensor, Var};
use partyrnn_core::corpus::{Dialogue, Utterance};
use partyrnn_core::gru::{gru_step, gru_step_values, GruParams};
use partyrnn_core::model::*;

const TOL: f64 = 1e-12;

fn random_gru(seed: u64, hidden: usize, input: usize) -> GruParams<Tensor> {
    let mut r = rng(seed);
    let p = GruParams::init(hidden, input, &mut r);
    // non-zero biases so they take part in the comparison
    p.map(&mut |t| {
        if t.is_vector() {
            Tensor::vector(uniform_vec(&mut r, t.len()))
        } else {
            t.clone()
        }
    })
}

fn as_map(p: &GruParams<Tensor>, prefix: &str) -> std::collections::HashMap<String, Tensor> {
    let mut m = std::collections::HashMap::new();
    p.for_each(prefix, &mut |n, t| {
        m.insert(n, t.clone());
    });
    m
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn gru_seed7_matches_reference() {
    let p = random_gru(7, 3, 2);
    let mut r = rng(70);
    let h = uniform_vec(&mut r, 3);
    let x = uniform_vec(&mut r, 2);
    let expected = gru(&as_map(&p, "g"), "g", &h, &x);
    assert_close(&gru_step_values(&p, &h, &x).unwrap(), &expected, TOL);

    let mut tape = Tape::new();
    let vars = p.bind(&mut tape);
    let hv = tape.leaf(Tensor::vector(h));
    let xv = tape.leaf(Tensor::vector(x));
    let out = gru_step(&mut tape, &vars, hv, xv).unwrap();
    assert_close(tape.value(out).data(), &expected, TOL);
}

#[test]
fn gru_output_within_hull() {
    for seed in 0..50 {
        let p = random_gru(seed, 4, 3);
        let mut r = rng(seed + 1000);
        let h: Vec<f64> = uniform_vec(&mut r, 4).iter().map(|v| v * 3.0).collect();
        let x = uniform_vec(&mut r, 3);
        let out = gru_step_values(&p, &h, &x).unwrap();
        let bound = h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        assert!(out.iter().all(|v| v.abs() <= bound + 1e-15));
    }
}

fn zero_gru_case(hidden: usize, input: usize) {
    let p = GruParams::zeros(hidden, input);
    let out = gru_step_values(&p, &[0.4, -0.2], &vec![0.3; input]).unwrap();
    assert_close(&out, &[0.2, -0.1], 1e-15);
}

#[test]
fn zero_weight_updates_halve_state() {
    // global, speaker, listener and emotion cells all share this behavior
    zero_gru_case(2, 3 + 2);
    zero_gru_case(2, 7 + 2);
    zero_gru_case(2, 2);
}

fn one_step_state(config: &ModelConfig, seed: u64) -> (Tape, DirectionParams<Var>, DialogueState) {
    let model = Model::new(config.clone(), seed).unwrap();
    let mut tape = Tape::new();
    let vars = model.params.bind(&mut tape);
    let state = DialogueState::new(&mut tape, config);
    (tape, vars.forward, state)
}

#[test]
fn global_update_seed5_matches_reference() {
    let mut cfg = ModelConfig::classification(3, 2, 2);
    cfg.party_size = 2;
    let model = Model::new(cfg.clone(), 5).unwrap();
    let p = named(&model.params);
    let mut tape = Tape::new();
    let vars = model.params.bind(&mut tape);
    let mut state = DialogueState::new(&mut tape, &cfg);
    let mut r = rng(5);
    let q0 = uniform_vec(&mut r, 2);
    state.q[1] = tape.leaf(Tensor::vector(q0.clone()));
    let u = uniform_vec(&mut r, 3);
    let uv = tape.leaf(Tensor::vector(u.clone()));
    let g = global_update(&mut tape, &mut state, uv, 1, &vars.forward.global).unwrap();
    assert_eq!(state.g_history.len(), 1);

    let mut x = u.clone();
    x.extend(&q0);
    assert_eq!(x.len(), 3 + 2);
    let expected = gru(&p, "fwd.global", &[0.0, 0.0], &x);
    assert_close(tape.value(g).data(), &expected, TOL);

    assert!(global_update(&mut tape, &mut state, uv, 2, &vars.forward.global).is_err());
}

#[test]
fn speaker_update_seed11_touches_only_speaker() {
    let cfg = ModelConfig::classification(3, 2, 2);
    let model = Model::new(cfg.clone(), 11).unwrap();
    let p = named(&model.params);
    let (mut tape, fwd, mut state) = one_step_state(&cfg, 11);
    let mut r = rng(11);
    let q = [uniform_vec(&mut r, 2), uniform_vec(&mut r, 2)];
    state.q = q
        .iter()
        .map(|v| tape.leaf(Tensor::vector(v.clone())))
        .collect();
    let u = uniform_vec(&mut r, 3);
    let c = uniform_vec(&mut r, 2);
    let uv = tape.leaf(Tensor::vector(u.clone()));
    let cv = tape.leaf(Tensor::vector(c.clone()));
    let before_listener = state.q[1];
    speaker_update(
        &mut tape,
        &mut state,
        uv,
        cv,
        0,
        fwd.party.as_ref().unwrap(),
    )
    .unwrap();
    assert_eq!(state.q[1], before_listener);
    let mut x = u;
    x.extend(&c);
    assert_close(
        tape.value(state.q[0]).data(),
        &gru(&p, "fwd.party", &q[0], &x),
        TOL,
    );
}

#[test]
fn listener_update_variants() {
    let mut cfg = ModelConfig::classification(3, 2, 2);
    cfg.listener_update = ListenerUpdate::Gru;
    let model = Model::new(cfg.clone(), 13).unwrap();
    let p = named(&model.params);
    let (mut tape, fwd, mut state) = one_step_state(&cfg, 13);
    let mut r = rng(13);
    let q1 = uniform_vec(&mut r, 2);
    state.q[1] = tape.leaf(Tensor::vector(q1.clone()));
    let c = uniform_vec(&mut r, 2);
    let cv = tape.leaf(Tensor::vector(c.clone()));
    let cues: Vec<Var> = (0..2).map(|_| tape.leaf(Tensor::zeros(&[7]))).collect();

    // identity leaves the listener untouched
    let q_before = state.q.clone();
    listener_update(
        &mut tape,
        &mut state,
        ListenerUpdate::Identity,
        &cues,
        cv,
        0,
        None,
    )
    .unwrap();
    assert_eq!(state.q, q_before);

    // GRU without parameters is rejected
    assert!(listener_update(
        &mut tape,
        &mut state,
        ListenerUpdate::Gru,
        &cues,
        cv,
        0,
        None
    )
    .is_err());

    let speaker_q = state.q[0];
    let gru_l = fwd.listener.as_ref().unwrap();
    listener_update(
        &mut tape,
        &mut state,
        ListenerUpdate::Gru,
        &cues,
        cv,
        0,
        Some(gru_l),
    )
    .unwrap();
    assert_eq!(state.q[0], speaker_q);
    let mut x = vec![0.0; 7];
    x.extend(&c);
    assert_close(
        tape.value(state.q[1]).data(),
        &gru(&p, "fwd.listener", &q1, &x),
        TOL,
    );
}

#[test]
fn emotion_update_seed17_and_zero_cases() {
    let cfg = ModelConfig::classification(3, 2, 2);
    let model = Model::new(cfg.clone(), 17).unwrap();
    let p = named(&model.params);
    let (mut tape, fwd, _) = one_step_state(&cfg, 17);
    let mut r = rng(17);
    let e = uniform_vec(&mut r, 2);
    let q = uniform_vec(&mut r, 2);
    let ev = tape.leaf(Tensor::vector(e.clone()));
    let qv = tape.leaf(Tensor::vector(q.clone()));
    let out = emotion_update(&mut tape, ev, qv, fwd.emotion.as_ref().unwrap()).unwrap();
    assert_close(tape.value(out).data(), &gru(&p, "fwd.emotion", &e, &q), TOL);

    let zero = GruParams::zeros(2, 2).bind(&mut tape);
    let z = tape.leaf(Tensor::zeros(&[2]));
    let out = emotion_update(&mut tape, z, qv, &zero).unwrap();
    assert_eq!(tape.value(out).data(), &[0.0, 0.0]);
}

#[test]
fn attend_context_examples() {
    let mut tape = Tape::new();
    let u = tape.leaf(Tensor::vector(vec![1.0, 0.0]));
    let w = tape.leaf(Tensor::identity(2));
    let g1 = tape.leaf(Tensor::vector(vec![1.0, 0.0]));
    let g2 = tape.leaf(Tensor::vector(vec![0.0, 1.0]));

    let (c, a) = attend_context(&mut tape, u, &[], w).unwrap();
    assert!(a.is_none());
    assert_eq!(tape.value(c).data(), &[0.0, 0.0]);

    let (c, a) = attend_context(&mut tape, u, &[g1], w).unwrap();
    assert_eq!(tape.value(a.unwrap()).data(), &[1.0]);
    assert_eq!(tape.value(c).data(), &[1.0, 0.0]);

    let (c, a) = attend_context(&mut tape, u, &[g1, g2], w).unwrap();
    let e = 1.0f64.exp();
    let expected = [e / (e + 1.0), 1.0 / (e + 1.0)];
    assert_close(tape.value(a.unwrap()).data(), &expected, 1e-15);
    assert_close(tape.value(c).data(), &expected, 1e-15);
    assert!((expected[0] - 0.7311).abs() < 5e-5 && (expected[1] - 0.2689).abs() < 5e-5);

    let bad = tape.leaf(Tensor::vector(vec![1.0, 0.0, 0.0]));
    assert!(attend_context(&mut tape, u, &[g1, bad], w).is_err());
}

#[test]
fn emotion_attention_examples() {
    let mut tape = Tape::new();
    let w = tape.leaf(Tensor::identity(3));
    let e: Vec<Var> = (0..3)
        .map(|i| {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            tape.leaf(Tensor::vector(v))
        })
        .collect();
    let (attended, rows) = emotion_attention(&mut tape, &e, w).unwrap();
    let big = 1.0f64.exp() / (1.0f64.exp() + 2.0);
    let small = 1.0 / (1.0f64.exp() + 2.0);
    for i in 0..3 {
        let mut expected = vec![small; 3];
        expected[i] = big;
        assert_close(tape.value(rows[i]).data(), &expected, 1e-15);
        assert_close(tape.value(attended[i]).data(), &expected, 1e-15);
    }

    let (attended, rows) = emotion_attention(&mut tape, &e[..1], w).unwrap();
    assert_eq!(tape.value(rows[0]).data(), &[1.0]);
    assert_eq!(tape.value(attended[0]).data(), &[1.0, 0.0, 0.0]);
    assert!(emotion_attention(&mut tape, &[], w).is_err());
}

#[test]
fn classify_examples() {
    let cfg = ModelConfig::classification(3, 4, 6);
    let zeros = Parameters::zeros(&cfg);
    let mut tape = Tape::new();
    let vars = zeros.bind(&mut tape);
    let e = tape.leaf(Tensor::vector(vec![0.3, -0.1, 0.2, 0.9]));
    let (p, label) = classify(&mut tape, e, &vars).unwrap();
    assert_eq!(label, 0);
    assert_close(tape.value(p).data(), &[1.0 / 6.0; 6], 1e-15);
    assert!(predict_regression(&mut tape, e, &vars).is_err());

    // seed 19 against the reference head
    let model = Model::new(cfg.clone(), 19).unwrap();
    let vars = model.params.bind(&mut tape);
    let mut r = rng(19);
    let ev = uniform_vec(&mut r, 4);
    let e = tape.leaf(Tensor::vector(ev.clone()));
    let (p, label) = classify(&mut tape, e, &vars).unwrap();
    let m = named(&model.params);
    let l: Vec<f64> = mat_vec(&m["w_l"], &ev).iter().map(|v| v.max(0.0)).collect();
    let expected = softmax(&mat_vec(&m["w_smax"], &l));
    assert_close(tape.value(p).data(), &expected, TOL);
    assert_eq!(label, argmax(&expected));
    assert!((tape.value(p).data().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
}

#[test]
fn regression_head_examples() {
    let mut cfg = ModelConfig::classification(3, 4, 4);
    cfg.mode = Mode::Regression;
    let mut tape = Tape::new();
    let vars = Parameters::zeros(&cfg).bind(&mut tape);
    let e = tape.leaf(Tensor::vector(vec![0.3, -0.1, 0.2, 0.9]));
    let out = predict_regression(&mut tape, e, &vars).unwrap();
    assert_eq!(tape.value(out).data(), &[0.0; 4]);
    assert!(classify(&mut tape, e, &vars).is_err());

    let model = Model::new(cfg, 23).unwrap();
    let vars = model.params.bind(&mut tape);
    let mut r = rng(23);
    let ev = uniform_vec(&mut r, 4);
    let e = tape.leaf(Tensor::vector(ev.clone()));
    let out = predict_regression(&mut tape, e, &vars).unwrap();
    let m = named(&model.params);
    let l: Vec<f64> = mat_vec(&m["w_l"], &ev).iter().map(|v| v.max(0.0)).collect();
    assert_close(tape.value(out).data(), &mat_vec(&m["w_reg"], &l), TOL);
}

fn configs() -> Vec<ModelConfig> {
    let mut out = Vec::new();
    for v in Variant::ALL {
        for ablation in [
            Ablation::None,
            Ablation::NoPartyState,
            Ablation::NoEmotionGru,
        ] {
            for listener in [ListenerUpdate::Identity, ListenerUpdate::Gru] {
                for mode in [Mode::Classification, Mode::Regression] {
                    let mut c = ModelConfig::classification(5, 4, 3).with_variant(v);
                    c.global_size = 3;
                    c.party_size = 4;
                    c.emotion_size = 2;
                    c.classifier_size = 5;
                    c.listener_cue_size = 2;
                    c.parties = 3;
                    c.ablation = ablation;
                    c.listener_update = listener;
                    c.mode = mode;
                    out.push(c);
                }
            }
        }
    }
    out
}

#[test]
fn full_forward_matches_reference_for_every_configuration() {
    for (i, cfg) in configs().into_iter().enumerate() {
        let model = Model::new(cfg.clone(), i as u64).unwrap();
        let mut r = rng(100 + i as u64);
        let mut d = random_dialogue(&mut r, 6, 3, 5, 3);
        // cues on some utterances only
        d.utterances[2].listener_cues = Some((0..3).map(|_| uniform_vec(&mut r, 2)).collect());
        let trace = model.forward(&d).unwrap();
        let reference = reference_forward(&model, &d);
        assert!(
            max_abs_diff(&trace.outputs, &reference.outputs) <= TOL,
            "{cfg:?}"
        );
        assert!(max_abs_diff(&trace.emotion, &reference.emotion) <= TOL);
        assert!(max_abs_diff(&trace.alpha, &reference.alpha) <= TOL);
        match (&trace.beta, &reference.beta) {
            (Some(a), Some(b)) => assert!(max_abs_diff(a, b) <= TOL),
            (None, None) => {}
            _ => panic!("beta presence differs"),
        }
        assert_eq!(trace.outputs.len(), 6);
        assert_eq!(trace.alpha.len(), 6);
        assert_eq!(trace.emotion.len(), 6);
        assert_eq!(trace.emotion[0].len(), cfg.head_input_size());
        if cfg.mode == Mode::Classification {
            assert_eq!(trace.predictions.len(), 6);
        } else {
            assert!(trace.predictions.is_empty());
        }
    }
}

/// Two utterances, every table set by hand, unrolled without any helper.
#[test]
fn two_utterance_hand_unrolled() {
    let mut cfg = ModelConfig::classification(1, 1, 2);
    cfg.party_size = 1;
    let mut params = Parameters::zeros(&cfg);
    params.for_each_mut(&mut |name, t| {
        let v = match name.as_str() {
            "fwd.w_alpha" => 1.0,
            "fwd.global.w_x_c" => 0.5,
            "fwd.party.w_x_c" => 1.0,
            "fwd.emotion.w_x_c" => 1.0,
            "w_l" => 1.0,
            "w_smax" => 1.0,
            _ => 0.0,
        };
        t.data_mut().fill(v);
        if name == "w_smax" {
            t.data_mut()[0] = -1.0;
        }
    });
    let model = Model::from_parts(cfg, params).unwrap();
    let d = Dialogue {
        id: "h".into(),
        speakers: vec!["a".into(), "b".into()],
        utterances: vec![
            Utterance::labeled(0, vec![1.0], 0),
            Utterance::labeled(1, vec![2.0], 1),
        ],
    };
    let trace = model.forward(&d).unwrap();

    // every gate is σ(0) = 0.5, so h' = 0.5·h + 0.5·tanh(W_x_c·x)
    let half = |h: f64, x: f64| 0.5 * h + 0.5 * x.tanh();
    // t = 1: c = 0
    let g1 = half(0.0, 0.5 * 1.0); // x = [u, q0] with w_x_c = [0.5, 0.5]
    let q0 = half(0.0, 1.0 + 0.0);
    let e1 = half(0.0, q0);
    // t = 2: α over [g1] is [1], c = g1
    let g2 = half(g1, 0.5 * 2.0 + 0.5 * 0.0); // q1 still zero
    let _ = g2;
    let q1 = half(0.0, 2.0 + g1);
    let e2 = half(e1, q1);
    let probs = |e: f64| {
        let l = e.max(0.0);
        let (a, b) = (-l, l);
        let z = a.exp() + b.exp();
        vec![a.exp() / z, b.exp() / z]
    };
    assert_eq!(trace.alpha[0], Vec::<f64>::new());
    assert_eq!(trace.alpha[1], vec![1.0]);
    assert_close(&trace.emotion[0], &[e1], TOL);
    assert_close(&trace.emotion[1], &[e2], TOL);
    assert_close(&trace.outputs[0], &probs(e1), TOL);
    assert_close(&trace.outputs[1], &probs(e2), TOL);
    assert_eq!(trace.predictions, vec![1, 1]);
}

#[test]
fn single_utterance_boundary() {
    let cfg = ModelConfig::classification(5, 4, 3);
    let model = Model::new(cfg, 3).unwrap();
    let d = Dialogue {
        id: "one".into(),
        speakers: vec!["a".into(), "b".into()],
        utterances: vec![Utterance::labeled(1, vec![0.1, 0.2, 0.3, 0.4, 0.5], 2)],
    };
    let trace = model.forward(&d).unwrap();
    assert!(trace.alpha[0].is_empty());
    let reference = reference_forward(&model, &d);
    assert!(max_abs_diff(&trace.outputs, &reference.outputs) <= TOL);
}

#[test]
fn bidirectional_backward_half_is_reversed_forward() {
    let cfg = ModelConfig::classification(5, 4, 3).with_variant(Variant::Bi);
    let model = Model::new(cfg.clone(), 9).unwrap();
    let mut r = rng(9);
    let d = random_dialogue(&mut r, 5, 2, 5, 3);
    let trace = model.forward(&d).unwrap();

    // a unidirectional model holding the backward parameters, run on the reversed dialogue
    let uni_cfg = ModelConfig::classification(5, 4, 3);
    let mut uni = Model::new(uni_cfg, 0).unwrap();
    uni.params.forward = model.params.backward.clone().unwrap();
    let mut rev = d.clone();
    rev.utterances.reverse();
    let rev_trace = uni.forward(&rev).unwrap();
    for t in 0..5 {
        assert_eq!(trace.emotion[t].len(), 8);
        assert_eq!(trace.emotion[t][4..], rev_trace.emotion[4 - t][..]);
    }

    // zero backward parameters: second half is the zero-weight trajectory e_t = e_{t-1}/2 = 0
    let mut zeroed = model.clone();
    zeroed.params.backward = Some(Parameters::zeros(&cfg).backward.unwrap());
    let trace = zeroed.forward(&d).unwrap();
    for t in 0..5 {
        assert_eq!(trace.emotion[t][4..], [0.0; 4]);
    }
}

#[test]
fn forward_rejects_bad_dialogues() {
    let cfg = ModelConfig::classification(5, 4, 3);
    let model = Model::new(cfg.clone(), 1).unwrap();
    let mut d = Dialogue {
        id: "x".into(),
        speakers: vec!["a".into(), "b".into()],
        utterances: vec![],
    };
    assert!(model.forward(&d).is_err());
    d.utterances.push(Utterance::labeled(0, vec![0.0; 5], 0));
    d.utterances.push(Utterance::labeled(1, vec![0.0; 4], 0));
    let err = model.forward(&d).unwrap_err().to_string();
    assert!(err.contains("utterance 1"), "{err}");
    d.utterances[1] = Utterance::labeled(2, vec![0.0; 5], 0);
    assert!(model.forward(&d).is_err());
    let mut tape = Tape::new();
    let vars = model.params.bind(&mut tape);
    d.utterances.pop();
    assert!(forward_bidirectional(&mut tape, &vars, &cfg, &d).is_err());
}

#[test]
fn seeded_models_are_deterministic() {
    let cfg = ModelConfig::classification(5, 4, 3).with_variant(Variant::BiAtt);
    let a = Model::new(cfg.clone(), 42).unwrap();
    let b = Model::new(cfg, 42).unwrap();
    assert_eq!(a, b);
    let mut r = rng(4);
    let d = random_dialogue(&mut r, 7, 2, 5, 3);
    assert_eq!(a.forward(&d).unwrap(), b.forward(&d).unwrap());
}
