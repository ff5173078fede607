use rand::Rng;

use super::config::{Mode, ModelConfig};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::gru::GruParams;

/// Recurrences and context attention of one reading direction.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionParams<T> {
    pub global: GruParams<T>,
    pub party: Option<GruParams<T>>,
    pub listener: Option<GruParams<T>>,
    pub emotion: Option<GruParams<T>>,
    /// Bilinear context-attention map, `utterance_size × global_size`.
    pub w_alpha: T,
}

/// Every trainable table of the model.
///
/// Generic over the table type so a single layout describes stored values
/// (`Parameters<Tensor>`) and their handles on a tape (`Parameters<Var>`).
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters<T> {
    pub mode: Mode,
    pub forward: DirectionParams<T>,
    pub backward: Option<DirectionParams<T>>,
    pub w_beta: Option<T>,
    pub w_l: T,
    pub b_l: T,
    /// Softmax layer (classification) or affine regression output.
    pub w_out: T,
    pub b_out: T,
}

impl<T> DirectionParams<T> {
    fn for_each<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a T)) {
        self.global.for_each(&format!("{prefix}.global"), f);
        if let Some(p) = &self.party {
            p.for_each(&format!("{prefix}.party"), f);
        }
        if let Some(p) = &self.listener {
            p.for_each(&format!("{prefix}.listener"), f);
        }
        if let Some(p) = &self.emotion {
            p.for_each(&format!("{prefix}.emotion"), f);
        }
        f(format!("{prefix}.w_alpha"), &self.w_alpha);
    }

    fn for_each_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut T)) {
        self.global.for_each_mut(&format!("{prefix}.global"), f);
        if let Some(p) = &mut self.party {
            p.for_each_mut(&format!("{prefix}.party"), f);
        }
        if let Some(p) = &mut self.listener {
            p.for_each_mut(&format!("{prefix}.listener"), f);
        }
        if let Some(p) = &mut self.emotion {
            p.for_each_mut(&format!("{prefix}.emotion"), f);
        }
        f(format!("{prefix}.w_alpha"), &mut self.w_alpha);
    }

    fn map<U>(&self, f: &mut dyn FnMut(&T) -> U) -> DirectionParams<U> {
        DirectionParams {
            global: self.global.map(f),
            party: self.party.as_ref().map(|p| p.map(f)),
            listener: self.listener.as_ref().map(|p| p.map(f)),
            emotion: self.emotion.as_ref().map(|p| p.map(f)),
            w_alpha: f(&self.w_alpha),
        }
    }
}

impl<T> Parameters<T> {
    fn output_names(&self) -> (&'static str, &'static str) {
        match self.mode {
            Mode::Classification => ("w_smax", "b_smax"),
            Mode::Regression => ("w_reg", "b_reg"),
        }
    }

    /// Visits every table with its stable name, in a fixed order.
    pub fn for_each<'a>(&'a self, f: &mut dyn FnMut(String, &'a T)) {
        self.forward.for_each("fwd", f);
        if let Some(b) = &self.backward {
            b.for_each("bwd", f);
        }
        if let Some(w) = &self.w_beta {
            f("w_beta".into(), w);
        }
        let (w_name, b_name) = self.output_names();
        f("w_l".into(), &self.w_l);
        f("b_l".into(), &self.b_l);
        f(w_name.into(), &self.w_out);
        f(b_name.into(), &self.b_out);
    }

    pub fn for_each_mut<'a>(&'a mut self, f: &mut dyn FnMut(String, &'a mut T)) {
        let (w_name, b_name) = self.output_names();
        self.forward.for_each_mut("fwd", f);
        if let Some(b) = &mut self.backward {
            b.for_each_mut("bwd", f);
        }
        if let Some(w) = &mut self.w_beta {
            f("w_beta".into(), w);
        }
        f("w_l".into(), &mut self.w_l);
        f("b_l".into(), &mut self.b_l);
        f(w_name.into(), &mut self.w_out);
        f(b_name.into(), &mut self.b_out);
    }

    pub fn map<U>(&self, f: &mut dyn FnMut(&T) -> U) -> Parameters<U> {
        Parameters {
            mode: self.mode,
            forward: self.forward.map(f),
            backward: self.backward.as_ref().map(|b| b.map(f)),
            w_beta: self.w_beta.as_ref().map(&mut *f),
            w_l: f(&self.w_l),
            b_l: f(&self.b_l),
            w_out: f(&self.w_out),
            b_out: f(&self.b_out),
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.for_each(&mut |name, _| out.push(name));
        out
    }

    pub fn tables(&self) -> Vec<&T> {
        let mut out = Vec::new();
        self.for_each(&mut |_, t| out.push(t));
        out
    }

    pub fn tables_mut(&mut self) -> Vec<&mut T> {
        let mut out = Vec::new();
        self.for_each_mut(&mut |_, t| out.push(t));
        out
    }
}

struct Builder<'a> {
    table: &'a mut dyn FnMut(&[usize]) -> Tensor,
}

impl Builder<'_> {
    fn table(&mut self, shape: &[usize]) -> Tensor {
        (self.table)(shape)
    }

    fn gru(&mut self, hidden: usize, input: usize) -> GruParams<Tensor> {
        GruParams {
            w_x_r: self.table(&[hidden, input]),
            w_x_z: self.table(&[hidden, input]),
            w_x_c: self.table(&[hidden, input]),
            w_h_r: self.table(&[hidden, hidden]),
            w_h_z: self.table(&[hidden, hidden]),
            w_h_c: self.table(&[hidden, hidden]),
            b_r: Tensor::zeros(&[hidden]),
            b_z: Tensor::zeros(&[hidden]),
            b_c: Tensor::zeros(&[hidden]),
        }
    }

    fn direction(&mut self, c: &ModelConfig) -> DirectionParams<Tensor> {
        let global = self.gru(c.global_size, c.utterance_size + c.party_size);
        let party = c
            .has_party_state()
            .then(|| self.gru(c.party_size, c.utterance_size + c.global_size));
        let listener = c
            .has_listener_gru()
            .then(|| self.gru(c.party_size, c.listener_cue_size + c.global_size));
        let emotion = c
            .has_emotion_gru()
            .then(|| self.gru(c.emotion_size, c.emotion_input_size()));
        DirectionParams {
            global,
            party,
            listener,
            emotion,
            w_alpha: self.table(&[c.utterance_size, c.global_size]),
        }
    }
}

impl Parameters<Tensor> {
    // Tables are drawn in naming order so initialization is reproducible.
    fn build(c: &ModelConfig, mut table: impl FnMut(&[usize]) -> Tensor) -> Self {
        let mut b = Builder { table: &mut table };
        let forward = b.direction(c);
        let backward = c.bidirectional.then(|| b.direction(c));
        let head_in = c.head_input_size();
        let w_beta = c.emotion_attention.then(|| b.table(&[head_in, head_in]));
        let w_l = b.table(&[c.classifier_size, head_in]);
        let w_out = b.table(&[c.outputs, c.classifier_size]);
        Parameters {
            mode: c.mode,
            forward,
            backward,
            w_beta,
            w_l,
            b_l: Tensor::zeros(&[c.classifier_size]),
            w_out,
            b_out: Tensor::zeros(&[c.outputs]),
        }
    }

    /// All-zero parameters with the shapes implied by `config`.
    pub fn zeros(config: &ModelConfig) -> Self {
        Self::build(config, Tensor::zeros)
    }

    /// Weight tables uniform in `±1/√rows`, biases zero.
    pub fn init<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Self {
        Self::build(config, |shape| {
            let bound = 1.0 / (shape[0] as f64).sqrt();
            Tensor::uniform(shape, bound, rng)
        })
    }

    /// Shape audit against `config`; every table must be present with its expected extent.
    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        let expected = Self::zeros(config);
        let want: Vec<(String, Vec<usize>)> = {
            let mut v = Vec::new();
            expected.for_each(&mut |n, t| v.push((n, t.shape().to_vec())));
            v
        };
        let mut have = Vec::new();
        self.for_each(&mut |n, t: &Tensor| have.push((n, t.shape().to_vec())));
        if want.len() != have.len() {
            return Err(Error::Config(format!(
                "parameter set has {} tables, configuration implies {}",
                have.len(),
                want.len()
            )));
        }
        for ((wn, ws), (hn, hs)) in want.iter().zip(&have) {
            if wn != hn {
                return Err(Error::Config(format!(
                    "expected table `{wn}`, found `{hn}`"
                )));
            }
            if ws != hs {
                return Err(Error::Config(format!(
                    "table `{wn}` has shape {hs:?}, configuration implies {ws:?}"
                )));
            }
        }
        Ok(())
    }

    /// Records every table on the tape as a leaf.
    pub fn bind(&self, tape: &mut Tape) -> Parameters<Var> {
        self.map(&mut |t| tape.leaf(t.clone()))
    }

    pub fn count(&self) -> usize {
        self.tables().iter().map(|t| t.len()).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.tables().iter().map(|t| t.squared_norm()).sum()
    }
}
