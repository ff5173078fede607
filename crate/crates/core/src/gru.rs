//! Gated recurrent unit shared by every recurrence in the model.
//!
//! Gating convention:
//!
//! ```text
//! r  = σ(W_xr x + W_hr h + b_r)
//! z  = σ(W_xz x + W_hz h + b_z)
//! c̃  = tanh(W_xc x + W_hc (r ⊙ h) + b_c)
//! h' = (1 − z) ⊙ h + z ⊙ c̃
//! ```

use rand::Rng;

use crate::autodiff::{Activation, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// The nine weight tables of one GRU. Generic so the same layout holds
/// parameter values (`Tensor`) and their tape handles (`Var`).
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams<T> {
    pub w_x_r: T,
    pub w_x_z: T,
    pub w_x_c: T,
    pub w_h_r: T,
    pub w_h_z: T,
    pub w_h_c: T,
    pub b_r: T,
    pub b_z: T,
    pub b_c: T,
}

const TABLE_NAMES: [&str; 9] = [
    "w_x_r", "w_x_z", "w_x_c", "w_h_r", "w_h_z", "w_h_c", "b_r", "b_z", "b_c",
];

impl<T> GruParams<T> {
    fn tables(&self) -> [&T; 9] {
        [
            &self.w_x_r,
            &self.w_x_z,
            &self.w_x_c,
            &self.w_h_r,
            &self.w_h_z,
            &self.w_h_c,
            &self.b_r,
            &self.b_z,
            &self.b_c,
        ]
    }

    fn tables_mut(&mut self) -> [&mut T; 9] {
        [
            &mut self.w_x_r,
            &mut self.w_x_z,
            &mut self.w_x_c,
            &mut self.w_h_r,
            &mut self.w_h_z,
            &mut self.w_h_c,
            &mut self.b_r,
            &mut self.b_z,
            &mut self.b_c,
        ]
    }

    pub fn for_each<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a T)) {
        for (name, t) in TABLE_NAMES.iter().zip(self.tables()) {
            f(format!("{prefix}.{name}"), t);
        }
    }

    pub fn for_each_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut T)) {
        for (name, t) in TABLE_NAMES.iter().zip(self.tables_mut()) {
            f(format!("{prefix}.{name}"), t);
        }
    }

    pub fn map<U>(&self, f: &mut dyn FnMut(&T) -> U) -> GruParams<U> {
        GruParams {
            w_x_r: f(&self.w_x_r),
            w_x_z: f(&self.w_x_z),
            w_x_c: f(&self.w_x_c),
            w_h_r: f(&self.w_h_r),
            w_h_z: f(&self.w_h_z),
            w_h_c: f(&self.w_h_c),
            b_r: f(&self.b_r),
            b_z: f(&self.b_z),
            b_c: f(&self.b_c),
        }
    }
}

impl GruParams<Tensor> {
    fn build(hidden: usize, input: usize, mut table: impl FnMut(&[usize]) -> Tensor) -> Self {
        GruParams {
            w_x_r: table(&[hidden, input]),
            w_x_z: table(&[hidden, input]),
            w_x_c: table(&[hidden, input]),
            w_h_r: table(&[hidden, hidden]),
            w_h_z: table(&[hidden, hidden]),
            w_h_c: table(&[hidden, hidden]),
            b_r: Tensor::zeros(&[hidden]),
            b_z: Tensor::zeros(&[hidden]),
            b_c: Tensor::zeros(&[hidden]),
        }
    }

    pub fn zeros(hidden: usize, input: usize) -> Self {
        Self::build(hidden, input, Tensor::zeros)
    }

    /// Weights uniform in `±1/√hidden`, biases zero.
    pub fn init<R: Rng + ?Sized>(hidden: usize, input: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        Self::build(hidden, input, |shape| Tensor::uniform(shape, bound, rng))
    }

    pub fn hidden(&self) -> usize {
        self.b_r.len()
    }

    pub fn input(&self) -> usize {
        self.w_x_r.shape().get(1).copied().unwrap_or(0)
    }

    /// Checks that all nine tables agree on the hidden and input extents.
    pub fn validate(&self, hidden: usize, input: usize) -> Result<()> {
        let expected = Self::zeros(hidden, input);
        for (i, (have, want)) in self.tables().iter().zip(expected.tables()).enumerate() {
            if have.shape() != want.shape() {
                return Err(Error::Shape {
                    op: TABLE_NAMES[i],
                    left: want.shape().to_vec(),
                    right: have.shape().to_vec(),
                });
            }
        }
        Ok(())
    }

    /// Records all tables on the tape as leaves.
    pub fn bind(&self, tape: &mut Tape) -> GruParams<Var> {
        self.map(&mut |t| tape.leaf(t.clone()))
    }
}

/// One GRU transition `h' = GRU(h_prev, x)` recorded on the tape.
pub fn gru_step(tape: &mut Tape, p: &GruParams<Var>, h_prev: Var, x: Var) -> Result<Var> {
    let hidden = tape.value(p.b_r).len();
    if tape.value(h_prev).shape() != [hidden] {
        return Err(Error::Shape {
            op: "gru_step",
            left: vec![hidden],
            right: tape.value(h_prev).shape().to_vec(),
        });
    }

    let gate = |tape: &mut Tape, wx: Var, wh: Var, b: Var, kind| -> Result<Var> {
        let a = tape.matvec(wx, x)?;
        let c = tape.matvec(wh, h_prev)?;
        let s = tape.add(a, c)?;
        let s = tape.add(s, b)?;
        Ok(tape.activation(kind, s))
    };
    let r = gate(tape, p.w_x_r, p.w_h_r, p.b_r, Activation::Sigmoid)?;
    let z = gate(tape, p.w_x_z, p.w_h_z, p.b_z, Activation::Sigmoid)?;

    let reset = tape.mul(r, h_prev)?;
    let a = tape.matvec(p.w_x_c, x)?;
    let c = tape.matvec(p.w_h_c, reset)?;
    let s = tape.add(a, c)?;
    let s = tape.add(s, p.b_c)?;
    let candidate = tape.activation(Activation::Tanh, s);

    let keep = tape.one_minus(z);
    let kept = tape.mul(keep, h_prev)?;
    let fresh = tape.mul(z, candidate)?;
    tape.add(kept, fresh)
}

/// Evaluates a single GRU step outside of any model, on a scratch tape.
pub fn gru_step_values(p: &GruParams<Tensor>, h_prev: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let vars = p.bind(&mut tape);
    let h = tape.leaf(Tensor::vector(h_prev.to_vec()));
    let x = tape.leaf(Tensor::vector(x.to_vec()));
    let out = gru_step(&mut tape, &vars, h, x)?;
    Ok(tape.value(out).data().to_vec())
}
