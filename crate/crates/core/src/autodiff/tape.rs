use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatVec { w: Var, x: Var },
    VecMat { x: Var, w: Var },
    Concat { a: Var, b: Var },
    Stack(Vec<Var>),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    OneMinus(Var),
    Scale(Var, f64),
    Activation(Activation, Var),
    Softmax(Var),
    Dot(Var, Var),
    Sum(Var),
    SumSquares(Var),
    Abs(Var),
    Ln { x: Var, floor: f64 },
    Pick { x: Var, index: usize },
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Wengert list of executed operations. Values are computed eagerly; calling
/// [`Tape::backward`] replays the list in reverse.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Result of a backward pass: one optional gradient per recorded value.
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the output w.r.t. `var`, or `None` if the output does not depend on it.
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    /// Like [`Gradients::get`] but materializes zeros for disconnected values.
    pub fn wrt(&self, var: Var, tape: &Tape) -> Tensor {
        self.get(var)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(tape.value(var).shape()))
    }
}

fn vector_len(op: &'static str, t: &Tensor) -> Result<usize> {
    if t.is_vector() {
        Ok(t.len())
    } else {
        Err(Error::NotVector {
            op,
            shape: t.shape().to_vec(),
        })
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() == b.shape() {
        Ok(())
    } else {
        Err(Error::Shape {
            op,
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        })
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input value. Gradients are reported for every leaf.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// `W · x` for `W` of shape `[m, n]` and `x` of length `n`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (wt, xt) = (self.value(w), self.value(x));
        let n = vector_len("matvec", xt)?;
        if !wt.is_matrix() || wt.shape()[1] != n {
            return Err(Error::Shape {
                op: "matvec",
                left: wt.shape().to_vec(),
                right: xt.shape().to_vec(),
            });
        }
        let out = wt
            .data()
            .chunks_exact(n)
            .map(|row| row.iter().zip(xt.data()).map(|(a, b)| a * b).sum())
            .collect();
        Ok(self.push(Tensor::vector(out), Op::MatVec { w, x }))
    }

    /// `Wᵀ · x` for `W` of shape `[m, n]` and `x` of length `m`.
    pub fn vecmat(&mut self, x: Var, w: Var) -> Result<Var> {
        let (xt, wt) = (self.value(x), self.value(w));
        let m = vector_len("vecmat", xt)?;
        if !wt.is_matrix() || wt.shape()[0] != m {
            return Err(Error::Shape {
                op: "vecmat",
                left: xt.shape().to_vec(),
                right: wt.shape().to_vec(),
            });
        }
        let n = wt.shape()[1];
        let mut out = vec![0.0; n];
        for (xi, row) in xt.data().iter().zip(wt.data().chunks_exact(n.max(1))) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
        Ok(self.push(Tensor::vector(out), Op::VecMat { x, w }))
    }

    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (at, bt) = (self.value(a), self.value(b));
        vector_len("concat", at)?;
        vector_len("concat", bt)?;
        let out = [at.data(), bt.data()].concat();
        Ok(self.push(Tensor::vector(out), Op::Concat { a, b }))
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var> {
        let first = rows
            .first()
            .ok_or_else(|| Error::invalid("stack", "no rows"))?;
        let width = vector_len("stack", self.value(*first))?;
        let mut data = Vec::with_capacity(rows.len() * width);
        for &r in rows {
            let t = self.value(r);
            if vector_len("stack", t)? != width {
                return Err(Error::Shape {
                    op: "stack",
                    left: vec![width],
                    right: t.shape().to_vec(),
                });
            }
            data.extend_from_slice(t.data());
        }
        let value = Tensor::matrix(rows.len(), width, data)?;
        Ok(self.push(value, Op::Stack(rows.to_vec())))
    }

    fn zip_with(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (at, bt) = (self.value(a), self.value(b));
        same_shape(name, at, bt)?;
        let data = at
            .data()
            .iter()
            .zip(bt.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let value = Tensor::new(at.shape().to_vec(), data)?;
        Ok(self.push(value, op))
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let xt = self.value(x);
        let data = xt.data().iter().map(|&v| f(v)).collect();
        let value = Tensor::new(xt.shape().to_vec(), data).expect("shape preserved");
        self.push(value, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn one_minus(&mut self, x: Var) -> Var {
        self.map(x, |v| 1.0 - v, Op::OneMinus(x))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        self.map(x, |v| v * factor, Op::Scale(x, factor))
    }

    pub fn activation(&mut self, kind: Activation, x: Var) -> Var {
        self.map(x, |v| kind.apply(v), Op::Activation(kind, x))
    }

    pub fn abs(&mut self, x: Var) -> Var {
        self.map(x, f64::abs, Op::Abs(x))
    }

    /// Natural log of `max(x, floor)`; entries at or below the floor get zero gradient.
    pub fn ln_clamped(&mut self, x: Var, floor: f64) -> Var {
        self.map(x, |v| v.max(floor).ln(), Op::Ln { x, floor })
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let xt = self.value(x);
        let n = vector_len("softmax", xt)?;
        if n == 0 {
            return Err(Error::invalid("softmax", "empty input"));
        }
        let out = softmax_values(xt.data());
        Ok(self.push(Tensor::vector(out), Op::Softmax(x)))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (at, bt) = (self.value(a), self.value(b));
        vector_len("dot", at)?;
        same_shape("dot", at, bt)?;
        let v = at.data().iter().zip(bt.data()).map(|(x, y)| x * y).sum();
        Ok(self.push(Tensor::scalar(v), Op::Dot(a, b)))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let v = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(v), Op::Sum(x))
    }

    pub fn sum_squares(&mut self, x: Var) -> Var {
        let v = self.value(x).squared_norm();
        self.push(Tensor::scalar(v), Op::SumSquares(x))
    }

    /// Selects one entry of a vector as a scalar.
    pub fn pick(&mut self, x: Var, index: usize) -> Result<Var> {
        let xt = self.value(x);
        let n = vector_len("pick", xt)?;
        if index >= n {
            return Err(Error::invalid(
                "pick",
                format!("index {index} out of range for length {n}"),
            ));
        }
        let v = xt.data()[index];
        Ok(self.push(Tensor::scalar(v), Op::Pick { x, index }))
    }

    /// Reverse pass from a scalar output. Nodes are visited once each, newest first.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        let out = self.value(output);
        if !out.is_scalar() {
            return Err(Error::invalid(
                "backward",
                format!("output must be a scalar, got shape {:?}", out.shape()),
            ));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; output.0 + 1];
        grads[output.0] = Some(vec![1.0]);

        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }

        let grads = grads
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                g.map(|data| {
                    Tensor::new(self.nodes[i].value.shape().to_vec(), data)
                        .expect("gradient shape mirrors value")
                })
            })
            .collect();
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let mut acc = |var: Var, f: &mut dyn FnMut(&mut [f64])| {
            let n = self.nodes[var.0].value.len();
            let slot = grads[var.0].get_or_insert_with(|| vec![0.0; n]);
            f(slot);
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatVec { w, x } => {
                let wt = self.value(*w);
                let xt = self.value(*x).data();
                let n = xt.len();
                acc(*x, &mut |dx| {
                    for (row, gi) in wt.data().chunks_exact(n.max(1)).zip(g) {
                        for (d, wij) in dx.iter_mut().zip(row) {
                            *d += wij * gi;
                        }
                    }
                });
                acc(*w, &mut |dw| {
                    for (row, gi) in dw.chunks_exact_mut(n.max(1)).zip(g) {
                        for (d, xj) in row.iter_mut().zip(xt) {
                            *d += gi * xj;
                        }
                    }
                });
            }
            Op::VecMat { x, w } => {
                let wt = self.value(*w);
                let xt = self.value(*x).data();
                let n = wt.shape()[1];
                acc(*x, &mut |dx| {
                    for (d, row) in dx.iter_mut().zip(wt.data().chunks_exact(n.max(1))) {
                        *d += row.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
                    }
                });
                acc(*w, &mut |dw| {
                    for (row, xi) in dw.chunks_exact_mut(n.max(1)).zip(xt) {
                        for (d, gj) in row.iter_mut().zip(g) {
                            *d += xi * gj;
                        }
                    }
                });
            }
            Op::Concat { a, b } => {
                let p = self.value(*a).len();
                acc(*a, &mut |da| add_into(da, &g[..p]));
                acc(*b, &mut |db| add_into(db, &g[p..]));
            }
            Op::Stack(rows) => {
                let width = node.value.shape()[1];
                for (r, chunk) in rows.iter().zip(g.chunks(width.max(1))) {
                    acc(*r, &mut |dr| add_into(dr, chunk));
                }
            }
            Op::Add(a, b) => {
                acc(*a, &mut |da| add_into(da, g));
                acc(*b, &mut |db| add_into(db, g));
            }
            Op::Sub(a, b) => {
                acc(*a, &mut |da| add_into(da, g));
                acc(*b, &mut |db| {
                    for (d, gi) in db.iter_mut().zip(g) {
                        *d -= gi;
                    }
                });
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                acc(*a, &mut |da| {
                    for ((d, gi), bi) in da.iter_mut().zip(g).zip(bv) {
                        *d += gi * bi;
                    }
                });
                acc(*b, &mut |db| {
                    for ((d, gi), ai) in db.iter_mut().zip(g).zip(av) {
                        *d += gi * ai;
                    }
                });
            }
            Op::OneMinus(x) => acc(*x, &mut |dx| {
                for (d, gi) in dx.iter_mut().zip(g) {
                    *d -= gi;
                }
            }),
            Op::Scale(x, factor) => acc(*x, &mut |dx| {
                for (d, gi) in dx.iter_mut().zip(g) {
                    *d += gi * factor;
                }
            }),
            Op::Activation(kind, x) => {
                let y = node.value.data();
                let xv = self.value(*x).data();
                acc(*x, &mut |dx| {
                    for (i, d) in dx.iter_mut().enumerate() {
                        let local = match kind {
                            Activation::Sigmoid => y[i] * (1.0 - y[i]),
                            Activation::Tanh => 1.0 - y[i] * y[i],
                            Activation::Relu => {
                                if xv[i] > 0.0 {
                                    1.0
                                } else {
                                    0.0
                                }
                            }
                        };
                        *d += g[i] * local;
                    }
                });
            }
            Op::Softmax(x) => {
                let y = node.value.data();
                let inner: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                acc(*x, &mut |dx| {
                    for ((d, gi), yi) in dx.iter_mut().zip(g).zip(y) {
                        *d += yi * (gi - inner);
                    }
                });
            }
            Op::Dot(a, b) => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                acc(*a, &mut |da| {
                    for (d, bi) in da.iter_mut().zip(bv) {
                        *d += g[0] * bi;
                    }
                });
                acc(*b, &mut |db| {
                    for (d, ai) in db.iter_mut().zip(av) {
                        *d += g[0] * ai;
                    }
                });
            }
            Op::Sum(x) => acc(*x, &mut |dx| dx.iter_mut().for_each(|d| *d += g[0])),
            Op::SumSquares(x) => {
                let xv = self.value(*x).data();
                acc(*x, &mut |dx| {
                    for (d, xi) in dx.iter_mut().zip(xv) {
                        *d += 2.0 * xi * g[0];
                    }
                });
            }
            Op::Abs(x) => {
                let xv = self.value(*x).data();
                acc(*x, &mut |dx| {
                    for ((d, gi), xi) in dx.iter_mut().zip(g).zip(xv) {
                        // subgradient 0 at the kink
                        let s = if *xi > 0.0 {
                            1.0
                        } else if *xi < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        *d += gi * s;
                    }
                });
            }
            Op::Ln { x, floor } => {
                let xv = self.value(*x).data();
                acc(*x, &mut |dx| {
                    for ((d, gi), xi) in dx.iter_mut().zip(g).zip(xv) {
                        if xi > floor {
                            *d += gi / xi;
                        }
                    }
                });
            }
            Op::Pick { x, index } => acc(*x, &mut |dx| dx[*index] += g[0]),
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Max-subtracted softmax over a nonempty slice.
pub fn softmax_values(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
