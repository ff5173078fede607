//! Dense tensors with tape-based reverse-mode differentiation.

pub mod gradcheck;
mod tape;
mod tensor;

pub use tape::{softmax_values, Activation, Gradients, Tape, Var};
pub use tensor::Tensor;
