//! Party-state recurrent networks for emotion recognition in conversation.
//!
//! Each utterance updates a global state, the speaker's party state (with
//! attention over past global states) and an emotion representation that
//! feeds a classification or regression head. Bidirectional and
//! emotion-attention variants, ablations, and analysis tooling are included.

pub mod autodiff;
pub mod corpus;
pub mod error;
pub mod gru;
pub mod metrics;
pub mod model;
pub mod training;

pub use error::{Error, Result};
