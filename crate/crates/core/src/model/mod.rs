//! The party-state recurrent architecture.

mod checkpoint;
mod config;
mod forward;
mod params;

pub use checkpoint::{Checkpoint, NamedTable};
pub use config::{Ablation, ListenerUpdate, Mode, ModelConfig, Variant};
pub use forward::{
    argmax, attend_context, classify, emotion_attention, emotion_update, forward_bidirectional,
    forward_dialogue, global_update, listener_update, predict_regression, speaker_update,
    DialogueState, ForwardPass, ForwardTrace,
};
pub use params::{DirectionParams, Parameters};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Tensor};
use crate::corpus::Dialogue;
use crate::error::Result;

/// A configuration paired with parameter values.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: Parameters<Tensor>,
}

impl Model {
    /// Freshly initialized model; the seed fully determines the parameters.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = Parameters::init(&config, &mut rng);
        Ok(Model { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: Parameters<Tensor>) -> Result<Self> {
        config.validate()?;
        params.validate(&config)?;
        Ok(Model { config, params })
    }

    /// Inference on a private tape.
    pub fn forward(&self, dialogue: &Dialogue) -> Result<ForwardTrace> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        Ok(forward_dialogue(&mut tape, &vars, &self.config, dialogue)?.trace)
    }
}
