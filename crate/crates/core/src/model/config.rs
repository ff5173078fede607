use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Classification,
    Regression,
}

/// How non-speaking parties' states evolve on each turn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ListenerUpdate {
    /// Listener states are carried over unchanged.
    #[default]
    Identity,
    /// Listener states are updated by a dedicated GRU from cue features and context.
    Gru,
}

/// Component removal used by the ablation study.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    None,
    /// Party states stay at zero; the emotion GRU reads the attention context instead.
    NoPartyState,
    /// The head reads the speaker's updated party state directly.
    NoEmotionGru,
}

/// The four published architecture variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "base")]
    Base,
    #[serde(rename = "bi")]
    Bi,
    #[serde(rename = "att")]
    Att,
    #[serde(rename = "bi+att")]
    BiAtt,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Base, Variant::Bi, Variant::Att, Variant::BiAtt];

    pub fn bidirectional(self) -> bool {
        matches!(self, Variant::Bi | Variant::BiAtt)
    }

    pub fn emotion_attention(self) -> bool {
        matches!(self, Variant::Att | Variant::BiAtt)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Base => "base",
            Variant::Bi => "bi",
            Variant::Att => "att",
            Variant::BiAtt => "bi+att",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Variant::Base),
            "bi" => Ok(Variant::Bi),
            "att" => Ok(Variant::Att),
            "bi+att" => Ok(Variant::BiAtt),
            other => Err(Error::Config(format!(
                "unknown variant `{other}` (expected base, bi, att or bi+att)"
            ))),
        }
    }
}

/// All extents and switches of the architecture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Utterance feature size.
    pub utterance_size: usize,
    pub global_size: usize,
    pub party_size: usize,
    pub emotion_size: usize,
    /// Hidden size of the two-layer head.
    pub classifier_size: usize,
    /// Listener cue size, used by the GRU listener update.
    pub listener_cue_size: usize,
    /// Class count (classification) or attribute count (regression).
    pub outputs: usize,
    pub parties: usize,
    pub mode: Mode,
    #[serde(default)]
    pub listener_update: ListenerUpdate,
    #[serde(default)]
    pub bidirectional: bool,
    #[serde(default)]
    pub emotion_attention: bool,
    #[serde(default)]
    pub ablation: Ablation,
}

impl ModelConfig {
    /// Classification config with every hidden extent set to `hidden`.
    pub fn classification(utterance_size: usize, hidden: usize, classes: usize) -> Self {
        ModelConfig {
            utterance_size,
            global_size: hidden,
            party_size: hidden,
            emotion_size: hidden,
            classifier_size: hidden,
            listener_cue_size: 7,
            outputs: classes,
            parties: 2,
            mode: Mode::Classification,
            listener_update: ListenerUpdate::Identity,
            bidirectional: false,
            emotion_attention: false,
            ablation: Ablation::None,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.bidirectional = variant.bidirectional();
        self.emotion_attention = variant.emotion_attention();
        self
    }

    pub fn variant(&self) -> Variant {
        match (self.bidirectional, self.emotion_attention) {
            (false, false) => Variant::Base,
            (true, false) => Variant::Bi,
            (false, true) => Variant::Att,
            (true, true) => Variant::BiAtt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let extents = [
            ("utterance_size", self.utterance_size),
            ("global_size", self.global_size),
            ("party_size", self.party_size),
            ("emotion_size", self.emotion_size),
            ("classifier_size", self.classifier_size),
            ("listener_cue_size", self.listener_cue_size),
            ("outputs", self.outputs),
        ];
        for (name, v) in extents {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.parties < 2 {
            return Err(Error::Config(format!(
                "at least 2 parties required, got {}",
                self.parties
            )));
        }
        if self.mode == Mode::Classification && self.outputs < 2 {
            return Err(Error::Config(format!(
                "classification needs at least 2 classes, got {}",
                self.outputs
            )));
        }
        Ok(())
    }

    pub fn directions(&self) -> usize {
        if self.bidirectional {
            2
        } else {
            1
        }
    }

    pub fn has_party_state(&self) -> bool {
        self.ablation != Ablation::NoPartyState
    }

    pub fn has_emotion_gru(&self) -> bool {
        self.ablation != Ablation::NoEmotionGru
    }

    pub fn has_listener_gru(&self) -> bool {
        self.listener_update == ListenerUpdate::Gru && self.has_party_state()
    }

    /// Per-direction size of the representation fed to the head.
    pub fn representation_size(&self) -> usize {
        if self.has_emotion_gru() {
            self.emotion_size
        } else {
            self.party_size
        }
    }

    /// Input size of the emotion GRU.
    pub fn emotion_input_size(&self) -> usize {
        if self.has_party_state() {
            self.party_size
        } else {
            self.global_size
        }
    }

    pub fn head_input_size(&self) -> usize {
        self.directions() * self.representation_size()
    }
}
