use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    EarlyConcatV1,
    ModalityAttentionV2,
    WeightedAttentionV3,
}

impl Architecture {
    pub fn from_submission(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Architecture::EarlyConcatV1),
            2 => Ok(Architecture::ModalityAttentionV2),
            3 => Ok(Architecture::WeightedAttentionV3),
            other => Err(Error::Config(format!("no submission {other}; expected 1, 2 or 3"))),
        }
    }

    pub fn uses_acoustic(self) -> bool {
        self != Architecture::EarlyConcatV1
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::EarlyConcatV1 => "early_concat_v1",
            Architecture::ModalityAttentionV2 => "modality_attention_v2",
            Architecture::WeightedAttentionV3 => "weighted_attention_v3",
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub architecture: Architecture,
    pub audio_dim: usize,
    pub text_dim: usize,
    pub acoustic_dim: Option<usize>,
    /// Width of each per-modality projection (v2/v3).
    pub proj_dim: usize,
    /// Width of the penultimate layer, also used for the attention scorer.
    pub hidden_dim: usize,
}

impl FusionConfig {
    pub fn new(architecture: Architecture, audio_dim: usize, text_dim: usize, acoustic_dim: Option<usize>) -> Self {
        Self {
            architecture,
            audio_dim,
            text_dim,
            acoustic_dim,
            proj_dim: 128,
            hidden_dim: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.audio_dim == 0 || self.text_dim == 0 || self.proj_dim < 2 || self.hidden_dim == 0 {
            return Err(Error::Config(format!("all dimensions must be positive: {self:?}")));
        }
        match (self.architecture.uses_acoustic(), self.acoustic_dim) {
            (false, Some(_)) => Err(Error::Config(
                "early_concat_v1 uses audio and text only; acoustic_dim must be unset".into(),
            )),
            (true, None | Some(0)) => Err(Error::Config(format!(
                "{} needs a positive acoustic_dim",
                self.architecture
            ))),
            _ => Ok(()),
        }
    }

    pub fn check_input(&self, input: &ModalityInput) -> Result<()> {
        if input.audio.len() != self.audio_dim || input.text.len() != self.text_dim {
            return Err(Error::Input(format!(
                "audio/text dims {}/{} do not match model {}/{}",
                input.audio.len(),
                input.text.len(),
                self.audio_dim,
                self.text_dim
            )));
        }
        if let Some(dim) = self.acoustic_dim {
            match &input.acoustic {
                None => return Err(Error::Input(format!("{} needs acoustic features", self.architecture))),
                Some(a) if a.len() != dim => {
                    return Err(Error::Input(format!(
                        "acoustic dim {} does not match model {dim}",
                        a.len()
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Pooled per-subject vectors for each modality.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityInput {
    pub audio: Vec<f64>,
    pub text: Vec<f64>,
    pub acoustic: Option<Vec<f64>>,
}

impl ModalityInput {
    pub fn new(audio: Vec<f64>, text: Vec<f64>, acoustic: Option<Vec<f64>>) -> Self {
        Self { audio, text, acoustic }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v1_rejects_acoustic_dim() {
        let cfg = FusionConfig::new(Architecture::EarlyConcatV1, 4, 4, Some(3));
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = FusionConfig::new(Architecture::WeightedAttentionV3, 4, 4, None);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn serde_names() {
        let s = serde_json::to_string(&Architecture::ModalityAttentionV2).unwrap();
        assert_eq!(s, "\"modality_attention_v2\"");
    }
}
