//! The three fusion classifiers and fold ensembles.
//!
//! | architecture            | modalities              | fusion                              |
//! |-------------------------|-------------------------|-------------------------------------|
//! | `early_concat_v1`       | audio, text             | concatenate → MLP                   |
//! | `modality_attention_v2` | audio, text, acoustic   | per-modality FFN, α-weighted concat |
//! | `weighted_attention_v3` | audio, text, acoustic   | per-modality FFN, α-weighted sum    |
//!
//! Every forward pass returns a [`ForwardTrace`] with the logits, the
//! penultimate (pre-logit) activations and, for v2/v3, the modality weights.

mod checkpoint;
mod config;
mod ensemble;
mod network;
mod scaler;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, load_classifier, round_to_f32, save_checkpoint, BlockInfo,
    CheckpointHeader, LoadedClassifier, CHECKPOINT_FORMAT_VERSION,
};
pub use config::{Architecture, FusionConfig, ModalityInput, NUM_CLASSES};
pub use ensemble::{load_ensemble, save_ensemble, EnsembleManifest, EnsembleModel, ENSEMBLE_MANIFEST};
pub use network::{AttentionFusion, EarlyConcat, ForwardTrace, FuseMode, Network};
pub use scaler::{InputScaler, Standardizer};

use crate::nn::softmax;
use crate::Result;

/// A trained network together with its input standardisation.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    pub config: FusionConfig,
    pub network: Network,
    pub scaler: Option<InputScaler>,
}

impl FusionModel {
    pub fn build(config: FusionConfig, rng: &mut crate::Rng) -> Result<Self> {
        Ok(Self {
            network: Network::build(&config, rng)?,
            config,
            scaler: None,
        })
    }

    /// Applies the scaler (if any) then runs the network.
    pub fn forward(&self, input: &ModalityInput) -> Result<ForwardTrace> {
        self.config.check_input(input)?;
        match &self.scaler {
            Some(s) => self.network.forward(&s.apply(input)),
            None => self.network.forward(input),
        }
    }
}

/// Anything that maps an input to a two-class probability pair.
pub trait Classifier {
    fn predict_proba(&self, input: &ModalityInput) -> Result<[f64; 2]>;
}

impl Classifier for FusionModel {
    fn predict_proba(&self, input: &ModalityInput) -> Result<[f64; 2]> {
        let p = softmax(&self.forward(input)?.logits);
        Ok([p[0], p[1]])
    }
}

/// Argmax with ties going to class 0 (non-risk).
pub fn predicted_label(proba: [f64; 2]) -> u8 {
    u8::from(proba[1] > proba[0])
}
