//! Checkpoint layout: one line of JSON header terminated by `\n`, followed by
//! one SWEM block per parameter block in header order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ensemble::{load_ensemble, EnsembleModel, ENSEMBLE_MANIFEST};
use super::scaler::{InputScaler, Standardizer};
use super::{Classifier, FusionConfig, FusionModel, ModalityInput, Network};
use crate::embedding::{decode_swem, encode_swem, EmbeddingMatrix};
use crate::nn::Parameters;
use crate::{Error, Result, Rng};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub architecture: super::Architecture,
    pub config: FusionConfig,
    pub seed: u64,
    pub blocks: Vec<BlockInfo>,
}

fn all_blocks(model: &FusionModel) -> Vec<(String, &[f64])> {
    let mut blocks = model.network.blocks();
    if let Some(s) = &model.scaler {
        blocks.extend(s.blocks());
    }
    blocks
}

/// Rounds every stored value to `f32`, so an in-memory model behaves exactly
/// like the one read back from its checkpoint.
pub fn round_to_f32(model: &mut FusionModel) {
    for b in model.network.blocks_mut() {
        b.iter_mut().for_each(|v| *v = *v as f32 as f64);
    }
    if let Some(s) = &mut model.scaler {
        for b in s.blocks_mut() {
            b.iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
    }
}

pub fn encode_checkpoint(model: &FusionModel, seed: u64) -> Result<Vec<u8>> {
    let blocks = all_blocks(model);
    let header = CheckpointHeader {
        format_version: CHECKPOINT_FORMAT_VERSION,
        architecture: model.config.architecture,
        config: model.config,
        seed,
        blocks: blocks
            .iter()
            .map(|(name, b)| BlockInfo {
                name: name.clone(),
                len: b.len(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    out.push(b'\n');
    for (_, b) in blocks {
        out.extend(encode_swem(&EmbeddingMatrix::from_vector(b)?));
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(FusionModel, CheckpointHeader)> {
    let nl = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::Format("checkpoint header is not newline-terminated".into()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
    if header.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "checkpoint format version {} (expected {CHECKPOINT_FORMAT_VERSION})",
            header.format_version
        )));
    }
    if header.architecture != header.config.architecture {
        return Err(Error::Format("architecture tag disagrees with config".into()));
    }
    let config = header.config;
    let mut model = FusionModel {
        network: Network::build(&config, &mut Rng::new(0))?,
        config,
        scaler: None,
    };
    if header.blocks.iter().any(|b| b.name.starts_with("scaler.")) {
        let blank = |d: usize| Standardizer {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        };
        model.scaler = Some(InputScaler {
            audio: blank(config.audio_dim),
            text: blank(config.text_dim),
            acoustic: config.acoustic_dim.map(blank),
        });
    }
    let expected: Vec<BlockInfo> = all_blocks(&model)
        .into_iter()
        .map(|(name, b)| BlockInfo { name, len: b.len() })
        .collect();
    if expected != header.blocks {
        return Err(Error::Format("checkpoint blocks do not match the declared architecture".into()));
    }

    let mut at = nl + 1;
    let mut values = Vec::with_capacity(expected.len());
    for info in &expected {
        let (m, used) = decode_swem(&bytes[at..])?;
        if m.rows() * m.cols() != info.len {
            return Err(Error::Format(format!("block {} has {} values", info.name, m.rows() * m.cols())));
        }
        values.push(m.as_slice().iter().map(|v| *v as f64).collect::<Vec<f64>>());
        at += used;
    }
    if at != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after last block", bytes.len() - at)));
    }
    let mut values = values.into_iter();
    for b in model.network.blocks_mut() {
        b.copy_from_slice(&values.next().expect("block count checked"));
    }
    if let Some(s) = &mut model.scaler {
        for b in s.blocks_mut() {
            b.copy_from_slice(&values.next().expect("block count checked"));
        }
    }
    Ok((model, header))
}

pub fn save_checkpoint(model: &FusionModel, seed: u64, path: &Path) -> Result<()> {
    let bytes = encode_checkpoint(model, seed)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(FusionModel, CheckpointHeader)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

/// A single checkpoint file or an ensemble directory.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedClassifier {
    Single(FusionModel),
    Ensemble(EnsembleModel),
}

impl LoadedClassifier {
    pub fn config(&self) -> &FusionConfig {
        match self {
            LoadedClassifier::Single(m) => &m.config,
            LoadedClassifier::Ensemble(e) => &e.members[0].config,
        }
    }
}

impl Classifier for LoadedClassifier {
    fn predict_proba(&self, input: &ModalityInput) -> Result<[f64; 2]> {
        match self {
            LoadedClassifier::Single(m) => m.predict_proba(input),
            LoadedClassifier::Ensemble(e) => e.predict_proba(input),
        }
    }
}

pub fn load_classifier(path: &Path) -> Result<LoadedClassifier> {
    if path.is_dir() || path.join(ENSEMBLE_MANIFEST).is_file() {
        load_ensemble(path).map(LoadedClassifier::Ensemble)
    } else {
        load_checkpoint(path).map(|(m, _)| LoadedClassifier::Single(m))
    }
}
