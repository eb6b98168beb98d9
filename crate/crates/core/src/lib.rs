//! Multimodal speech-based risk screening pipeline.
//!
//! The crate covers everything downstream of the pretrained speech and text
//! encoders:
//!
//! - [`dsp`]: handcrafted acoustic features (MFCC, spectral contrast, a
//!   multi-threshold YIN pitch tracker) and their per-file aggregation.
//! - [`embedding`]: the SWEM matrix interchange format, chunking and pooling
//!   strategies, label files and manifest-driven dataset assembly.
//! - [`nn`]: a small float64 neural-network toolkit with analytic gradients.
//! - [`fusion`]: the three fusion classifiers (early concatenation,
//!   modality attention, weighted attention) plus fold ensembles.
//! - [`train`]: training loops, k-fold ensembling and evaluation metrics.
//! - [`analysis`]: pre-logit extraction and exact t-SNE with scatter export.
//! - [`synth`]: a deterministic synthetic stand-in corpus.

pub mod analysis;
pub mod dsp;
pub mod embedding;
mod error;
mod matrix;
pub mod fusion;
pub mod nn;
mod rng;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use rng::Rng;
