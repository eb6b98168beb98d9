//! Handcrafted acoustic features.
//!
//! Everything here is a pure function of its inputs. The per-file pipeline is
//! framing → power spectrum → {MFCC, spectral contrast}, plus a YIN-based
//! pitch tracker run on the same frame grid so all tracks align frame by frame.
//! [`extract_acoustic`] runs the whole chain and aggregates it into an
//! [`AcousticFeatureVector`].

mod acoustic;
mod contrast;
mod mfcc;
mod pitch;
mod spectrum;
mod wav;

pub use acoustic::{aggregate_acoustic, extract_acoustic, AcousticConfig, AcousticFeatureVector, FeatureVersion};
pub use contrast::{spectral_contrast, ContrastConfig};
pub use mfcc::{dct_ortho, hz_to_mel, mel_filterbank, mel_to_hz, mfcc, mfcc_from_spectrogram, Dct2, MelFilterbank};
pub use pitch::{pyin_track, PitchConfig, PitchTrack, THRESHOLDS};
pub use spectrum::{frame_and_spectrum, Spectrogram};
pub use wav::{read_wav, read_wav_bytes, write_wav, write_wav_pcm16};

use crate::{Error, Result};

/// Floor applied before every logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

/// Mono PCM audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Domain("sample rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::InsufficientInput("audio has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Domain(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    pub frame_len: usize,
    pub hop_len: usize,
    pub n_fft: usize,
    pub window: Window,
}

impl FrameConfig {
    pub fn new(frame_len: usize, hop_len: usize, n_fft: usize, window: Window) -> Result<Self> {
        let cfg = Self {
            frame_len,
            hop_len,
            n_fft,
            window,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 25 ms frames, 10 ms hop, Hann window, FFT size rounded up to a power of two.
    pub fn speech_default(sample_rate: u32) -> Self {
        let sr = sample_rate as usize;
        let frame_len = (sr * 25 / 1000).max(1);
        let hop_len = (sr / 100).max(1);
        Self {
            frame_len,
            hop_len,
            n_fft: frame_len.next_power_of_two(),
            window: Window::Hann,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hop_len == 0 || self.hop_len > self.frame_len || self.frame_len > self.n_fft {
            return Err(Error::Config(format!(
                "frame config requires 0 < hop ({}) <= frame ({}) <= n_fft ({})",
                self.hop_len, self.frame_len, self.n_fft
            )));
        }
        Ok(())
    }

    /// Number of full frames that fit in `n_samples`.
    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.frame_len {
            0
        } else {
            1 + (n_samples - self.frame_len) / self.hop_len
        }
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }
}
