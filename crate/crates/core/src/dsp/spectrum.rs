use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{AudioBuffer, FrameConfig};
use crate::{Error, Matrix, Result};

/// Framewise power spectrum, `n_frames × (n_fft/2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub power: Matrix,
    /// Width of one frequency bin in Hz.
    pub bin_hz: f64,
    pub n_fft: usize,
}

impl Spectrogram {
    pub fn new(power: Matrix, bin_hz: f64, n_fft: usize) -> Result<Self> {
        if power.cols() != n_fft / 2 + 1 {
            return Err(Error::Shape(format!(
                "{} bins do not match n_fft {n_fft}",
                power.cols()
            )));
        }
        if power.as_slice().iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Domain("power spectrum must be finite and non-negative".into()));
        }
        Ok(Self { power, bin_hz, n_fft })
    }

    pub fn n_frames(&self) -> usize {
        self.power.rows()
    }

    pub fn n_bins(&self) -> usize {
        self.power.cols()
    }

    pub fn nyquist(&self) -> f64 {
        self.bin_hz * (self.n_fft as f64) / 2.0
    }
}

pub fn frame_and_spectrum(audio: &AudioBuffer, cfg: &FrameConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let samples = audio.samples();
    let n_frames = cfg.n_frames(samples.len());
    if n_frames == 0 {
        return Err(Error::InsufficientInput(format!(
            "{} samples is shorter than one {}-sample frame",
            samples.len(),
            cfg.frame_len
        )));
    }
    let window = cfg.window.coefficients(cfg.frame_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.n_fft);
    let n_bins = cfg.n_bins();
    let mut power = Matrix::zeros(n_frames, n_bins);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.n_fft];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    for f in 0..n_frames {
        let frame = &samples[f * cfg.hop_len..f * cfg.hop_len + cfg.frame_len];
        for (b, (s, w)) in buf.iter_mut().zip(frame.iter().zip(&window)) {
            *b = Complex::new(s * w, 0.0);
        }
        buf[cfg.frame_len..].fill(Complex::new(0.0, 0.0));
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (p, c) in power.row_mut(f).iter_mut().zip(&buf[..n_bins]) {
            *p = c.norm_sqr();
        }
    }

    Spectrogram::new(
        power,
        f64::from(audio.sample_rate()) / cfg.n_fft as f64,
        cfg.n_fft,
    )
}
