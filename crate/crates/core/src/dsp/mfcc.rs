use super::{frame_and_spectrum, AudioBuffer, FrameConfig, Spectrogram, LOG_FLOOR};
use crate::{Error, Matrix, Result};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters on the HTK mel scale, stored sparsely as
/// `(first_bin, weights)` per filter. Peaks are 1 (no area normalisation).
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    filters: Vec<(usize, Vec<f64>)>,
    n_bins: usize,
}

impl MelFilterbank {
    pub fn n_mels(&self) -> usize {
        self.filters.len()
    }

    /// Dense `n_mels × n_bins` weight matrix.
    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.filters.len(), self.n_bins);
        for (i, (start, w)) in self.filters.iter().enumerate() {
            m.row_mut(i)[*start..start + w.len()].copy_from_slice(w);
        }
        m
    }

    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        for ((start, w), o) in self.filters.iter().zip(out.iter_mut()) {
            *o = w.iter().zip(&power[*start..]).map(|(a, b)| a * b).sum();
        }
    }
}

pub fn mel_filterbank(
    sample_rate: u32,
    n_fft: usize,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
) -> Result<MelFilterbank> {
    if n_mels == 0 {
        return Err(Error::Config("n_mels must be positive".into()));
    }
    let nyquist = f64::from(sample_rate) / 2.0;
    if !(0.0..fmax).contains(&fmin) || fmax > nyquist {
        return Err(Error::Config(format!(
            "mel range [{fmin}, {fmax}] must satisfy 0 <= fmin < fmax <= {nyquist}"
        )));
    }
    let n_bins = n_fft / 2 + 1;
    let (mlo, mhi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mlo + (mhi - mlo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = f64::from(sample_rate) / n_fft as f64;

    let filters = edges
        .windows(3)
        .map(|e| {
            let (lo, centre, hi) = (e[0], e[1], e[2]);
            let weights: Vec<f64> = (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let up = (f - lo) / (centre - lo);
                    let down = (hi - f) / (hi - centre);
                    up.min(down).max(0.0)
                })
                .collect();
            match weights.iter().position(|w| *w > 0.0) {
                Some(first) => {
                    let last = weights.iter().rposition(|w| *w > 0.0).unwrap();
                    (first, weights[first..=last].to_vec())
                }
                // empty filter: its energy is always zero and hits the log floor
                None => (0, Vec::new()),
            }
        })
        .collect();
    Ok(MelFilterbank { filters, n_bins })
}

/// Orthonormal DCT-II basis, keeping the first `n_out` coefficients.
#[derive(Debug, Clone)]
pub struct Dct2 {
    n_in: usize,
    basis: Vec<f64>,
}

impl Dct2 {
    pub fn new(n_in: usize, n_out: usize) -> Self {
        let n = n_in as f64;
        let mut basis = Vec::with_capacity(n_in * n_out);
        for k in 0..n_out {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            for i in 0..n_in {
                let arg = std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n);
                basis.push(scale * arg.cos());
            }
        }
        Self { n_in, basis }
    }

    pub fn apply(&self, input: &[f64], out: &mut [f64]) {
        for (o, b) in out.iter_mut().zip(self.basis.chunks_exact(self.n_in)) {
            *o = b.iter().zip(input).map(|(a, x)| a * x).sum();
        }
    }
}

pub fn dct_ortho(input: &[f64], n_out: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_out];
    Dct2::new(input.len(), n_out).apply(input, &mut out);
    out
}

/// MFCC matrix `n_frames × n_mfcc`: power spectrum → mel filterbank over
/// `[0, sr/2]` → natural log (floored) → orthonormal DCT-II.
pub fn mfcc(audio: &AudioBuffer, cfg: &FrameConfig, n_mels: usize, n_mfcc: usize) -> Result<Matrix> {
    check_mfcc_args(audio.sample_rate(), n_mels, n_mfcc)?;
    let spec = frame_and_spectrum(audio, cfg)?;
    mfcc_from_spectrogram(&spec, audio.sample_rate(), n_mels, n_mfcc)
}

fn check_mfcc_args(sample_rate: u32, n_mels: usize, n_mfcc: usize) -> Result<()> {
    if n_mfcc > n_mels {
        return Err(Error::Config(format!(
            "n_mfcc ({n_mfcc}) exceeds n_mels ({n_mels})"
        )));
    }
    if sample_rate < 8000 {
        return Err(Error::Config(format!(
            "sample rate {sample_rate} Hz is below the 8 kHz minimum"
        )));
    }
    Ok(())
}

pub fn mfcc_from_spectrogram(
    spec: &Spectrogram,
    sample_rate: u32,
    n_mels: usize,
    n_mfcc: usize,
) -> Result<Matrix> {
    check_mfcc_args(sample_rate, n_mels, n_mfcc)?;
    let bank = mel_filterbank(sample_rate, spec.n_fft, n_mels, 0.0, f64::from(sample_rate) / 2.0)?;
    let dct = Dct2::new(n_mels, n_mfcc);
    let mut out = Matrix::zeros(spec.n_frames(), n_mfcc);
    let mut mel = vec![0.0; n_mels];
    for f in 0..spec.n_frames() {
        bank.apply(spec.power.row(f), &mut mel);
        mel.iter_mut().for_each(|e| *e = e.max(LOG_FLOOR).ln());
        dct.apply(&mel, out.row_mut(f));
    }
    Ok(out)
}
