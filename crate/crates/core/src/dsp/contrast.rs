use super::{Spectrogram, LOG_FLOOR};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastConfig {
    /// Octave bands above `fmin`; one extra band below `fmin` brings the
    /// output width to `n_bands + 1`.
    pub n_bands: usize,
    pub fmin: f64,
    /// Fraction of a band's bins averaged for the peak and for the valley.
    pub alpha_quantile: f64,
}

impl Default for ContrastConfig {
    fn default() -> Self {
        Self {
            n_bands: 6,
            fmin: 200.0,
            alpha_quantile: 0.02,
        }
    }
}

impl ContrastConfig {
    /// Bin index ranges `[start, end)` of each band for the given spectrogram grid.
    pub fn band_bins(&self, bin_hz: f64, n_bins: usize) -> Result<Vec<(usize, usize)>> {
        if self.n_bands == 0 {
            return Err(Error::Config("spectral contrast needs at least one band".into()));
        }
        if !(self.alpha_quantile > 0.0 && self.alpha_quantile <= 0.5) {
            return Err(Error::Config(format!(
                "alpha quantile {} outside (0, 0.5]",
                self.alpha_quantile
            )));
        }
        let nyquist = bin_hz * (n_bins - 1) as f64;
        let mut edges = vec![0.0];
        edges.extend((0..self.n_bands).map(|k| self.fmin * 2f64.powi(k as i32)));
        edges.push(f64::INFINITY);

        let mut out = Vec::with_capacity(self.n_bands + 1);
        for (b, e) in edges.windows(2).enumerate() {
            let (lo, hi) = (e[0], e[1].min(nyquist));
            let top = b == self.n_bands;
            let start = (0..n_bins).find(|&k| k as f64 * bin_hz >= lo).unwrap_or(n_bins);
            let end = (start..n_bins)
                .find(|&k| {
                    let f = k as f64 * bin_hz;
                    if top { f > hi } else { f >= hi }
                })
                .unwrap_or(n_bins);
            if end <= start {
                return Err(Error::Config(format!(
                    "contrast band {b} ({lo:.1}-{hi:.1} Hz) holds no FFT bins; lower n_bands or raise n_fft"
                )));
            }
            out.push((start, end));
        }
        Ok(out)
    }
}

/// Per frame and band: log mean of the top `alpha` fraction of bins minus the
/// log mean of the bottom fraction. Output is `n_frames × (n_bands + 1)`.
pub fn spectral_contrast(spec: &Spectrogram, cfg: &ContrastConfig) -> Result<Matrix> {
    let bands = cfg.band_bins(spec.bin_hz, spec.n_bins())?;
    let mut out = Matrix::zeros(spec.n_frames(), bands.len());
    let mut sorted = Vec::with_capacity(spec.n_bins());
    for f in 0..spec.n_frames() {
        let row = spec.power.row(f);
        for (b, &(start, end)) in bands.iter().enumerate() {
            sorted.clear();
            sorted.extend_from_slice(&row[start..end]);
            sorted.sort_unstable_by(f64::total_cmp);
            let n = sorted.len();
            let k = ((cfg.alpha_quantile * n as f64).round() as usize).clamp(1, n);
            let valley = sorted[..k].iter().sum::<f64>() / k as f64;
            let peak = sorted[n - k..].iter().sum::<f64>() / k as f64;
            out.set(f, b, peak.max(LOG_FLOOR).ln() - valley.max(LOG_FLOOR).ln());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;

    fn spectrogram(rows: Vec<Vec<f64>>, bin_hz: f64) -> Spectrogram {
        let n_fft = (rows[0].len() - 1) * 2;
        Spectrogram::new(Matrix::from_rows(&rows).unwrap(), bin_hz, n_fft).unwrap()
    }

    #[test]
    fn default_bands_at_16k() {
        let bands = ContrastConfig::default().band_bins(31.25, 257).unwrap();
        assert_eq!(bands.len(), 7);
        assert_eq!(bands[0], (0, 7)); // 0..200 Hz
        assert_eq!(bands[1], (7, 13)); // 218.75..375
        assert_eq!(bands.last().unwrap().1, 257);
        for w in bands.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }

    #[test]
    fn flat_spectrum_has_zero_contrast() {
        let s = spectrogram(vec![vec![3.0; 257]; 2], 31.25);
        let c = spectral_contrast(&s, &ContrastConfig::default()).unwrap();
        assert!(c.as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dominant_bin_over_floor() {
        let cfg = ContrastConfig::default();
        let bands = cfg.band_bins(31.25, 257).unwrap();
        let mut row = vec![1e-8; 257];
        for &(s, _) in &bands {
            row[s] = 10.0;
        }
        let c = spectral_contrast(&spectrogram(vec![row], 31.25), &cfg).unwrap();
        for (b, &(s, e)) in bands.iter().enumerate() {
            let k = ((0.02 * (e - s) as f64).round() as usize).max(1);
            let peak = (10.0 + (k - 1) as f64 * 1e-8) / k as f64;
            let want = peak.ln() - 1e-8f64.ln();
            assert!((c.get(0, b) - want).abs() < 1e-9, "band {b}");
            assert!(c.get(0, b) > 0.0);
        }
    }

    #[test]
    fn too_small_fft_is_a_config_error() {
        // 8 kHz audio, 64-point FFT: 125 Hz bins leave the 200-400 Hz band with a single bin
        // but the upper bands run past Nyquist.
        let s = spectrogram(vec![vec![1.0; 33]], 125.0);
        assert!(matches!(
            spectral_contrast(&s, &ContrastConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn non_negative_on_random_input() {
        let mut rng = Rng::new(1);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..257).map(|_| rng.uniform().powi(4)).collect())
            .collect();
        let c = spectral_contrast(&spectrogram(rows, 31.25), &ContrastConfig::default()).unwrap();
        assert!(c.as_slice().iter().all(|v| *v >= 0.0));
    }
}
