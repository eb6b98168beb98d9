use serde::{Deserialize, Serialize};

use super::{
    frame_and_spectrum, mfcc_from_spectrogram, pyin_track, spectral_contrast, AudioBuffer,
    ContrastConfig, FrameConfig, PitchConfig, PitchTrack,
};
use crate::{Error, Matrix, Result};

/// Which acoustic feature set to emit: MFCC means only, or MFCC means plus
/// spectral contrast and pitch statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureVersion {
    V2,
    V3,
}

impl FeatureVersion {
    pub fn dim(self, n_mfcc: usize, n_contrast: usize) -> usize {
        match self {
            FeatureVersion::V2 => n_mfcc,
            FeatureVersion::V3 => n_mfcc + n_contrast + 3,
        }
    }
}

impl std::str::FromStr for FeatureVersion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "v2" | "2" => Ok(FeatureVersion::V2),
            "v3" | "3" => Ok(FeatureVersion::V3),
            other => Err(Error::Value(format!("unknown feature version {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticConfig {
    /// `None` uses [`FrameConfig::speech_default`] for the file's sample rate.
    pub frame: Option<FrameConfig>,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub contrast: ContrastConfig,
    pub pitch: PitchConfig,
}

impl Default for AcousticConfig {
    fn default() -> Self {
        Self {
            frame: None,
            n_mels: 128,
            n_mfcc: 40,
            contrast: ContrastConfig::default(),
            pitch: PitchConfig::default(),
        }
    }
}

/// Time-aggregated handcrafted features for one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticFeatureVector {
    pub version: FeatureVersion,
    pub mfcc_mean: Vec<f64>,
    /// Empty for [`FeatureVersion::V2`].
    pub contrast_mean: Vec<f64>,
    pub f0_mean: f64,
    pub f0_std: f64,
    pub voiced_prob_mean: f64,
}

impl AcousticFeatureVector {
    /// Flat feature vector: MFCC means, then (v3 only) contrast means, f0 mean,
    /// f0 std and mean voiced probability.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.mfcc_mean.clone();
        if self.version == FeatureVersion::V3 {
            v.extend_from_slice(&self.contrast_mean);
            v.extend([self.f0_mean, self.f0_std, self.voiced_prob_mean]);
        }
        v
    }

    pub fn len(&self) -> usize {
        match self.version {
            FeatureVersion::V2 => self.mfcc_mean.len(),
            FeatureVersion::V3 => self.mfcc_mean.len() + self.contrast_mean.len() + 3,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn aggregate_acoustic(
    mfcc: &Matrix,
    contrast: Option<&Matrix>,
    pitch: Option<&PitchTrack>,
    version: FeatureVersion,
) -> Result<AcousticFeatureVector> {
    let n = mfcc.rows();
    if n == 0 {
        return Err(Error::InsufficientInput("no MFCC frames to aggregate".into()));
    }
    if let Some(c) = contrast {
        if c.rows() != n {
            return Err(Error::Alignment(format!(
                "{} contrast frames vs {n} MFCC frames",
                c.rows()
            )));
        }
    }
    if let Some(p) = pitch {
        if p.n_frames() != n || p.voiced_prob.len() != n {
            return Err(Error::Alignment(format!(
                "{} pitch frames vs {n} MFCC frames",
                p.n_frames()
            )));
        }
    }

    let mfcc_mean = mfcc.column_means();
    let out = match version {
        FeatureVersion::V2 => AcousticFeatureVector {
            version,
            mfcc_mean,
            contrast_mean: Vec::new(),
            f0_mean: 0.0,
            f0_std: 0.0,
            voiced_prob_mean: 0.0,
        },
        FeatureVersion::V3 => {
            let (contrast, pitch) = contrast.zip(pitch).ok_or_else(|| {
                Error::Input("v3 aggregation needs spectral contrast and pitch tracks".into())
            })?;
            let voiced: Vec<f64> = pitch.f0.iter().copied().filter(|f| *f > 0.0).collect();
            let (f0_mean, f0_std) = if voiced.is_empty() {
                (0.0, 0.0)
            } else {
                let m = voiced.iter().sum::<f64>() / voiced.len() as f64;
                let var = voiced.iter().map(|f| (f - m) * (f - m)).sum::<f64>() / voiced.len() as f64;
                (m, var.sqrt())
            };
            AcousticFeatureVector {
                version,
                mfcc_mean,
                contrast_mean: contrast.column_means(),
                f0_mean,
                f0_std,
                voiced_prob_mean: pitch.voiced_prob.iter().sum::<f64>() / n as f64,
            }
        }
    };
    if out.to_vec().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("aggregated acoustic features are not finite".into()));
    }
    Ok(out)
}

/// Full per-file pipeline: one shared frame grid for MFCC, contrast and pitch.
pub fn extract_acoustic(
    audio: &AudioBuffer,
    cfg: &AcousticConfig,
    version: FeatureVersion,
) -> Result<AcousticFeatureVector> {
    let frame = cfg
        .frame
        .unwrap_or_else(|| FrameConfig::speech_default(audio.sample_rate()));
    let spec = frame_and_spectrum(audio, &frame)?;
    let mfcc = mfcc_from_spectrogram(&spec, audio.sample_rate(), cfg.n_mels, cfg.n_mfcc)?;
    match version {
        FeatureVersion::V2 => aggregate_acoustic(&mfcc, None, None, version),
        FeatureVersion::V3 => {
            let contrast = spectral_contrast(&spec, &cfg.contrast)?;
            let pitch = pyin_track(audio, &frame, cfg.pitch.fmin, cfg.pitch.fmax)?;
            aggregate_acoustic(&mfcc, Some(&contrast), Some(&pitch), version)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(f0: Vec<f64>, vp: Vec<f64>) -> PitchTrack {
        PitchTrack { f0, voiced_prob: vp }
    }

    #[test]
    fn single_frame_is_identity() {
        let mfcc = Matrix::from_rows(&[vec![1.5; 40]]).unwrap();
        let contrast = Matrix::from_rows(&[vec![0.25; 7]]).unwrap();
        let p = track(vec![210.0], vec![0.7]);
        let v = aggregate_acoustic(&mfcc, Some(&contrast), Some(&p), FeatureVersion::V3).unwrap();
        assert_eq!(v.mfcc_mean, vec![1.5; 40]);
        assert_eq!(v.contrast_mean, vec![0.25; 7]);
        assert_eq!((v.f0_mean, v.f0_std, v.voiced_prob_mean), (210.0, 0.0, 0.7));
        assert_eq!(v.to_vec().len(), 50);
    }

    #[test]
    fn mean_over_frames() {
        let mfcc = Matrix::from_rows(&[vec![1.0; 40], vec![3.0; 40]]).unwrap();
        let v = aggregate_acoustic(&mfcc, None, None, FeatureVersion::V2).unwrap();
        assert_eq!(v.mfcc_mean[0], 2.0);
        assert_eq!(v.to_vec().len(), 40);
    }

    #[test]
    fn unvoiced_frames_are_excluded_from_f0_stats() {
        let mfcc = Matrix::zeros(4, 40);
        let contrast = Matrix::zeros(4, 7);
        let p = track(vec![0.0, 100.0, 0.0, 200.0], vec![0.0, 1.0, 0.0, 1.0]);
        let v = aggregate_acoustic(&mfcc, Some(&contrast), Some(&p), FeatureVersion::V3).unwrap();
        assert_eq!(v.f0_mean, 150.0);
        assert_eq!(v.f0_std, 50.0);
        assert_eq!(v.voiced_prob_mean, 0.5);

        let silent = track(vec![0.0; 4], vec![0.0; 4]);
        let v = aggregate_acoustic(&mfcc, Some(&contrast), Some(&silent), FeatureVersion::V3).unwrap();
        assert_eq!((v.f0_mean, v.f0_std), (0.0, 0.0));
    }

    #[test]
    fn misaligned_tracks() {
        let mfcc = Matrix::zeros(4, 40);
        let contrast = Matrix::zeros(3, 7);
        let p = track(vec![0.0; 4], vec![0.0; 4]);
        assert!(matches!(
            aggregate_acoustic(&mfcc, Some(&contrast), Some(&p), FeatureVersion::V3),
            Err(Error::Alignment(_))
        ));
        let short = track(vec![0.0; 5], vec![0.0; 5]);
        assert!(matches!(
            aggregate_acoustic(&mfcc, Some(&Matrix::zeros(4, 7)), Some(&short), FeatureVersion::V3),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn v3_prefix_equals_v2() {
        let n = 16000;
        let s = (0..n)
            .map(|i| 0.3 * (2.0 * std::f64::consts::PI * 180.0 * i as f64 / 16000.0).sin())
            .collect();
        let a = AudioBuffer::new(s, 16000).unwrap();
        let cfg = AcousticConfig::default();
        let v2 = extract_acoustic(&a, &cfg, FeatureVersion::V2).unwrap().to_vec();
        let v3 = extract_acoustic(&a, &cfg, FeatureVersion::V3).unwrap().to_vec();
        assert_eq!(v2.len(), 40);
        assert_eq!(v3.len(), 50);
        assert_eq!(v2.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                   v3[..40].iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}
