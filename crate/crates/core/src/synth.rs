//! Deterministic synthetic corpus with the same on-disk layout as a real one:
//! per-task SWEM embeddings, harmonic-tone WAVs, label files and a manifest.
//!
//! Every embedding row (a segment or sentence vector) is drawn from
//! `N(±s/2 · u, I)` around a seeded unit direction `u` per modality
//! (`s` = `class_separation`), plus a small offset shared by the rows of one
//! task. At-risk tones carry a pitch vibrato whose depth also scales with
//! `s`, so with `s = 0` no input holds any label information.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::write_wav_pcm16;
use crate::embedding::{write_swem, EmbeddingMatrix, Manifest, ManifestSubject, Split};
use crate::{Error, Result, Rng};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LABELS_FILE: &str = "labels.csv";
pub const TEST_LABELS_FILE: &str = "test_labels.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_subjects: usize,
    /// Train, dev and test subject counts.
    pub split: [usize; 3],
    pub audio_dim: usize,
    pub text_dim: usize,
    pub class_separation: f64,
    pub tasks_per_subject: usize,
    /// Embedding rows per task file (segments for audio, sentences for text).
    pub audio_rows: usize,
    pub text_rows: usize,
    /// Std of the offset shared by all rows of one task file.
    pub task_noise: f64,
    pub write_wavs: bool,
    pub wav_seconds: f64,
    pub sample_rate: u32,
    /// Range of the per-subject base f0 in Hz.
    pub f0_range: [f64; 2],
    /// Relative vibrato depth per unit of class separation (at-risk only).
    pub vibrato_per_separation: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 600,
            split: [400, 100, 100],
            audio_dim: 1024,
            text_dim: 1024,
            class_separation: 3.0,
            tasks_per_subject: 3,
            audio_rows: 2,
            text_rows: 3,
            task_noise: 0.1,
            write_wavs: true,
            wav_seconds: 3.0,
            sample_rate: 16_000,
            f0_range: [110.0, 220.0],
            vibrato_per_separation: 0.02,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.split.iter().sum::<usize>() != self.n_subjects {
            return Err(Error::Config(format!(
                "split {:?} does not sum to {} subjects",
                self.split, self.n_subjects
            )));
        }
        if self.split.iter().any(|n| n % 2 != 0 || *n == 0) {
            return Err(Error::Config(format!(
                "every split needs a positive even size for exact class balance, got {:?}",
                self.split
            )));
        }
        if self.audio_dim == 0 || self.text_dim == 0 || self.tasks_per_subject == 0 {
            return Err(Error::Config("dimensions and task count must be positive".into()));
        }
        if self.audio_rows == 0 || self.text_rows == 0 {
            return Err(Error::Config("rows per task file must be positive".into()));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return Err(Error::Config(format!("class separation {} must be >= 0", self.class_separation)));
        }
        if self.write_wavs && (self.wav_seconds <= 0.0 || self.sample_rate < 8000) {
            return Err(Error::Config("WAVs need a positive duration and at least 8 kHz".into()));
        }
        if !(self.f0_range[0] > 0.0 && self.f0_range[0] <= self.f0_range[1]) {
            return Err(Error::Config(format!("bad f0 range {:?}", self.f0_range)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusLayout {
    pub root: PathBuf,
    pub manifest: PathBuf,
    /// Train and dev labels.
    pub labels: PathBuf,
    /// Withheld test labels.
    pub test_labels: PathBuf,
    pub n_subjects: usize,
}

struct SubjectPlan {
    index: usize,
    id: String,
    split: Split,
    label: u8,
}

fn unit_direction(dim: usize, rng: &mut Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Harmonic tone with five partials. Non-risk subjects hold `base_f0`
/// steady; at-risk subjects get a 5 Hz vibrato of relative depth `depth`.
pub fn harmonic_tone(base_f0: f64, depth: f64, phase: f64, seconds: f64, sample_rate: u32, rng: &mut Rng) -> Vec<i16> {
    let n = (seconds * sample_rate as f64).round() as usize;
    let sr = sample_rate as f64;
    let mut theta = 0.0;
    (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let f0 = base_f0 * (1.0 + depth * (TAU * 5.0 * t + phase).sin());
            theta += TAU * f0 / sr;
            let tone: f64 = (1..=5).map(|k| (k as f64 * theta).sin() / k as f64).sum();
            let s = 0.25 * tone + 0.003 * rng.normal();
            (s * 32767.0).round().clamp(-32768.0, 32767.0) as i16
        })
        .collect()
}

/// Writes the corpus under `root` and returns where everything went.
pub fn generate(cfg: &SynthConfig, root: &Path) -> Result<CorpusLayout> {
    cfg.validate()?;
    for sub in ["audio", "text", "wav"] {
        if sub == "wav" && !cfg.write_wavs {
            continue;
        }
        let d = root.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }

    let mut dir_rng = Rng::with_stream(cfg.seed, 0);
    let u_audio = unit_direction(cfg.audio_dim, &mut dir_rng);
    let u_text = unit_direction(cfg.text_dim, &mut dir_rng);

    let mut plans = Vec::with_capacity(cfg.n_subjects);
    let mut label_rng = Rng::with_stream(cfg.seed, 1);
    for (split, &count) in [Split::Train, Split::Dev, Split::Test].iter().zip(&cfg.split) {
        let mut labels: Vec<u8> = (0..count).map(|i| (i % 2) as u8).collect();
        label_rng.shuffle(&mut labels);
        for label in labels {
            let index = plans.len();
            plans.push(SubjectPlan {
                index,
                id: format!("S{:04}", index + 1),
                split: *split,
                label,
            });
        }
    }

    let subjects: Vec<ManifestSubject> = plans
        .par_iter()
        .map(|p| write_subject(cfg, root, p, &u_audio, &u_text))
        .collect::<Result<_>>()?;

    let labels = root.join(LABELS_FILE);
    let test_labels = root.join(TEST_LABELS_FILE);
    write_labels(&labels, plans.iter().filter(|p| p.split != Split::Test))?;
    write_labels(&test_labels, plans.iter().filter(|p| p.split == Split::Test))?;
    let manifest = root.join(MANIFEST_FILE);
    Manifest {
        subjects,
        labels: Some(PathBuf::from(LABELS_FILE)),
    }
    .write(&manifest)?;
    Ok(CorpusLayout {
        root: root.to_path_buf(),
        manifest,
        labels,
        test_labels,
        n_subjects: cfg.n_subjects,
    })
}

fn write_labels<'a>(path: &Path, plans: impl Iterator<Item = &'a SubjectPlan>) -> Result<()> {
    let mut text = String::from("subject_id,label\n");
    for p in plans {
        text.push_str(&format!("{},{}\n", p.id, p.label));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `rows` unit-variance draws around `mean + task offset`.
fn task_matrix(mean: &[f64], rows: usize, task_noise: f64, rng: &mut Rng) -> Result<EmbeddingMatrix> {
    let center: Vec<f64> = mean.iter().map(|m| m + task_noise * rng.normal()).collect();
    let data = (0..rows)
        .flat_map(|_| center.iter().map(|c| (c + rng.normal()) as f32).collect::<Vec<_>>())
        .collect();
    EmbeddingMatrix::new(rows, center.len(), data)
}

fn write_subject(cfg: &SynthConfig, root: &Path, p: &SubjectPlan, u_audio: &[f64], u_text: &[f64]) -> Result<ManifestSubject> {
    let mut rng = Rng::with_stream(cfg.seed, 1000 + p.index as u64);
    let sign = if p.label == 1 { 0.5 } else { -0.5 };
    let shift = sign * cfg.class_separation;
    let audio_mean: Vec<f64> = u_audio.iter().map(|x| shift * x).collect();
    let text_mean: Vec<f64> = u_text.iter().map(|x| shift * x).collect();
    let base_f0 = rng.uniform_range(cfg.f0_range[0], cfg.f0_range[1]);
    let depth = if p.label == 1 {
        cfg.vibrato_per_separation * cfg.class_separation
    } else {
        0.0
    };

    let mut subject = ManifestSubject {
        id: p.id.clone(),
        split: p.split,
        audio: Vec::new(),
        text: Vec::new(),
        acoustic: None,
        wav: cfg.write_wavs.then(Vec::new),
    };
    for task in 1..=cfg.tasks_per_subject {
        let stem = format!("{}_task{task}", p.id);
        let a = PathBuf::from("audio").join(format!("{stem}.swem"));
        let t = PathBuf::from("text").join(format!("{stem}.swem"));
        write_swem(&task_matrix(&audio_mean, cfg.audio_rows, cfg.task_noise, &mut rng)?, root.join(&a))?;
        write_swem(&task_matrix(&text_mean, cfg.text_rows, cfg.task_noise, &mut rng)?, root.join(&t))?;
        subject.audio.push(a);
        subject.text.push(t);
        if let Some(wavs) = &mut subject.wav {
            let w = PathBuf::from("wav").join(format!("{stem}.wav"));
            let phase = rng.uniform_range(0.0, TAU);
            let pcm = harmonic_tone(base_f0, depth, phase, cfg.wav_seconds, cfg.sample_rate, &mut rng);
            write_wav_pcm16(root.join(&w), &pcm, cfg.sample_rate)?;
            wavs.push(w);
        }
    }
    Ok(subject)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{pyin_track, read_wav, FrameConfig, PitchConfig};
    use crate::embedding::{load_labels, read_swem};

    fn small() -> SynthConfig {
        SynthConfig {
            n_subjects: 12,
            split: [6, 4, 2],
            audio_dim: 16,
            text_dim: 8,
            wav_seconds: 0.5,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn layout_counts_and_balance() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let layout = generate(&cfg, dir.path()).unwrap();
        let m = Manifest::read(&layout.manifest).unwrap();
        assert_eq!(m.subjects.len(), 12);
        for s in &m.subjects {
            assert_eq!(s.audio.len(), 3);
            assert_eq!(s.text.len(), 3);
            assert_eq!(s.wav.as_ref().unwrap().len(), 3);
            for p in s.audio.iter().chain(&s.text).chain(s.wav.as_ref().unwrap()) {
                assert!(dir.path().join(p).is_file());
            }
            let a = read_swem(dir.path().join(&s.audio[0])).unwrap();
            assert_eq!((a.rows(), a.cols()), (2, 16));
        }
        let labels = load_labels(&layout.labels).unwrap();
        let test = load_labels(&layout.test_labels).unwrap();
        assert_eq!(labels.len(), 10);
        assert_eq!(test.len(), 2);
        for split in [Split::Train, Split::Dev, Split::Test] {
            let ls: Vec<u8> = m
                .subjects
                .iter()
                .filter(|s| s.split == split)
                .map(|s| labels.get(&s.id).or(test.get(&s.id)).copied().unwrap())
                .collect();
            assert_eq!(ls.iter().filter(|l| **l == 1).count() * 2, ls.len());
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let cfg = SynthConfig {
            write_wavs: false,
            ..small()
        };
        generate(&cfg, a.path()).unwrap();
        generate(&cfg, b.path()).unwrap();
        let mut files = Vec::new();
        for sub in ["audio", "text"] {
            for e in std::fs::read_dir(a.path().join(sub)).unwrap() {
                files.push(PathBuf::from(sub).join(e.unwrap().file_name()));
            }
        }
        files.extend([MANIFEST_FILE, LABELS_FILE, TEST_LABELS_FILE].map(PathBuf::from));
        for f in files {
            assert_eq!(std::fs::read(a.path().join(&f)).unwrap(), std::fs::read(b.path().join(&f)).unwrap(), "{f:?}");
        }
    }

    #[test]
    fn odd_split_is_rejected() {
        let cfg = SynthConfig {
            n_subjects: 11,
            split: [5, 4, 2],
            ..small()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn steady_tone_pitch_is_recovered() {
        let mut rng = Rng::new(1);
        for base in [110.0, 157.3, 219.0] {
            let pcm = harmonic_tone(base, 0.0, 0.0, 1.0, 16_000, &mut rng);
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("t.wav");
            write_wav_pcm16(&p, &pcm, 16_000).unwrap();
            let audio = read_wav(&p).unwrap();
            let pc = PitchConfig::default();
            let track = pyin_track(&audio, &FrameConfig::speech_default(16_000), pc.fmin, pc.fmax).unwrap();
            let voiced: Vec<f64> = track.f0.iter().copied().filter(|f| *f > 0.0).collect();
            let close = voiced.iter().filter(|f| (*f - base).abs() <= 2.0).count();
            assert!(voiced.len() as f64 >= 0.9 * track.f0.len() as f64);
            assert!(close as f64 >= 0.9 * voiced.len() as f64, "{base}: {close}/{}", voiced.len());
        }
    }
}
