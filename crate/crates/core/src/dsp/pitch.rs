//! Multi-threshold YIN pitch tracker.
//!
//! A deterministic stand-in for probabilistic YIN: instead of a beta prior
//! over thresholds and HMM decoding, each frame is scanned at a fixed grid of
//! ten thresholds. The voiced probability is the fraction of thresholds that
//! yield a pitch candidate and f0 is the median candidate.

use super::{AudioBuffer, FrameConfig};
use crate::{Error, Result};

/// Threshold grid 0.05, 0.10, ..., 0.50.
pub const THRESHOLDS: [f64; 10] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchConfig {
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            fmin: 80.0,
            fmax: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    /// Per-frame f0 in Hz, 0 when unvoiced.
    pub f0: Vec<f64>,
    /// Per-frame voiced probability, a multiple of 0.1.
    pub voiced_prob: Vec<f64>,
}

impl PitchTrack {
    pub fn n_frames(&self) -> usize {
        self.f0.len()
    }
}

struct LagRange {
    min: usize,
    max: usize,
}

fn lag_range(sample_rate: u32, frame_len: usize, fmin: f64, fmax: f64) -> Result<LagRange> {
    let sr = f64::from(sample_rate);
    if fmin < 40.0 {
        return Err(Error::Config(format!("fmin {fmin} Hz is below 40 Hz")));
    }
    if fmax > sr / 4.0 {
        return Err(Error::Config(format!(
            "fmax {fmax} Hz exceeds a quarter of the sample rate ({} Hz)",
            sr / 4.0
        )));
    }
    let lag = LagRange {
        min: (sr / fmax).ceil() as usize,
        max: (sr / fmin).floor() as usize,
    };
    if fmin >= fmax || lag.min > lag.max || lag.min < 2 {
        return Err(Error::Config(format!(
            "empty lag range for [{fmin}, {fmax}] Hz at {sr} Hz"
        )));
    }
    if frame_len < 2 * lag.max {
        return Err(Error::Config(format!(
            "{frame_len}-sample frames cannot hold two periods of {fmin} Hz ({} samples)",
            2 * lag.max
        )));
    }
    Ok(lag)
}

/// Cumulative-mean-normalised difference for lags `0..=max_lag`, using a
/// fixed integration window of `frame.len() - max_lag` samples.
fn cmnd(frame: &[f64], max_lag: usize, out: &mut [f64]) {
    let w = frame.len() - max_lag;
    out[0] = 1.0;
    let mut running = 0.0;
    for tau in 1..=max_lag {
        let d: f64 = frame[..w]
            .iter()
            .zip(&frame[tau..tau + w])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        running += d;
        out[tau] = if running > 0.0 { d * tau as f64 / running } else { 1.0 };
    }
}

fn candidate(dp: &[f64], lag: &LagRange, threshold: f64) -> Option<f64> {
    let mut tau = (lag.min..=lag.max).find(|&t| dp[t] < threshold)?;
    while tau < lag.max && dp[tau + 1] < dp[tau] {
        tau += 1;
    }
    let mut period = tau as f64;
    if tau < lag.max {
        let (a, b, c) = (dp[tau - 1], dp[tau], dp[tau + 1]);
        let denom = a - 2.0 * b + c;
        if denom > 0.0 {
            period += (0.5 * (a - c) / denom).clamp(-1.0, 1.0);
        }
    }
    Some(period)
}

pub fn pyin_track(audio: &AudioBuffer, cfg: &FrameConfig, fmin: f64, fmax: f64) -> Result<PitchTrack> {
    cfg.validate()?;
    let lag = lag_range(audio.sample_rate(), cfg.frame_len, fmin, fmax)?;
    let samples = audio.samples();
    let n_frames = cfg.n_frames(samples.len());
    if n_frames == 0 {
        return Err(Error::InsufficientInput(format!(
            "{} samples is shorter than one {}-sample frame",
            samples.len(),
            cfg.frame_len
        )));
    }
    let sr = f64::from(audio.sample_rate());
    let mut dp = vec![0.0; lag.max + 1];
    let mut f0 = Vec::with_capacity(n_frames);
    let mut voiced_prob = Vec::with_capacity(n_frames);
    let mut freqs = Vec::with_capacity(THRESHOLDS.len());

    for f in 0..n_frames {
        let frame = &samples[f * cfg.hop_len..f * cfg.hop_len + cfg.frame_len];
        cmnd(frame, lag.max, &mut dp);
        freqs.clear();
        for &t in &THRESHOLDS {
            if let Some(period) = candidate(&dp, &lag, t) {
                let hz = sr / period;
                if (fmin..=fmax).contains(&hz) {
                    freqs.push(hz);
                }
            }
        }
        voiced_prob.push(freqs.len() as f64 / THRESHOLDS.len() as f64);
        f0.push(median(&mut freqs));
    }
    Ok(PitchTrack { f0, voiced_prob })
}

fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
