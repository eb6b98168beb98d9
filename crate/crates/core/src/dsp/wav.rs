//! Minimal RIFF/WAVE reader and writer for 16-bit mono PCM.

use std::fs;
use std::path::Path;

use super::AudioBuffer;
use crate::{Error, Result};

const PCM_FORMAT: u16 = 1;

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_wav_bytes(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        Error::UnsupportedEncoding(m) => Error::UnsupportedEncoding(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

pub fn read_wav_bytes(bytes: &[u8]) -> Result<AudioBuffer> {
    if bytes.len() < 12 {
        return Err(Error::Format("file shorter than a RIFF header".into()));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(Error::Format(format!(
            "expected RIFF magic, found {:?}",
            String::from_utf8_lossy(&bytes[0..4])
        )));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(Error::Format("RIFF form type is not WAVE".into()));
    }

    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        let end = body
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Format(format!("chunk {:?} overruns file", String::from_utf8_lossy(id))))?;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::Format("fmt chunk shorter than 16 bytes".into()));
                }
                fmt = Some((
                    u16_at(bytes, body),
                    u16_at(bytes, body + 2),
                    u32_at(bytes, body + 4),
                    u16_at(bytes, body + 14),
                ));
            }
            b"data" => data = Some(&bytes[body..end]),
            _ => {}
        }
        // chunks are word aligned
        pos = end + (size & 1);
    }

    let (format, channels, sample_rate, bits) =
        fmt.ok_or_else(|| Error::Format("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Format("missing data chunk".into()))?;
    if format != PCM_FORMAT || bits != 16 {
        return Err(Error::UnsupportedEncoding(format!(
            "format tag {format} with {bits} bits per sample; only 16-bit PCM is supported"
        )));
    }
    if channels != 1 {
        return Err(Error::UnsupportedEncoding(format!(
            "{channels} channels; only mono is supported"
        )));
    }
    if sample_rate == 0 {
        return Err(Error::Format("sample rate is zero".into()));
    }
    if data.len() % 2 != 0 {
        return Err(Error::Format("data chunk holds a partial sample".into()));
    }
    let samples: Vec<f64> = data
        .chunks_exact(2)
        .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])) / 32768.0)
        .collect();
    AudioBuffer::new(samples, sample_rate).map_err(|e| Error::Format(e.to_string()))
}

/// Writes raw 16-bit samples as a mono PCM WAV file.
pub fn write_wav_pcm16(path: impl AsRef<Path>, samples: &[i16], sample_rate: u32) -> Result<()> {
    let path = path.as_ref();
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM_FORMAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Quantizes to 16 bits (scale 32768, clipped) and writes a mono WAV file.
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer) -> Result<()> {
    let pcm: Vec<i16> = audio
        .samples()
        .iter()
        .map(|s| (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16)
        .collect();
    write_wav_pcm16(path, &pcm, audio.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wav_bytes(samples: &[i16], channels: u16, bits: u16, format: u16) -> Vec<u8> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        write_wav_pcm16(&p, samples, 16000).unwrap();
        let mut b = fs::read(&p).unwrap();
        b[20..22].copy_from_slice(&format.to_le_bytes());
        b[22..24].copy_from_slice(&channels.to_le_bytes());
        b[34..36].copy_from_slice(&bits.to_le_bytes());
        b
    }

    #[test]
    fn scales_by_32768() {
        let b = wav_bytes(&[0, 16384, -16384, 32767], 1, 16, 1);
        let a = read_wav_bytes(&b).unwrap();
        assert_eq!(a.sample_rate(), 16000);
        assert_eq!(&a.samples()[..3], &[0.0, 0.5, -0.5]);
        assert!((a.samples()[3] - 0.99997).abs() < 1e-5);
    }

    #[test]
    fn rifx_is_a_format_error() {
        let mut b = wav_bytes(&[1, 2], 1, 16, 1);
        b[0..4].copy_from_slice(b"RIFX");
        assert!(matches!(read_wav_bytes(&b), Err(Error::Format(_))));
    }

    #[test]
    fn stereo_and_non_pcm16_are_unsupported() {
        let stereo = wav_bytes(&[1, 2], 2, 16, 1);
        assert!(matches!(read_wav_bytes(&stereo), Err(Error::UnsupportedEncoding(_))));
        let float = wav_bytes(&[1, 2], 1, 16, 3);
        assert!(matches!(read_wav_bytes(&float), Err(Error::UnsupportedEncoding(_))));
        let eight = wav_bytes(&[1, 2], 1, 8, 1);
        assert!(matches!(read_wav_bytes(&eight), Err(Error::UnsupportedEncoding(_))));
    }

    #[test]
    fn truncated_chunk_is_a_format_error() {
        let b = wav_bytes(&[1, 2, 3, 4], 1, 16, 1);
        assert!(matches!(read_wav_bytes(&b[..b.len() - 3]), Err(Error::Format(_))));
        assert!(matches!(read_wav_bytes(&b[..8]), Err(Error::Format(_))));
    }

    #[test]
    fn skips_unknown_chunks() {
        let b = wav_bytes(&[7, -7], 1, 16, 1);
        let mut with_list = b[..12].to_vec();
        with_list.extend_from_slice(b"LIST");
        with_list.extend_from_slice(&3u32.to_le_bytes());
        with_list.extend_from_slice(&[1, 2, 3, 0]); // odd size plus pad byte
        with_list.extend_from_slice(&b[12..]);
        let a = read_wav_bytes(&with_list).unwrap();
        assert_eq!(a.samples(), &[7.0 / 32768.0, -7.0 / 32768.0]);
    }
}
