//! Minimal RIFF/WAVE reader and writer.
//!
//! Reads mono or stereo PCM16 and IEEE float32 files; stereo is downmixed by
//! averaging the channels. Writes mono PCM16. Chunks other than `fmt ` and
//! `data` are skipped.

use std::fs;
use std::path::Path;

use super::{AudioBuffer, DspError};

fn u16_at(bytes: &[u8], pos: usize) -> Result<u16, DspError> {
    bytes
        .get(pos..pos + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| DspError::MalformedHeader("file truncated".into()))
}

fn u32_at(bytes: &[u8], pos: usize) -> Result<u32, DspError> {
    bytes
        .get(pos..pos + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DspError::MalformedHeader("file truncated".into()))
}

struct Format {
    code: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

/// Load a WAV file into a mono buffer of f64 samples in [-1, 1].
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, DspError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(DspError::MalformedHeader("not a RIFF/WAVE file".into()));
    }

    let mut fmt: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(&bytes, pos + 4)? as usize;
        let body_start = pos + 8;
        let body_end = body_start + size;
        if body_end > bytes.len() {
            return Err(DspError::MalformedHeader(format!(
                "chunk {:?} declares {} bytes but file ends early",
                String::from_utf8_lossy(id),
                size
            )));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(DspError::MalformedHeader("fmt chunk too small".into()));
                }
                fmt = Some(Format {
                    code: u16_at(&bytes, body_start)?,
                    channels: u16_at(&bytes, body_start + 2)?,
                    sample_rate: u32_at(&bytes, body_start + 4)?,
                    bits: u16_at(&bytes, body_start + 14)?,
                });
            }
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        // Chunks are word-aligned.
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| DspError::MalformedHeader("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| DspError::MalformedHeader("missing data chunk".into()))?;

    if !(1..=2).contains(&fmt.channels) {
        return Err(DspError::UnsupportedFormat(format!(
            "{} channels",
            fmt.channels
        )));
    }
    let channels = fmt.channels as usize;

    let interleaved: Vec<f64> = match (fmt.code, fmt.bits) {
        (1, 16) => {
            if data.len() % 2 != 0 {
                return Err(DspError::MalformedHeader(
                    "data chunk not sample-aligned".into(),
                ));
            }
            data.chunks_exact(2)
                .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
                .collect()
        }
        (3, 32) => {
            if data.len() % 4 != 0 {
                return Err(DspError::MalformedHeader(
                    "data chunk not sample-aligned".into(),
                ));
            }
            data.chunks_exact(4)
                .map(|b| (f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64).clamp(-1.0, 1.0))
                .collect()
        }
        (code, bits) => {
            return Err(DspError::UnsupportedFormat(format!(
                "format code {code} with {bits}-bit samples"
            )))
        }
    };

    if !interleaved.len().is_multiple_of(channels) {
        return Err(DspError::MalformedHeader(
            "data chunk not frame-aligned".into(),
        ));
    }
    let samples: Vec<f64> = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(2)
            .map(|f| (f[0] + f[1]) / 2.0)
            .collect()
    };

    AudioBuffer::new(samples, fmt.sample_rate)
}

/// Write a mono PCM16 WAV file.
pub fn save_wav(path: impl AsRef<Path>, buffer: &AudioBuffer) -> Result<(), DspError> {
    let data_len = buffer.samples.len() * 2;
    let mut bytes = Vec::with_capacity(44 + data_len);
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes()); // PCM
    bytes.extend_from_slice(&1u16.to_le_bytes()); // mono
    bytes.extend_from_slice(&buffer.sample_rate.to_le_bytes());
    bytes.extend_from_slice(&(buffer.sample_rate * 2).to_le_bytes()); // byte rate
    bytes.extend_from_slice(&2u16.to_le_bytes()); // block align
    bytes.extend_from_slice(&16u16.to_le_bytes()); // bits
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &buffer.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}
