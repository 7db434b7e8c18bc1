//! Audio I/O and spectral analysis primitives.
//!
//! Everything downstream (segmentation, classification) is built from the
//! operations here: averaged spectra, short-time spectrograms, RMS envelopes,
//! band-energy fractions, and the enhanced-autocorrelation pitch tracker in
//! [`eac`].
//!
//! Calibration: spectra are one-sided and amplitude-calibrated so a
//! full-scale sine (peak 1.0) on a bin center reads 0 dB; silence sits at the
//! configured dB floor.

pub mod eac;
pub mod fft;
mod wav;

pub use eac::{
    enhanced_autocorrelation, estimate_f0_frame, pitch_track, EacCurve, FrameF0, PitchTrack,
    VoicingThresholds,
};
pub use wav::{load_wav, save_wav};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed wav: {0}")]
    MalformedHeader(String),
    #[error("unsupported wav format: {0}")]
    UnsupportedFormat(String),
    #[error("buffer too short: need {needed} samples, have {got}")]
    BufferTooShort { needed: usize, got: usize },
    #[error("empty frequency band {f_lo}..{f_hi} Hz at {sample_rate} Hz sample rate")]
    EmptyBand {
        f_lo: f64,
        f_hi: f64,
        sample_rate: u32,
    },
    #[error("invalid audio buffer: {0}")]
    InvalidBuffer(String),
}

/// Mono audio, samples in [-1, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    /// Build a buffer, validating the sample rate and sample range.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<AudioBuffer, DspError> {
        if sample_rate < 8000 {
            return Err(DspError::InvalidBuffer(format!(
                "sample rate {sample_rate} below 8000 Hz"
            )));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(DspError::InvalidBuffer(format!(
                "sample out of range: {bad}"
            )));
        }
        Ok(AudioBuffer {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Copy out the sample range [start, end), clamped to the buffer.
    pub fn slice_samples(&self, start: usize, end: usize) -> AudioBuffer {
        let end = end.min(self.samples.len());
        let start = start.min(end);
        AudioBuffer {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    /// Copy out the time range [start, end) in seconds.
    pub fn slice_seconds(&self, start: f64, end: f64) -> AudioBuffer {
        let rate = self.sample_rate as f64;
        self.slice_samples(
            (start.max(0.0) * rate).round() as usize,
            (end.max(0.0) * rate).round() as usize,
        )
    }
}

/// Averaged one-sided magnitude spectrum in dB (0 dB = full-scale sine).
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Bin center frequencies, Hz; bin 0 at DC, last bin at Nyquist.
    pub freqs: Vec<f64>,
    /// Per-bin level in dB, floored at the configured dB floor.
    pub magnitudes_db: Vec<f64>,
    pub sample_rate: u32,
}

/// Short-time magnitude spectrogram in dB, one row per frame.
#[derive(Clone, Debug)]
pub struct Spectrogram {
    /// Frame-center times, seconds.
    pub times: Vec<f64>,
    /// Bin center frequencies, Hz.
    pub freqs: Vec<f64>,
    /// frames × bins, dB.
    pub magnitudes_db: Vec<Vec<f64>>,
    pub sample_rate: u32,
}

/// dB floor applied to spectra.
pub const DB_FLOOR: f64 = -160.0;

fn to_db(power: f64) -> f64 {
    if power > 0.0 {
        (10.0 * power.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// One-sided amplitude-calibrated linear power of a single windowed frame.
///
/// The returned vector has n/2 + 1 bins; a full-scale bin-centered sine puts
/// power 1.0 in its bin.
fn frame_power(frame: &[f64], window: &[f64]) -> Vec<f64> {
    let n = window.len();
    debug_assert_eq!(frame.len(), n);
    let windowed: Vec<f64> = frame.iter().zip(window).map(|(x, w)| x * w).collect();
    let spectrum = fft::real_fft(&windowed, n);
    let window_sum: f64 = window.iter().sum();
    (0..=n / 2)
        .map(|k| {
            let scale = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
            let amp = scale * spectrum[k].norm() / window_sum;
            amp * amp
        })
        .collect()
}

fn bin_freqs(n: usize, sample_rate: u32) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| k as f64 * sample_rate as f64 / n as f64)
        .collect()
}

fn check_window(buffer: &AudioBuffer, window_size: usize) -> Result<(), DspError> {
    assert!(
        window_size.is_power_of_two(),
        "window size must be a power of two"
    );
    if buffer.len() < window_size {
        return Err(DspError::BufferTooShort {
            needed: window_size,
            got: buffer.len(),
        });
    }
    Ok(())
}

/// Averaged spectrum of the whole buffer: Hann-windowed segments of
/// `window_size` samples at 50% overlap, periodograms averaged in linear
/// power, then converted to dB.
pub fn spectrum(buffer: &AudioBuffer, window_size: usize) -> Result<Spectrum, DspError> {
    check_window(buffer, window_size)?;
    let window = fft::hann(window_size);
    let hop = window_size / 2;
    let frames = (buffer.len() - window_size) / hop + 1;

    let mut avg = vec![0.0; window_size / 2 + 1];
    for f in 0..frames {
        let frame = &buffer.samples[f * hop..f * hop + window_size];
        for (acc, p) in avg.iter_mut().zip(frame_power(frame, &window)) {
            *acc += p;
        }
    }
    for acc in &mut avg {
        *acc /= frames as f64;
    }

    Ok(Spectrum {
        freqs: bin_freqs(window_size, buffer.sample_rate),
        magnitudes_db: avg.into_iter().map(to_db).collect(),
        sample_rate: buffer.sample_rate,
    })
}

/// Short-time spectrogram: Hann-windowed frames every `hop` samples.
///
/// Frame count is `(len - window_size)/hop + 1`; times are frame centers.
pub fn stft(buffer: &AudioBuffer, window_size: usize, hop: usize) -> Result<Spectrogram, DspError> {
    check_window(buffer, window_size)?;
    assert!(hop > 0, "hop must be positive");
    let window = fft::hann(window_size);
    let frames = (buffer.len() - window_size) / hop + 1;
    let rate = buffer.sample_rate as f64;

    let mut times = Vec::with_capacity(frames);
    let mut rows = Vec::with_capacity(frames);
    for f in 0..frames {
        let start = f * hop;
        let frame = &buffer.samples[start..start + window_size];
        times.push((start + window_size / 2) as f64 / rate);
        rows.push(frame_power(frame, &window).into_iter().map(to_db).collect());
    }

    Ok(Spectrogram {
        times,
        freqs: bin_freqs(window_size, buffer.sample_rate),
        magnitudes_db: rows,
        sample_rate: buffer.sample_rate,
    })
}

/// Fraction of total spectral power lying in [f_lo, f_hi].
pub fn band_energy(spectrum: &Spectrum, f_lo: f64, f_hi: f64) -> Result<f64, DspError> {
    let nyquist = spectrum.sample_rate as f64 / 2.0;
    if !(f_lo >= 0.0 && f_lo < f_hi && f_lo < nyquist) {
        return Err(DspError::EmptyBand {
            f_lo,
            f_hi,
            sample_rate: spectrum.sample_rate,
        });
    }
    let mut band = 0.0;
    let mut total = 0.0;
    let mut any = false;
    for (freq, db) in spectrum.freqs.iter().zip(&spectrum.magnitudes_db) {
        let power = 10f64.powf(db / 10.0);
        total += power;
        if *freq >= f_lo && *freq <= f_hi {
            band += power;
            any = true;
        }
    }
    if !any {
        return Err(DspError::EmptyBand {
            f_lo,
            f_hi,
            sample_rate: spectrum.sample_rate,
        });
    }
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok(band / total)
}

/// RMS level per frame: (frame-center time, rms) pairs.
pub fn rms_envelope(
    buffer: &AudioBuffer,
    frame_size: usize,
    hop: usize,
) -> Result<Vec<(f64, f64)>, DspError> {
    if buffer.len() < frame_size {
        return Err(DspError::BufferTooShort {
            needed: frame_size,
            got: buffer.len(),
        });
    }
    assert!(hop > 0, "hop must be positive");
    let frames = (buffer.len() - frame_size) / hop + 1;
    let rate = buffer.sample_rate as f64;
    Ok((0..frames)
        .map(|f| {
            let start = f * hop;
            let frame = &buffer.samples[start..start + frame_size];
            let time = (start + frame_size / 2) as f64 / rate;
            (time, rms(frame))
        })
        .collect())
}

/// Root-mean-square of a sample slice.
pub fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

/// One-sided power of a short sample block, for per-frame band features.
/// Returns (freqs, linear power per bin).
pub(crate) fn block_power(block: &[f64], sample_rate: u32) -> (Vec<f64>, Vec<f64>) {
    let n = block.len().next_power_of_two().max(2);
    let window = fft::hann(block.len().max(1));
    let windowed: Vec<f64> = block.iter().zip(&window).map(|(x, w)| x * w).collect();
    let spectrum = fft::real_fft(&windowed, n);
    let power: Vec<f64> = (0..=n / 2).map(|k| spectrum[k].norm_sqr()).collect();
    (bin_freqs(n, sample_rate), power)
}

/// Fraction of `power` (from [`block_power`]) within [f_lo, f_hi].
pub(crate) fn power_fraction(freqs: &[f64], power: &[f64], f_lo: f64, f_hi: f64) -> f64 {
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let band: f64 = freqs
        .iter()
        .zip(power)
        .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
        .map(|(_, p)| p)
        .sum();
    band / total
}
