//! Deterministic synthetic-syllable generation.
//!
//! Parametric audio with exact construction ground truth: a band-limited
//! pulse train shaped by two formant resonators carries a tone contour,
//! spectrally masked noise provides fricative onsets, and syllable assembly
//! returns the region boundaries it was built from, so segmentation and
//! classification can be verified against known answers.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{fft, AudioBuffer};
use crate::pinyin::Tone;
use crate::segment::Span;

/// Tone-contour sampling rate, Hz.
pub const CONTOUR_RATE: f64 = 200.0;

/// Neutral-tone syllables are forced at most this long, seconds.
pub const NEUTRAL_MAX_S: f64 = 0.100;

// Fixed synthesis levels (peak amplitudes). The coda tail is pinned at 40%
// of the vowel level; the rest are generic headroom choices that keep any
// overlap-added combination within [-1, 1].
const VOWEL_AMP: f64 = 0.5;
const FRICATIVE_AMP: f64 = 0.3;
const BURST_AMP: f64 = 0.4;
const ASPIRATION_AMP: f64 = 0.08;
const VOICING_BAR_AMP: f64 = 0.3;
const LATERAL_AMP: f64 = 0.3;
const TAIL_AMP_RATIO: f64 = 0.4;

/// Stop-burst length, seconds.
const BURST_S: f64 = 0.015;
/// Low-pass cutoff for nasal tails and laterals, Hz.
const LOW_PASS_HZ: f64 = 1000.0;
/// Stop-band gain of the spectral masks (-30 dB).
const STOP_GAIN: f64 = 0.031_622_776_601_683_79;

// 64-bit linear congruential generator (Knuth's MMIX constants), so every
// platform produces identical noise bytes for a given seed.
const LCG_MUL: u64 = 6364136223846793005;
const LCG_INC: u64 = 1442695040888963407;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis spec: {reason}")]
    InvalidSpec { reason: String },
}

fn invalid(reason: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec {
        reason: reason.into(),
    }
}

/// Syllable onset flavor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Onset {
    None,
    SLike,
    ShLike,
    VoicedStop,
    UnvoicedStop,
    Lateral,
}

/// Fricative noise flavor: band-limited 2-8 kHz, or everything above 8 kHz.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FricativeKind {
    SLike,
    ShLike,
}

/// Construction recipe for one synthetic syllable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyllableSynthSpec {
    pub tone: Tone,
    /// Speaker reference frequency the tone contour is built around, Hz.
    pub base_f0: f64,
    pub onset: Onset,
    /// Onset length, ms (ignored when `onset` is `none`).
    pub onset_ms: f64,
    /// Onset-to-vowel crossfade length, ms (ignored when `onset` is `none`).
    pub transition_ms: f64,
    /// Vowel length, ms (clamped to 100 ms for the neutral tone).
    pub vowel_ms: f64,
    /// Coda-tail length, ms (ignored unless `nasal_tail`).
    pub tail_ms: f64,
    /// Append a low-passed, quieter voiced tail after the vowel.
    pub nasal_tail: bool,
    /// Noise seed; equal specs produce bit-identical audio.
    pub seed: u64,
}

impl Default for SyllableSynthSpec {
    fn default() -> Self {
        SyllableSynthSpec {
            tone: Tone::Level,
            base_f0: 180.0,
            onset: Onset::None,
            onset_ms: 80.0,
            transition_ms: 40.0,
            vowel_ms: 250.0,
            tail_ms: 100.0,
            nasal_tail: false,
            seed: 1,
        }
    }
}

/// Exact construction boundaries of a synthesized syllable, absolute within
/// the buffer it came with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyllableGroundTruth {
    pub tone: Tone,
    pub base_f0: f64,
    pub onset: Onset,
    pub consonant: Option<Span>,
    pub transition: Option<Span>,
    pub vowel: Span,
    pub coda_tail: Option<Span>,
}

impl SyllableGroundTruth {
    /// Overall extent, from first region start to last region end.
    pub fn extent(&self) -> Span {
        let start = self
            .consonant
            .or(self.transition)
            .map_or(self.vowel.start, |s| s.start);
        let end = self.coda_tail.map_or(self.vowel.end, |s| s.end);
        Span::new(start, end)
    }

    fn shifted(&self, dt: f64) -> SyllableGroundTruth {
        SyllableGroundTruth {
            tone: self.tone,
            base_f0: self.base_f0,
            onset: self.onset,
            consonant: self.consonant.map(|s| s.shifted(dt)),
            transition: self.transition.map(|s| s.shifted(dt)),
            vowel: self.vowel.shifted(dt),
            coda_tail: self.coda_tail.map(|s| s.shifted(dt)),
        }
    }
}

/// Ground truth for a synthesized utterance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceGroundTruth {
    pub sample_rate: u32,
    pub gap_ms: f64,
    /// One span per syllable, ascending and disjoint.
    pub spans: Vec<Span>,
    /// Per-syllable construction truth, in absolute utterance time.
    pub syllables: Vec<SyllableGroundTruth>,
}

/// An f0 curve sampled at [`CONTOUR_RATE`].
#[derive(Clone, Debug, PartialEq)]
pub struct ToneContour {
    /// f0 at t = i / CONTOUR_RATE, Hz; at least two points.
    pub values: Vec<f64>,
}

impl ToneContour {
    pub fn duration(&self) -> f64 {
        (self.values.len() - 1) as f64 / CONTOUR_RATE
    }

    /// Linear interpolation, clamped to the endpoints.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = (t * CONTOUR_RATE).clamp(0.0, (self.values.len() - 1) as f64);
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let frac = x - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// The contour with every frequency multiplied by `k`.
    pub fn scaled(&self, k: f64) -> ToneContour {
        ToneContour {
            values: self.values.iter().map(|v| v * k).collect(),
        }
    }

    /// The same trajectory stretched to `duration` seconds.
    pub fn stretched_to(&self, duration: f64) -> ToneContour {
        let n = ((duration * CONTOUR_RATE).round() as usize).max(1) + 1;
        let values = (0..n)
            .map(|i| self.value_at(i as f64 / (n - 1) as f64 * self.duration()))
            .collect();
        ToneContour { values }
    }

    /// View the contour as an ideal pitch track (confidence 1 everywhere),
    /// for contour-level classification without audio in between.
    pub fn as_pitch_track(&self) -> crate::dsp::eac::PitchTrack {
        crate::dsp::eac::PitchTrack {
            times: (0..self.values.len())
                .map(|i| i as f64 / CONTOUR_RATE)
                .collect(),
            f0: self.values.iter().map(|&v| Some(v)).collect(),
            confidence: vec![1.0; self.values.len()],
            sample_rate: CONTOUR_RATE as u32,
        }
    }
}

/// Canonical f0 trajectory of a tone.
///
/// Tone 1 sits level at 1.25x the base; tone 2 rises geometrically from the
/// base to 1.5x; tone 3 falls to 0.72x over the first 60% then rises to
/// 1.1x; tone 4 falls from 1.5x to 0.75x; the neutral tone stays at the
/// base and is forced to at most 100 ms.
pub fn synth_tone_contour(tone: Tone, base_f0: f64, duration: f64) -> ToneContour {
    assert!(
        base_f0 > 0.0 && duration > 0.0,
        "positive base f0 and duration"
    );
    let duration = if tone == Tone::Neutral {
        duration.min(NEUTRAL_MAX_S)
    } else {
        duration
    };
    let n = ((duration * CONTOUR_RATE).round() as usize).max(1) + 1;
    let values = (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            match tone {
                Tone::Level => 1.25 * base_f0,
                Tone::Rising => base_f0 * 1.5f64.powf(x),
                Tone::Dipping => {
                    if x < 0.6 {
                        base_f0 * 0.72f64.powf(x / 0.6)
                    } else {
                        base_f0 * 0.72 * (1.1 / 0.72f64).powf((x - 0.6) / 0.4)
                    }
                }
                Tone::Falling => 1.5 * base_f0 * 0.5f64.powf(x),
                Tone::Neutral => base_f0,
            }
        })
        .collect();
    ToneContour { values }
}

/// Two-pole resonator, applied in place.
fn resonate(samples: &mut [f64], center_hz: f64, bandwidth_hz: f64, rate: f64) {
    let r = (-std::f64::consts::PI * bandwidth_hz / rate).exp();
    let b = 2.0 * r * (2.0 * std::f64::consts::PI * center_hz / rate).cos();
    let c = -r * r;
    let a = 1.0 - b - c;
    let (mut y1, mut y2) = (0.0, 0.0);
    for s in samples.iter_mut() {
        let y = a * *s + b * y1 + c * y2;
        y2 = y1;
        y1 = y;
        *s = y;
    }
}

/// Scale so the peak magnitude equals `peak` (no-op on silence).
fn normalize_peak(samples: &mut [f64], peak: f64) {
    let max = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if max > 0.0 {
        let k = peak / max;
        for s in samples.iter_mut() {
            *s *= k;
        }
    }
}

/// Voiced source: a band-limited pulse train whose phase accumulates the
/// instantaneous f0 from `contour` (held at its last value past the contour
/// end), shaped by two fixed resonators at 700 and 1200 Hz (bandwidth
/// 130 Hz) into a vowel-like spectrum, then peak-normalized to `amplitude`.
pub fn synth_voiced(
    contour: &ToneContour,
    duration: f64,
    amplitude: f64,
    sample_rate: u32,
) -> AudioBuffer {
    assert!((0.0..=1.0).contains(&amplitude), "amplitude within [0, 1]");
    let rate = sample_rate as f64;
    let n = (duration * rate).round() as usize;
    let max_f0 = contour.values.iter().fold(f64::MIN, |m, &v| m.max(v));
    assert!(max_f0 > 0.0, "contour must be positive");
    // Keep every harmonic below 0.45 of the sample rate.
    let harmonics = ((0.45 * rate / max_f0).floor() as usize).max(1);

    let mut samples = vec![0.0f64; n];
    let mut phase = 0.0f64;
    for (i, s) in samples.iter_mut().enumerate() {
        let f0 = contour.value_at(i as f64 / rate);
        phase += f0 / rate;
        let mut acc = 0.0;
        for k in 1..=harmonics {
            acc += (2.0 * std::f64::consts::PI * k as f64 * phase).cos();
        }
        *s = acc / harmonics as f64;
    }
    resonate(&mut samples, 700.0, 130.0, rate);
    resonate(&mut samples, 1200.0, 130.0, rate);
    normalize_peak(&mut samples, amplitude);
    AudioBuffer::new(samples, sample_rate).expect("normalized synthesis within range")
}

/// Uniform noise in [-1, 1] from the documented LCG.
fn lcg_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(LCG_MUL).wrapping_add(LCG_INC);
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(LCG_MUL).wrapping_add(LCG_INC);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

/// Multiply the spectrum by 1 inside [f_lo, f_hi] and `stop_gain` outside,
/// in place.
fn apply_band_gain(samples: &mut [f64], rate: f64, f_lo: f64, f_hi: f64, stop_gain: f64) {
    let n = samples.len();
    if n == 0 {
        return;
    }
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&s| Complex::new(s, 0.0)).collect();
    fft::fft_forward(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let f = if k <= n / 2 { k as f64 } else { (n - k) as f64 } * rate / n as f64;
        if !(f_lo..=f_hi).contains(&f) {
            *c *= stop_gain;
        }
    }
    fft::fft_inverse(&mut buf);
    for (s, c) in samples.iter_mut().zip(&buf) {
        *s = c.re / n as f64;
    }
}

/// Seeded noise spectrally confined to the fricative's band: 2-8 kHz for
/// sh-like, 8 kHz to Nyquist for s-like; everything else sits 30 dB down.
/// Deterministic per seed; peak level 0.3.
pub fn synth_fricative(
    kind: FricativeKind,
    duration: f64,
    seed: u64,
    sample_rate: u32,
) -> AudioBuffer {
    assert!(duration >= 0.0, "duration must be non-negative");
    let rate = sample_rate as f64;
    let n = (duration * rate).round() as usize;
    let mut samples = lcg_noise(n, seed);
    let (f_lo, f_hi) = match kind {
        FricativeKind::ShLike => (2000.0, 8000.0),
        FricativeKind::SLike => (8000.0, rate / 2.0),
    };
    apply_band_gain(&mut samples, rate, f_lo, f_hi, STOP_GAIN);
    normalize_peak(&mut samples, FRICATIVE_AMP);
    AudioBuffer::new(samples, sample_rate).expect("normalized noise within range")
}

fn validate(spec: &SyllableSynthSpec, sample_rate: u32) -> Result<(), SynthError> {
    if sample_rate < 8000 {
        return Err(invalid("sample rate below 8 kHz"));
    }
    for (name, v) in [
        ("onset_ms", spec.onset_ms),
        ("transition_ms", spec.transition_ms),
        ("vowel_ms", spec.vowel_ms),
        ("tail_ms", spec.tail_ms),
        ("base_f0", spec.base_f0),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(invalid(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
    }
    if spec.vowel_ms <= 0.0 {
        return Err(invalid("vowel_ms must be positive"));
    }
    if !(80.0..=400.0).contains(&spec.base_f0) {
        return Err(invalid(format!(
            "base_f0 {} outside [80, 400] Hz",
            spec.base_f0
        )));
    }
    let nyquist = sample_rate as f64 / 2.0;
    match spec.onset {
        Onset::SLike if nyquist <= 8000.0 => Err(invalid(
            "s-like onset needs spectrum above 8 kHz; raise the sample rate",
        )),
        Onset::ShLike if nyquist < 8000.0 => Err(invalid(
            "sh-like onset needs spectrum out to 8 kHz; raise the sample rate",
        )),
        _ => Ok(()),
    }
}

/// Build the onset sound, covering onset + transition samples (the fade-out
/// over the transition is applied by the caller).
fn synth_onset(spec: &SyllableSynthSpec, len: usize, sample_rate: u32) -> Vec<f64> {
    let rate = sample_rate as f64;
    match spec.onset {
        Onset::None => vec![0.0; len],
        Onset::SLike | Onset::ShLike => {
            let kind = if spec.onset == Onset::SLike {
                FricativeKind::SLike
            } else {
                FricativeKind::ShLike
            };
            let mut s = synth_fricative(kind, len as f64 / rate, spec.seed, sample_rate).samples;
            s.resize(len, 0.0);
            s
        }
        Onset::VoicedStop => {
            // 15 ms wideband burst over a low-frequency voicing bar: the
            // first three harmonics of 150 Hz, all inside the 0-500 Hz band.
            let burst_len = ((BURST_S * rate).round() as usize).min(len);
            let mut burst = lcg_noise(burst_len, spec.seed);
            normalize_peak(&mut burst, BURST_AMP);
            let mut s = vec![0.0; len];
            for (i, v) in s.iter_mut().enumerate() {
                let t = i as f64 / rate;
                let bar: f64 = (1..=3)
                    .map(|k| (2.0 * std::f64::consts::PI * 150.0 * k as f64 * t).cos())
                    .sum();
                *v = VOICING_BAR_AMP * bar / 3.0;
                if i < burst_len {
                    *v += burst[i];
                }
            }
            s
        }
        Onset::UnvoicedStop => {
            // 15 ms wideband burst, then quiet aspiration noise.
            let burst_len = ((BURST_S * rate).round() as usize).min(len);
            let mut s = lcg_noise(len, spec.seed);
            normalize_peak(&mut s, 1.0);
            for (i, v) in s.iter_mut().enumerate() {
                *v *= if i < burst_len {
                    BURST_AMP
                } else {
                    ASPIRATION_AMP
                };
            }
            s
        }
        Onset::Lateral => {
            // Low-passed voiced murmur at the base frequency.
            let contour = ToneContour {
                values: vec![spec.base_f0; 2],
            };
            let mut s = synth_voiced(&contour, len as f64 / rate, 1.0, sample_rate).samples;
            s.resize(len, 0.0);
            apply_band_gain(&mut s, rate, 0.0, LOW_PASS_HZ, STOP_GAIN);
            normalize_peak(&mut s, LATERAL_AMP);
            s
        }
    }
}

/// Synthesize one syllable and the exact boundaries it was built from.
///
/// Layout: onset noise (if any), a linear crossfade into the voiced vowel
/// carrying the tone contour, and optionally a nasal-like tail — still
/// voiced, low-passed at 1 kHz, at 40% of the vowel level. Buffer times in
/// the ground truth start at zero.
pub fn synth_syllable(
    spec: &SyllableSynthSpec,
    sample_rate: u32,
) -> Result<(AudioBuffer, SyllableGroundTruth), SynthError> {
    validate(spec, sample_rate)?;
    let rate = sample_rate as f64;
    let samples_of = |ms: f64| (ms / 1000.0 * rate).round() as usize;

    let vowel_ms = if spec.tone == Tone::Neutral {
        spec.vowel_ms.min(NEUTRAL_MAX_S * 1000.0)
    } else {
        spec.vowel_ms
    };
    let onset_len = if spec.onset == Onset::None {
        0
    } else {
        samples_of(spec.onset_ms)
    };
    let trans_len = if spec.onset == Onset::None {
        0
    } else {
        samples_of(spec.transition_ms)
    };
    let vowel_len = samples_of(vowel_ms).max(1);
    let tail_len = if spec.nasal_tail {
        samples_of(spec.tail_ms)
    } else {
        0
    };
    let total = onset_len + trans_len + vowel_len + tail_len;

    // Voiced stretch covers transition + vowel + tail with one continuous
    // phase; f0 holds the contour's endpoints outside the vowel.
    let contour = synth_tone_contour(spec.tone, spec.base_f0, vowel_len as f64 / rate);
    let voiced_dur = (trans_len + vowel_len + tail_len) as f64 / rate;
    let trans_dur = trans_len as f64 / rate;
    let held_n = ((voiced_dur * CONTOUR_RATE).round() as usize).max(1) + 1;
    let held = ToneContour {
        values: (0..held_n)
            .map(|i| contour.value_at(i as f64 / CONTOUR_RATE - trans_dur))
            .collect(),
    };
    let mut voiced = synth_voiced(&held, voiced_dur, VOWEL_AMP, sample_rate).samples;
    voiced.resize(trans_len + vowel_len + tail_len, 0.0);

    // Tail: low-passed and dropped to 40% of the vowel level.
    if tail_len > 0 {
        let mut tail = voiced[trans_len + vowel_len..].to_vec();
        apply_band_gain(&mut tail, rate, 0.0, LOW_PASS_HZ, STOP_GAIN);
        normalize_peak(&mut tail, VOWEL_AMP * TAIL_AMP_RATIO);
        voiced[trans_len + vowel_len..].copy_from_slice(&tail);
    }

    let onset_audio = synth_onset(spec, onset_len + trans_len, sample_rate);

    let mut samples = vec![0.0f64; total];
    samples[..onset_len + trans_len].copy_from_slice(&onset_audio);
    if trans_len > 0 {
        // Linear crossfade: onset fades out while the voiced part fades in.
        for i in 0..trans_len {
            let x = (i + 1) as f64 / trans_len as f64;
            samples[onset_len + i] = samples[onset_len + i] * (1.0 - x) + voiced[i] * x;
        }
    }
    samples[onset_len + trans_len..].copy_from_slice(&voiced[trans_len..]);
    debug_assert!(samples.iter().all(|s| s.abs() <= 1.0));

    let t = |s: usize| s as f64 / rate;
    let truth = SyllableGroundTruth {
        tone: spec.tone,
        base_f0: spec.base_f0,
        onset: spec.onset,
        consonant: (onset_len > 0).then(|| Span::new(0.0, t(onset_len))),
        transition: (trans_len > 0).then(|| Span::new(t(onset_len), t(onset_len + trans_len))),
        vowel: Span::new(
            t(onset_len + trans_len),
            t(onset_len + trans_len + vowel_len),
        ),
        coda_tail: (tail_len > 0)
            .then(|| Span::new(t(onset_len + trans_len + vowel_len), t(total))),
    };
    let buffer = AudioBuffer::new(samples, sample_rate)
        .map_err(|e| invalid(format!("synthesis out of range: {e}")))?;
    Ok((buffer, truth))
}

/// Join syllables with `gap_ms` of silence between them; ground-truth spans
/// and per-syllable boundaries come back in absolute utterance time.
pub fn synth_utterance(
    specs: &[SyllableSynthSpec],
    gap_ms: f64,
    sample_rate: u32,
) -> Result<(AudioBuffer, UtteranceGroundTruth), SynthError> {
    if !gap_ms.is_finite() || gap_ms < 0.0 {
        return Err(invalid(format!(
            "gap_ms must be finite and non-negative, got {gap_ms}"
        )));
    }
    let rate = sample_rate as f64;
    let gap_len = (gap_ms / 1000.0 * rate).round() as usize;

    let mut samples: Vec<f64> = Vec::new();
    let mut truth = UtteranceGroundTruth {
        sample_rate,
        gap_ms,
        spans: Vec::with_capacity(specs.len()),
        syllables: Vec::with_capacity(specs.len()),
    };
    for (i, spec) in specs.iter().enumerate() {
        if i > 0 {
            samples.extend(std::iter::repeat_n(0.0, gap_len));
        }
        let offset = samples.len() as f64 / rate;
        let (audio, syl) = synth_syllable(spec, sample_rate)?;
        truth
            .spans
            .push(Span::new(offset, offset + audio.duration()));
        truth.syllables.push(syl.shifted(offset));
        samples.extend_from_slice(&audio.samples);
    }
    let buffer = AudioBuffer::new(samples, sample_rate)
        .map_err(|e| invalid(format!("synthesis out of range: {e}")))?;
    Ok((buffer, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{band_energy, eac, spectrum};

    #[test]
    fn level_tone_contour_is_flat_at_1_25x() {
        let c = synth_tone_contour(Tone::Level, 200.0, 0.3);
        assert!((c.duration() - 0.3).abs() < 1e-9);
        assert!(c.values.iter().all(|&v| (v - 250.0).abs() < 1e-9));
    }

    #[test]
    fn falling_tone_spans_its_endpoints() {
        let c = synth_tone_contour(Tone::Falling, 200.0, 0.25);
        assert!((c.values[0] - 300.0).abs() < 1e-9);
        assert!((c.values[c.values.len() - 1] - 150.0).abs() < 1e-9);
        for w in c.values.windows(2) {
            assert!(w[1] < w[0], "tone 4 falls monotonically");
        }
    }

    #[test]
    fn dipping_tone_minimum_lands_at_60_percent() {
        let c = synth_tone_contour(Tone::Dipping, 180.0, 0.35);
        let (arg_min, min) = c
            .values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, &v)| (i, v))
            .unwrap();
        assert!((min - 129.6).abs() < 0.5, "minimum {min}");
        let t_min = arg_min as f64 / CONTOUR_RATE;
        assert!(
            (t_min - 0.21).abs() <= 1.0 / CONTOUR_RATE,
            "minimum at {t_min}"
        );
        assert!(
            (c.values[c.values.len() - 1] - 198.0).abs() < 0.5,
            "ends at 1.1x"
        );
    }

    #[test]
    fn rising_tone_rises_geometrically() {
        let c = synth_tone_contour(Tone::Rising, 150.0, 0.3);
        assert!((c.values[0] - 150.0).abs() < 1e-9);
        assert!((c.values[c.values.len() - 1] - 225.0).abs() < 1e-9);
        let mid = c.value_at(0.15);
        assert!((mid - 150.0 * 1.5f64.sqrt()).abs() < 1.0);
    }

    #[test]
    fn neutral_tone_is_clamped_short() {
        let c = synth_tone_contour(Tone::Neutral, 180.0, 0.4);
        assert!(c.duration() <= NEUTRAL_MAX_S + 1e-9);
        assert!(c.values.iter().all(|&v| (v - 180.0).abs() < 1e-9));
    }

    #[test]
    fn voiced_constant_tone_round_trips_through_pitch_tracking() {
        let contour = ToneContour {
            values: vec![220.0; 101],
        };
        let buf = synth_voiced(&contour, 0.5, 0.5, 44100);
        assert_eq!(buf.len(), 22050);
        let track = eac::pitch_track(
            &buf,
            2048,
            512,
            50.0,
            500.0,
            eac::VoicingThresholds::default(),
        )
        .unwrap();
        let interior: Vec<f64> = track
            .voiced()
            .filter(|(t, _)| *t > 0.05 && *t < 0.45)
            .map(|(_, f)| f)
            .collect();
        assert!(interior.len() > 10);
        for f0 in interior {
            assert!((f0 - 220.0).abs() <= 2.0, "recovered {f0}");
        }
    }

    #[test]
    fn voiced_rising_tone_recovers_an_increasing_track() {
        let contour = synth_tone_contour(Tone::Rising, 150.0, 0.4);
        let buf = synth_voiced(&contour, 0.4, 0.5, 44100);
        let track = eac::pitch_track(
            &buf,
            4096,
            512,
            50.0,
            500.0,
            eac::VoicingThresholds::default(),
        )
        .unwrap();
        let voiced: Vec<f64> = track.voiced().map(|(_, f)| f).collect();
        assert!(voiced.len() >= 5);
        for w in voiced.windows(2) {
            assert!(w[1] > w[0], "rising track must increase: {voiced:?}");
        }
    }

    #[test]
    fn zero_amplitude_is_digital_silence() {
        let contour = ToneContour {
            values: vec![200.0; 11],
        };
        let buf = synth_voiced(&contour, 0.05, 0.0, 44100);
        assert!(buf.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn fricatives_live_in_their_bands() {
        let sh = synth_fricative(FricativeKind::ShLike, 0.2, 5, 44100);
        let spec_sh = spectrum(&sh, 2048).unwrap();
        assert!(band_energy(&spec_sh, 2000.0, 8000.0).unwrap() > 0.9);

        let s = synth_fricative(FricativeKind::SLike, 0.2, 5, 44100);
        let spec_s = spectrum(&s, 2048).unwrap();
        assert!(band_energy(&spec_s, 8000.0, 22050.0).unwrap() > 0.9);
    }

    #[test]
    fn zero_duration_fricative_is_empty() {
        let buf = synth_fricative(FricativeKind::SLike, 0.0, 1, 44100);
        assert!(buf.is_empty());
    }

    #[test]
    fn equal_seeds_are_bit_identical_and_different_seeds_differ() {
        let a = synth_fricative(FricativeKind::ShLike, 0.1, 42, 44100);
        let b = synth_fricative(FricativeKind::ShLike, 0.1, 42, 44100);
        assert_eq!(a.samples, b.samples);
        let c = synth_fricative(FricativeKind::ShLike, 0.1, 43, 44100);
        assert_ne!(a.samples, c.samples);
    }

    fn full_spec() -> SyllableSynthSpec {
        SyllableSynthSpec {
            tone: Tone::Level,
            base_f0: 180.0,
            onset: Onset::ShLike,
            onset_ms: 80.0,
            transition_ms: 40.0,
            vowel_ms: 200.0,
            tail_ms: 100.0,
            nasal_tail: true,
            seed: 9,
        }
    }

    #[test]
    fn syllable_ground_truth_matches_construction() {
        let (buf, truth) = synth_syllable(&full_spec(), 44100).unwrap();
        assert!((buf.duration() - 0.42).abs() < 1e-3);
        let cons = truth.consonant.unwrap();
        let trans = truth.transition.unwrap();
        let tail = truth.coda_tail.unwrap();
        assert_eq!(cons.start, 0.0);
        assert!((cons.end - 0.08).abs() < 1e-6);
        assert!((trans.end - 0.12).abs() < 1e-6);
        assert!((truth.vowel.end - 0.32).abs() < 1e-6);
        assert!((tail.end - 0.42).abs() < 1e-6);
        assert_eq!(truth.extent(), Span::new(0.0, buf.duration()));
    }

    #[test]
    fn pure_vowel_spec_has_only_a_vowel() {
        let spec = SyllableSynthSpec {
            onset: Onset::None,
            nasal_tail: false,
            ..full_spec()
        };
        let (buf, truth) = synth_syllable(&spec, 44100).unwrap();
        assert!(truth.consonant.is_none());
        assert!(truth.transition.is_none());
        assert!(truth.coda_tail.is_none());
        assert_eq!(truth.vowel, Span::new(0.0, buf.duration()));
    }

    #[test]
    fn syllables_are_deterministic() {
        let (a, _) = synth_syllable(&full_spec(), 44100).unwrap();
        let (b, _) = synth_syllable(&full_spec(), 44100).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn no_onset_has_no_clipping_anywhere() {
        for onset in [
            Onset::None,
            Onset::SLike,
            Onset::ShLike,
            Onset::VoicedStop,
            Onset::UnvoicedStop,
            Onset::Lateral,
        ] {
            let spec = SyllableSynthSpec {
                onset,
                ..full_spec()
            };
            let (buf, _) = synth_syllable(&spec, 44100).unwrap();
            let peak = buf.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
            assert!(peak <= 0.9, "{onset:?} peaked at {peak}");
        }
    }

    #[test]
    fn neutral_tone_syllable_is_short() {
        let spec = SyllableSynthSpec {
            tone: Tone::Neutral,
            vowel_ms: 300.0,
            onset: Onset::None,
            nasal_tail: false,
            ..full_spec()
        };
        let (buf, truth) = synth_syllable(&spec, 44100).unwrap();
        assert!(buf.duration() <= NEUTRAL_MAX_S + 1e-6);
        assert!(truth.vowel.duration() <= NEUTRAL_MAX_S + 1e-6);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad_f0 = SyllableSynthSpec {
            base_f0: 60.0,
            ..full_spec()
        };
        assert!(matches!(
            synth_syllable(&bad_f0, 44100),
            Err(SynthError::InvalidSpec { .. })
        ));

        let bad_vowel = SyllableSynthSpec {
            vowel_ms: 0.0,
            ..full_spec()
        };
        assert!(matches!(
            synth_syllable(&bad_vowel, 44100),
            Err(SynthError::InvalidSpec { .. })
        ));

        let bad_dur = SyllableSynthSpec {
            onset_ms: -5.0,
            ..full_spec()
        };
        assert!(matches!(
            synth_syllable(&bad_dur, 44100),
            Err(SynthError::InvalidSpec { .. })
        ));

        let s_too_low = SyllableSynthSpec {
            onset: Onset::SLike,
            ..full_spec()
        };
        assert!(matches!(
            synth_syllable(&s_too_low, 16000),
            Err(SynthError::InvalidSpec { .. })
        ));

        let bad_gap = synth_utterance(&[full_spec()], -1.0, 44100);
        assert!(matches!(bad_gap, Err(SynthError::InvalidSpec { .. })));
    }

    #[test]
    fn utterance_spans_are_gapped_and_absolute() {
        let specs = vec![full_spec(), full_spec(), full_spec()];
        let (buf, truth) = synth_utterance(&specs, 100.0, 44100).unwrap();
        assert_eq!(truth.spans.len(), 3);
        for w in truth.spans.windows(2) {
            assert!(
                (w[1].start - w[0].end - 0.1).abs() < 1e-6,
                "gap between {w:?}"
            );
        }
        let last = truth.spans.last().unwrap();
        assert!((last.end - buf.duration()).abs() < 1e-9);
        // Per-syllable truth is shifted to utterance time.
        assert_eq!(truth.syllables[1].extent(), truth.spans[1]);
        assert!(truth.syllables[2].vowel.start > truth.spans[2].start);
    }

    #[test]
    fn empty_utterance_is_empty() {
        let (buf, truth) = synth_utterance(&[], 100.0, 44100).unwrap();
        assert!(buf.is_empty());
        assert!(truth.spans.is_empty());
    }

    #[test]
    fn single_syllable_utterance_has_one_span() {
        let (buf, truth) = synth_utterance(&[full_spec()], 250.0, 44100).unwrap();
        assert_eq!(truth.spans.len(), 1);
        assert_eq!(truth.spans[0], Span::new(0.0, buf.duration()));
    }

    #[test]
    fn contour_transforms_compose() {
        let c = synth_tone_contour(Tone::Rising, 150.0, 0.3);
        let scaled = c.scaled(1.25);
        assert!((scaled.values[0] - 187.5).abs() < 1e-9);
        let stretched = c.stretched_to(0.45);
        assert!((stretched.duration() - 0.45).abs() < 1e-9);
        assert!((stretched.values[0] - c.values[0]).abs() < 1e-9);
        let last_s = stretched.values[stretched.values.len() - 1];
        let last_c = c.values[c.values.len() - 1];
        assert!((last_s - last_c).abs() < 1e-9);
    }

    #[test]
    fn contour_as_pitch_track_is_fully_voiced() {
        let c = synth_tone_contour(Tone::Falling, 200.0, 0.25);
        let track = c.as_pitch_track();
        assert_eq!(track.len(), c.values.len());
        assert!(track.f0.iter().all(|f| f.is_some()));
    }
}
