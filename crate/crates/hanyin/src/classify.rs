//! Phonetic decisions over analyzed features: tone from the f0 contour,
//! fricative place from the consonant spectrum, onset voicing from
//! periodicity and low-band energy, and nasal-coda presence from the tail
//! region.
//!
//! All thresholds come from [`AnalysisConfig`] and are echoed into reports.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

use crate::config::AnalysisConfig;
use crate::dsp::eac::{self, PitchTrack, VoicingThresholds};
use crate::dsp::{band_energy, block_power, power_fraction, DspError, Spectrogram, Spectrum};
use crate::pinyin::Tone;
use crate::segment::{PhoneRegions, Span};
use crate::synth::synth_tone_contour;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("tone classification needs at least {need} voiced frames, got {got}")]
    TooFewVoicedFrames { got: usize, need: usize },
    #[error("region is silent; no spectral classification possible")]
    SilentRegion,
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// Scalar contour features backing a tone decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToneFeatures {
    /// Mean pitch, semitones relative to the contour median.
    pub level: f64,
    /// Least-squares contour slope, semitones per second.
    pub slope: f64,
    /// Drop from the higher fitted endpoint down to the contour minimum,
    /// semitones.
    pub dip_depth: f64,
    /// Time between the first and last voiced frame, seconds.
    pub duration: f64,
}

/// A classified tone with its evidence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToneResult {
    pub tone: Tone,
    pub features: ToneFeatures,
    /// Margin of the winning rule, mapped into [0, 1].
    pub confidence: f64,
}

/// Sibilant place decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FricativePlace {
    SLike,
    ShLike,
}

/// A classified fricative with the band evidence behind it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FricativeClass {
    pub place: FricativePlace,
    /// Fraction of spectral power in the sibilant band (2–8 kHz).
    pub hi_band_ratio: f64,
    /// Fraction of spectral power above the sibilant band (8 kHz–Nyquist).
    pub top_band_ratio: f64,
}

/// Onset voicing decision with both cues.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoicingDecision {
    pub voiced: bool,
    /// Fraction of spectral power below the low-band edge (500 Hz).
    pub low_freq_ratio: f64,
    /// Strongest per-frame periodicity confidence in the block.
    pub periodicity: f64,
}

/// Nasal-coda presence decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodaDecision {
    pub present: bool,
    /// The tail region, echoed when present.
    pub tail_span: Option<Span>,
}

/// 12 · log2(f / reference), semitones.
fn semitones(f: f64, reference: f64) -> f64 {
    12.0 * (f / reference).log2()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Canonical median-relative semitone shapes of tones 1–4, sampled over a
/// normalized 1-second span.
fn tone_templates() -> &'static [(Tone, Vec<f64>); 4] {
    static TEMPLATES: OnceLock<[(Tone, Vec<f64>); 4]> = OnceLock::new();
    TEMPLATES.get_or_init(|| {
        [Tone::Level, Tone::Rising, Tone::Dipping, Tone::Falling].map(|tone| {
            let contour = synth_tone_contour(tone, 100.0, 1.0);
            let med = median(&mut contour.values.clone());
            (
                tone,
                contour.values.iter().map(|&v| semitones(v, med)).collect(),
            )
        })
    })
}

/// Template value at normalized position x ∈ [0, 1], linearly interpolated.
fn template_at(template: &[f64], x: f64) -> f64 {
    let pos = (x.clamp(0.0, 1.0)) * (template.len() - 1) as f64;
    let i = pos.floor() as usize;
    if i + 1 >= template.len() {
        return template[template.len() - 1];
    }
    let frac = pos - i as f64;
    template[i] * (1.0 - frac) + template[i + 1] * frac
}

/// Classify the tone of a pitch track restricted to one syllable's
/// vowel-plus-coda region.
///
/// Voiced f0 values are converted to semitones relative to their median; a
/// least-squares line gives the slope, and the dip depth is the drop from
/// the higher fitted endpoint to the contour minimum. Rules apply in order:
/// shorter than `neutral_max_ms` is the neutral tone; a dip deeper than
/// `dip_threshold_st` with its minimum inside the middle 60% is the dipping
/// tone; a slope beyond ±`slope_threshold_st_s` is rising/falling; a range
/// under `level_range_st` is the level tone; otherwise a mean level more
/// than `tone3_low_level_st` below the median reads as dipping (the rising
/// part is frequently omitted in running speech), and anything left takes
/// the least-squares-closest canonical contour.
pub fn classify_tone(
    track: &PitchTrack,
    cfg: &AnalysisConfig,
) -> Result<ToneResult, ClassifyError> {
    let points: Vec<(f64, f64)> = track.voiced().collect();
    if points.len() < cfg.min_voiced_frames {
        return Err(ClassifyError::TooFewVoicedFrames {
            got: points.len(),
            need: cfg.min_voiced_frames,
        });
    }
    let med = median(&mut points.iter().map(|(_, f)| *f).collect::<Vec<_>>());
    let st: Vec<(f64, f64)> = points
        .iter()
        .map(|&(t, f)| (t, semitones(f, med)))
        .collect();

    let (t0, t_end) = (st[0].0, st[st.len() - 1].0);
    let duration = t_end - t0;
    debug_assert!(duration > 0.0, "distinct frame times");

    // Least-squares line v ≈ a + b·t.
    let n = st.len() as f64;
    let mean_t = st.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_v = st.iter().map(|(_, v)| v).sum::<f64>() / n;
    let sxx: f64 = st.iter().map(|(t, _)| (t - mean_t).powi(2)).sum();
    let sxy: f64 = st.iter().map(|(t, v)| (t - mean_t) * (v - mean_v)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_v - slope * mean_t;
    let fitted = |t: f64| intercept + slope * t;

    let (min_t, min_v) = st
        .iter()
        .copied()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite semitones"))
        .expect("non-empty track");
    let max_v = st.iter().map(|(_, v)| *v).fold(f64::MIN, f64::max);
    let range = max_v - min_v;
    let dip_depth = fitted(t0).max(fitted(t_end)) - min_v;

    let features = ToneFeatures {
        level: mean_v,
        slope,
        dip_depth,
        duration,
    };
    let dip_in_middle = min_t >= t0 + 0.2 * duration && min_t <= t0 + 0.8 * duration;

    let neutral_max = cfg.neutral_max_ms / 1000.0;
    let (tone, confidence) = if duration < neutral_max {
        (Tone::Neutral, 1.0 - duration / neutral_max)
    } else if dip_depth > cfg.dip_threshold_st && dip_in_middle {
        (
            Tone::Dipping,
            (dip_depth - cfg.dip_threshold_st) / cfg.dip_threshold_st,
        )
    } else if slope > cfg.slope_threshold_st_s {
        (
            Tone::Rising,
            (slope - cfg.slope_threshold_st_s) / cfg.slope_threshold_st_s,
        )
    } else if slope < -cfg.slope_threshold_st_s {
        (
            Tone::Falling,
            (-slope - cfg.slope_threshold_st_s) / cfg.slope_threshold_st_s,
        )
    } else if range < cfg.level_range_st {
        (Tone::Level, 1.0 - range / cfg.level_range_st)
    } else if mean_v < -cfg.tone3_low_level_st {
        (
            Tone::Dipping,
            (-mean_v - cfg.tone3_low_level_st) / cfg.tone3_low_level_st,
        )
    } else {
        // Nearest canonical contour by mean squared semitone distance over
        // normalized time.
        let mut residuals: Vec<(Tone, f64)> = tone_templates()
            .iter()
            .map(|(tone, template)| {
                let r = st
                    .iter()
                    .map(|&(t, v)| {
                        let x = (t - t0) / duration;
                        (v - template_at(template, x)).powi(2)
                    })
                    .sum::<f64>()
                    / n;
                (*tone, r)
            })
            .collect();
        residuals.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite residuals"));
        let margin = (residuals[1].1 - residuals[0].1) / residuals[1].1.max(1e-12);
        (residuals[0].0, margin)
    };

    Ok(ToneResult {
        tone,
        features,
        confidence: confidence.clamp(0.0, 1.0),
    })
}

/// Classify a consonant-region spectrum as s-like or sh-like.
///
/// sh-like noise concentrates in the 2–8 kHz band; s-like noise keeps a
/// slight preponderance at the top of the spectrum. The decision compares
/// the band fractions: sh-like when the 2–8 kHz fraction exceeds
/// `fricative_ratio` times the above-8-kHz fraction.
pub fn classify_fricative(
    spectrum: &Spectrum,
    cfg: &AnalysisConfig,
) -> Result<FricativeClass, ClassifyError> {
    let floor = crate::dsp::DB_FLOOR + 1e-9;
    if spectrum.magnitudes_db.iter().all(|&db| db <= floor) {
        return Err(ClassifyError::SilentRegion);
    }
    let nyquist = spectrum.sample_rate as f64 / 2.0;
    let hi_band_ratio = band_energy(spectrum, cfg.fricative_band_lo, cfg.fricative_band_hi)?;
    let top_band_ratio = band_energy(spectrum, cfg.fricative_band_hi, nyquist)?;
    let place = if hi_band_ratio > cfg.fricative_ratio * top_band_ratio {
        FricativePlace::ShLike
    } else {
        FricativePlace::SLike
    };
    Ok(FricativeClass {
        place,
        hi_band_ratio,
        top_band_ratio,
    })
}

/// Decide whether a sample block (typically a consonant region) is voiced.
///
/// Two cues, either sufficient: periodicity (the strongest per-frame
/// enhanced-autocorrelation confidence) at `voicing_confidence` or more, or
/// at least `voicing_low_band_ratio` of the spectral power below
/// `voicing_low_band_hz` — vocal-cord vibration puts energy at the bottom
/// of the spectrum even when the waveform is noisy. Total on any finite
/// block; blocks shorter than one analysis window are zero-padded.
pub fn detect_voicing(block: &[f64], sample_rate: u32, cfg: &AnalysisConfig) -> VoicingDecision {
    let (freqs, power) = block_power(block, sample_rate);
    let low_freq_ratio = power_fraction(&freqs, &power, 0.0, cfg.voicing_low_band_hz);

    let window = cfg.window_size;
    let thresholds = VoicingThresholds {
        confidence: cfg.voicing_confidence,
        silence_rms: cfg.silence_rms,
    };
    let mut periodicity: f64 = 0.0;
    let mut start = 0;
    loop {
        let end = (start + window).min(block.len());
        let mut frame = block[start..end].to_vec();
        frame.resize(window, 0.0);
        let curve = eac::enhanced_autocorrelation(&frame, 0.0);
        let est = eac::estimate_f0_frame(&curve, sample_rate, cfg.f0_min, cfg.f0_max, thresholds);
        periodicity = periodicity.max(est.confidence);
        start += cfg.hop;
        if start + window > block.len() {
            break;
        }
    }

    VoicingDecision {
        voiced: periodicity >= cfg.voicing_confidence
            || low_freq_ratio >= cfg.voicing_low_band_ratio,
        low_freq_ratio,
        periodicity,
    }
}

/// Mean total column power and mean high-band (`fricative_band_lo..hi`)
/// fraction over spectrogram columns whose centre time lies in
/// `[start, end)`. `None` when the span covers no columns.
fn span_power_profile(
    spectrogram: &Spectrogram,
    start: f64,
    end: f64,
    cfg: &AnalysisConfig,
) -> Option<(f64, f64)> {
    let mut total = 0.0;
    let mut high = 0.0;
    let mut cols = 0;
    for (i, &t) in spectrogram.times.iter().enumerate() {
        if t >= start && t < end {
            let power: Vec<f64> = spectrogram.magnitudes_db[i]
                .iter()
                .map(|&db| 10f64.powf(db / 10.0))
                .collect();
            total += power.iter().sum::<f64>();
            high += power_fraction(
                &spectrogram.freqs,
                &power,
                cfg.fricative_band_lo,
                cfg.fricative_band_hi,
            );
            cols += 1;
        }
    }
    (cols > 0).then(|| (total / cols as f64, high / cols as f64))
}

/// Decide whether a segmented syllable carries a nasal-like coda.
///
/// Present when the coda-tail region exists, at least half of the pitch
/// frames inside it are voiced (it is still periodic, unlike silence),
/// its mean spectrogram column power sits below `tail_rms_ratio²` of the
/// vowel region's mean (the tail is audibly fainter — periodicity
/// confidence alone cannot tell them apart because the autocorrelation
/// is amplitude-normalized), and its high-band (2–8 kHz) fraction stays
/// under `tail_high_band_max` (a low-frequency murmur, not frication).
pub fn detect_coda(
    regions: &PhoneRegions,
    track: &PitchTrack,
    spectrogram: &Spectrogram,
    cfg: &AnalysisConfig,
) -> CodaDecision {
    let absent = CodaDecision {
        present: false,
        tail_span: None,
    };
    let Some(tail) = regions.coda_tail else {
        return absent;
    };

    let tail_track = track.restrict(tail.start, tail.end);
    if tail_track.is_empty() {
        return absent;
    }
    let voiced_frames = tail_track.f0.iter().filter(|f| f.is_some()).count();
    if voiced_frames * 2 < tail_track.len() {
        return absent;
    }

    let Some((tail_power, tail_high)) = span_power_profile(spectrogram, tail.start, tail.end, cfg)
    else {
        return absent;
    };
    let Some((vowel_power, _)) =
        span_power_profile(spectrogram, regions.vowel.start, regions.vowel.end, cfg)
    else {
        return absent;
    };
    if tail_power >= cfg.tail_rms_ratio * cfg.tail_rms_ratio * vowel_power {
        return absent;
    }
    if tail_high >= cfg.tail_high_band_max {
        return absent;
    }

    CodaDecision {
        present: true,
        tail_span: Some(tail),
    }
}
