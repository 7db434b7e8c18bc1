//! Syllable location and intra-syllable region taxonomy.
//!
//! Mandarin utterances carry audible pauses between syllables, so syllable
//! spans fall out of a hysteresis threshold on the RMS envelope. Each span
//! is then split into up to four ordered regions — consonant, consonant–
//! vowel transition, vowel, coda tail — from per-frame features: voicing
//! (enhanced-autocorrelation confidence), the 2–8 kHz high-band energy
//! fraction, spectral flux, and frame RMS.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::AnalysisConfig;
use crate::dsp::{block_power, eac, power_fraction, rms, rms_envelope, AudioBuffer, DspError};

/// A time interval inside a buffer, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start: f64,
    pub end: f64,
}

impl Span {
    pub fn new(start: f64, end: f64) -> Span {
        Span { start, end }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// The same interval shifted later by `dt` seconds.
    pub fn shifted(&self, dt: f64) -> Span {
        Span {
            start: self.start + dt,
            end: self.end + dt,
        }
    }
}

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("no voiced frames in {start:.3}..{end:.3} s; expected a vowel")]
    NoVoicedFrames { start: f64, end: f64 },
}

/// Ordered regions of one syllable. Present regions are contiguous; the
/// vowel is always present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhoneRegions {
    pub consonant: Option<Span>,
    pub transition: Option<Span>,
    pub vowel: Span,
    pub coda_tail: Option<Span>,
}

/// Find syllable spans by hysteresis on the RMS envelope.
///
/// A span opens when the envelope rises above `rms_on` and closes at the
/// moment it last fell below `rms_off`, provided the lull before the next
/// rise lasted at least `min_gap_ms` (shorter lulls are treated as
/// intra-syllable dips). Spans shorter than `min_syllable_ms` are dropped.
pub fn detect_syllables(
    buffer: &AudioBuffer,
    cfg: &AnalysisConfig,
) -> Result<Vec<Span>, SegmentError> {
    let env = rms_envelope(buffer, cfg.seg_frame_size, cfg.hop)?;
    let min_gap = cfg.min_gap_ms / 1000.0;
    let min_syllable = cfg.min_syllable_ms / 1000.0;
    // The envelope frame straddles both edges of a silence: it reads below
    // rms_off only once the window sits almost wholly inside the gap, and
    // back above rms_on as soon as it clips the next onset. The centre-time
    // interval therefore under-reads the true silent span by about one
    // window; credit it back so min_gap_ms compares against true silence.
    let window_dur = cfg.seg_frame_size as f64 / buffer.sample_rate as f64;

    let mut spans: Vec<Span> = Vec::new();
    // (span start, time the envelope first fell below rms_off, if cooling)
    let mut open: Option<(f64, Option<f64>)> = None;
    for &(t, level) in &env {
        match &mut open {
            None => {
                if level > cfg.rms_on {
                    open = Some((t, None));
                }
            }
            Some((start, cooling)) => {
                if level < cfg.rms_off {
                    cooling.get_or_insert(t);
                } else if level > cfg.rms_on {
                    if let Some(fell) = *cooling {
                        if t - fell + window_dur >= min_gap {
                            spans.push(Span::new(*start, fell));
                            open = Some((t, None));
                        } else {
                            *cooling = None;
                        }
                    }
                }
                // Levels inside the hysteresis band leave the state as is.
            }
        }
    }
    if let Some((start, cooling)) = open {
        let end = cooling.unwrap_or_else(|| env.last().map(|&(t, _)| t).unwrap_or(start));
        if end > start {
            spans.push(Span::new(start, end));
        }
    }
    spans.retain(|s| s.duration() >= min_syllable);
    Ok(spans)
}

/// Per-frame features over a syllable span, on the segmentation frame grid.
pub(crate) struct FrameFeatures {
    /// Left edge of each frame, seconds (absolute buffer time).
    pub edges: Vec<f64>,
    pub voiced: Vec<bool>,
    pub high_band: Vec<f64>,
    pub flux: Vec<f64>,
    pub rms: Vec<f64>,
    /// Enhanced-autocorrelation confidence per frame.
    pub confidence: Vec<f64>,
    /// Time one hop past the last frame's left edge, clamped to span end.
    pub end: f64,
}

/// Number of equal-width bands the spectrum is collapsed into for the
/// spectral-flux measure (formant-scale resolution at speech rates).
const FLUX_BANDS: usize = 16;

fn frame_features(
    buffer: &AudioBuffer,
    span: Span,
    cfg: &AnalysisConfig,
) -> Result<FrameFeatures, SegmentError> {
    let rate = buffer.sample_rate as f64;
    let frame = cfg.seg_frame_size;
    let s0 = (span.start * rate).round() as usize;
    let s1 = ((span.end * rate).round() as usize).min(buffer.len());
    if s1 <= s0 || s1 - s0 < frame {
        return Err(SegmentError::Dsp(DspError::BufferTooShort {
            needed: frame,
            got: s1.saturating_sub(s0),
        }));
    }
    let frames = (s1 - s0 - frame) / cfg.hop + 1;

    // Voicing needs autocorrelation support out to lags the segmentation
    // frame is too short for, so it looks at a window twice as long,
    // centered on the same frame grid and zero-padded at buffer edges.
    let vframe = (2 * frame).next_power_of_two();

    let mut out = FrameFeatures {
        edges: Vec::with_capacity(frames),
        voiced: Vec::with_capacity(frames),
        high_band: Vec::with_capacity(frames),
        flux: Vec::with_capacity(frames),
        rms: Vec::with_capacity(frames),
        confidence: Vec::with_capacity(frames),
        end: span.end,
    };
    let mut prev_mags: Option<Vec<f64>> = None;
    for f in 0..frames {
        let a = s0 + f * cfg.hop;
        let block = &buffer.samples[a..a + frame];
        out.edges.push(a as f64 / rate);
        let frame_rms = rms(block);
        out.rms.push(frame_rms);

        let (freqs, power) = block_power(block, buffer.sample_rate);
        out.high_band.push(power_fraction(
            &freqs,
            &power,
            cfg.fricative_band_lo,
            cfg.fricative_band_hi,
        ));

        // Spectral flux over a coarse band envelope: power summed into
        // FLUX_BANDS equal-width bands, band magnitudes L1-normalized, L1
        // distance to the previous frame. Full-resolution bins would read a
        // pitch glide as perpetual movement (every harmonic sweeps); the
        // band envelope only moves when the sound itself changes shape
        // (noise giving way to a vowel, resonances jumping).
        let nyquist = rate / 2.0;
        let mut bands = [0.0f64; FLUX_BANDS];
        for (f, p) in freqs.iter().zip(&power) {
            let b = ((f / nyquist) * FLUX_BANDS as f64) as usize;
            bands[b.min(FLUX_BANDS - 1)] += p;
        }
        let mags: Vec<f64> = bands.iter().map(|p| p.sqrt()).collect();
        let total: f64 = mags.iter().sum();
        let norm: Vec<f64> = if total > 0.0 {
            mags.iter().map(|m| m / total).collect()
        } else {
            mags
        };
        let flux = match &prev_mags {
            Some(prev) => prev.iter().zip(&norm).map(|(a, b)| (a - b).abs()).sum(),
            None => 0.0,
        };
        out.flux.push(flux);
        prev_mags = Some(norm);

        // Centered, zero-padded voicing window.
        let center = a + frame / 2;
        let lo = center.saturating_sub(vframe / 2);
        let hi = (center + vframe / 2).min(buffer.len());
        let mut vblock = vec![0.0; vframe];
        vblock[..hi - lo].copy_from_slice(&buffer.samples[lo..hi]);
        let curve = eac::enhanced_autocorrelation(&vblock, lo as f64 / rate);
        let est = eac::estimate_f0_frame(
            &curve,
            buffer.sample_rate,
            cfg.f0_min,
            cfg.f0_max,
            eac::VoicingThresholds {
                confidence: cfg.voicing_confidence,
                silence_rms: cfg.silence_rms,
            },
        );
        out.confidence.push(est.confidence);
        out.voiced
            .push(est.f0.is_some() && frame_rms >= cfg.silence_rms);
    }
    Ok(out)
}

/// Split one syllable span into consonant / transition / vowel / coda-tail
/// regions.
///
/// The vowel is the longest run of voiced frames, after bridging unvoiced
/// dips up to `voicing_bridge_frames` long. Trailing frames of that run
/// whose RMS drops below `tail_rms_ratio` of the run's median and whose
/// high-band fraction stays under `tail_high_band_max` become the coda
/// tail (at least `min_tail_frames` of them). Leading frames before the run
/// that are unvoiced or high-band-dominant form the consonant, which ends
/// at its last high-band-dominant frame when there is one (unvoiced
/// low-band frames past that point are already consonant-to-vowel mix);
/// whatever sits between the consonant and the vowel's first spectrally
/// steady frame (flux at or below `flux_threshold`) is the transition.
/// Region boundaries snap to frame left edges; the first region starts at
/// the span start and the last ends at the span end.
pub fn segment_syllable(
    buffer: &AudioBuffer,
    span: Span,
    cfg: &AnalysisConfig,
) -> Result<PhoneRegions, SegmentError> {
    let feats = frame_features(buffer, span, cfg)?;
    let n = feats.edges.len();
    if !feats.voiced.iter().any(|&v| v) {
        return Err(SegmentError::NoVoicedFrames {
            start: span.start,
            end: span.end,
        });
    }

    // Bridge short unvoiced dips that sit between voiced frames.
    let mut voiced = feats.voiced.clone();
    let mut i = 0;
    while i < n {
        if !voiced[i] {
            let gap_start = i;
            while i < n && !voiced[i] {
                i += 1;
            }
            if gap_start > 0 && i < n && i - gap_start <= cfg.voicing_bridge_frames {
                voiced[gap_start..i].fill(true);
            }
        } else {
            i += 1;
        }
    }

    // Longest voiced run, earliest on ties.
    let mut best: Option<(usize, usize)> = None; // [start, end)
    let mut i = 0;
    while i < n {
        if voiced[i] {
            let start = i;
            while i < n && voiced[i] {
                i += 1;
            }
            if best.is_none_or(|(a, b)| i - start > b - a) {
                best = Some((start, i));
            }
        } else {
            i += 1;
        }
    }
    let (mut run_start, run_end) = best.expect("a voiced frame exists");

    // Coda tail: trailing low-RMS, low-high-band frames of the run.
    let mut run_rms: Vec<f64> = (run_start..run_end).map(|f| feats.rms[f]).collect();
    run_rms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_rms = run_rms[run_rms.len() / 2];
    let mut tail_start = run_end;
    while tail_start > run_start
        && feats.rms[tail_start - 1] < cfg.tail_rms_ratio * median_rms
        && feats.high_band[tail_start - 1] < cfg.tail_high_band_max
    {
        tail_start -= 1;
    }
    let tail = if run_end - tail_start >= cfg.min_tail_frames && tail_start > run_start {
        Some((tail_start, run_end))
    } else {
        None
    };
    let vowel_end = tail.map_or(run_end, |(s, _)| s);

    // Consonant: maximal prefix of unvoiced or high-band-dominant frames.
    // When the prefix contains high-band-dominant frames (a sibilant), the
    // consonant proper ends after the last of them: later prefix frames are
    // low-band but still unvoiced, i.e. the fade into the vowel.
    let mut prefix_end = 0;
    while prefix_end < run_start
        && (!voiced[prefix_end] || feats.high_band[prefix_end] > cfg.consonant_high_band)
    {
        prefix_end += 1;
    }
    let cons_end = (0..prefix_end)
        .rev()
        .find(|&f| feats.high_band[f] > cfg.consonant_high_band)
        .map_or(prefix_end, |f| f + 1);

    // Transition: from the consonant's end through the vowel run's leading
    // spectrally unsteady frames.
    let mut steady = run_start.max(cons_end);
    while steady < vowel_end.saturating_sub(1) && feats.flux[steady] > cfg.flux_threshold {
        steady += 1;
    }
    let trans = if steady > cons_end {
        Some((cons_end, steady))
    } else {
        None
    };
    run_start = steady;

    // Frame-index ranges to absolute time; last region ends at the span end.
    let edge = |f: usize| if f >= n { feats.end } else { feats.edges[f] };
    let vowel_span = Span::new(
        if cons_end == 0 && trans.is_none() {
            span.start
        } else {
            edge(run_start)
        },
        if tail.is_some() {
            edge(vowel_end)
        } else {
            feats.end
        },
    );
    Ok(PhoneRegions {
        consonant: (cons_end > 0).then(|| Span::new(span.start, edge(cons_end))),
        transition: trans.map(|(a, b)| Span::new(edge(a), edge(b))),
        vowel: vowel_span,
        coda_tail: tail.map(|(s, _)| Span::new(edge(s), feats.end)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pinyin::Tone;
    use crate::synth::{
        synth_syllable, synth_tone_contour, synth_utterance, synth_voiced, Onset, SyllableSynthSpec,
    };

    fn cfg() -> AnalysisConfig {
        AnalysisConfig::default()
    }

    fn vowel_spec(tone: Tone) -> SyllableSynthSpec {
        SyllableSynthSpec {
            tone,
            base_f0: 180.0,
            onset: Onset::None,
            onset_ms: 0.0,
            transition_ms: 0.0,
            vowel_ms: 250.0,
            tail_ms: 0.0,
            nasal_tail: false,
            seed: 7,
        }
    }

    #[test]
    fn five_separated_syllables_give_five_spans() {
        let specs: Vec<SyllableSynthSpec> = (0..5)
            .map(|i| SyllableSynthSpec {
                seed: i as u64 + 1,
                ..vowel_spec(Tone::Level)
            })
            .collect();
        let (buf, truth) = synth_utterance(&specs, 100.0, 44100).unwrap();
        let spans = detect_syllables(&buf, &cfg()).unwrap();
        assert_eq!(spans.len(), 5, "spans: {spans:?}");
        for (got, want) in spans.iter().zip(&truth.spans) {
            assert!(
                (got.start - want.start).abs() < 0.025,
                "start {got:?} vs {want:?}"
            );
            assert!(
                (got.end - want.end).abs() < 0.025,
                "end {got:?} vs {want:?}"
            );
        }
        // Ordered and disjoint.
        for w in spans.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
    }

    #[test]
    fn silence_has_no_spans() {
        let buf = AudioBuffer::new(vec![0.0; 44100], 44100).unwrap();
        assert!(detect_syllables(&buf, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn continuous_tone_is_one_span() {
        let contour = synth_tone_contour(Tone::Level, 180.0, 0.8);
        let buf = synth_voiced(&contour, 0.8, 0.5, 44100);
        let spans = detect_syllables(&buf, &cfg()).unwrap();
        assert_eq!(spans.len(), 1);
        assert!(spans[0].start < 0.03 && spans[0].end > 0.75);
    }

    #[test]
    fn short_gaps_do_not_split() {
        // 40 ms < min_gap 60 ms: one span.
        let specs = vec![vowel_spec(Tone::Level), vowel_spec(Tone::Level)];
        let (buf, _) = synth_utterance(&specs, 40.0, 44100).unwrap();
        assert_eq!(detect_syllables(&buf, &cfg()).unwrap().len(), 1);
    }

    #[test]
    fn short_buffer_errors() {
        let buf = AudioBuffer::new(vec![0.1; 256], 44100).unwrap();
        assert!(matches!(
            detect_syllables(&buf, &cfg()),
            Err(SegmentError::Dsp(DspError::BufferTooShort { .. }))
        ));
    }

    fn sheng_like() -> SyllableSynthSpec {
        SyllableSynthSpec {
            tone: Tone::Level,
            base_f0: 180.0,
            onset: Onset::ShLike,
            onset_ms: 80.0,
            transition_ms: 40.0,
            vowel_ms: 200.0,
            tail_ms: 100.0,
            nasal_tail: true,
            seed: 11,
        }
    }

    #[test]
    fn sheng_analog_yields_four_ordered_regions() {
        let (buf, truth) = synth_syllable(&sheng_like(), 44100).unwrap();
        let span = Span::new(0.0, buf.duration());
        let regions = segment_syllable(&buf, span, &cfg()).unwrap();

        let cons = regions.consonant.expect("consonant");
        let trans = regions.transition.expect("transition");
        let tail = regions.coda_tail.expect("coda tail");
        let truth_cons = truth.consonant.unwrap();
        let truth_trans = truth.transition.unwrap();
        let truth_tail = truth.coda_tail.unwrap();

        // Ordered and contiguous.
        assert_eq!(cons.end, trans.start);
        assert_eq!(trans.end, regions.vowel.start);
        assert_eq!(regions.vowel.end, tail.start);

        for (got, want, name) in [
            (cons.start, truth_cons.start, "consonant start"),
            (cons.end, truth_cons.end, "consonant end"),
            (trans.end, truth_trans.end, "transition end"),
            (regions.vowel.end, truth.vowel.end, "vowel end"),
            (tail.end, truth_tail.end, "tail end"),
        ] {
            assert!((got - want).abs() <= 0.025, "{name}: {got:.3} vs {want:.3}");
        }
    }

    #[test]
    fn pure_vowel_has_no_consonant_or_transition() {
        let (buf, _) = synth_syllable(&vowel_spec(Tone::Level), 44100).unwrap();
        let span = Span::new(0.0, buf.duration());
        let regions = segment_syllable(&buf, span, &cfg()).unwrap();
        assert!(regions.consonant.is_none(), "{regions:?}");
        assert!(regions.transition.is_none(), "{regions:?}");
        assert!(regions.coda_tail.is_none(), "{regions:?}");
        assert!(regions.vowel.duration() > 0.9 * buf.duration());
    }

    #[test]
    fn unvoiced_noise_has_no_vowel() {
        let buf = crate::synth::synth_fricative(crate::synth::FricativeKind::ShLike, 0.3, 3, 44100);
        let span = Span::new(0.0, buf.duration());
        assert!(matches!(
            segment_syllable(&buf, span, &cfg()),
            Err(SegmentError::NoVoicedFrames { .. })
        ));
    }

    #[test]
    fn segmentation_is_idempotent_on_the_extracted_span() {
        let specs = vec![sheng_like(), vowel_spec(Tone::Rising)];
        let (buf, _) = synth_utterance(&specs, 120.0, 44100).unwrap();
        let span = detect_syllables(&buf, &cfg()).unwrap()[0];
        let first = segment_syllable(&buf, span, &cfg()).unwrap();

        // Re-run on the extracted sub-buffer of that span; boundaries should
        // land on the same frames up to edge effects of one hop.
        let rate = buf.sample_rate as f64;
        let (a, b) = (
            (span.start * rate).round() as usize,
            (span.end * rate).round() as usize,
        );
        let sub = AudioBuffer::new(buf.samples[a..b].to_vec(), buf.sample_rate).unwrap();
        let second = segment_syllable(&sub, Span::new(0.0, sub.duration()), &cfg()).unwrap();

        let hop_s = cfg().hop as f64 / 44100.0;
        let close = |x: Option<Span>, y: Option<Span>| match (x, y) {
            (None, None) => true,
            (Some(x), Some(y)) => {
                let y = y.shifted(span.start);
                (x.start - y.start).abs() <= hop_s && (x.end - y.end).abs() <= hop_s
            }
            _ => false,
        };
        assert!(close(first.consonant, second.consonant), "consonant");
        assert!(close(first.transition, second.transition), "transition");
        assert!(close(Some(first.vowel), Some(second.vowel)), "vowel");
        assert!(close(first.coda_tail, second.coda_tail), "coda tail");
    }

    #[test]
    fn halving_amplitude_moves_no_boundary_by_more_than_a_hop() {
        let specs = vec![vowel_spec(Tone::Level), vowel_spec(Tone::Falling)];
        let (buf, _) = synth_utterance(&specs, 120.0, 44100).unwrap();
        let spans_full = detect_syllables(&buf, &cfg()).unwrap();
        let halved = AudioBuffer::new(
            buf.samples.iter().map(|s| s * 0.5).collect(),
            buf.sample_rate,
        )
        .unwrap();
        let spans_half = detect_syllables(&halved, &cfg()).unwrap();
        assert_eq!(spans_full.len(), spans_half.len());
        let hop_s = cfg().hop as f64 / 44100.0;
        for (a, b) in spans_full.iter().zip(&spans_half) {
            assert!((a.start - b.start).abs() <= hop_s);
            assert!((a.end - b.end).abs() <= hop_s);
        }
    }

    #[test]
    fn spans_stay_inside_the_buffer() {
        let specs: Vec<SyllableSynthSpec> = (0..4)
            .map(|i| SyllableSynthSpec {
                seed: 20 + i,
                ..vowel_spec(Tone::Rising)
            })
            .collect();
        let (buf, _) = synth_utterance(&specs, 90.0, 44100).unwrap();
        for s in detect_syllables(&buf, &cfg()).unwrap() {
            assert!(s.start >= 0.0 && s.end <= buf.duration() + 1e-9 && s.start < s.end);
        }
    }
}
