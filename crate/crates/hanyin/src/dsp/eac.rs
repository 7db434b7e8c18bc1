//! Enhanced-autocorrelation pitch analysis.
//!
//! Per frame: Hann window, zero-pad to twice the frame length, forward FFT,
//! raise the power spectrum to the 1/3 power (a strong magnitude
//! compression that flattens harmonic structure), inverse FFT into a
//! generalized autocorrelation, clip negatives, subtract a lag-doubled copy
//! of the clipped curve (linearly interpolated at odd lags), and clip again.
//! The subtraction cancels the peak an octave below the true period, which
//! is what makes the estimator robust against octave errors. The curve is
//! normalized by its lag-0 value, so peak heights double as a periodicity
//! confidence in [0, 1].
//!
//! Peak picking and the reported confidence compensate the window's
//! intrinsic lag taper (see [`estimate_f0_frame`]); the curve itself is
//! left untouched so its values remain directly comparable to the classic
//! formulation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::{fft, rms, AudioBuffer, DspError};

/// One frame's enhanced autocorrelation.
#[derive(Clone, Debug)]
pub struct EacCurve {
    /// Lag axis in samples: 0..frame_len.
    pub lags: Vec<usize>,
    /// Enhanced, lag-0-normalized correlation values, all ≥ 0.
    /// `values[0]` is 1 for any frame with nonzero energy.
    pub values: Vec<f64>,
    /// Start time of the frame within its source buffer, seconds.
    pub frame_origin: f64,
    /// RMS of the raw (unwindowed) frame.
    pub frame_rms: f64,
}

/// Compute the enhanced autocorrelation of one frame.
///
/// The frame length must be a power of two; lags 0..len-1 are returned.
pub fn enhanced_autocorrelation(frame: &[f64], frame_origin: f64) -> EacCurve {
    let n = frame.len();
    assert!(n.is_power_of_two(), "frame length must be a power of two");
    let frame_rms = rms(frame);

    let window = fft::hann(n);
    let windowed: Vec<f64> = frame.iter().zip(&window).map(|(x, w)| x * w).collect();
    let size = 2 * n;
    let mut buf = fft::real_fft(&windowed, size);

    // Cube root of the power spectrum, as a real spectrum.
    for c in buf.iter_mut() {
        *c = rustfft::num_complex::Complex::new(c.norm_sqr().cbrt(), 0.0);
    }
    fft::fft_inverse(&mut buf);

    let mut values: Vec<f64> = buf[..n].iter().map(|c| c.re / size as f64).collect();

    // Normalize at lag 0; a zero-energy frame yields an all-zero curve.
    let c0 = values[0];
    if c0 > 0.0 {
        for v in values.iter_mut() {
            *v /= c0;
        }
    } else {
        for v in values.iter_mut() {
            *v = 0.0;
        }
    }

    // Clip, subtract the lag-doubled copy, clip again. Lag 0 stays pinned at
    // the normalization reference.
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let clipped = values.clone();
    for lag in 1..n {
        let stretched = if lag % 2 == 0 {
            clipped[lag / 2]
        } else {
            let lo = clipped[lag / 2];
            let hi = if lag / 2 + 1 < n {
                clipped[lag / 2 + 1]
            } else {
                0.0
            };
            (lo + hi) / 2.0
        };
        values[lag] = (values[lag] - stretched).max(0.0);
    }

    EacCurve {
        lags: (0..n).collect(),
        values,
        frame_origin,
        frame_rms,
    }
}

/// Envelope floor below which lag compensation is considered unsupported:
/// past this point the window retains too little overlap at that lag for the
/// curve to carry a measurable peak at all.
const ENVELOPE_FLOOR: f64 = 0.10;

/// The curve's intrinsic lag taper: the analysis window pushed through the
/// same compression pipeline as the signal. Any periodic input's enhanced
/// autocorrelation is (approximately) its ideal peak comb multiplied by this
/// envelope, so the envelope's downward tilt drags peak vertices toward
/// shorter lags — about 1% of the lag for a pure tone at a quarter of the
/// frame length, growing quadratically. Cached per frame length.
fn lag_envelope(n: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("lag envelope cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let window = fft::hann(n);
            let size = 2 * n;
            let mut buf = fft::real_fft(&window, size);
            for c in buf.iter_mut() {
                *c = rustfft::num_complex::Complex::new(c.norm_sqr().cbrt(), 0.0);
            }
            fft::fft_inverse(&mut buf);
            let e0 = buf[0].re;
            Arc::new(buf[..n].iter().map(|c| c.re / e0).collect())
        })
        .clone()
}

/// Voicing decision thresholds for pitch estimation.
#[derive(Clone, Copy, Debug)]
pub struct VoicingThresholds {
    /// Minimum periodicity confidence for a voiced frame.
    pub confidence: f64,
    /// Minimum frame RMS for a voiced frame.
    pub silence_rms: f64,
}

impl Default for VoicingThresholds {
    fn default() -> Self {
        VoicingThresholds {
            confidence: 0.30,
            silence_rms: 0.001,
        }
    }
}

/// Result of single-frame f0 estimation.
#[derive(Clone, Copy, Debug)]
pub struct FrameF0 {
    /// Estimated fundamental, Hz; `None` when the frame is unvoiced.
    pub f0: Option<f64>,
    /// Periodicity confidence in [0, 1].
    pub confidence: f64,
}

/// Estimate the fundamental of one frame from its enhanced autocorrelation.
///
/// The highest raw peak in the [f0_min, f0_max] lag window is located first —
/// on the raw curve, whose taper is what keeps period multiples suppressed.
/// Its vertex is then refined on the taper-compensated curve (raw values
/// divided by the window's own lag envelope) within a small neighborhood:
/// the taper tilts a pure tone's vertex several samples short, which is
/// enough to miss a 1% accuracy budget at long lags. Parabolic interpolation
/// over the compensated points yields the sub-sample lag. Confidence is the
/// compensated value at the picked lag, clamped to [0, 1]: a steady tone
/// reads near 1 whatever its period, noise stays under 0.1, and a peak
/// smeared by moving pitch lands in between. Past roughly a third of the
/// frame the envelope sinks under its floor and confidence decays with the
/// raw peak, so periods too long for the window read as unvoiced. A frame
/// is unvoiced when confidence falls below the threshold or frame RMS below
/// the silence floor.
pub fn estimate_f0_frame(
    curve: &EacCurve,
    sample_rate: u32,
    f0_min: f64,
    f0_max: f64,
    thresholds: VoicingThresholds,
) -> FrameF0 {
    assert!(f0_min > 0.0 && f0_min < f0_max, "need 0 < f0_min < f0_max");
    let rate = sample_rate as f64;
    let n = curve.values.len();
    let lag_min = ((rate / f0_max).ceil() as usize).max(1);
    let lag_max = ((rate / f0_min).floor() as usize).min(n.saturating_sub(2));
    if lag_min > lag_max {
        return FrameF0 {
            f0: None,
            confidence: 0.0,
        };
    }

    let mut coarse_lag = lag_min;
    let mut coarse_val = curve.values[lag_min];
    for lag in lag_min..=lag_max {
        if curve.values[lag] > coarse_val {
            coarse_val = curve.values[lag];
            coarse_lag = lag;
        }
    }
    if coarse_val <= 0.0 {
        return FrameF0 {
            f0: None,
            confidence: 0.0,
        };
    }

    // Re-pick the vertex on the compensated curve within ±5% of the coarse
    // lag — wide enough to cover the taper's pull, far too narrow to reach a
    // competing period multiple.
    let envelope = lag_envelope(n);
    let comp = |lag: usize| curve.values[lag] / envelope[lag].max(ENVELOPE_FLOOR);
    let margin = (coarse_lag / 20).max(2);
    let lo = coarse_lag.saturating_sub(margin).max(lag_min);
    let hi = (coarse_lag + margin).min(lag_max);
    let best_lag = (lo..=hi)
        .max_by(|&a, &b| comp(a).partial_cmp(&comp(b)).expect("finite curve values"))
        .expect("non-empty refinement window");

    // Below the envelope floor the window cannot vouch for the lag — fewer
    // than two candidate periods overlap — so report the uncompensated value,
    // which for any signal sits under the floor and thus under any sane
    // voicing threshold. Dividing by the clamped floor there would boost a
    // misaligned flank pick into false confidence.
    let env = envelope[best_lag];
    let confidence = if env >= ENVELOPE_FLOOR {
        (curve.values[best_lag] / env).clamp(0.0, 1.0)
    } else {
        curve.values[best_lag].clamp(0.0, 1.0)
    };
    if confidence < thresholds.confidence || curve.frame_rms < thresholds.silence_rms {
        return FrameF0 {
            f0: None,
            confidence,
        };
    }

    // Parabolic refinement on the compensated points around the vertex.
    let y0 = comp(best_lag - 1);
    let y1 = comp(best_lag);
    let y2 = comp(best_lag + 1);
    let denom = y0 - 2.0 * y1 + y2;
    let delta = if denom.abs() > 1e-12 {
        (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let f0 = (rate / (best_lag as f64 + delta)).clamp(f0_min, f0_max);
    FrameF0 {
        f0: Some(f0),
        confidence,
    }
}

/// A pitch track: per-frame f0 and confidence at frame-center times.
#[derive(Clone, Debug)]
pub struct PitchTrack {
    /// Frame-center times, seconds; strictly increasing by hop/sample_rate.
    pub times: Vec<f64>,
    /// Per-frame fundamental, Hz; `None` marks unvoiced frames.
    pub f0: Vec<Option<f64>>,
    /// Per-frame periodicity confidence in [0, 1].
    pub confidence: Vec<f64>,
    pub sample_rate: u32,
}

impl PitchTrack {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Iterator over (time, f0) of voiced frames.
    pub fn voiced(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .zip(&self.f0)
            .filter_map(|(&t, f0)| f0.map(|f| (t, f)))
    }

    /// Keep only frames whose center time lies in [start, end).
    pub fn restrict(&self, start: f64, end: f64) -> PitchTrack {
        let mut out = PitchTrack {
            times: Vec::new(),
            f0: Vec::new(),
            confidence: Vec::new(),
            sample_rate: self.sample_rate,
        };
        for i in 0..self.len() {
            if self.times[i] >= start && self.times[i] < end {
                out.times.push(self.times[i]);
                out.f0.push(self.f0[i]);
                out.confidence.push(self.confidence[i]);
            }
        }
        out
    }
}

fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b.min(c)).min(b.max(c))
}

/// Track f0 across a buffer: enhanced autocorrelation every `hop` samples,
/// then a width-3 median filter over the voiced values to remove
/// single-frame octave spikes.
pub fn pitch_track(
    buffer: &AudioBuffer,
    frame_size: usize,
    hop: usize,
    f0_min: f64,
    f0_max: f64,
    thresholds: VoicingThresholds,
) -> Result<PitchTrack, DspError> {
    assert!(
        frame_size.is_power_of_two(),
        "frame size must be a power of two"
    );
    assert!(hop > 0, "hop must be positive");
    if buffer.len() < frame_size {
        return Err(DspError::BufferTooShort {
            needed: frame_size,
            got: buffer.len(),
        });
    }
    let frames = (buffer.len() - frame_size) / hop + 1;
    let rate = buffer.sample_rate as f64;

    let mut track = PitchTrack {
        times: Vec::with_capacity(frames),
        f0: Vec::with_capacity(frames),
        confidence: Vec::with_capacity(frames),
        sample_rate: buffer.sample_rate,
    };
    for f in 0..frames {
        let start = f * hop;
        let frame = &buffer.samples[start..start + frame_size];
        let curve = enhanced_autocorrelation(frame, start as f64 / rate);
        let est = estimate_f0_frame(&curve, buffer.sample_rate, f0_min, f0_max, thresholds);
        track.times.push((start + frame_size / 2) as f64 / rate);
        track.f0.push(est.f0);
        track.confidence.push(est.confidence);
    }

    // Median-filter the voiced subsequence in place.
    let voiced_idx: Vec<usize> = (0..track.len())
        .filter(|&i| track.f0[i].is_some())
        .collect();
    if voiced_idx.len() >= 3 {
        let vals: Vec<f64> = voiced_idx.iter().map(|&i| track.f0[i].unwrap()).collect();
        for k in 1..vals.len() - 1 {
            track.f0[voiced_idx[k]] = Some(median3(vals[k - 1], vals[k], vals[k + 1]));
        }
    }

    Ok(track)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_of_period(period: f64, len: usize, shape: fn(f64) -> f64) -> Vec<f64> {
        (0..len).map(|i| shape(i as f64 / period)).collect()
    }

    fn sine_shape(phase: f64) -> f64 {
        (2.0 * std::f64::consts::PI * phase).sin()
    }

    fn sawtooth_shape(phase: f64) -> f64 {
        2.0 * (phase - phase.floor()) - 1.0
    }

    fn pulse_shape(phase: f64) -> f64 {
        let frac = phase - phase.floor();
        if frac < 0.02 {
            1.0
        } else {
            0.0
        }
    }

    /// Plain time-domain autocorrelation of the Hann-windowed frame, the
    /// reference the transform path is checked against.
    fn brute_force_peak_lag(frame: &[f64], lag_lo: usize, lag_hi: usize) -> usize {
        let window = fft::hann(frame.len());
        let w: Vec<f64> = frame.iter().zip(&window).map(|(x, win)| x * win).collect();
        let mut best = (lag_lo, f64::NEG_INFINITY);
        for lag in lag_lo..=lag_hi {
            let c: f64 = (0..w.len() - lag).map(|i| w[i] * w[i + lag]).sum();
            if c > best.1 {
                best = (lag, c);
            }
        }
        best.0
    }

    #[test]
    fn sine_peak_sits_near_its_period() {
        let frame = frame_of_period(200.0, 2048, sine_shape);
        let curve = enhanced_autocorrelation(&frame, 0.0);
        assert_eq!(curve.values.len(), 2048);
        assert!((curve.values[0] - 1.0).abs() < 1e-12);
        // The raw curve's vertex is pulled a couple of samples short of the
        // true period by the window taper; the transform path must agree with
        // a direct time-domain computation, which shares that taper.
        let peak = (1..2048)
            .max_by(|&a, &b| curve.values[a].partial_cmp(&curve.values[b]).unwrap())
            .unwrap();
        let oracle = brute_force_peak_lag(&frame, 89, 882);
        assert!((peak as i64 - 200).unsigned_abs() <= 3, "peak at {peak}");
        assert!(
            (peak as i64 - oracle as i64).unsigned_abs() <= 2,
            "transform {peak} vs direct {oracle}"
        );
        // The estimator's taper compensation recovers the true period.
        let est = estimate_f0_frame(&curve, 44100, 50.0, 500.0, VoicingThresholds::default());
        let f0 = est.f0.expect("strong sine should be voiced");
        assert!(
            (f0 - 220.5).abs() / 220.5 < 0.01,
            "compensated estimate {f0}"
        );
    }

    #[test]
    fn estimates_are_within_one_percent() {
        // All three shapes at every period, on a frame long enough that the
        // longest lag still has window support (the default pitch frame).
        for period in [90.0, 150.0, 200.0, 300.0, 441.0, 880.0] {
            for shape in [sine_shape as fn(f64) -> f64, sawtooth_shape, pulse_shape] {
                let frame = frame_of_period(period, 4096, shape);
                let curve = enhanced_autocorrelation(&frame, 0.0);
                let est =
                    estimate_f0_frame(&curve, 44100, 50.0, 500.0, VoicingThresholds::default());
                let truth = 44100.0 / period;
                let f0 = est.f0.expect("periodic frame should be voiced");
                assert!(
                    (f0 - truth).abs() / truth < 0.01,
                    "period {period}: estimated {f0}, true {truth}"
                );
            }
        }
        // Shorter frames still resolve mid-range lags to the same budget.
        for (period, shape) in [
            (90.0, sine_shape as fn(f64) -> f64),
            (200.0, sine_shape),
            (441.0, sawtooth_shape),
            (300.0, pulse_shape),
        ] {
            let frame = frame_of_period(period, 2048, shape);
            let curve = enhanced_autocorrelation(&frame, 0.0);
            let est = estimate_f0_frame(&curve, 44100, 50.0, 500.0, VoicingThresholds::default());
            let truth = 44100.0 / period;
            let f0 = est.f0.expect("periodic frame should be voiced");
            assert!(
                (f0 - truth).abs() / truth < 0.01,
                "period {period} @2048: estimated {f0}, true {truth}"
            );
        }
    }

    #[test]
    fn long_lags_need_a_longer_frame() {
        // A 50 Hz tone's lag (882) has essentially no window support in a
        // 2048-sample frame: the curve's peak there is eroded below the
        // voicing threshold, so the frame honestly reads unvoiced. Doubling
        // the frame restores support and the estimate lands within 1%.
        let short = frame_of_period(880.0, 2048, sine_shape);
        let curve = enhanced_autocorrelation(&short, 0.0);
        let est = estimate_f0_frame(&curve, 44100, 50.0, 500.0, VoicingThresholds::default());
        assert!(
            est.f0.is_none(),
            "2048-frame 50 Hz tone should be unvoiced, got {est:?}"
        );

        let long = frame_of_period(880.0, 4096, sine_shape);
        let curve = enhanced_autocorrelation(&long, 0.0);
        let est = estimate_f0_frame(&curve, 44100, 50.0, 500.0, VoicingThresholds::default());
        let truth = 44100.0 / 880.0;
        let f0 = est.f0.expect("4096-frame 50 Hz tone should be voiced");
        assert!(
            (f0 - truth).abs() / truth < 0.01,
            "estimated {f0}, true {truth}"
        );
    }

    #[test]
    fn no_octave_errors_on_harmonic_signals() {
        for period in [150.0, 300.0, 441.0] {
            let frame = frame_of_period(period, 2048, sawtooth_shape);
            let curve = enhanced_autocorrelation(&frame, 0.0);
            let est = estimate_f0_frame(&curve, 44100, 50.0, 500.0, VoicingThresholds::default());
            let truth = 44100.0 / period;
            let f0 = est.f0.unwrap();
            assert!(
                (f0 - truth / 2.0).abs() / (truth / 2.0) > 0.01,
                "octave-down at {period}"
            );
            assert!(
                (f0 - truth * 2.0).abs() / (truth * 2.0) > 0.01,
                "octave-up at {period}"
            );
        }
    }

    #[test]
    fn lag_scales_with_period() {
        // Halving or doubling the period scales the estimated lag by the
        // same factor, within a sample.
        for (p, expect) in [(100.0, 100.0), (200.0, 200.0), (400.0, 400.0)] {
            let frame = frame_of_period(p, 2048, sine_shape);
            let curve = enhanced_autocorrelation(&frame, 0.0);
            let est = estimate_f0_frame(&curve, 44100, 50.0, 500.0, VoicingThresholds::default());
            let lag = 44100.0 / est.f0.expect("voiced");
            assert!(
                (lag - expect).abs() <= 1.0,
                "period {p} estimated lag {lag}"
            );
        }
    }

    #[test]
    fn silence_and_noise_are_unvoiced() {
        let silent = vec![0.0; 2048];
        let curve = enhanced_autocorrelation(&silent, 0.0);
        assert!(curve.values.iter().all(|&v| v == 0.0));
        let est = estimate_f0_frame(&curve, 44100, 50.0, 500.0, VoicingThresholds::default());
        assert!(est.f0.is_none());
        assert_eq!(est.confidence, 0.0);

        // Deterministic pseudo-noise.
        let mut state: u64 = 0x9E3779B97F4A7C15;
        let noise: Vec<f64> = (0..2048)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 1.6 - 0.8
            })
            .collect();
        let curve = enhanced_autocorrelation(&noise, 0.0);
        let est = estimate_f0_frame(&curve, 44100, 50.0, 500.0, VoicingThresholds::default());
        assert!(est.f0.is_none(), "noise came out voiced: {est:?}");
    }

    #[test]
    fn quiet_frames_fall_below_the_silence_floor() {
        let frame: Vec<f64> = frame_of_period(200.0, 2048, sine_shape)
            .into_iter()
            .map(|x| x * 0.0005)
            .collect();
        let curve = enhanced_autocorrelation(&frame, 0.0);
        let est = estimate_f0_frame(&curve, 44100, 50.0, 500.0, VoicingThresholds::default());
        assert!(est.f0.is_none());
    }

    #[test]
    fn pitch_track_follows_a_sine() {
        let rate = 44100u32;
        let samples: Vec<f64> = (0..rate as usize / 2)
            .map(|i| 0.6 * (2.0 * std::f64::consts::PI * 220.5 * i as f64 / rate as f64).sin())
            .collect();
        let buf = AudioBuffer::new(samples, rate).unwrap();
        let track =
            pitch_track(&buf, 2048, 512, 50.0, 500.0, VoicingThresholds::default()).unwrap();
        assert_eq!(track.len(), (buf.len() - 2048) / 512 + 1);
        let voiced: Vec<f64> = track.voiced().map(|(_, f)| f).collect();
        assert!(voiced.len() > track.len() * 9 / 10);
        for f0 in voiced {
            assert!((f0 - 220.5).abs() / 220.5 < 0.01, "f0 {f0}");
        }
    }

    #[test]
    fn pitch_track_follows_a_linear_glide() {
        // Linear chirp 150 -> 250 Hz over 0.4 s; phase is the integral of the
        // instantaneous frequency, so each frame center has a known oracle.
        let rate = 44100u32;
        let dur = 0.4;
        let n = (dur * rate as f64) as usize;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / rate as f64;
                let phase = 150.0 * t + 0.5 * 250.0 * t * t;
                0.6 * (2.0 * std::f64::consts::PI * phase).sin()
            })
            .collect();
        let buf = AudioBuffer::new(samples, rate).unwrap();
        let track =
            pitch_track(&buf, 2048, 512, 50.0, 500.0, VoicingThresholds::default()).unwrap();

        // Central frames (full window support) are voiced and land within 2%
        // of the instantaneous frequency at the frame center.
        let central: Vec<(f64, f64)> = track
            .voiced()
            .filter(|&(t, _)| (0.05..0.35).contains(&t))
            .collect();
        let expected_central = track
            .times
            .iter()
            .filter(|&&t| (0.05..0.35).contains(&t))
            .count();
        assert!(
            central.len() * 10 >= expected_central * 9,
            "only {}/{expected_central} central frames voiced",
            central.len()
        );
        for &(t, f0) in &central {
            let oracle = 150.0 + 250.0 * t;
            assert!(
                (f0 - oracle).abs() / oracle < 0.02,
                "t={t:.3}: {f0} vs oracle {oracle}"
            );
        }

        // The track rises: every frame four hops later reads strictly higher.
        for pair in central.windows(5) {
            assert!(
                pair[4].1 > pair[0].1,
                "glide not rising at t={:.3}",
                pair[0].0
            );
        }
    }

    #[test]
    fn median_of_three() {
        assert_eq!(median3(1.0, 2.0, 3.0), 2.0);
        assert_eq!(median3(3.0, 1.0, 2.0), 2.0);
        assert_eq!(median3(2.0, 3.0, 1.0), 2.0);
        assert_eq!(median3(5.0, 5.0, 1.0), 5.0);
    }

    #[test]
    fn rejects_short_buffers() {
        let buf = AudioBuffer::new(vec![0.1; 512], 44100).unwrap();
        assert!(matches!(
            pitch_track(&buf, 2048, 512, 50.0, 500.0, VoicingThresholds::default()),
            Err(DspError::BufferTooShort { .. })
        ));
    }
}
