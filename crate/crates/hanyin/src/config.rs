//! Analysis configuration.
//!
//! Every tunable threshold in the pipeline lives here, with defaults chosen
//! for 44.1 kHz speech recordings. The full config is echoed into every
//! report so a result can be reproduced exactly. No environment variables:
//! the CLI feeds this struct from flags and/or a JSON config file.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    // ---- short-time analysis ----
    /// Analysis window length in samples (power of two).
    pub window_size: usize,
    /// Hop between analysis frames in samples.
    pub hop: usize,
    /// Silence floor for dB spectra.
    pub db_floor: f64,

    // ---- pitch tracking ----
    /// Frame length in samples for pitch analysis (power of two). A longer
    /// frame supports deeper fundamentals (the autocorrelation sees lags to
    /// about a third of the frame: 2048 at 44.1 kHz reaches ≈65 Hz) but
    /// smears the peak when the pitch moves, so tone glides want it short.
    pub pitch_frame_size: usize,
    /// Lowest trackable fundamental, Hz.
    pub f0_min: f64,
    /// Highest trackable fundamental, Hz.
    pub f0_max: f64,
    /// A frame is voiced only if its periodicity confidence reaches this.
    pub voicing_confidence: f64,
    /// A frame is unvoiced outright below this RMS.
    pub silence_rms: f64,

    // ---- syllable detection and phone regions ----
    /// Frame length in samples for envelopes and region features
    /// (shorter than `window_size` to keep boundaries sharp).
    pub seg_frame_size: usize,
    /// RMS level that opens a syllable span.
    pub rms_on: f64,
    /// RMS level below which a span may close (hysteresis).
    pub rms_off: f64,
    /// A span closes only after this long below `rms_off`, ms.
    pub min_gap_ms: f64,
    /// Spans shorter than this are discarded, ms.
    pub min_syllable_ms: f64,
    /// Unvoiced dips up to this many frames long are bridged when locating
    /// the vowel's voiced run. Confidence sags where the waveform changes
    /// character (e.g. the vowel-to-coda junction), and every analysis
    /// window straddling that instant is affected — up to the window/hop
    /// ratio of consecutive frames.
    pub voicing_bridge_frames: usize,
    /// L1 distance between consecutive normalized coarse-band spectral
    /// envelopes above which a frame counts as spectrally moving
    /// (transition). The envelope ignores harmonic motion under a pitch
    /// glide; only shape changes (noise to vowel, resonance jumps) register.
    pub flux_threshold: f64,
    /// A trailing frame joins the coda tail when its RMS falls below this
    /// fraction of the vowel-region median RMS.
    pub tail_rms_ratio: f64,
    /// Coda-tail frames must keep their high-band energy fraction below this.
    pub tail_high_band_max: f64,
    /// Minimum coda-tail length in frames (guards against the single
    /// half-filled frame at a vowel's edge).
    pub min_tail_frames: usize,
    /// A leading frame counts as consonantal when unvoiced or when its
    /// high-band energy fraction exceeds this.
    pub consonant_high_band: f64,

    // ---- spectral bands, Hz ----
    /// Sibilant band lower edge.
    pub fricative_band_lo: f64,
    /// Sibilant band upper edge; energy above it (to Nyquist) is the
    /// comparison band.
    pub fricative_band_hi: f64,
    /// sh-like when in-band energy exceeds above-band energy by this factor.
    pub fricative_ratio: f64,
    /// Voicing-decision low band upper edge.
    pub voicing_low_band_hz: f64,
    /// Voiced when at least this fraction of energy sits in the low band.
    pub voicing_low_band_ratio: f64,

    // ---- tone rules ----
    /// Contours shorter than this are the neutral tone, ms.
    pub neutral_max_ms: f64,
    /// Minimum dip depth (semitones) for the dipping tone.
    pub dip_threshold_st: f64,
    /// Absolute slope (semitones/second) beyond which a contour is
    /// rising/falling.
    pub slope_threshold_st_s: f64,
    /// Maximum contour range (semitones) for the level tone.
    pub level_range_st: f64,
    /// Fallback rule: a mean level at least this many semitones below the
    /// median reads as the dipping tone.
    pub tone3_low_level_st: f64,
    /// Tone classification needs at least this many voiced frames.
    pub min_voiced_frames: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            window_size: 2048,
            hop: 512,
            db_floor: -160.0,
            pitch_frame_size: 2048,
            f0_min: 50.0,
            f0_max: 500.0,
            voicing_confidence: 0.30,
            silence_rms: 0.001,
            seg_frame_size: 1024,
            rms_on: 0.02,
            rms_off: 0.01,
            min_gap_ms: 60.0,
            min_syllable_ms: 50.0,
            voicing_bridge_frames: 4,
            flux_threshold: 0.2,
            tail_rms_ratio: 0.7,
            tail_high_band_max: 0.1,
            min_tail_frames: 2,
            consonant_high_band: 0.5,
            fricative_band_lo: 2000.0,
            fricative_band_hi: 8000.0,
            fricative_ratio: 1.5,
            voicing_low_band_hz: 500.0,
            voicing_low_band_ratio: 0.5,
            neutral_max_ms: 120.0,
            dip_threshold_st: 2.5,
            slope_threshold_st_s: 8.0,
            level_range_st: 3.0,
            tone3_low_level_st: 1.0,
            min_voiced_frames: 4,
        }
    }
}

impl AnalysisConfig {
    /// Set one field by name from its string representation, as given on a
    /// command line (`--config rms_on=0.03`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let mut json = serde_json::to_value(&*self).expect("config serializes");
        let map = json.as_object_mut().unwrap();
        let slot = map
            .get_mut(key)
            .ok_or_else(|| format!("unknown config key {key:?}"))?;
        let parsed: serde_json::Value = serde_json::from_str(value)
            .map_err(|_| format!("config value for {key:?} is not a number: {value:?}"))?;
        if !parsed.is_number() {
            return Err(format!(
                "config value for {key:?} is not a number: {value:?}"
            ));
        }
        *slot = parsed;
        *self = serde_json::from_value(json).map_err(|e| format!("invalid config: {e}"))?;
        Ok(())
    }
}
