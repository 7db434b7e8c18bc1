//! End-to-end analysis of a recording into a serializable report.
//!
//! [`analyze`] runs the whole pipeline — syllable detection, phone-region
//! segmentation, tone / onset / coda classification — threads one
//! [`AnalysisConfig`] through every stage, and echoes it into the report so
//! any result can be reproduced. When an expected pinyin transcription is
//! given, the report carries an [`ExpectationCheck`] comparing it
//! syllable by syllable against what was heard.
//!
//! Exporters: reports as JSON (schema version [`SCHEMA_VERSION`]) or CSV,
//! spectrograms as binary PGM or CSV, pitch tracks as CSV. All outputs are
//! byte-deterministic for identical input and config.

use std::path::Path;

use serde::Serialize;

use crate::classify::{
    classify_fricative, classify_tone, detect_coda, detect_voicing, ClassifyError, CodaDecision,
    FricativeClass, FricativePlace, ToneResult, VoicingDecision,
};
use crate::config::AnalysisConfig;
use crate::dsp::{
    eac, load_wav, spectrum, stft, AudioBuffer, DspError, PitchTrack, Spectrogram,
    VoicingThresholds, DB_FLOOR,
};
use crate::pinyin::{parse_pinyin, Coda, PinyinError, Syllable};
use crate::segment::{detect_syllables, segment_syllable, PhoneRegions, SegmentError, Span};

/// Version stamped into every JSON report as the top-level `"schema"` key.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Dsp(#[from] DspError),
    /// Utterance-level segmentation failed.
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error("syllable {index} ({start:.3}..{end:.3} s): {source}")]
    SyllableSegment {
        index: usize,
        start: f64,
        end: f64,
        #[source]
        source: SegmentError,
    },
    #[error("syllable {index} ({start:.3}..{end:.3} s): {source}")]
    SyllableClassify {
        index: usize,
        start: f64,
        end: f64,
        #[source]
        source: ClassifyError,
    },
    #[error("invalid expected pinyin {token:?}: {source}")]
    InvalidExpectedPinyin {
        token: String,
        #[source]
        source: PinyinError,
    },
}

/// Identity of the analyzed recording.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileInfo {
    pub path: String,
    pub sample_rate: u32,
    /// Total length, seconds.
    pub duration: f64,
}

/// Classification of a syllable's consonant region, when one was found.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OnsetAnalysis {
    /// The consonant region the decisions were made over.
    pub region: Span,
    pub fricative: FricativeClass,
    pub voicing: VoicingDecision,
}

/// Everything the pipeline decided about one detected syllable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyllableAnalysis {
    /// Position in the utterance, 0-based.
    pub index: usize,
    pub span: Span,
    pub regions: PhoneRegions,
    pub tone: ToneResult,
    pub onset: Option<OnsetAnalysis>,
    pub coda: CodaDecision,
}

/// One detected syllable compared against its expected counterpart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SyllableCheck {
    pub tone_match: bool,
    pub coda_match: bool,
}

/// Comparison of the detected syllables against an expected transcription.
///
/// Syllables are compared pairwise over the first
/// `min(expected.len(), detected.len())` positions; `count_match` flags a
/// length mismatch (it is a property of the utterance, so it sits here
/// rather than on any one syllable).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectationCheck {
    pub expected: Vec<Syllable>,
    pub count_match: bool,
    /// Compared positions where both tone and coda matched.
    pub matched_count: usize,
    pub syllables: Vec<SyllableCheck>,
    /// True iff the counts match and every compared syllable matched.
    pub passed: bool,
}

/// Full per-utterance result: what was heard, how it was classified, and —
/// when a transcription was supplied — whether it matched.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    /// Report format version; see [`SCHEMA_VERSION`].
    pub schema: u32,
    pub file: FileInfo,
    /// The exact configuration every stage ran with.
    pub config: AnalysisConfig,
    /// Detected syllables, ordered by span start.
    pub syllables: Vec<SyllableAnalysis>,
    pub expectation: Option<ExpectationCheck>,
}

impl AnalysisReport {
    /// True when there is no expectation or the expectation passed; drives
    /// the process exit code (0 pass / 2 mismatch).
    pub fn passed(&self) -> bool {
        self.expectation.as_ref().is_none_or(|e| e.passed)
    }
}

fn parse_expected(input: &str) -> Result<Vec<Syllable>, ReportError> {
    let tokens: Vec<&str> = input.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(ReportError::InvalidExpectedPinyin {
            token: input.to_string(),
            source: PinyinError::InvalidSyllable {
                input: input.to_string(),
            },
        });
    }
    tokens
        .into_iter()
        .map(|tok| {
            parse_pinyin(tok).map_err(|source| ReportError::InvalidExpectedPinyin {
                token: tok.to_string(),
                source,
            })
        })
        .collect()
}

fn check_expectation(expected: Vec<Syllable>, detected: &[SyllableAnalysis]) -> ExpectationCheck {
    let count_match = expected.len() == detected.len();
    let compared = expected.len().min(detected.len());
    let syllables: Vec<SyllableCheck> = (0..compared)
        .map(|i| SyllableCheck {
            tone_match: detected[i].tone.tone == expected[i].tone,
            coda_match: detected[i].coda.present == (expected[i].fin.coda() != Coda::None),
        })
        .collect();
    let matched_count = syllables
        .iter()
        .filter(|c| c.tone_match && c.coda_match)
        .count();
    let passed = count_match && matched_count == compared;
    ExpectationCheck {
        expected,
        count_match,
        matched_count,
        syllables,
        passed,
    }
}

/// Analyze an in-memory buffer; `path` only labels the report.
///
/// Pipeline: detect syllable spans, segment each into phone regions, then
/// classify — tone over the vowel-plus-tail pitch track, fricative place and
/// voicing over the consonant region when one exists, and nasal-coda
/// presence from the tail. The pitch track and spectrogram are computed once
/// over the buffer (tail-padded with silence so analysis windows keep
/// covering syllables that run to the end of file) and shared by every
/// syllable.
pub fn analyze_buffer(
    buffer: &AudioBuffer,
    path: &str,
    expected_pinyin: Option<&str>,
    cfg: &AnalysisConfig,
) -> Result<AnalysisReport, ReportError> {
    // A bad transcription should fail before any signal work.
    let expected = expected_pinyin.map(parse_expected).transpose()?;

    let spans = detect_syllables(buffer, cfg)?;
    let mut syllables = Vec::with_capacity(spans.len());

    if !spans.is_empty() {
        let pad = cfg.pitch_frame_size.max(cfg.window_size);
        let mut samples = buffer.samples.clone();
        samples.extend(std::iter::repeat_n(0.0, pad));
        let padded = AudioBuffer::new(samples, buffer.sample_rate)?;
        let thresholds = VoicingThresholds {
            confidence: cfg.voicing_confidence,
            silence_rms: cfg.silence_rms,
        };
        let track = eac::pitch_track(
            &padded,
            cfg.pitch_frame_size,
            cfg.hop,
            cfg.f0_min,
            cfg.f0_max,
            thresholds,
        )?;
        let spectrogram = stft(&padded, cfg.window_size, cfg.hop)?;

        for (index, &span) in spans.iter().enumerate() {
            let entry = analyze_syllable(buffer, span, index, &track, &spectrogram, cfg)?;
            syllables.push(entry);
        }
    }

    let expectation = expected.map(|e| check_expectation(e, &syllables));
    Ok(AnalysisReport {
        schema: SCHEMA_VERSION,
        file: FileInfo {
            path: path.to_string(),
            sample_rate: buffer.sample_rate,
            duration: buffer.duration(),
        },
        config: cfg.clone(),
        syllables,
        expectation,
    })
}

fn analyze_syllable(
    buffer: &AudioBuffer,
    span: Span,
    index: usize,
    track: &PitchTrack,
    spectrogram: &Spectrogram,
    cfg: &AnalysisConfig,
) -> Result<SyllableAnalysis, ReportError> {
    let segment_err = |source| ReportError::SyllableSegment {
        index,
        start: span.start,
        end: span.end,
        source,
    };
    let classify_err = |source| ReportError::SyllableClassify {
        index,
        start: span.start,
        end: span.end,
        source,
    };

    let regions = segment_syllable(buffer, span, cfg).map_err(segment_err)?;

    let tail_end = regions.coda_tail.map_or(regions.vowel.end, |t| t.end);
    let tone = classify_tone(&track.restrict(regions.vowel.start, tail_end), cfg)
        .map_err(&classify_err)?;

    let onset = match regions.consonant {
        Some(region) => {
            let slice = buffer.slice_seconds(region.start, region.end);
            let voicing = detect_voicing(&slice.samples, buffer.sample_rate, cfg);
            // The averaged spectrum needs one full window; zero-padding a
            // short region leaves its band fractions unchanged.
            let mut padded = slice;
            if padded.samples.len() < cfg.window_size {
                padded.samples.resize(cfg.window_size, 0.0);
            }
            let spec = spectrum(&padded, cfg.window_size)
                .map_err(|e| classify_err(ClassifyError::from(e)))?;
            let fricative = classify_fricative(&spec, cfg).map_err(&classify_err)?;
            Some(OnsetAnalysis {
                region,
                fricative,
                voicing,
            })
        }
        None => None,
    };

    let coda = detect_coda(&regions, track, spectrogram, cfg);
    Ok(SyllableAnalysis {
        index,
        span,
        regions,
        tone,
        onset,
        coda,
    })
}

/// Analyze a WAV file; see [`analyze_buffer`].
pub fn analyze(
    path: impl AsRef<Path>,
    expected_pinyin: Option<&str>,
    cfg: &AnalysisConfig,
) -> Result<AnalysisReport, ReportError> {
    let buffer = load_wav(&path)?;
    analyze_buffer(
        &buffer,
        &path.as_ref().display().to_string(),
        expected_pinyin,
        cfg,
    )
}

/// Report serialization formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Serialize a report: pretty JSON (stable key order, trailing newline) or
/// one CSV row per syllable.
pub fn export(report: &AnalysisReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => report_csv(report),
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:.6}"))
}

fn opt_span(s: Option<Span>) -> String {
    format!(
        "{},{}",
        opt_num(s.map(|s| s.start)),
        opt_num(s.map(|s| s.end))
    )
}

fn report_csv(report: &AnalysisReport) -> String {
    let mut out = String::from(
        "index,start,end,consonant_start,consonant_end,transition_start,transition_end,\
         vowel_start,vowel_end,tail_start,tail_end,tone,tone_confidence,level_st,\
         slope_st_per_s,dip_st,voiced_duration_s,onset_place,onset_voiced,coda_present,\
         tone_match,coda_match\n",
    );
    for s in &report.syllables {
        let checks = report
            .expectation
            .as_ref()
            .and_then(|e| e.syllables.get(s.index));
        let place = s.onset.as_ref().map_or("", |o| match o.fricative.place {
            FricativePlace::SLike => "s_like",
            FricativePlace::ShLike => "sh_like",
        });
        let fields = [
            s.index.to_string(),
            format!("{:.6}", s.span.start),
            format!("{:.6}", s.span.end),
            opt_span(s.regions.consonant),
            opt_span(s.regions.transition),
            format!("{:.6},{:.6}", s.regions.vowel.start, s.regions.vowel.end),
            opt_span(s.regions.coda_tail),
            s.tone.tone.number().to_string(),
            format!("{:.6}", s.tone.confidence),
            format!("{:.6}", s.tone.features.level),
            format!("{:.6}", s.tone.features.slope),
            format!("{:.6}", s.tone.features.dip_depth),
            format!("{:.6}", s.tone.features.duration),
            place.to_string(),
            s.onset
                .as_ref()
                .map_or(String::new(), |o| o.voicing.voiced.to_string()),
            s.coda.present.to_string(),
            checks.map_or(String::new(), |c| c.tone_match.to_string()),
            checks.map_or(String::new(), |c| c.coda_match.to_string()),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Spectrogram render formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrogramFormat {
    /// Binary PGM (P5): one row per frame, dB mapped linearly from
    /// [dB floor, 0] to [0, 255].
    Pgm,
    /// `time,freq,db` rows, one per spectrogram cell.
    Csv,
}

/// Render a spectrogram for plotting.
pub fn render_spectrogram(sg: &Spectrogram, format: SpectrogramFormat) -> Vec<u8> {
    match format {
        SpectrogramFormat::Pgm => {
            let width = sg.freqs.len();
            let height = sg.magnitudes_db.len();
            let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
            for row in &sg.magnitudes_db {
                for &db in row {
                    let v = ((db - DB_FLOOR) / -DB_FLOOR * 255.0)
                        .round()
                        .clamp(0.0, 255.0);
                    out.push(v as u8);
                }
            }
            out
        }
        SpectrogramFormat::Csv => {
            let mut out = String::from("time,freq,db\n");
            for (i, row) in sg.magnitudes_db.iter().enumerate() {
                for (k, &db) in row.iter().enumerate() {
                    out.push_str(&format!(
                        "{:.6},{:.6},{:.6}\n",
                        sg.times[i], sg.freqs[k], db
                    ));
                }
            }
            out.into_bytes()
        }
    }
}

/// Render a pitch track as `time,f0,confidence` CSV; unvoiced frames leave
/// the f0 field empty.
pub fn pitch_track_csv(track: &PitchTrack) -> String {
    let mut out = String::from("time,f0,confidence\n");
    for i in 0..track.len() {
        out.push_str(&format!(
            "{:.6},{},{:.6}\n",
            track.times[i],
            opt_num(track.f0[i]),
            track.confidence[i]
        ));
    }
    out
}
