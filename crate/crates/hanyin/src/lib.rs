//! Mandarin syllable analysis for speech recordings.
//!
//! The crate is organized as a pipeline over mono audio buffers:
//!
//! - [`pinyin`] — parse, validate, render, and enumerate pinyin syllables
//!   against an embedded initial–final combination table.
//! - [`dsp`] — WAV decoding, averaged spectra, short-time analysis, an
//!   enhanced-autocorrelation pitch tracker, band energies, and RMS envelopes.
//! - [`segment`] — syllable span detection and phone-region segmentation
//!   (consonant / transition / vowel / coda tail).
//! - [`classify`] — tone (1–5), fricative place (s-like vs sh-like), onset
//!   voicing, and nasal-coda presence decisions.
//! - [`synth`] — deterministic synthetic syllables with exact ground truth,
//!   used as test oracles and available from the CLI.
//! - [`report`] — end-to-end analysis of a recording into a serializable
//!   report, plus CSV/PGM exporters.
//!
//! All analysis knobs live in [`config::AnalysisConfig`] and are echoed into
//! every report so results can be reproduced.

pub mod classify;
pub mod config;
pub mod dsp;
pub mod pinyin;
pub mod report;
pub mod segment;
pub mod synth;
