//! `hanyin` — analyze Mandarin speech recordings from the command line.
//!
//! Subcommands: `analyze` (full pipeline to a JSON/CSV report), `spectrogram`
//! and `pitch` (plot data), `pinyin` (parse/validate/table), and `synth`
//! (deterministic test signals with ground truth).
//!
//! Exit codes: 0 success (and all expectation checks passed), 2 when an
//! expectation check failed, 1 on any error. No environment variables are
//! read; configuration comes from flags or a JSON config file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use hanyin::config::AnalysisConfig;
use hanyin::dsp::{load_wav, pitch_track, save_wav, stft, VoicingThresholds};
use hanyin::pinyin::{parse_pinyin, table_records, Initial};
use hanyin::report::{
    analyze, export, pitch_track_csv, render_spectrogram, ReportFormat, SpectrogramFormat,
};
use hanyin::synth::{synth_utterance, SyllableSynthSpec};

#[derive(Parser)]
#[command(
    name = "hanyin",
    version,
    about = "Mandarin syllable analysis for speech recordings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a WAV recording end to end and emit a report.
    Analyze {
        /// Input WAV file (PCM, mono or first channel).
        wav: PathBuf,
        /// Expected transcription, whitespace-separated pinyin syllables
        /// (tone digits or diacritics). Enables the expectation check.
        #[arg(long)]
        pinyin: Option<String>,
        /// Write the JSON report here instead of stdout.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
        /// Also write a CSV report (one row per syllable) here.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        /// Override one analysis threshold, e.g. --config rms_on=0.03.
        /// May be given multiple times.
        #[arg(long, value_name = "KEY=VALUE")]
        config: Vec<String>,
        /// JSON file with analysis-config fields (missing fields keep
        /// their defaults); --config overrides apply on top.
        #[arg(long, value_name = "FILE")]
        config_file: Option<PathBuf>,
    },
    /// Render a spectrogram as PGM (binary P5) or CSV, by output extension.
    Spectrogram {
        wav: PathBuf,
        /// Output file; `.pgm` or `.csv` selects the format.
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
        /// Analysis window, samples (power of two).
        #[arg(long, default_value_t = AnalysisConfig::default().window_size)]
        window: usize,
        /// Hop between frames, samples.
        #[arg(long, default_value_t = AnalysisConfig::default().hop)]
        hop: usize,
    },
    /// Track pitch and write time,f0,confidence CSV.
    Pitch {
        wav: PathBuf,
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
        /// Lowest fundamental considered, Hz.
        #[arg(long, default_value_t = AnalysisConfig::default().f0_min)]
        fmin: f64,
        /// Highest fundamental considered, Hz.
        #[arg(long, default_value_t = AnalysisConfig::default().f0_max)]
        fmax: f64,
    },
    /// Pinyin syllable utilities (JSON to stdout).
    Pinyin {
        #[command(subcommand)]
        command: PinyinCommand,
    },
    /// Synthesize a test utterance from a JSON spec, with ground truth.
    Synth {
        /// JSON utterance spec: {"sample_rate"?, "gap_ms"?, "syllables": [..]}.
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Output WAV; ground truth goes to the sidecar <stem>.truth.json.
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum PinyinCommand {
    /// Parse one written syllable into initial + final + tone.
    Parse { syllable: String },
    /// Check a written syllable against the combination table.
    Validate { syllable: String },
    /// Dump the initial-final combination table.
    Table,
}

/// On-disk description of a synthetic utterance for `synth --spec`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthSpecFile {
    #[serde(default = "default_sample_rate")]
    sample_rate: u32,
    #[serde(default = "default_gap_ms")]
    gap_ms: f64,
    syllables: Vec<SyllableSynthSpec>,
}

fn default_sample_rate() -> u32 {
    44100
}

fn default_gap_ms() -> f64 {
    100.0
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are errors (exit 1); --help/--version are not.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

type CliResult = Result<ExitCode, Box<dyn std::error::Error>>;

/// Print to stdout, treating a consumer that stopped reading (broken pipe,
/// e.g. `| head`) as success instead of a panic or an error.
fn emit(text: &str) -> std::io::Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Analyze {
            wav,
            pinyin,
            json,
            csv,
            config,
            config_file,
        } => run_analyze(&wav, pinyin.as_deref(), json, csv, &config, config_file),
        Command::Spectrogram {
            wav,
            output,
            window,
            hop,
        } => run_spectrogram(&wav, &output, window, hop),
        Command::Pitch {
            wav,
            output,
            fmin,
            fmax,
        } => run_pitch(&wav, &output, fmin, fmax),
        Command::Pinyin { command } => run_pinyin(command),
        Command::Synth { spec, output } => run_synth(&spec, &output),
    }
}

fn build_config(
    overrides: &[String],
    config_file: Option<PathBuf>,
) -> Result<AnalysisConfig, Box<dyn std::error::Error>> {
    let mut cfg = match config_file {
        Some(path) => serde_json::from_str(&fs::read_to_string(&path)?)
            .map_err(|e| format!("config file {}: {e}", path.display()))?,
        None => AnalysisConfig::default(),
    };
    for kv in overrides {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| format!("--config expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(key.trim(), value.trim())?;
    }
    Ok(cfg)
}

fn run_analyze(
    wav: &Path,
    pinyin: Option<&str>,
    json: Option<PathBuf>,
    csv: Option<PathBuf>,
    overrides: &[String],
    config_file: Option<PathBuf>,
) -> CliResult {
    let cfg = build_config(overrides, config_file)?;
    let report = analyze(wav, pinyin, &cfg)?;
    let json_text = export(&report, ReportFormat::Json);
    match &json {
        Some(path) => fs::write(path, &json_text)?,
        None => emit(&json_text)?,
    }
    if let Some(path) = &csv {
        fs::write(path, export(&report, ReportFormat::Csv))?;
    }
    Ok(ExitCode::from(if report.passed() { 0 } else { 2 }))
}

fn run_spectrogram(wav: &Path, output: &Path, window: usize, hop: usize) -> CliResult {
    let format = match output.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("pgm") => SpectrogramFormat::Pgm,
        Some(e) if e.eq_ignore_ascii_case("csv") => SpectrogramFormat::Csv,
        _ => return Err(format!("output {:?} must end in .pgm or .csv", output.display()).into()),
    };
    let buffer = load_wav(wav)?;
    let sg = stft(&buffer, window, hop)?;
    fs::write(output, render_spectrogram(&sg, format))?;
    Ok(ExitCode::SUCCESS)
}

fn run_pitch(wav: &Path, output: &Path, fmin: f64, fmax: f64) -> CliResult {
    let cfg = AnalysisConfig::default();
    let buffer = load_wav(wav)?;
    let track = pitch_track(
        &buffer,
        cfg.pitch_frame_size,
        cfg.hop,
        fmin,
        fmax,
        VoicingThresholds {
            confidence: cfg.voicing_confidence,
            silence_rms: cfg.silence_rms,
        },
    )?;
    fs::write(output, pitch_track_csv(&track))?;
    Ok(ExitCode::SUCCESS)
}

fn run_pinyin(command: PinyinCommand) -> CliResult {
    match command {
        PinyinCommand::Parse { syllable } => match parse_pinyin(&syllable) {
            Ok(parsed) => {
                emit(&format!("{}\n", serde_json::to_string_pretty(&parsed)?))?;
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => Err(e.to_string().into()),
        },
        PinyinCommand::Validate { syllable } => {
            let verdict = match parse_pinyin(&syllable) {
                Ok(parsed) => serde_json::json!({
                    "input": syllable,
                    "valid": true,
                    "syllable": parsed,
                }),
                Err(e) => serde_json::json!({
                    "input": syllable,
                    "valid": false,
                    "reason": e.to_string(),
                }),
            };
            let valid = verdict["valid"].as_bool().unwrap();
            emit(&format!("{}\n", serde_json::to_string_pretty(&verdict)?))?;
            Ok(ExitCode::from(u8::from(!valid)))
        }
        PinyinCommand::Table => {
            #[derive(serde::Serialize)]
            struct Record {
                initial: Option<&'static str>,
                #[serde(rename = "final")]
                fin: &'static str,
                spelling: &'static str,
            }
            let records: Vec<Record> = table_records()
                .into_iter()
                .map(|(initial, fin, spelling)| Record {
                    initial: initial.map(Initial::as_str),
                    fin: fin.spelling(),
                    spelling,
                })
                .collect();
            emit(&format!("{}\n", serde_json::to_string_pretty(&records)?))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_synth(spec_path: &Path, output: &Path) -> CliResult {
    let spec: SynthSpecFile = serde_json::from_str(&fs::read_to_string(spec_path)?)
        .map_err(|e| format!("synth spec {}: {e}", spec_path.display()))?;
    let (buffer, truth) = synth_utterance(&spec.syllables, spec.gap_ms, spec.sample_rate)?;
    save_wav(output, &buffer)?;
    let mut truth_json = serde_json::to_string_pretty(&truth)?;
    truth_json.push('\n');
    fs::write(output.with_extension("truth.json"), truth_json)?;
    Ok(ExitCode::SUCCESS)
}
