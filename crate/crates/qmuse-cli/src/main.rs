//! qmuse command line: each composition technique standalone, plus a
//! combined compose pipeline driven by a TOML config.
//!
//! Exit codes: 0 success, 2 flag/config validation error, 3 render error,
//! 4 I/O error. Every subcommand honors `--seed` (falling back to the
//! `QMUSE_SEED` environment variable), and reruns with the same seed
//! produce byte-identical files.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{
    cmd_compose, cmd_harmony, cmd_rhythm, cmd_selftest, cmd_spatial, cmd_timbre, parse_position,
    parse_register, parse_shots_list, ComposeArgs, HarmonyArgs, OutputFormat, RhythmArgs,
    SpatialArgs, TimbreArgs,
};
use qmuse::render::Layout;
use qmuse::timbre::Envelope;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config; exit 2.
    Usage(String),
    /// Rendering failed; exit 3.
    Render(String),
    /// Filesystem trouble; exit 4.
    Io(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Render(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(message) | CliError::Render(message) | CliError::Io(message) => message,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qmuse",
    version,
    about = "Quantum-inspired generative music engine",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Midi,
    Wav,
}

impl From<FormatArg> for OutputFormat {
    fn from(format: FormatArg) -> Self {
        match format {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Midi => OutputFormat::Midi,
            FormatArg::Wav => OutputFormat::Wav,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LayoutArg {
    Stereo,
    Cube,
}

impl From<LayoutArg> for Layout {
    fn from(layout: LayoutArg) -> Self {
        match layout {
            LayoutArg::Stereo => Layout::Stereo,
            LayoutArg::Cube => Layout::Cube8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EnvelopeArg {
    Percussive,
    Sustained,
}

#[derive(Subcommand)]
enum Command {
    /// Realize a fixed/mutable rhythm template by qubit measurement
    Rhythm {
        /// Template cell string ('0', '1', 'x'; spaces and '|' ignored),
        /// or @file; defaults to the built-in two-measure son clave
        #[arg(long)]
        template: Option<String>,
        /// Probability that a mutable cell becomes an onset
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, env = "QMUSE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 120.0)]
        tempo: f64,
        /// Number of realizations to emit
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Output path; -<k> is appended per realization when count > 1
        #[arg(long)]
        out: Option<PathBuf>,
        /// Midi pitch attached to onsets for the midi/json exports
        #[arg(long, default_value_t = 60)]
        midi_note: u8,
    },
    /// Synthesize one particle-noise note to WAV
    Timbre {
        /// Note frequency (ring-modulation carrier), Hz
        #[arg(long)]
        freq: f64,
        /// Particle collision rate, Hz
        #[arg(long, default_value_t = 50.0)]
        rate: f64,
        /// Note duration, seconds
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        #[arg(long, value_enum, default_value_t = EnvelopeArg::Sustained)]
        env: EnvelopeArg,
        /// Percussive window length, ms
        #[arg(long, default_value_t = 30.0)]
        window_ms: f64,
        #[arg(long, default_value_t = 10.0)]
        attack_ms: f64,
        #[arg(long, default_value_t = 10.0)]
        release_ms: f64,
        /// Noise amplitude in (0, 1]
        #[arg(long, default_value_t = 0.9)]
        amplitude: f64,
        #[arg(long, env = "QMUSE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "timbre.wav")]
        out: PathBuf,
    },
    /// Generate a chord-crossfade note cloud
    Harmony {
        /// Chord A as note names, e.g. "B,D,F,Ab"
        #[arg(long, default_value = "B,D,F,Ab")]
        chord_a: String,
        /// Chord B as note names, e.g. "C,E,G"
        #[arg(long, default_value = "C,E,G")]
        chord_b: String,
        /// Chord-B probability breakpoints as t:p pairs
        #[arg(long, default_value = "0:0,0.5:0,1.5:1,2:1")]
        schedule: String,
        #[arg(long, default_value_t = 2.0)]
        duration: f64,
        /// Notes per second
        #[arg(long, default_value_t = 16.0)]
        rate: f64,
        /// Midi register as lo..hi
        #[arg(long, default_value = "48..84")]
        register: String,
        #[arg(long, env = "QMUSE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 120.0)]
        tempo: f64,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a linear soundpath with measurement-error perturbation
    Spatial {
        /// Path start as x,y,z in [0,1]
        #[arg(long, default_value = "0,0.5,0.5")]
        start: String,
        /// Path end as x,y,z in [0,1]
        #[arg(long, default_value = "1,0.5,0.5")]
        end: String,
        /// Number of stationary events along the path
        #[arg(long, default_value_t = 32)]
        events: usize,
        /// Measurements per coordinate (dispersion knob)
        #[arg(long, default_value_t = 64)]
        shots: u64,
        /// Per-event shot counts, comma separated (overrides --shots)
        #[arg(long)]
        shots_profile: Option<String>,
        /// Pull coordinates at least this far inside [0,1] before encoding,
        /// so exact-edge events still jitter
        #[arg(long)]
        edge_epsilon: Option<f64>,
        #[arg(long, value_enum, default_value_t = LayoutArg::Stereo)]
        layout: LayoutArg,
        #[arg(long, env = "QMUSE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a multi-section piece from a TOML config
    Compose {
        config: PathBuf,
        /// Master seed; overrides the config file's seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Rayon thread count (output is identical at any value)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the fast built-in acceptance checks
    Selftest,
}

fn default_out(stem: &str, format: FormatArg) -> PathBuf {
    let extension = match format {
        FormatArg::Json => "json",
        FormatArg::Midi => "mid",
        FormatArg::Wav => "wav",
    };
    PathBuf::from(format!("{stem}.{extension}"))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Rhythm {
            template,
            p,
            seed,
            tempo,
            count,
            format,
            out,
            midi_note,
        } => cmd_rhythm(&RhythmArgs {
            template,
            p,
            seed,
            tempo_bpm: tempo,
            count,
            format: format.into(),
            out: out.unwrap_or_else(|| default_out("rhythm", format)),
            midi_note,
        }),
        Command::Timbre {
            freq,
            rate,
            duration,
            env,
            window_ms,
            attack_ms,
            release_ms,
            amplitude,
            seed,
            out,
        } => {
            let envelope = match env {
                EnvelopeArg::Percussive => Envelope::Percussive { window_ms },
                EnvelopeArg::Sustained => Envelope::Sustained {
                    attack_ms,
                    release_ms,
                },
            };
            cmd_timbre(&TimbreArgs {
                freq_hz: freq,
                collision_rate_hz: rate,
                duration_s: duration,
                envelope,
                amplitude,
                seed,
                out,
            })
        }
        Command::Harmony {
            chord_a,
            chord_b,
            schedule,
            duration,
            rate,
            register,
            seed,
            tempo,
            format,
            out,
        } => cmd_harmony(&HarmonyArgs {
            chord_a,
            chord_b,
            schedule,
            duration_s: duration,
            note_rate_hz: rate,
            register: parse_register(&register)?,
            seed,
            tempo_bpm: tempo,
            format: format.into(),
            out: out.unwrap_or_else(|| default_out("harmony", format)),
        }),
        Command::Spatial {
            start,
            end,
            events,
            shots,
            shots_profile,
            edge_epsilon,
            layout,
            seed,
            format,
            out,
        } => {
            let shots = match shots_profile {
                Some(profile) => parse_shots_list(&profile)?,
                None => vec![shots],
            };
            if shots.len() != 1 && shots.len() != events {
                return Err(CliError::Usage(format!(
                    "--shots-profile has {} entries for {events} events",
                    shots.len()
                )));
            }
            cmd_spatial(&SpatialArgs {
                start: parse_position(&start)?,
                end: parse_position(&end)?,
                event_count: events,
                shots,
                edge_epsilon,
                layout: layout.into(),
                seed,
                format: format.into(),
                out: out.unwrap_or_else(|| default_out("spatial", format)),
            })
        }
        Command::Compose {
            config,
            seed,
            out_dir,
            threads,
        } => {
            let env_seed = std::env::var("QMUSE_SEED")
                .ok()
                .and_then(|value| value.parse().ok());
            cmd_compose(&ComposeArgs {
                config_path: config,
                seed_override: seed,
                out_dir,
                threads,
                env_seed,
            })
        }
        Command::Selftest => cmd_selftest(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {}", error.message());
            ExitCode::from(error.exit_code())
        }
    }
}
