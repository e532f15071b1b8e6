//! Subcommand implementations.

use std::path::{Path, PathBuf};

use qmuse::harmony::{generate_cloud, Chord, ChordTag, CloudSpec, CrossfadeSchedule};
use qmuse::qcore::{rx_angle_for_probability, QuantumState, RngStream};
use qmuse::render::{
    clip_guard, render_scene, write_events_json, write_midi, write_wav, BitDepth, ClipMode,
    Layout, Scene, SceneEvent,
};
use qmuse::rhythm::RhythmTemplate;
use qmuse::spatial::{linear_path, pan_cube, pan_stereo, perturb_path, PathSpec, PerturbParams, Position};
use qmuse::timbre::{midi_to_hz, synth_note, Envelope, NoteSpec, ParticleNoiseParams};

use crate::config::{build_scene, ComposeConfig};
use crate::{CliError, CliResult};

pub const DEFAULT_SAMPLE_RATE: u32 = 48_000;

fn usage(message: impl std::fmt::Display) -> CliError {
    CliError::Usage(message.to_string())
}

fn render_err(message: impl std::fmt::Display) -> CliError {
    CliError::Render(message.to_string())
}

/// Render failures split by exit code: true I/O problems are 4, the rest 3.
fn from_render(error: qmuse::render::RenderError) -> CliError {
    match error {
        qmuse::render::RenderError::Io { .. } => CliError::Io(error.to_string()),
        other => CliError::Render(other.to_string()),
    }
}

pub fn parse_position(text: &str) -> CliResult<Position> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(usage(format!(
            "position {text:?} must be x,y,z with three components"
        )));
    }
    let mut xyz = [0.0f64; 3];
    for (slot, part) in xyz.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| usage(format!("position component {part:?} is not a number")))?;
    }
    Position::new(xyz[0], xyz[1], xyz[2]).map_err(usage)
}

pub fn parse_schedule(text: &str) -> CliResult<CrossfadeSchedule> {
    let mut breakpoints = Vec::new();
    for pair in text.split(',') {
        let (t, p) = pair
            .split_once(':')
            .ok_or_else(|| usage(format!("schedule entry {pair:?} must be t:p")))?;
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| usage(format!("schedule time {t:?} is not a number")))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| usage(format!("schedule probability {p:?} is not a number")))?;
        breakpoints.push((t, p));
    }
    CrossfadeSchedule::new(breakpoints).map_err(usage)
}

pub fn parse_register(text: &str) -> CliResult<(u8, u8)> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| usage(format!("register {text:?} must be lo..hi")))?;
    let lo: u8 = lo
        .trim()
        .parse()
        .map_err(|_| usage(format!("register low bound {lo:?} is not a midi note")))?;
    let hi: u8 = hi
        .trim()
        .parse()
        .map_err(|_| usage(format!("register high bound {hi:?} is not a midi note")))?;
    Ok((lo, hi))
}

pub fn parse_shots_list(text: &str) -> CliResult<Vec<u64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|_| usage(format!("shot count {part:?} is not a positive integer")))
        })
        .collect()
}

fn numbered_path(path: &Path, index: usize, count: usize) -> PathBuf {
    if count <= 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let extension = path
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    path.with_file_name(format!("{stem}-{index}{extension}"))
}

/// Template argument: inline cell string, or `@path` to read one from disk.
fn load_template(argument: Option<&str>) -> CliResult<RhythmTemplate> {
    match argument {
        None => Ok(RhythmTemplate::son_clave()),
        Some(text) => {
            let content = if let Some(path) = text.strip_prefix('@') {
                std::fs::read_to_string(path)
                    .map_err(|error| CliError::Io(format!("reading {path}: {error}")))?
            } else {
                text.to_string()
            };
            RhythmTemplate::parse(content.trim()).map_err(usage)
        }
    }
}

pub struct RhythmArgs {
    pub template: Option<String>,
    pub p: f64,
    pub seed: u64,
    pub tempo_bpm: f64,
    pub count: usize,
    pub format: OutputFormat,
    pub out: PathBuf,
    pub midi_note: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Midi,
    Wav,
}

fn rhythm_note_defaults() -> (NoteSpec, Position) {
    (
        NoteSpec {
            freq_hz: 880.0,
            duration_s: 0.1,
            envelope: Envelope::Percussive { window_ms: 30.0 },
            noise: ParticleNoiseParams::new(400.0, 0.9).expect("static params"),
        },
        Position::center(),
    )
}

pub fn cmd_rhythm(args: &RhythmArgs) -> CliResult<()> {
    let template = load_template(args.template.as_deref())?;
    if args.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let (note, position) = rhythm_note_defaults();
    for k in 0..args.count {
        let rng = RngStream::new(args.seed, "realization", k as u64);
        let realization = template.realize(args.p, &rng).map_err(usage)?;
        let rhythm_events = realization.events(args.tempo_bpm).map_err(usage)?;
        let events: Vec<SceneEvent> = rhythm_events
            .iter()
            .enumerate()
            .map(|(i, event)| SceneEvent {
                onset_s: event.onset_seconds,
                note,
                position,
                event_index: i as u64,
                midi: Some(args.midi_note),
                tags: vec!["rhythm".to_string(), format!("cell:{}", event.cell_index)],
            })
            .collect();
        let out = numbered_path(&args.out, k, args.count);
        write_output(&events, args.seed, args.tempo_bpm, args.format, &out)?;
        println!(
            "realization {k}: {} -> {}",
            realization.bit_string(),
            out.display()
        );
    }
    Ok(())
}

fn write_output(
    events: &[SceneEvent],
    seed: u64,
    tempo_bpm: f64,
    format: OutputFormat,
    out: &Path,
) -> CliResult<()> {
    match format {
        OutputFormat::Json => write_events_json(events, seed, out).map_err(from_render),
        OutputFormat::Midi => write_midi(events, out, tempo_bpm).map_err(from_render),
        OutputFormat::Wav => {
            let mut scene = Scene::new(Layout::Stereo, DEFAULT_SAMPLE_RATE, seed);
            scene.events = events.to_vec();
            let mix = clip_guard(&render_scene(&scene).map_err(from_render)?, ClipMode::Normalize);
            write_wav(&mix, out, BitDepth::Sixteen).map_err(from_render)
        }
    }
}

pub struct TimbreArgs {
    pub freq_hz: f64,
    pub collision_rate_hz: f64,
    pub duration_s: f64,
    pub envelope: Envelope,
    pub amplitude: f64,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn cmd_timbre(args: &TimbreArgs) -> CliResult<()> {
    if args.freq_hz >= f64::from(DEFAULT_SAMPLE_RATE) / 2.0 {
        return Err(usage(format!(
            "frequency {} Hz is at or above Nyquist ({} Hz)",
            args.freq_hz,
            DEFAULT_SAMPLE_RATE / 2
        )));
    }
    let noise = ParticleNoiseParams::new(args.collision_rate_hz, args.amplitude).map_err(usage)?;
    let spec = NoteSpec {
        freq_hz: args.freq_hz,
        duration_s: args.duration_s,
        envelope: args.envelope,
        noise,
    };
    let mut rng = RngStream::new(args.seed, "timbre", 0);
    let buffer = synth_note(&spec, &mut rng, DEFAULT_SAMPLE_RATE).map_err(render_err)?;
    let mono = qmuse::render::MultiBuffer::from_channels(
        vec![buffer.samples().to_vec()],
        DEFAULT_SAMPLE_RATE,
    );
    write_wav(&mono, &args.out, BitDepth::Sixteen).map_err(from_render)?;
    println!(
        "note: {} Hz, {} s, {} samples -> {}",
        args.freq_hz,
        args.duration_s,
        buffer.len(),
        args.out.display()
    );
    Ok(())
}

pub struct HarmonyArgs {
    pub chord_a: String,
    pub chord_b: String,
    pub schedule: String,
    pub duration_s: f64,
    pub note_rate_hz: f64,
    pub register: (u8, u8),
    pub seed: u64,
    pub tempo_bpm: f64,
    pub format: OutputFormat,
    pub out: PathBuf,
}

pub fn cmd_harmony(args: &HarmonyArgs) -> CliResult<()> {
    let chord_a = Chord::from_note_names("A", &args.chord_a).map_err(usage)?;
    let chord_b = Chord::from_note_names("B", &args.chord_b).map_err(usage)?;
    let schedule = parse_schedule(&args.schedule)?;
    let note_length_s = 2.0 / args.note_rate_hz;
    let spec = CloudSpec {
        chord_a,
        chord_b,
        schedule,
        duration_s: args.duration_s,
        note_rate_hz: args.note_rate_hz,
        register_lo: args.register.0,
        register_hi: args.register.1,
        note_length_s,
    };
    let rng = RngStream::new(args.seed, "cloud", 0);
    let notes = generate_cloud(&spec, &rng).map_err(usage)?;
    let noise = ParticleNoiseParams::new(50.0, 0.9).expect("static params");
    let events: Vec<SceneEvent> = notes
        .iter()
        .enumerate()
        .map(|(i, note)| {
            let freq_hz = midi_to_hz(i32::from(note.midi_note)).expect("register bound to 0..=127");
            let tag = match note.chord_tag {
                ChordTag::A => "A",
                ChordTag::B => "B",
            };
            SceneEvent {
                onset_s: note.onset_s,
                note: NoteSpec {
                    freq_hz,
                    duration_s: note_length_s,
                    envelope: Envelope::Sustained {
                        attack_ms: 5.0,
                        release_ms: 40.0,
                    },
                    noise,
                },
                position: Position::center(),
                event_index: i as u64,
                midi: Some(note.midi_note),
                tags: vec!["cloud".to_string(), tag.to_string()],
            }
        })
        .collect();
    write_output(&events, args.seed, args.tempo_bpm, args.format, &args.out)?;
    println!("cloud: {} notes -> {}", events.len(), args.out.display());
    Ok(())
}

pub struct SpatialArgs {
    pub start: Position,
    pub end: Position,
    pub event_count: usize,
    pub shots: Vec<u64>,
    pub edge_epsilon: Option<f64>,
    pub layout: Layout,
    pub seed: u64,
    pub format: OutputFormat,
    pub out: PathBuf,
}

fn positions_json(original: &[Position], perturbed: &[Position], seed: u64) -> String {
    let mut out = String::from("{\n  \"original\": [");
    let push_list = |out: &mut String, list: &[Position]| {
        for (i, position) in list.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "\n    {{ \"x\": {:.6}, \"y\": {:.6}, \"z\": {:.6} }}",
                position.x(),
                position.y(),
                position.z()
            ));
        }
        if !list.is_empty() {
            out.push_str("\n  ");
        }
    };
    push_list(&mut out, original);
    out.push_str("],\n  \"perturbed\": [");
    push_list(&mut out, perturbed);
    out.push_str(&format!("],\n  \"seed\": {seed},\n  \"version\": 1\n}}\n"));
    out
}

pub fn cmd_spatial(args: &SpatialArgs) -> CliResult<()> {
    let path = linear_path(&PathSpec {
        start: args.start,
        end: args.end,
        event_count: args.event_count,
    })
    .map_err(usage)?;
    let params = PerturbParams::profile(args.shots.clone()).map_err(usage)?;
    let rng = RngStream::new(args.seed, "spatial", 0);
    let perturbed = perturb_path(&path, &params, &rng).map_err(usage)?;

    match args.format {
        OutputFormat::Json => {
            let text = positions_json(&path, &perturbed, args.seed);
            std::fs::write(&args.out, text)
                .map_err(|error| CliError::Io(format!("writing {}: {error}", args.out.display())))?;
        }
        OutputFormat::Midi => {
            return Err(usage("spatial paths have no pitches; use --format json or wav"));
        }
        OutputFormat::Wav => {
            let noise = ParticleNoiseParams::new(600.0, 0.9).expect("static params");
            let events: Vec<SceneEvent> = perturbed
                .iter()
                .enumerate()
                .map(|(k, position)| SceneEvent {
                    onset_s: k as f64 * 0.125,
                    note: NoteSpec {
                        freq_hz: 2500.0,
                        duration_s: 0.05,
                        envelope: Envelope::Percussive { window_ms: 20.0 },
                        noise,
                    },
                    position: *position,
                    event_index: k as u64,
                    midi: None,
                    tags: vec!["path".to_string(), format!("step:{k}")],
                })
                .collect();
            let mut scene = Scene::new(args.layout, DEFAULT_SAMPLE_RATE, args.seed);
            scene.events = events;
            let mix = clip_guard(&render_scene(&scene).map_err(from_render)?, ClipMode::Normalize);
            write_wav(&mix, &args.out, BitDepth::Sixteen).map_err(from_render)?;
        }
    }
    println!(
        "path: {} events, shots {:?} -> {}",
        args.event_count,
        args.shots,
        args.out.display()
    );
    Ok(())
}

pub struct ComposeArgs {
    pub config_path: PathBuf,
    pub seed_override: Option<u64>,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub env_seed: Option<u64>,
}

pub fn cmd_compose(args: &ComposeArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config_path).map_err(|error| {
        CliError::Io(format!("reading {}: {error}", args.config_path.display()))
    })?;
    let config: ComposeConfig =
        toml::from_str(&text).map_err(|error| usage(format!("config parse error: {error}")))?;
    let master_seed = args
        .seed_override
        .or(config.seed)
        .or(args.env_seed)
        .unwrap_or(0);
    let built = build_scene(&config, master_seed).map_err(|errors| usage(errors.to_string()))?;

    let render = || -> CliResult<_> {
        render_scene(&built.scene).map_err(from_render)
    };
    let mix = match args.threads {
        None => render()?,
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|error| render_err(format!("thread pool: {error}")))?
            .install(render)?,
    };
    let mix = clip_guard(&mix, ClipMode::Normalize);

    let stem = args
        .config_path
        .file_stem()
        .unwrap_or_default()
        .to_string_lossy()
        .to_string();
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|error| CliError::Io(format!("creating {}: {error}", args.out_dir.display())))?;
    let wav_path = args.out_dir.join(format!("{stem}.wav"));
    let json_path = args.out_dir.join(format!("{stem}.events.json"));
    write_wav(&mix, &wav_path, BitDepth::Sixteen).map_err(from_render)?;
    write_events_json(&built.scene.events, master_seed, &json_path).map_err(from_render)?;
    println!(
        "composed {} events, {:.2} s, seed {master_seed}\n  {}\n  {}",
        built.scene.events.len(),
        mix.frames() as f64 / f64::from(mix.sample_rate_hz()),
        wav_path.display(),
        json_path.display()
    );
    Ok(())
}

/// Fast health checks over the engine's core identities. The sabotage env
/// var exists so tests can prove a failure is actually detected.
pub fn cmd_selftest() -> CliResult<()> {
    let started = std::time::Instant::now();
    let sabotage = std::env::var("QMUSE_SELFTEST_SABOTAGE").unwrap_or_default();
    let mut failures = 0;

    // Probability-to-angle round trip across [0, 1].
    let mut eq1_ok = true;
    for i in 0..=100 {
        let p = f64::from(i) / 100.0;
        let p = if sabotage == "eq1" { p * 1.0001 } else { p };
        let angle = rx_angle_for_probability(p.min(1.0)).map_err(render_err)?;
        let state = QuantumState::prepared_rx(angle).map_err(render_err)?;
        let round_trip = state.probability_of_one(0).map_err(render_err)?;
        if (round_trip - f64::from(i) / 100.0).abs() >= 1e-12 {
            eq1_ok = false;
        }
    }
    report("angle round trip", eq1_ok, &mut failures);

    // Constant-power panning, stereo and cube.
    let mut rng = RngStream::new(0xda7a, "selftest", 0);
    let mut pan_ok = true;
    for _ in 0..10_000 {
        let position = Position::new(rng.next_f64(), rng.next_f64(), rng.next_f64())
            .map_err(render_err)?;
        let stereo = pan_stereo(position.x()).map_err(render_err)?;
        let mut stereo_power = stereo.left.powi(2) + stereo.right.powi(2);
        if sabotage == "pan" {
            stereo_power += 1e-6;
        }
        let cube_power: f64 = pan_cube(&position).gains.iter().map(|g| g * g).sum();
        if (stereo_power - 1.0).abs() >= 1e-9 || (cube_power - 1.0).abs() >= 1e-9 {
            pan_ok = false;
        }
    }
    report("pan power", pan_ok, &mut failures);

    // Clave fixed cells survive 1000 realizations.
    let template = RhythmTemplate::son_clave();
    let fixed_ones = [0usize, 3, 6, 10, 12, 16, 22, 26];
    let mut clave_ok = template.mutable_count() == 13
        && template.realization_count().map_err(render_err)? == 8192;
    for seed in 0..1000u64 {
        let realization = template
            .realize(0.5, &RngStream::new(seed, "selftest-clave", 0))
            .map_err(render_err)?;
        let bits = realization.bits();
        let expect_one = if sabotage == "clave" { false } else { true };
        if !fixed_ones.iter().all(|&i| bits[i] == expect_one) {
            clave_ok = false;
        }
        for (i, cell) in template.cells().iter().enumerate() {
            if matches!(cell, qmuse::rhythm::CellSpec::Fixed0) && bits[i] {
                clave_ok = false;
            }
        }
    }
    report("clave fixed cells", clave_ok, &mut failures);

    let elapsed = started.elapsed();
    println!("selftest finished in {:.2} s", elapsed.as_secs_f64());
    if failures > 0 {
        Err(render_err(format!("{failures} selftest check(s) failed")))
    } else {
        Ok(())
    }
}

fn report(name: &str, ok: bool, failures: &mut u32) {
    if ok {
        println!("PASS {name}");
    } else {
        println!("FAIL {name}");
        *failures += 1;
    }
}
