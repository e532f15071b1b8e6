//! Compose configuration: a TOML document describing layered sections.
//!
//! ```toml
//! seed = 42
//! sample_rate = 48000
//! tempo_bpm = 120
//! layout = "stereo"          # or "cube"
//! tail_s = 0.25
//!
//! [[section]]
//! kind = "rhythm"            # measured grid template
//! template = "1001 0x1x 0x1x 10xx | 100x 0x10 0x1x xx0x"
//! p = 0.5
//! start_s = 0.0
//! freq = 880.0
//! noise_rate = 400.0
//! note_length_s = 0.1
//! envelope = { shape = "percussive", window_ms = 30.0 }
//! position = [0.5, 0.5, 0.5] # or: path = { start = [...], end = [...] }
//! perturb_shots = [64]       # optional, with position or path
//!
//! [[section]]
//! kind = "cloud"             # probabilistic chord crossfade
//! chord_a = "B,D,F,Ab"
//! chord_b = "C,E,G"
//! schedule = [[0.0, 0.0], [0.5, 0.0], [1.5, 1.0], [2.0, 1.0]]
//! duration_s = 2.0
//! note_rate_hz = 16.0
//! register = [48, 84]
//!
//! [[section]]
//! kind = "path"              # audible click path
//! start = [0.0, 0.5, 0.5]
//! end = [1.0, 0.5, 0.5]
//! event_count = 32
//! shots = [64]
//! ```
//!
//! Validation is total: every invalid field is reported, by path, before
//! anything renders.

use serde::Deserialize;

use qmuse::harmony::{generate_cloud, Chord, ChordTag, CloudSpec, CrossfadeSchedule};
use qmuse::qcore::RngStream;
use qmuse::render::{Layout, Scene, SceneEvent};
use qmuse::rhythm::RhythmTemplate;
use qmuse::spatial::{linear_path, perturb_path, PathSpec, PerturbParams, Position};
use qmuse::timbre::{midi_to_hz, Envelope, NoteSpec, ParticleNoiseParams};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    #[serde(default = "default_tempo")]
    pub tempo_bpm: f64,
    #[serde(default = "default_layout")]
    pub layout: String,
    #[serde(default = "default_tail")]
    pub tail_s: f64,
    #[serde(default, rename = "section")]
    pub sections: Vec<SectionConfig>,
}

fn default_sample_rate() -> u32 {
    48_000
}

fn default_tempo() -> f64 {
    120.0
}

fn default_layout() -> String {
    "stereo".to_string()
}

fn default_tail() -> f64 {
    0.25
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SectionConfig {
    Rhythm(RhythmSectionConfig),
    Cloud(CloudSectionConfig),
    Path(PathSectionConfig),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub shape: String,
    pub window_ms: Option<f64>,
    pub attack_ms: Option<f64>,
    pub release_ms: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub start: [f64; 3],
    pub end: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhythmSectionConfig {
    pub template: Option<String>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub start_s: f64,
    #[serde(default = "default_rhythm_freq")]
    pub freq: f64,
    #[serde(default = "default_rhythm_noise_rate")]
    pub noise_rate: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_rhythm_note_length")]
    pub note_length_s: f64,
    pub envelope: Option<EnvelopeConfig>,
    pub position: Option<[f64; 3]>,
    pub path: Option<PathConfig>,
    pub perturb_shots: Option<Vec<u64>>,
    pub midi_note: Option<u8>,
}

fn default_p() -> f64 {
    0.5
}

fn default_rhythm_freq() -> f64 {
    880.0
}

fn default_rhythm_noise_rate() -> f64 {
    400.0
}

fn default_amplitude() -> f64 {
    0.9
}

fn default_rhythm_note_length() -> f64 {
    0.1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSectionConfig {
    #[serde(default = "default_chord_a")]
    pub chord_a: String,
    #[serde(default = "default_chord_b")]
    pub chord_b: String,
    pub schedule: Vec<[f64; 2]>,
    pub duration_s: f64,
    #[serde(default = "default_note_rate")]
    pub note_rate_hz: f64,
    #[serde(default = "default_register")]
    pub register: [u8; 2],
    pub note_length_s: Option<f64>,
    #[serde(default)]
    pub start_s: f64,
    #[serde(default = "default_cloud_noise_rate")]
    pub noise_rate: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    pub envelope: Option<EnvelopeConfig>,
    pub position: Option<[f64; 3]>,
    pub path: Option<PathConfig>,
    pub perturb_shots: Option<Vec<u64>>,
}

fn default_chord_a() -> String {
    "B,D,F,Ab".to_string()
}

fn default_chord_b() -> String {
    "C,E,G".to_string()
}

fn default_note_rate() -> f64 {
    16.0
}

fn default_register() -> [u8; 2] {
    [48, 84]
}

fn default_cloud_noise_rate() -> f64 {
    50.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSectionConfig {
    pub start: [f64; 3],
    pub end: [f64; 3],
    #[serde(default = "default_event_count")]
    pub event_count: usize,
    #[serde(default = "default_shots")]
    pub shots: Vec<u64>,
    #[serde(default)]
    pub start_s: f64,
    pub duration_s: Option<f64>,
    #[serde(default = "default_click_freq")]
    pub freq: f64,
    #[serde(default = "default_click_noise_rate")]
    pub noise_rate: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_event_count() -> usize {
    32
}

fn default_shots() -> Vec<u64> {
    vec![64]
}

fn default_click_freq() -> f64 {
    2500.0
}

fn default_click_noise_rate() -> f64 {
    600.0
}

/// All validation problems in a config, each naming its field.
#[derive(Debug)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for message in &self.0 {
            writeln!(f, "config error: {message}")?;
        }
        Ok(())
    }
}

struct Validator {
    errors: Vec<String>,
}

impl Validator {
    fn new() -> Self {
        Self { errors: Vec::new() }
    }

    fn push(&mut self, field: &str, message: impl std::fmt::Display) {
        self.errors.push(format!("{field}: {message}"));
    }

    fn check_position(&mut self, field: &str, xyz: &[f64; 3]) -> Option<Position> {
        match Position::new(xyz[0], xyz[1], xyz[2]) {
            Ok(position) => Some(position),
            Err(error) => {
                self.push(field, error);
                None
            }
        }
    }

    fn check_envelope(
        &mut self,
        field: &str,
        config: Option<&EnvelopeConfig>,
        default: Envelope,
    ) -> Envelope {
        let Some(config) = config else {
            return default;
        };
        match config.shape.as_str() {
            "percussive" => {
                if config.attack_ms.is_some() || config.release_ms.is_some() {
                    self.push(field, "percussive envelope takes window_ms only");
                }
                Envelope::Percussive {
                    window_ms: config.window_ms.unwrap_or(30.0),
                }
            }
            "sustained" => {
                if config.window_ms.is_some() {
                    self.push(field, "sustained envelope takes attack_ms/release_ms only");
                }
                Envelope::Sustained {
                    attack_ms: config.attack_ms.unwrap_or(5.0),
                    release_ms: config.release_ms.unwrap_or(5.0),
                }
            }
            other => {
                self.push(
                    field,
                    format!("unknown envelope shape {other:?} (percussive or sustained)"),
                );
                default
            }
        }
    }

    fn check_noise(&mut self, field: &str, rate: f64, amplitude: f64) -> Option<ParticleNoiseParams> {
        match ParticleNoiseParams::new(rate, amplitude) {
            Ok(params) => Some(params),
            Err(error) => {
                self.push(field, error);
                None
            }
        }
    }
}

/// Everything compose needs: the renderable scene plus the tempo for
/// optional MIDI export.
pub struct BuiltScene {
    pub scene: Scene,
}

/// Positions for a section: fixed, or spread along a (possibly perturbed)
/// path across the section's events.
fn section_positions(
    validator: &mut Validator,
    field: &str,
    position: Option<&[f64; 3]>,
    path: Option<&PathConfig>,
    perturb_shots: Option<&Vec<u64>>,
    event_count: usize,
    rng: &RngStream,
) -> Vec<Position> {
    let base = match (position, path) {
        (Some(_), Some(_)) => {
            validator.push(field, "give either position or path, not both");
            vec![Position::center(); event_count]
        }
        (Some(xyz), None) => match validator.check_position(&format!("{field}.position"), xyz) {
            Some(position) => vec![position; event_count],
            None => vec![Position::center(); event_count],
        },
        (None, Some(path_config)) => {
            let start = validator.check_position(&format!("{field}.path.start"), &path_config.start);
            let end = validator.check_position(&format!("{field}.path.end"), &path_config.end);
            match (start, end) {
                (Some(start), Some(end)) if event_count > 0 => linear_path(&PathSpec {
                    start,
                    end,
                    event_count,
                })
                .unwrap_or_else(|_| vec![Position::center(); event_count]),
                _ => vec![Position::center(); event_count],
            }
        }
        (None, None) => vec![Position::center(); event_count],
    };
    match perturb_shots {
        None => base,
        Some(shots) => {
            let params = match PerturbParams::profile(shots.clone()) {
                Ok(params) => params,
                Err(error) => {
                    validator.push(&format!("{field}.perturb_shots"), error);
                    return base;
                }
            };
            match perturb_path(&base, &params, rng) {
                Ok(perturbed) => perturbed,
                Err(error) => {
                    validator.push(&format!("{field}.perturb_shots"), error);
                    base
                }
            }
        }
    }
}

/// Validate the whole config and build the scene. Returns every problem
/// found if anything is wrong; renders nothing itself.
pub fn build_scene(config: &ComposeConfig, master_seed: u64) -> Result<BuiltScene, ConfigErrors> {
    let mut validator = Validator::new();

    let layout = match config.layout.as_str() {
        "stereo" => Layout::Stereo,
        "cube" => Layout::Cube8,
        other => {
            validator.push("layout", format!("unknown layout {other:?} (stereo or cube)"));
            Layout::Stereo
        }
    };
    if config.sample_rate < 8000 || config.sample_rate > 192_000 {
        validator.push("sample_rate", "must be in 8000..=192000");
    }
    if !config.tempo_bpm.is_finite() || config.tempo_bpm <= 0.0 {
        validator.push("tempo_bpm", "must be finite and positive");
    }
    if !config.tail_s.is_finite() || config.tail_s < 0.0 {
        validator.push("tail_s", "must be finite and nonnegative");
    }
    if config.sections.is_empty() {
        validator.push("section", "at least one section is required");
    }

    let mut events: Vec<SceneEvent> = Vec::new();
    let mut next_index = 0u64;
    for (section_index, section) in config.sections.iter().enumerate() {
        let field = format!("section[{section_index}]");
        let section_rng = RngStream::new(master_seed, "section", section_index as u64);
        match section {
            SectionConfig::Rhythm(rhythm) => build_rhythm_section(
                &mut validator,
                &field,
                rhythm,
                config.tempo_bpm,
                &section_rng,
                &mut events,
                &mut next_index,
            ),
            SectionConfig::Cloud(cloud) => build_cloud_section(
                &mut validator,
                &field,
                cloud,
                &section_rng,
                &mut events,
                &mut next_index,
            ),
            SectionConfig::Path(path) => build_path_section(
                &mut validator,
                &field,
                path,
                &section_rng,
                &mut events,
                &mut next_index,
            ),
        }
    }

    if !validator.errors.is_empty() {
        return Err(ConfigErrors(validator.errors));
    }

    let mut scene = Scene::new(layout, config.sample_rate, master_seed);
    scene.tail_s = config.tail_s;
    scene.events = events;
    Ok(BuiltScene { scene })
}

fn build_rhythm_section(
    validator: &mut Validator,
    field: &str,
    config: &RhythmSectionConfig,
    tempo_bpm: f64,
    section_rng: &RngStream,
    events: &mut Vec<SceneEvent>,
    next_index: &mut u64,
) {
    let template = match &config.template {
        None => Some(RhythmTemplate::son_clave()),
        Some(text) => match RhythmTemplate::parse(text) {
            Ok(template) => Some(template),
            Err(error) => {
                validator.push(&format!("{field}.template"), error);
                None
            }
        },
    };
    if !config.start_s.is_finite() || config.start_s < 0.0 {
        validator.push(&format!("{field}.start_s"), "must be finite and nonnegative");
    }
    if !config.note_length_s.is_finite() || config.note_length_s <= 0.0 {
        validator.push(&format!("{field}.note_length_s"), "must be positive");
    }
    let p_ok = config.p.is_finite() && (0.0..=1.0).contains(&config.p);
    if !p_ok {
        validator.push(&format!("{field}.p"), "must be in [0, 1]");
    }
    let envelope = validator.check_envelope(
        &format!("{field}.envelope"),
        config.envelope.as_ref(),
        Envelope::Percussive { window_ms: 30.0 },
    );
    let noise = validator.check_noise(
        &format!("{field}.noise_rate"),
        config.noise_rate,
        config.amplitude,
    );
    let realization = template.as_ref().filter(|_| p_ok).and_then(|template| {
        template
            .realize(config.p, &section_rng.child("rhythm", 0))
            .map_err(|error| validator.push(&format!("{field}.p"), error))
            .ok()
    });
    let rhythm_events = realization.as_ref().and_then(|realization| {
        realization
            .events(tempo_bpm)
            .map_err(|error| validator.push(field, error))
            .ok()
    });
    let (Some(noise), Some(rhythm_events)) = (noise, rhythm_events) else {
        return;
    };
    let positions = section_positions(
        validator,
        field,
        config.position.as_ref(),
        config.path.as_ref(),
        config.perturb_shots.as_ref(),
        rhythm_events.len(),
        &section_rng.child("perturb", 0),
    );
    for (event, position) in rhythm_events.iter().zip(positions) {
        events.push(SceneEvent {
            onset_s: config.start_s + event.onset_seconds,
            note: NoteSpec {
                freq_hz: config.freq,
                duration_s: config.note_length_s,
                envelope,
                noise,
            },
            position,
            event_index: *next_index,
            midi: config.midi_note,
            tags: vec!["rhythm".to_string(), format!("cell:{}", event.cell_index)],
        });
        *next_index += 1;
    }
}

fn build_cloud_section(
    validator: &mut Validator,
    field: &str,
    config: &CloudSectionConfig,
    section_rng: &RngStream,
    events: &mut Vec<SceneEvent>,
    next_index: &mut u64,
) {
    let chord_a = Chord::from_note_names("A", &config.chord_a)
        .map_err(|error| validator.push(&format!("{field}.chord_a"), error))
        .ok();
    let chord_b = Chord::from_note_names("B", &config.chord_b)
        .map_err(|error| validator.push(&format!("{field}.chord_b"), error))
        .ok();
    let schedule = CrossfadeSchedule::new(
        config.schedule.iter().map(|pair| (pair[0], pair[1])).collect(),
    )
    .map_err(|error| validator.push(&format!("{field}.schedule"), error))
    .ok();
    if !config.start_s.is_finite() || config.start_s < 0.0 {
        validator.push(&format!("{field}.start_s"), "must be finite and nonnegative");
    }
    let mut numbers_ok = true;
    if !config.duration_s.is_finite() || config.duration_s <= 0.0 {
        validator.push(&format!("{field}.duration_s"), "must be positive");
        numbers_ok = false;
    }
    if !config.note_rate_hz.is_finite() || config.note_rate_hz <= 0.0 {
        validator.push(&format!("{field}.note_rate_hz"), "must be positive");
        numbers_ok = false;
    }
    if config.register[0] > config.register[1] || config.register[1] > 127 {
        validator.push(&format!("{field}.register"), "must be lo <= hi <= 127");
        numbers_ok = false;
    }
    let envelope = validator.check_envelope(
        &format!("{field}.envelope"),
        config.envelope.as_ref(),
        Envelope::Sustained {
            attack_ms: 5.0,
            release_ms: 40.0,
        },
    );
    let noise = validator.check_noise(
        &format!("{field}.noise_rate"),
        config.noise_rate,
        config.amplitude,
    );
    let (Some(chord_a), Some(chord_b), Some(schedule), Some(noise)) =
        (chord_a, chord_b, schedule, noise)
    else {
        return;
    };
    if !numbers_ok {
        return;
    }
    let note_length_s = config
        .note_length_s
        .unwrap_or(2.0 / config.note_rate_hz.max(f64::MIN_POSITIVE));
    let spec = CloudSpec {
        chord_a,
        chord_b,
        schedule,
        duration_s: config.duration_s,
        note_rate_hz: config.note_rate_hz,
        register_lo: config.register[0],
        register_hi: config.register[1],
        note_length_s,
    };
    let notes = match generate_cloud(&spec, &section_rng.child("cloud", 0)) {
        Ok(notes) => notes,
        Err(error) => {
            validator.push(field, error);
            return;
        }
    };
    let positions = section_positions(
        validator,
        field,
        config.position.as_ref(),
        config.path.as_ref(),
        config.perturb_shots.as_ref(),
        notes.len(),
        &section_rng.child("perturb", 0),
    );
    for (note, position) in notes.iter().zip(positions) {
        let freq_hz = match midi_to_hz(i32::from(note.midi_note)) {
            Ok(freq) => freq,
            Err(error) => {
                validator.push(&format!("{field}.register"), error);
                return;
            }
        };
        let tag = match note.chord_tag {
            ChordTag::A => "A",
            ChordTag::B => "B",
        };
        events.push(SceneEvent {
            onset_s: config.start_s + note.onset_s,
            note: NoteSpec {
                freq_hz,
                duration_s: note_length_s,
                envelope,
                noise,
            },
            position,
            event_index: *next_index,
            midi: Some(note.midi_note),
            tags: vec!["cloud".to_string(), tag.to_string()],
        });
        *next_index += 1;
    }
}

fn build_path_section(
    validator: &mut Validator,
    field: &str,
    config: &PathSectionConfig,
    section_rng: &RngStream,
    events: &mut Vec<SceneEvent>,
    next_index: &mut u64,
) {
    if config.event_count == 0 {
        validator.push(&format!("{field}.event_count"), "must be at least 1");
        return;
    }
    if !config.start_s.is_finite() || config.start_s < 0.0 {
        validator.push(&format!("{field}.start_s"), "must be finite and nonnegative");
    }
    let duration_s = config
        .duration_s
        .unwrap_or(config.event_count as f64 / 8.0);
    if !duration_s.is_finite() || duration_s <= 0.0 {
        validator.push(&format!("{field}.duration_s"), "must be positive");
    }
    let noise = validator.check_noise(
        &format!("{field}.noise_rate"),
        config.noise_rate,
        config.amplitude,
    );
    let start = validator.check_position(&format!("{field}.start"), &config.start);
    let end = validator.check_position(&format!("{field}.end"), &config.end);
    let (Some(noise), Some(start), Some(end)) = (noise, start, end) else {
        return;
    };
    let path = match linear_path(&PathSpec {
        start,
        end,
        event_count: config.event_count,
    }) {
        Ok(path) => path,
        Err(error) => {
            validator.push(field, error);
            return;
        }
    };
    let params = match PerturbParams::profile(config.shots.clone()) {
        Ok(params) => params,
        Err(error) => {
            validator.push(&format!("{field}.shots"), error);
            return;
        }
    };
    let perturbed = match perturb_path(&path, &params, &section_rng.child("perturb", 0)) {
        Ok(perturbed) => perturbed,
        Err(error) => {
            validator.push(&format!("{field}.shots"), error);
            return;
        }
    };
    let spacing = if config.event_count > 1 {
        duration_s / (config.event_count - 1) as f64
    } else {
        0.0
    };
    for (k, position) in perturbed.iter().enumerate() {
        events.push(SceneEvent {
            onset_s: config.start_s + k as f64 * spacing,
            note: NoteSpec {
                freq_hz: config.freq,
                duration_s: 0.05,
                envelope: Envelope::Percussive { window_ms: 20.0 },
                noise,
            },
            position: *position,
            event_index: *next_index,
            midi: None,
            tags: vec!["path".to_string(), format!("step:{k}")],
        });
        *next_index += 1;
    }
}
