//! Scene assembly: synthesize timed events, pan them, mix to multichannel
//! audio, and write WAV/JSON/MIDI files.
//!
//! Rendering is a pure function of (scene, master seed). Events synthesize
//! in parallel, each on the stream `(master_seed, "event", event_index)`,
//! and the mix accumulates serially in ascending `event_index` order so the
//! output is bit-identical at any thread count.

mod json;
mod midi;
mod wav;

pub use json::write_events_json;
pub use midi::{write_midi, TICKS_PER_QUARTER};
pub use wav::{write_wav, BitDepth};

use rayon::prelude::*;
use thiserror::Error;

use crate::spatial::{pan_cube, pan_stereo, Position, SpatialError};
use crate::timbre::{synth_note, NoteSpec, TimbreError};
use crate::qcore::RngStream;

/// Default release tail after the last event, so envelopes ring out.
pub const DEFAULT_TAIL_S: f64 = 0.25;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("event {event_index}: onset must be finite and nonnegative, got {onset_s}")]
    InvalidOnset { event_index: u64, onset_s: f64 },
    #[error("event {event_index}: frequency {freq_hz} Hz is at or above Nyquist ({nyquist_hz} Hz)")]
    FrequencyAboveNyquist {
        event_index: u64,
        freq_hz: f64,
        nyquist_hz: f64,
    },
    #[error("duplicate event index {0}")]
    DuplicateEventIndex(u64),
    #[error("tail must be finite and nonnegative, got {0}")]
    InvalidTail(f64),
    #[error("event {event_index}: {source}")]
    Synthesis {
        event_index: u64,
        source: TimbreError,
    },
    #[error("event {0} has no midi pitch")]
    EventWithoutMidi(u64),
    #[error("tempo must be finite and positive, got {0}")]
    InvalidTempo(f64),
    #[error("channel count {0} unsupported (1..=8)")]
    BadChannelCount(usize),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Speaker layout of a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Stereo,
    Cube8,
}

impl Layout {
    pub fn channel_count(&self) -> usize {
        match self {
            Layout::Stereo => 2,
            Layout::Cube8 => 8,
        }
    }
}

/// One timed, placed synthesis event. `event_index` keys the event's RNG
/// stream and must be unique within a scene; `midi` and `tags` ride along
/// for the JSON/MIDI exports.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneEvent {
    pub onset_s: f64,
    pub note: NoteSpec,
    pub position: Position,
    pub event_index: u64,
    pub midi: Option<u8>,
    pub tags: Vec<String>,
}

/// A complete description of a piece to render.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub events: Vec<SceneEvent>,
    pub layout: Layout,
    pub sample_rate_hz: u32,
    pub master_seed: u64,
    pub tail_s: f64,
}

impl Scene {
    pub fn new(layout: Layout, sample_rate_hz: u32, master_seed: u64) -> Self {
        Self {
            events: Vec::new(),
            layout,
            sample_rate_hz,
            master_seed,
            tail_s: DEFAULT_TAIL_S,
        }
    }
}

/// Multichannel audio with equal-length channels.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiBuffer {
    channels: Vec<Vec<f64>>,
    sample_rate_hz: u32,
}

impl MultiBuffer {
    pub fn silence(channel_count: usize, frames: usize, sample_rate_hz: u32) -> Self {
        Self {
            channels: vec![vec![0.0; frames]; channel_count],
            sample_rate_hz,
        }
    }

    pub fn from_channels(channels: Vec<Vec<f64>>, sample_rate_hz: u32) -> Self {
        if let Some(first) = channels.first() {
            debug_assert!(channels.iter().all(|c| c.len() == first.len()));
        }
        Self {
            channels,
            sample_rate_hz,
        }
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn frames(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn peak(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0f64, |peak, &s| peak.max(s.abs()))
    }
}

/// How to keep a mixed buffer inside [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipMode {
    /// Saturate out-of-range samples at ±1.
    Clip,
    /// Scale the whole buffer to peak 0.99, only if the peak exceeds 1.
    Normalize,
}

fn per_channel_gains(layout: Layout, position: &Position) -> Result<Vec<f64>, RenderError> {
    Ok(match layout {
        Layout::Stereo => {
            let gains = pan_stereo(position.x())?;
            vec![gains.left, gains.right]
        }
        Layout::Cube8 => pan_cube(position).gains.to_vec(),
    })
}

/// Render a scene to a multichannel buffer.
pub fn render_scene(scene: &Scene) -> Result<MultiBuffer, RenderError> {
    let sample_rate = scene.sample_rate_hz;
    let nyquist_hz = f64::from(sample_rate) / 2.0;
    if !scene.tail_s.is_finite() || scene.tail_s < 0.0 {
        return Err(RenderError::InvalidTail(scene.tail_s));
    }
    let mut seen = std::collections::BTreeSet::new();
    for event in &scene.events {
        if !event.onset_s.is_finite() || event.onset_s < 0.0 {
            return Err(RenderError::InvalidOnset {
                event_index: event.event_index,
                onset_s: event.onset_s,
            });
        }
        if !event.note.freq_hz.is_finite() || event.note.freq_hz >= nyquist_hz {
            return Err(RenderError::FrequencyAboveNyquist {
                event_index: event.event_index,
                freq_hz: event.note.freq_hz,
                nyquist_hz,
            });
        }
        if !seen.insert(event.event_index) {
            return Err(RenderError::DuplicateEventIndex(event.event_index));
        }
    }

    // Synthesis is embarrassingly parallel: each event owns its stream.
    let mut rendered: Vec<(u64, usize, Vec<f64>, Vec<f64>)> = scene
        .events
        .par_iter()
        .map(|event| {
            let mut rng = RngStream::new(scene.master_seed, "event", event.event_index);
            let buffer = synth_note(&event.note, &mut rng, sample_rate).map_err(|source| {
                RenderError::Synthesis {
                    event_index: event.event_index,
                    source,
                }
            })?;
            let gains = per_channel_gains(scene.layout, &event.position)?;
            let onset_sample = (event.onset_s * f64::from(sample_rate)).round() as usize;
            Ok((
                event.event_index,
                onset_sample,
                buffer.samples().to_vec(),
                gains,
            ))
        })
        .collect::<Result<_, RenderError>>()?;

    let tail_samples = (scene.tail_s * f64::from(sample_rate)).round() as usize;
    let frames = rendered
        .iter()
        .map(|(_, onset, samples, _)| onset + samples.len())
        .max()
        .unwrap_or(0)
        + tail_samples;

    // Serial, index-ordered accumulation: float addition is not
    // associative, so the mix order is pinned.
    rendered.sort_by_key(|(event_index, ..)| *event_index);
    let channel_count = scene.layout.channel_count();
    let mut mix = MultiBuffer::silence(channel_count, frames, sample_rate);
    for (_, onset, samples, gains) in &rendered {
        for (channel, &gain) in mix.channels.iter_mut().zip(gains) {
            for (i, &sample) in samples.iter().enumerate() {
                channel[onset + i] += sample * gain;
            }
        }
    }
    Ok(mix)
}

/// Bound a buffer per [`ClipMode`]. In-range buffers pass through
/// untouched in either mode.
pub fn clip_guard(buffer: &MultiBuffer, mode: ClipMode) -> MultiBuffer {
    let peak = buffer.peak();
    match mode {
        ClipMode::Clip => {
            if peak <= 1.0 {
                return buffer.clone();
            }
            let channels = buffer
                .channels
                .iter()
                .map(|c| c.iter().map(|&s| s.clamp(-1.0, 1.0)).collect())
                .collect();
            MultiBuffer::from_channels(channels, buffer.sample_rate_hz)
        }
        ClipMode::Normalize => {
            if peak <= 1.0 {
                return buffer.clone();
            }
            let scale = 0.99 / peak;
            let channels = buffer
                .channels
                .iter()
                .map(|c| c.iter().map(|&s| s * scale).collect())
                .collect();
            MultiBuffer::from_channels(channels, buffer.sample_rate_hz)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timbre::{Envelope, ParticleNoiseParams};

    fn test_note(freq_hz: f64, duration_s: f64) -> NoteSpec {
        NoteSpec {
            freq_hz,
            duration_s,
            envelope: Envelope::Sustained {
                attack_ms: 5.0,
                release_ms: 5.0,
            },
            noise: ParticleNoiseParams::new(50.0, 0.9).unwrap(),
        }
    }

    fn event(index: u64, onset_s: f64, x: f64) -> SceneEvent {
        SceneEvent {
            onset_s,
            note: test_note(440.0, 0.25),
            position: Position::new(x, 0.5, 0.5).unwrap(),
            event_index: index,
            midi: None,
            tags: vec![],
        }
    }

    #[test]
    fn empty_scene_renders_exact_silence() {
        let mut scene = Scene::new(Layout::Stereo, 48_000, 0);
        scene.tail_s = 1.0;
        let mix = render_scene(&scene).unwrap();
        assert_eq!(mix.channel_count(), 2);
        assert_eq!(mix.frames(), 48_000);
        assert!(mix.channels().iter().flatten().all(|&s| s == 0.0));
    }

    #[test]
    fn centered_event_gives_bit_identical_channels() {
        let mut scene = Scene::new(Layout::Stereo, 48_000, 7);
        scene.events.push(event(0, 0.0, 0.5));
        let mix = render_scene(&scene).unwrap();
        assert_eq!(mix.channel(0), mix.channel(1));
    }

    #[test]
    fn disjoint_events_mix_linearly() {
        let mut both = Scene::new(Layout::Stereo, 48_000, 3);
        both.events.push(event(0, 0.0, 0.2));
        both.events.push(event(1, 0.5, 0.8));
        let mix = render_scene(&both).unwrap();

        let mut solo0 = Scene::new(Layout::Stereo, 48_000, 3);
        solo0.events.push(event(0, 0.0, 0.2));
        let mut solo1 = Scene::new(Layout::Stereo, 48_000, 3);
        solo1.events.push(event(1, 0.5, 0.8));
        let mix0 = render_scene(&solo0).unwrap();
        let mix1 = render_scene(&solo1).unwrap();

        for channel in 0..2 {
            for i in 0..mix.frames() {
                let a = mix0.channel(channel).get(i).copied().unwrap_or(0.0);
                let b = mix1.channel(channel).get(i).copied().unwrap_or(0.0);
                assert_eq!(mix.channel(channel)[i], a + b, "channel {channel} frame {i}");
            }
        }
    }

    #[test]
    fn render_is_deterministic_across_thread_counts() {
        let mut scene = Scene::new(Layout::Cube8, 48_000, 11);
        for i in 0..6 {
            scene.events.push(event(i, i as f64 * 0.1, 0.3));
        }
        let render_with_threads = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| render_scene(&scene).unwrap())
        };
        let single = render_with_threads(1);
        let quad = render_with_threads(4);
        assert_eq!(single, quad);
    }

    #[test]
    fn scene_validation() {
        let mut scene = Scene::new(Layout::Stereo, 48_000, 0);
        scene.events.push(event(0, -1.0, 0.5));
        assert!(matches!(
            render_scene(&scene).unwrap_err(),
            RenderError::InvalidOnset { .. }
        ));

        let mut scene = Scene::new(Layout::Stereo, 48_000, 0);
        let mut bad = event(0, 0.0, 0.5);
        bad.note.freq_hz = 30_000.0;
        scene.events.push(bad);
        assert!(matches!(
            render_scene(&scene).unwrap_err(),
            RenderError::FrequencyAboveNyquist { .. }
        ));

        let mut scene = Scene::new(Layout::Stereo, 48_000, 0);
        scene.events.push(event(5, 0.0, 0.1));
        scene.events.push(event(5, 0.5, 0.9));
        assert!(matches!(
            render_scene(&scene).unwrap_err(),
            RenderError::DuplicateEventIndex(5)
        ));

        let mut scene = Scene::new(Layout::Stereo, 48_000, 0);
        scene.tail_s = -0.5;
        assert!(matches!(
            render_scene(&scene).unwrap_err(),
            RenderError::InvalidTail(_)
        ));
    }

    #[test]
    fn total_energy_is_position_independent() {
        // Constant-power panning: summed squared gains are 1, so the same
        // event carries the same energy anywhere in the cube.
        let energy = |mix: &MultiBuffer| -> f64 {
            mix.channels()
                .iter()
                .flatten()
                .map(|&s| s * s)
                .sum()
        };
        let mut rng = RngStream::new(19, "energy", 0);
        let mut reference = None;
        for _ in 0..100 {
            let mut scene = Scene::new(Layout::Cube8, 24_000, 13);
            let mut e = event(0, 0.0, 0.0);
            e.position = Position::new(rng.next_f64(), rng.next_f64(), rng.next_f64()).unwrap();
            scene.events.push(e);
            let total = energy(&render_scene(&scene).unwrap());
            match reference {
                None => reference = Some(total),
                Some(expected) => {
                    assert!(
                        (total / expected - 1.0).abs() < 0.01,
                        "{total} vs {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn clip_guard_modes() {
        let in_range = MultiBuffer::from_channels(vec![vec![0.5, -0.7]], 48_000);
        assert_eq!(clip_guard(&in_range, ClipMode::Clip), in_range);
        assert_eq!(clip_guard(&in_range, ClipMode::Normalize), in_range);

        let hot = MultiBuffer::from_channels(vec![vec![2.0, -1.5, 0.25]], 48_000);
        let clipped = clip_guard(&hot, ClipMode::Clip);
        assert_eq!(clipped.channel(0), &[1.0, -1.0, 0.25]);

        let normalized = clip_guard(&hot, ClipMode::Normalize);
        assert!((normalized.peak() - 0.99).abs() < 1e-12);
        assert!((normalized.channel(0)[0] - 0.99).abs() < 1e-12);
    }
}
