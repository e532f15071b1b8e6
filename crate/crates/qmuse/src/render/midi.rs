//! Standard MIDI File (format 0) writer.
//!
//! One track, 480 ticks per quarter note, note-on and note-off velocity 96.
//! Onset seconds convert to ticks through the given tempo; at equal ticks,
//! note-offs precede note-ons so back-to-back repeats never cancel.

use std::io::Write;
use std::path::Path;

use super::{RenderError, SceneEvent};

/// Tick resolution of emitted files.
pub const TICKS_PER_QUARTER: u32 = 480;

const NOTE_VELOCITY: u8 = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum MessageKind {
    NoteOff,
    NoteOn,
}

fn seconds_to_ticks(seconds: f64, tempo_bpm: f64) -> u64 {
    (seconds * tempo_bpm / 60.0 * f64::from(TICKS_PER_QUARTER)).round() as u64
}

fn push_varint(out: &mut Vec<u8>, mut value: u64) {
    let mut groups = vec![(value & 0x7f) as u8];
    value >>= 7;
    while value > 0 {
        groups.push((value & 0x7f) as u8 | 0x80);
        value >>= 7;
    }
    groups.reverse();
    out.extend_from_slice(&groups);
}

/// Encode pitched events as SMF format-0 bytes.
pub fn midi_bytes(events: &[SceneEvent], tempo_bpm: f64) -> Result<Vec<u8>, RenderError> {
    if !tempo_bpm.is_finite() || tempo_bpm <= 0.0 {
        return Err(RenderError::InvalidTempo(tempo_bpm));
    }
    let mut messages: Vec<(u64, MessageKind, u8)> = Vec::with_capacity(events.len() * 2);
    for event in events {
        let pitch = event
            .midi
            .ok_or(RenderError::EventWithoutMidi(event.event_index))?;
        let on = seconds_to_ticks(event.onset_s, tempo_bpm);
        let off = seconds_to_ticks(event.onset_s + event.note.duration_s, tempo_bpm);
        messages.push((on, MessageKind::NoteOn, pitch));
        messages.push((off.max(on + 1), MessageKind::NoteOff, pitch));
    }
    messages.sort();

    let mut track = Vec::new();
    let mut cursor = 0u64;
    for (tick, kind, pitch) in messages {
        push_varint(&mut track, tick - cursor);
        cursor = tick;
        let status = match kind {
            MessageKind::NoteOff => 0x80,
            MessageKind::NoteOn => 0x90,
        };
        track.extend_from_slice(&[status, pitch, NOTE_VELOCITY]);
    }
    // End of track.
    track.extend_from_slice(&[0x00, 0xff, 0x2f, 0x00]);

    let mut out = Vec::with_capacity(14 + 8 + track.len());
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&(TICKS_PER_QUARTER as u16).to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(track.len() as u32).to_be_bytes());
    out.extend_from_slice(&track);
    Ok(out)
}

/// Write pitched events to `path` as a format-0 MIDI file.
pub fn write_midi(
    events: &[SceneEvent],
    path: impl AsRef<Path>,
    tempo_bpm: f64,
) -> Result<(), RenderError> {
    let path = path.as_ref();
    let bytes = midi_bytes(events, tempo_bpm)?;
    let io_err = |source| RenderError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(&bytes).map_err(io_err)?;
    Ok(())
}
