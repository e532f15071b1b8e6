//! Byte-stable events JSON.
//!
//! Schema (all keys sorted, floats with fixed 6-decimal formatting):
//!
//! ```text
//! {
//!   "events": [
//!     {
//!       "duration_s": 0.125000,
//!       "freq_hz": 440.000000,
//!       "midi": 69,            // or null for unpitched events
//!       "onset_s": 0.000000,
//!       "position": { "x": 0.500000, "y": 0.500000, "z": 0.500000 },
//!       "tags": ["cloud", "B"]
//!     }
//!   ],
//!   "seed": 42,
//!   "version": 1
//! }
//! ```
//!
//! The emitter is hand-rolled so identical scenes always produce identical
//! bytes; readers can use any JSON parser.

use std::io::Write;
use std::path::Path;

use super::{RenderError, SceneEvent};

/// Schema version of the events file.
pub const EVENTS_JSON_VERSION: u32 = 1;

fn push_f64(out: &mut String, value: f64) {
    out.push_str(&format!("{value:.6}"));
}

fn push_json_string(out: &mut String, value: &str) {
    out.push('"');
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Encode events as the documented JSON schema.
pub fn events_json_string(events: &[SceneEvent], seed: u64) -> String {
    let mut out = String::new();
    out.push_str("{\n  \"events\": [");
    for (i, event) in events.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("\n    {\n      \"duration_s\": ");
        push_f64(&mut out, event.note.duration_s);
        out.push_str(",\n      \"freq_hz\": ");
        push_f64(&mut out, event.note.freq_hz);
        out.push_str(",\n      \"midi\": ");
        match event.midi {
            Some(midi) => out.push_str(&midi.to_string()),
            None => out.push_str("null"),
        }
        out.push_str(",\n      \"onset_s\": ");
        push_f64(&mut out, event.onset_s);
        out.push_str(",\n      \"position\": { \"x\": ");
        push_f64(&mut out, event.position.x());
        out.push_str(", \"y\": ");
        push_f64(&mut out, event.position.y());
        out.push_str(", \"z\": ");
        push_f64(&mut out, event.position.z());
        out.push_str(" },\n      \"tags\": [");
        for (j, tag) in event.tags.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            push_json_string(&mut out, tag);
        }
        out.push_str("]\n    }");
    }
    if !events.is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("],\n  \"seed\": ");
    out.push_str(&seed.to_string());
    out.push_str(",\n  \"version\": ");
    out.push_str(&EVENTS_JSON_VERSION.to_string());
    out.push_str("\n}\n");
    out
}

/// Write the events file to `path`.
pub fn write_events_json(
    events: &[SceneEvent],
    seed: u64,
    path: impl AsRef<Path>,
) -> Result<(), RenderError> {
    let path = path.as_ref();
    let io_err = |source| RenderError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(events_json_string(events, seed).as_bytes())
        .map_err(io_err)?;
    Ok(())
}
