//! Probabilistic chord clouds and harmonic crossfades.
//!
//! Each note in a cloud asks a qubit which of two chords it belongs to:
//! measuring 0 places it in chord A, measuring 1 in chord B. Sweeping the
//! measurement probability over time crossfades the texture from one
//! harmony to the other; hearing many fast notes is what makes the
//! statistics audible.

use thiserror::Error;

use crate::qcore::{measure_probability_bit, QcoreError, RngStream};

/// Default notes per second in a cloud.
pub const DEFAULT_NOTE_RATE_HZ: f64 = 16.0;

/// Default midi register for cloud pitches.
pub const DEFAULT_REGISTER: (u8, u8) = (48, 84);

#[derive(Debug, Error, PartialEq)]
pub enum HarmonyError {
    #[error("chord needs at least one pitch class")]
    EmptyChord,
    #[error("pitch class {0} outside 0..=11")]
    PitchClassOutOfRange(u8),
    #[error("unknown note name {0:?}")]
    UnknownNoteName(String),
    #[error("schedule needs at least one breakpoint")]
    EmptySchedule,
    #[error("schedule times must be nondecreasing (breakpoint {index} goes backwards)")]
    UnorderedSchedule { index: usize },
    #[error("schedule probability {value} at breakpoint {index} outside [0, 1]")]
    ScheduleProbabilityOutOfRange { index: usize, value: f64 },
    #[error("register {lo}..={hi} is empty or reversed")]
    BadRegister { lo: u8, hi: u8 },
    #[error("no tones of chord {chord:?} in register {lo}..={hi}")]
    EmptyRegister { chord: String, lo: u8, hi: u8 },
    #[error("cloud duration must be positive, got {0}")]
    InvalidDuration(f64),
    #[error("note rate must be positive, got {0}")]
    InvalidNoteRate(f64),
    #[error("note length must be positive, got {0}")]
    InvalidNoteLength(f64),
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}

/// A named set of pitch classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chord {
    name: String,
    pitch_classes: Vec<u8>,
}

impl Chord {
    pub fn new(name: &str, pitch_classes: &[u8]) -> Result<Self, HarmonyError> {
        if pitch_classes.is_empty() {
            return Err(HarmonyError::EmptyChord);
        }
        let mut classes = Vec::new();
        for &pc in pitch_classes {
            if pc > 11 {
                return Err(HarmonyError::PitchClassOutOfRange(pc));
            }
            if !classes.contains(&pc) {
                classes.push(pc);
            }
        }
        classes.sort_unstable();
        Ok(Self {
            name: name.to_string(),
            pitch_classes: classes,
        })
    }

    /// Parse a comma-separated note-name list: letters A–G with optional
    /// `#`/`b` suffixes, e.g. `"B,D,F,Ab"`.
    pub fn from_note_names(name: &str, list: &str) -> Result<Self, HarmonyError> {
        let mut classes = Vec::new();
        for token in list.split(',') {
            classes.push(pitch_class_of_name(token.trim())?);
        }
        Self::new(name, &classes)
    }

    /// B diminished seventh: B, D, F, Ab.
    pub fn b_dim7() -> Self {
        Self::new("Bdim7", &[11, 2, 5, 8]).unwrap()
    }

    /// C major triad: C, E, G.
    pub fn c_major() -> Self {
        Self::new("C", &[0, 4, 7]).unwrap()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pitch_classes(&self) -> &[u8] {
        &self.pitch_classes
    }

    pub fn contains_class(&self, pitch_class: u8) -> bool {
        self.pitch_classes.contains(&pitch_class)
    }
}

/// Pitch class of a note name (`C`=0 … `B`=11, with `#`/`b` alterations).
pub fn pitch_class_of_name(name: &str) -> Result<u8, HarmonyError> {
    let mut chars = name.chars();
    let letter = chars
        .next()
        .ok_or_else(|| HarmonyError::UnknownNoteName(name.to_string()))?;
    let base: i32 = match letter.to_ascii_uppercase() {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return Err(HarmonyError::UnknownNoteName(name.to_string())),
    };
    let mut class = base;
    for alteration in chars {
        match alteration {
            '#' => class += 1,
            'b' => class -= 1,
            _ => return Err(HarmonyError::UnknownNoteName(name.to_string())),
        }
    }
    Ok(class.rem_euclid(12) as u8)
}

/// Piecewise-linear probability of chord B over time. Constant before the
/// first breakpoint and after the last.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossfadeSchedule {
    breakpoints: Vec<(f64, f64)>,
}

impl CrossfadeSchedule {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self, HarmonyError> {
        if breakpoints.is_empty() {
            return Err(HarmonyError::EmptySchedule);
        }
        for (index, pair) in breakpoints.iter().enumerate() {
            let (t, p) = *pair;
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(HarmonyError::ScheduleProbabilityOutOfRange { index, value: p });
            }
            if index > 0 && (!t.is_finite() || t < breakpoints[index - 1].0) {
                return Err(HarmonyError::UnorderedSchedule { index });
            }
        }
        Ok(Self { breakpoints })
    }

    /// A constant schedule (no crossfade).
    pub fn constant(p_b: f64) -> Result<Self, HarmonyError> {
        Self::new(vec![(0.0, p_b)])
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Probability of chord B at time `t`.
    pub fn probability_at(&self, t: f64) -> f64 {
        let points = &self.breakpoints;
        if t <= points[0].0 {
            return points[0].1;
        }
        if t >= points[points.len() - 1].0 {
            return points[points.len() - 1].1;
        }
        for window in points.windows(2) {
            let (t0, p0) = window[0];
            let (t1, p1) = window[1];
            if t <= t1 {
                if t1 == t0 {
                    return p1;
                }
                let frac = (t - t0) / (t1 - t0);
                return p0 + (p1 - p0) * frac;
            }
        }
        points[points.len() - 1].1
    }
}

/// Which chord a measurement assigned a note to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChordTag {
    A,
    B,
}

/// One qubit decision: measure `Rx(angle_for(p_b))|0⟩`; 0 → chord A,
/// 1 → chord B.
pub fn choose_chord(p_b: f64, rng: &mut RngStream) -> Result<ChordTag, HarmonyError> {
    Ok(if measure_probability_bit(p_b, rng)? {
        ChordTag::B
    } else {
        ChordTag::A
    })
}

/// All midi notes in `[lo, hi]` whose pitch class belongs to the chord,
/// ascending. An empty result is an error: the register is unusable.
pub fn chord_tones_in_range(chord: &Chord, lo: u8, hi: u8) -> Result<Vec<u8>, HarmonyError> {
    if lo > hi || hi > 127 {
        return Err(HarmonyError::BadRegister { lo, hi });
    }
    let tones: Vec<u8> = (lo..=hi)
        .filter(|note| chord.contains_class(note % 12))
        .collect();
    if tones.is_empty() {
        return Err(HarmonyError::EmptyRegister {
            chord: chord.name.clone(),
            lo,
            hi,
        });
    }
    Ok(tones)
}

/// Uniform choice among the chord's tones in the register.
pub fn choose_pitch(
    chord: &Chord,
    lo: u8,
    hi: u8,
    rng: &mut RngStream,
) -> Result<u8, HarmonyError> {
    let tones = chord_tones_in_range(chord, lo, hi)?;
    Ok(tones[rng.next_index(tones.len())])
}

/// Parameters of a note cloud crossfading between two chords.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudSpec {
    pub chord_a: Chord,
    pub chord_b: Chord,
    pub schedule: CrossfadeSchedule,
    pub duration_s: f64,
    pub note_rate_hz: f64,
    pub register_lo: u8,
    pub register_hi: u8,
    pub note_length_s: f64,
}

impl CloudSpec {
    /// Cloud with the default rate, register, and overlapping note length
    /// (two note periods, like holding the sustain pedal).
    pub fn new(
        chord_a: Chord,
        chord_b: Chord,
        schedule: CrossfadeSchedule,
        duration_s: f64,
    ) -> Self {
        Self {
            chord_a,
            chord_b,
            schedule,
            duration_s,
            note_rate_hz: DEFAULT_NOTE_RATE_HZ,
            register_lo: DEFAULT_REGISTER.0,
            register_hi: DEFAULT_REGISTER.1,
            note_length_s: 2.0 / DEFAULT_NOTE_RATE_HZ,
        }
    }

    fn validate(&self) -> Result<(), HarmonyError> {
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(HarmonyError::InvalidDuration(self.duration_s));
        }
        if !self.note_rate_hz.is_finite() || self.note_rate_hz <= 0.0 {
            return Err(HarmonyError::InvalidNoteRate(self.note_rate_hz));
        }
        if !self.note_length_s.is_finite() || self.note_length_s <= 0.0 {
            return Err(HarmonyError::InvalidNoteLength(self.note_length_s));
        }
        // Both chords must be realizable in the register.
        chord_tones_in_range(&self.chord_a, self.register_lo, self.register_hi)?;
        chord_tones_in_range(&self.chord_b, self.register_lo, self.register_hi)?;
        Ok(())
    }
}

/// One note of a generated cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudNote {
    pub onset_s: f64,
    pub midi_note: u8,
    pub chord_tag: ChordTag,
}

/// Generate the cloud: isochronous onsets at `note_rate_hz`; for each note,
/// read the schedule, ask the qubit which chord, then pick a tone uniformly
/// from that chord's register. Each note owns a child stream, so clouds are
/// order-deterministic under any parallelism.
pub fn generate_cloud(spec: &CloudSpec, rng: &RngStream) -> Result<Vec<CloudNote>, HarmonyError> {
    spec.validate()?;
    let count = (spec.duration_s * spec.note_rate_hz).floor() as usize;
    let mut notes = Vec::with_capacity(count);
    for i in 0..count {
        let onset_s = i as f64 / spec.note_rate_hz;
        let p_b = spec.schedule.probability_at(onset_s);
        let mut note_rng = rng.child("note", i as u64);
        let chord_tag = choose_chord(p_b, &mut note_rng)?;
        let chord = match chord_tag {
            ChordTag::A => &spec.chord_a,
            ChordTag::B => &spec.chord_b,
        };
        let midi_note = choose_pitch(chord, spec.register_lo, spec.register_hi, &mut note_rng)?;
        notes.push(CloudNote {
            onset_s,
            midi_note,
            chord_tag,
        });
    }
    Ok(notes)
}
