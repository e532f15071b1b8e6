//! Temporal-grid rhythm templates and their measured realizations.
//!
//! A template is a row of cells on a sixteenth-note grid: `1` always
//! sounds, `0` never sounds, `x` is decided by measuring a qubit. The
//! built-in template is two measures of son clave with 13 changeable
//! cells, giving 2^13 = 8192 possible patterns that all keep the clave
//! skeleton intact.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::qcore::{measure_probability_bit, QcoreError, RngStream};

/// Two measures of son clave on a sixteenth grid, changeable cells as `x`.
pub const SON_CLAVE_TEMPLATE: &str = "1001 0x1x 0x1x 10xx | 100x 0x10 0x1x xx0x";

/// Largest mutable-cell count for which `2^k` fits the count type.
const MAX_MUTABLE_FOR_COUNT: u32 = 62;

#[derive(Debug, Error, PartialEq)]
pub enum RhythmError {
    #[error("template character {character:?} at position {position} (expected 0, 1, x, space, or |)")]
    IllegalCharacter { character: char, position: usize },
    #[error("template has no cells")]
    EmptyTemplate,
    #[error("probability must be in [0, 1], got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("per-cell probability override at index {index} out of range for {cells} cells")]
    OverrideIndexOutOfRange { index: usize, cells: usize },
    #[error("realization count overflows: {0} mutable cells (max {MAX_MUTABLE_FOR_COUNT})")]
    TooManyMutableCells(u32),
    #[error("tempo must be finite and positive, got {0}")]
    InvalidTempo(f64),
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}

/// One grid cell of a template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellSpec {
    Fixed0,
    Fixed1,
    Mutable,
}

/// An ordered row of cells plus its grid geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhythmTemplate {
    cells: Vec<CellSpec>,
    cells_per_beat: u32,
    beats_per_measure: u32,
}

impl RhythmTemplate {
    /// Parse a template string. `0`, `1`, and `x`/`X` become cells; spaces
    /// and `|` are cosmetic and ignored.
    pub fn parse(text: &str) -> Result<Self, RhythmError> {
        let mut cells = Vec::new();
        for (position, character) in text.chars().enumerate() {
            match character {
                '0' => cells.push(CellSpec::Fixed0),
                '1' => cells.push(CellSpec::Fixed1),
                'x' | 'X' => cells.push(CellSpec::Mutable),
                ' ' | '|' => {}
                _ => return Err(RhythmError::IllegalCharacter { character, position }),
            }
        }
        if cells.is_empty() {
            return Err(RhythmError::EmptyTemplate);
        }
        Ok(Self {
            cells,
            cells_per_beat: 4,
            beats_per_measure: 4,
        })
    }

    /// The built-in son clave template (sixteenth grid, 4/4).
    pub fn son_clave() -> Self {
        Self::parse(SON_CLAVE_TEMPLATE).expect("built-in template parses")
    }

    pub fn with_grid(mut self, cells_per_beat: u32, beats_per_measure: u32) -> Self {
        assert!(cells_per_beat >= 1 && beats_per_measure >= 1);
        self.cells_per_beat = cells_per_beat;
        self.beats_per_measure = beats_per_measure;
        self
    }

    pub fn cells(&self) -> &[CellSpec] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells_per_beat(&self) -> u32 {
        self.cells_per_beat
    }

    pub fn beats_per_measure(&self) -> u32 {
        self.beats_per_measure
    }

    pub fn fixed_count(&self) -> u32 {
        self.cells.len() as u32 - self.mutable_count()
    }

    /// Number of `x` cells, i.e. qubit decisions per realization.
    pub fn mutable_count(&self) -> u32 {
        self.cells
            .iter()
            .filter(|c| matches!(c, CellSpec::Mutable))
            .count() as u32
    }

    /// Number of distinct realizations, `2^mutable_count`.
    pub fn realization_count(&self) -> Result<u64, RhythmError> {
        let mutable = self.mutable_count();
        if mutable > MAX_MUTABLE_FOR_COUNT {
            return Err(RhythmError::TooManyMutableCells(mutable));
        }
        Ok(1u64 << mutable)
    }

    /// Realize the template: fixed cells copy through, each mutable cell is
    /// one measurement of `Rx(angle_for(p))|0⟩` on its own child stream.
    pub fn realize(&self, p: f64, rng: &RngStream) -> Result<RhythmRealization, RhythmError> {
        self.realize_with_overrides(p, &BTreeMap::new(), rng)
    }

    /// Like [`realize`](Self::realize), with per-cell probability overrides
    /// (cell index → probability) for expressive bias.
    pub fn realize_with_overrides(
        &self,
        p: f64,
        overrides: &BTreeMap<usize, f64>,
        rng: &RngStream,
    ) -> Result<RhythmRealization, RhythmError> {
        check_probability(p)?;
        for (&index, &value) in overrides {
            if index >= self.cells.len() {
                return Err(RhythmError::OverrideIndexOutOfRange {
                    index,
                    cells: self.cells.len(),
                });
            }
            check_probability(value)?;
        }
        let mut bits = Vec::with_capacity(self.cells.len());
        for (i, cell) in self.cells.iter().enumerate() {
            let bit = match cell {
                CellSpec::Fixed0 => false,
                CellSpec::Fixed1 => true,
                CellSpec::Mutable => {
                    let cell_p = overrides.get(&i).copied().unwrap_or(p);
                    let mut cell_rng = rng.child("cell", i as u64);
                    measure_probability_bit(cell_p, &mut cell_rng)?
                }
            };
            bits.push(bit);
        }
        Ok(RhythmRealization {
            template: self.clone(),
            bits,
        })
    }
}

fn check_probability(p: f64) -> Result<(), RhythmError> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(RhythmError::ProbabilityOutOfRange(p));
    }
    Ok(())
}

/// A measured bit vector over a template's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RhythmRealization {
    template: RhythmTemplate,
    bits: Vec<bool>,
}

impl RhythmRealization {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn template(&self) -> &RhythmTemplate {
        &self.template
    }

    /// Bits as a `"1001..."` string, handy for exports and goldens.
    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Onset times for every 1-cell: cell `i` starts at
    /// `(i / cells_per_beat) * (60 / tempo_bpm)` seconds.
    pub fn events(&self, tempo_bpm: f64) -> Result<Vec<RhythmEvent>, RhythmError> {
        if !tempo_bpm.is_finite() || tempo_bpm <= 0.0 {
            return Err(RhythmError::InvalidTempo(tempo_bpm));
        }
        let seconds_per_beat = 60.0 / tempo_bpm;
        let cells_per_beat = f64::from(self.template.cells_per_beat);
        Ok(self
            .bits
            .iter()
            .enumerate()
            .filter(|(_, &bit)| bit)
            .map(|(cell_index, _)| RhythmEvent {
                onset_seconds: (cell_index as f64 / cells_per_beat) * seconds_per_beat,
                cell_index,
            })
            .collect())
    }
}

/// A timed onset produced by a realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhythmEvent {
    pub onset_seconds: f64,
    pub cell_index: usize,
}
