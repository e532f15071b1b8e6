//! qmuse — a quantum-inspired generative music engine.
//!
//! Four composition techniques built on one-qubit measurements:
//!
//! - [`rhythm`]: temporal-grid templates with fixed and mutable cells,
//!   realized by per-cell qubit measurement.
//! - [`timbre`]: particle-tracking noise shifted to pitch by ring
//!   modulation and shaped by envelopes.
//! - [`harmony`]: note clouds whose per-note chord membership is a
//!   single measurement under a time-varying probability schedule.
//! - [`spatial`]: constant-intensity panning plus shot-noise perturbation
//!   of virtual positions.
//!
//! [`qcore`] supplies the statevector emulator and splittable RNG streams
//! behind all of them; [`render`] assembles timed, panned events into
//! multichannel audio and writes WAV/JSON/MIDI.
//!
//! Everything is deterministic: identical master seed, identical output
//! bytes, at any thread count.

pub mod harmony;
pub mod qcore;
pub mod render;
pub mod rhythm;
pub mod spatial;
pub mod timbre;

pub use qcore::{rx_angle_for_probability, QuantumState, RngStream};

// Book chapters double as doctests so the guide can never drift from the
// API. `cargo test --doc` compiles and runs every rust fence in book/src.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/qubit-decisions.md")]
    mod qubit_decisions {}
    #[doc = include_str!("../../../book/src/rhythm.md")]
    mod rhythm {}
    #[doc = include_str!("../../../book/src/timbre.md")]
    mod timbre {}
    #[doc = include_str!("../../../book/src/harmony.md")]
    mod harmony {}
    #[doc = include_str!("../../../book/src/spatialization.md")]
    mod spatialization {}
    #[doc = include_str!("../../../book/src/rendering.md")]
    mod rendering {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
