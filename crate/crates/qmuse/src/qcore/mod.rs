//! Statevector emulation and reproducible randomness.
//!
//! The rest of the engine treats this module as its decision substrate:
//! prepare a one-qubit circuit with [`rx_angle_for_probability`], measure it
//! with an [`RngStream`], act on the bit.

mod rng;
mod state;

pub use rng::RngStream;
pub use state::{
    measure_probability_bit, measure_probability_shots, rx_angle_for_probability, Gate,
    QcoreError, QuantumState, ShotCounts, MAX_QUBITS, NORM_TOLERANCE,
};
