//! Minimal statevector emulator.
//!
//! Holds the complex amplitude vector of an `n ≤ 10` qubit register and
//! applies the standard gate unitaries. Measurement samples from the Born
//! distribution `|amplitude|²` without collapsing the stored state: every
//! musical decision in the engine prepares its own tiny circuit, takes the
//! shots it needs, and throws the state away.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use super::rng::RngStream;

/// Hard ceiling on register width. Everything in the engine uses one qubit;
/// the headroom costs nothing (2^10 amplitudes).
pub const MAX_QUBITS: usize = 10;

/// Norm tolerance after construction and gate application.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum QcoreError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCountOutOfRange(usize),
    #[error("qubit index {index} out of range for {num_qubits} qubit(s)")]
    QubitIndexOutOfRange { index: usize, num_qubits: usize },
    #[error("gate angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("controlled gate requires control != target, both were {0}")]
    ControlEqualsTarget(usize),
    #[error("{gate} expects {expected} target(s), got {got}")]
    WrongTargetCount {
        gate: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("probability must be in [0, 1], got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("shot count must be at least 1")]
    ZeroShots,
}

/// A gate to apply. Single-qubit gates take their target from the `targets`
/// argument of [`QuantumState::apply_gate`]; `Cnot` carries its own indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H,
    X,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    Cnot { control: usize, target: usize },
}

impl Gate {
    fn name(&self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::X => "X",
            Gate::Rx(_) => "Rx",
            Gate::Ry(_) => "Ry",
            Gate::Rz(_) => "Rz",
            Gate::Cnot { .. } => "CNOT",
        }
    }

    fn angle(&self) -> Option<f64> {
        match self {
            Gate::Rx(a) | Gate::Ry(a) | Gate::Rz(a) => Some(*a),
            _ => None,
        }
    }

    /// 2x2 unitary for the single-qubit variants.
    fn matrix(&self) -> [[Complex64; 2]; 2] {
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            Gate::H => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::X => {
                let one = Complex64::new(1.0, 0.0);
                [[zero, one], [one, zero]]
            }
            Gate::Rx(theta) => {
                let c = Complex64::new((theta / 2.0).cos(), 0.0);
                let s = Complex64::new(0.0, -(theta / 2.0).sin());
                [[c, s], [s, c]]
            }
            Gate::Ry(theta) => {
                let c = Complex64::new((theta / 2.0).cos(), 0.0);
                let s = Complex64::new((theta / 2.0).sin(), 0.0);
                [[c, -s], [s, c]]
            }
            Gate::Rz(theta) => {
                let phase = Complex64::new(0.0, theta / 2.0);
                [[(-phase).exp(), zero], [zero, phase.exp()]]
            }
            Gate::Cnot { .. } => unreachable!("CNOT has no 2x2 matrix"),
        }
    }
}

/// Counts of measurement outcomes, keyed by bitstring. Qubit 0 is the last
/// character of the key, so a 3-qubit outcome reads `q2 q1 q0`.
pub type ShotCounts = BTreeMap<String, u64>;

/// Statevector of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// Ground state `|0...0⟩` of `num_qubits` qubits.
    pub fn new(num_qubits: usize) -> Result<Self, QcoreError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(QcoreError::QubitCountOutOfRange(num_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Single-qubit state `Rx(angle)|0⟩`, the working circuit of every
    /// probabilistic decision in the engine.
    pub fn prepared_rx(angle: f64) -> Result<Self, QcoreError> {
        let state = Self::new(1)?;
        state.apply_gate(&Gate::Rx(angle), &[0])
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Sum of `|amplitude|²`; 1 within [`NORM_TOLERANCE`] for valid states.
    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, index: usize) -> Result<(), QcoreError> {
        if index >= self.num_qubits {
            return Err(QcoreError::QubitIndexOutOfRange {
                index,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Apply `gate` and return the transformed state. Single-qubit gates
    /// take exactly one index in `targets`; `Cnot` takes none.
    pub fn apply_gate(&self, gate: &Gate, targets: &[usize]) -> Result<Self, QcoreError> {
        if let Some(angle) = gate.angle() {
            if !angle.is_finite() {
                return Err(QcoreError::NonFiniteAngle(angle));
            }
        }
        match *gate {
            Gate::Cnot { control, target } => {
                if !targets.is_empty() {
                    return Err(QcoreError::WrongTargetCount {
                        gate: gate.name(),
                        expected: 0,
                        got: targets.len(),
                    });
                }
                self.apply_cnot(control, target)
            }
            _ => {
                if targets.len() != 1 {
                    return Err(QcoreError::WrongTargetCount {
                        gate: gate.name(),
                        expected: 1,
                        got: targets.len(),
                    });
                }
                self.apply_single(gate, targets[0])
            }
        }
    }

    fn apply_single(&self, gate: &Gate, qubit: usize) -> Result<Self, QcoreError> {
        self.check_qubit(qubit)?;
        let m = gate.matrix();
        let mut amplitudes = self.amplitudes.clone();
        let stride = 1usize << qubit;
        for base in 0..self.amplitudes.len() {
            if base & stride != 0 {
                continue;
            }
            let i0 = base;
            let i1 = base | stride;
            let a0 = self.amplitudes[i0];
            let a1 = self.amplitudes[i1];
            amplitudes[i0] = m[0][0] * a0 + m[0][1] * a1;
            amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            amplitudes,
        })
    }

    fn apply_cnot(&self, control: usize, target: usize) -> Result<Self, QcoreError> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(QcoreError::ControlEqualsTarget(control));
        }
        let mut amplitudes = self.amplitudes.clone();
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                amplitudes.swap(i, i | tbit);
            }
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            amplitudes,
        })
    }

    /// Marginal probability of measuring 1 on `qubit`.
    pub fn probability_of_one(&self, qubit: usize) -> Result<f64, QcoreError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    fn sample_outcome(&self, rng: &mut RngStream) -> usize {
        let u = rng.next_f64() * self.norm_squared();
        let mut cumulative = 0.0;
        for (i, amp) in self.amplitudes.iter().enumerate() {
            cumulative += amp.norm_sqr();
            if u < cumulative {
                return i;
            }
        }
        self.amplitudes.len() - 1
    }

    fn outcome_bitstring(&self, outcome: usize) -> String {
        (0..self.num_qubits)
            .rev()
            .map(|q| if outcome & (1 << q) != 0 { '1' } else { '0' })
            .collect()
    }

    /// One Born-rule sample. The stored state is left untouched.
    pub fn measure_once(&self, rng: &mut RngStream) -> String {
        self.outcome_bitstring(self.sample_outcome(rng))
    }

    /// Convenience for the engine's ubiquitous single-qubit decisions:
    /// one sample of the given qubit as a bit.
    pub fn measure_qubit_once(&self, qubit: usize, rng: &mut RngStream) -> Result<bool, QcoreError> {
        self.check_qubit(qubit)?;
        let outcome = self.sample_outcome(rng);
        Ok(outcome & (1 << qubit) != 0)
    }

    /// Repeated Born-rule samples, aggregated into outcome counts.
    pub fn measure_shots(&self, shots: u64, rng: &mut RngStream) -> Result<ShotCounts, QcoreError> {
        if shots == 0 {
            return Err(QcoreError::ZeroShots);
        }
        let mut counts = ShotCounts::new();
        for _ in 0..shots {
            let outcome = self.sample_outcome(rng);
            *counts.entry(self.outcome_bitstring(outcome)).or_insert(0) += 1;
        }
        Ok(counts)
    }
}

/// Rx angle that prepares a target probability of measuring 1:
/// `arccos(1 - 2p)`, so `Rx(angle)|0⟩` has `P(1) = sin²(angle/2) = p`.
pub fn rx_angle_for_probability(p: f64) -> Result<f64, QcoreError> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(QcoreError::ProbabilityOutOfRange(p));
    }
    Ok((1.0 - 2.0 * p).clamp(-1.0, 1.0).acos())
}

/// One measurement of `Rx(angle_for(p))|0⟩`: a biased coin thrown by a qubit.
/// This is the single decision primitive behind rhythm cells, chord
/// membership, and coordinate perturbation.
pub fn measure_probability_bit(p: f64, rng: &mut RngStream) -> Result<bool, QcoreError> {
    let state = QuantumState::prepared_rx(rx_angle_for_probability(p)?)?;
    state.measure_qubit_once(0, rng)
}

/// `shots` measurements of `Rx(angle_for(p))|0⟩`, returned as the count of
/// 1-outcomes.
pub fn measure_probability_shots(
    p: f64,
    shots: u64,
    rng: &mut RngStream,
) -> Result<u64, QcoreError> {
    if shots == 0 {
        return Err(QcoreError::ZeroShots);
    }
    let state = QuantumState::prepared_rx(rx_angle_for_probability(p)?)?;
    let mut ones = 0;
    for _ in 0..shots {
        if state.measure_qubit_once(0, rng)? {
            ones += 1;
        }
    }
    Ok(ones)
}
