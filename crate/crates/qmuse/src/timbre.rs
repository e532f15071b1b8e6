//! Noise-based note synthesis from simulated particle tracking.
//!
//! One spatial dimension of a randomly colliding particle, tracked over
//! time, is a piecewise-linear signal: lowpass noise centered on 0 Hz.
//! Multiplying it by a sinusoid (ring modulation) shifts that band to the
//! carrier frequency, giving a whistling noise tone; an envelope then makes
//! the note sustained or percussive.

use std::f64::consts::TAU;

use rustfft::{num_complex::Complex as FftComplex, FftPlanner};
use thiserror::Error;

use crate::qcore::RngStream;

/// Default engine sample rate.
pub const DEFAULT_SAMPLE_RATE: u32 = 48_000;

#[derive(Debug, Error, PartialEq)]
pub enum TimbreError {
    #[error("collision rate must be in [0.1, 10000] Hz, got {0}")]
    CollisionRateOutOfRange(f64),
    #[error("amplitude must be in (0, 1], got {0}")]
    AmplitudeOutOfRange(f64),
    #[error("duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("carrier {carrier_hz} Hz is at or above Nyquist ({nyquist_hz} Hz)")]
    CarrierAboveNyquist { carrier_hz: f64, nyquist_hz: f64 },
    #[error("envelope needs {needed} samples but the buffer has {available}")]
    EnvelopeTooLong { needed: usize, available: usize },
    #[error("envelope durations must be finite and nonnegative")]
    InvalidEnvelope,
    #[error("spectral centroid needs a nonempty, not all-zero buffer")]
    EmptySpectrum,
    #[error("midi note {0} outside 0..=127")]
    MidiOutOfRange(i32),
}

/// Parameters of the particle-tracking noise source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleNoiseParams {
    collision_rate_hz: f64,
    amplitude: f64,
}

impl ParticleNoiseParams {
    pub fn new(collision_rate_hz: f64, amplitude: f64) -> Result<Self, TimbreError> {
        if !collision_rate_hz.is_finite() || !(0.1..=10_000.0).contains(&collision_rate_hz) {
            return Err(TimbreError::CollisionRateOutOfRange(collision_rate_hz));
        }
        if !amplitude.is_finite() || amplitude <= 0.0 || amplitude > 1.0 {
            return Err(TimbreError::AmplitudeOutOfRange(amplitude));
        }
        Ok(Self {
            collision_rate_hz,
            amplitude,
        })
    }

    pub fn collision_rate_hz(&self) -> f64 {
        self.collision_rate_hz
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
}

/// Note shaping: a brief raised-cosine window for percussive notes, or
/// linear attack/release ramps around a unity sustain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    Percussive { window_ms: f64 },
    Sustained { attack_ms: f64, release_ms: f64 },
}

/// Everything needed to synthesize one note.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoteSpec {
    pub freq_hz: f64,
    pub duration_s: f64,
    pub envelope: Envelope,
    pub noise: ParticleNoiseParams,
}

/// Mono sample vector at a fixed rate. Synthesis stages keep samples in
/// `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    sample_rate_hz: u32,
    samples: Vec<f64>,
}

impl SampleBuffer {
    pub fn new(sample_rate_hz: u32, samples: Vec<f64>) -> Self {
        Self {
            sample_rate_hz,
            samples,
        }
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Track one dimension of randomly changing motion: breakpoint times from a
/// Poisson process at `collision_rate_hz`, breakpoint values uniform in
/// `[-amplitude, amplitude]`, linear interpolation in between.
pub fn particle_track(
    duration_s: f64,
    params: &ParticleNoiseParams,
    rng: &mut RngStream,
    sample_rate_hz: u32,
) -> Result<SampleBuffer, TimbreError> {
    if !duration_s.is_finite() || duration_s <= 0.0 {
        return Err(TimbreError::InvalidDuration(duration_s));
    }
    let n = (duration_s * f64::from(sample_rate_hz)).round() as usize;
    let n = n.max(1);

    let (times, values) = collision_breakpoints(duration_s, params, rng);

    let mut samples = Vec::with_capacity(n);
    let mut segment = 0;
    for i in 0..n {
        let t = i as f64 / f64::from(sample_rate_hz);
        while times[segment + 1] < t {
            segment += 1;
        }
        let t0 = times[segment];
        let t1 = times[segment + 1];
        let frac = (t - t0) / (t1 - t0);
        samples.push(values[segment] + (values[segment + 1] - values[segment]) * frac);
    }
    Ok(SampleBuffer::new(sample_rate_hz, samples))
}

fn uniform_value(amplitude: f64, rng: &mut RngStream) -> f64 {
    (rng.next_f64() * 2.0 - 1.0) * amplitude
}

/// Breakpoints covering [0, duration] with one point past the end, so every
/// sample time sits between two of them. Inter-arrival times are
/// exponential (a Poisson process at the collision rate).
fn collision_breakpoints(
    duration_s: f64,
    params: &ParticleNoiseParams,
    rng: &mut RngStream,
) -> (Vec<f64>, Vec<f64>) {
    let mut times = vec![0.0];
    let mut values = vec![uniform_value(params.amplitude, rng)];
    while *times.last().unwrap() <= duration_s {
        let u = rng.next_f64();
        let dt = -(1.0 - u).ln() / params.collision_rate_hz;
        times.push(times.last().unwrap() + dt);
        values.push(uniform_value(params.amplitude, rng));
    }
    (times, values)
}

/// Multiply by a sinusoid, shifting the signal's band to `carrier_hz`.
pub fn ring_modulate(
    buffer: &SampleBuffer,
    carrier_hz: f64,
    phase_rad: f64,
) -> Result<SampleBuffer, TimbreError> {
    let nyquist_hz = f64::from(buffer.sample_rate_hz) / 2.0;
    if !carrier_hz.is_finite() || carrier_hz >= nyquist_hz {
        return Err(TimbreError::CarrierAboveNyquist {
            carrier_hz,
            nyquist_hz,
        });
    }
    let step = TAU * carrier_hz / f64::from(buffer.sample_rate_hz);
    let samples = buffer
        .samples
        .iter()
        .enumerate()
        .map(|(i, &s)| s * (step * i as f64 + phase_rad).sin())
        .collect();
    Ok(SampleBuffer::new(buffer.sample_rate_hz, samples))
}

/// Shape a buffer with an envelope. Percussive zeroes everything outside a
/// raised-cosine window at the start; Sustained ramps linearly in and out.
pub fn apply_envelope(buffer: &SampleBuffer, envelope: &Envelope) -> Result<SampleBuffer, TimbreError> {
    let len = buffer.len();
    let rate = f64::from(buffer.sample_rate_hz);
    let ms_to_samples = |ms: f64| (ms / 1000.0 * rate).round() as usize;
    let mut samples = buffer.samples.clone();
    match *envelope {
        Envelope::Percussive { window_ms } => {
            if !window_ms.is_finite() || window_ms <= 0.0 {
                return Err(TimbreError::InvalidEnvelope);
            }
            let window_len = ms_to_samples(window_ms).max(1);
            if window_len > len {
                return Err(TimbreError::EnvelopeTooLong {
                    needed: window_len,
                    available: len,
                });
            }
            let denom = (window_len - 1).max(1) as f64;
            for (i, sample) in samples.iter_mut().enumerate() {
                if i < window_len {
                    let w = 0.5 * (1.0 - (TAU * i as f64 / denom).cos());
                    *sample *= w;
                } else {
                    *sample = 0.0;
                }
            }
        }
        Envelope::Sustained {
            attack_ms,
            release_ms,
        } => {
            if !attack_ms.is_finite()
                || !release_ms.is_finite()
                || attack_ms < 0.0
                || release_ms < 0.0
            {
                return Err(TimbreError::InvalidEnvelope);
            }
            let attack = ms_to_samples(attack_ms);
            let release = ms_to_samples(release_ms);
            if attack + release > len {
                return Err(TimbreError::EnvelopeTooLong {
                    needed: attack + release,
                    available: len,
                });
            }
            for i in 0..attack {
                samples[i] *= i as f64 / attack as f64;
            }
            for k in 0..release {
                let i = len - release + k;
                samples[i] *= (release - 1 - k) as f64 / release as f64;
            }
        }
    }
    Ok(SampleBuffer::new(buffer.sample_rate_hz, samples))
}

/// Full note pipeline: particle track → ring modulation at the note's
/// frequency → envelope. Deterministic for a given stream.
pub fn synth_note(
    spec: &NoteSpec,
    rng: &mut RngStream,
    sample_rate_hz: u32,
) -> Result<SampleBuffer, TimbreError> {
    let track = particle_track(spec.duration_s, &spec.noise, rng, sample_rate_hz)?;
    let shifted = ring_modulate(&track, spec.freq_hz, 0.0)?;
    apply_envelope(&shifted, &spec.envelope)
}

const CENTROID_FRAME: usize = 4096;

/// Magnitude-weighted mean frequency over `[0, Nyquist]`.
///
/// The magnitude spectrum is estimated Welch-style: Hann-windowed frames
/// of 4096 samples at half-frame hop, averaged. A single full-buffer DFT
/// would make the reading depend on how the segment boundaries happen to
/// fall (rectangular-window leakage swamps the tail for noise signals);
/// the averaged windowed estimate is stable to within a few bins.
pub fn spectral_centroid(buffer: &SampleBuffer) -> Result<f64, TimbreError> {
    if buffer.is_empty() || buffer.samples.iter().all(|&s| s == 0.0) {
        return Err(TimbreError::EmptySpectrum);
    }
    let n = buffer.len().min(CENTROID_FRAME);
    let window: Vec<f64> = if n <= 2 {
        vec![1.0; n]
    } else {
        (0..n)
            .map(|i| 0.5 * (1.0 - (TAU * i as f64 / (n - 1) as f64).cos()))
            .collect()
    };
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut averaged = vec![0.0f64; n / 2 + 1];
    let mut start = 0;
    while start + n <= buffer.len() {
        let mut frame: Vec<FftComplex<f64>> = (0..n)
            .map(|i| FftComplex::new(buffer.samples[start + i] * window[i], 0.0))
            .collect();
        fft.process(&mut frame);
        for (k, value) in frame.iter().enumerate().take(n / 2 + 1) {
            averaged[k] += value.norm();
        }
        start += (n / 2).max(1);
    }

    let bin_hz = f64::from(buffer.sample_rate_hz) / n as f64;
    let mut weighted = 0.0;
    let mut total = 0.0;
    for (k, &magnitude) in averaged.iter().enumerate() {
        weighted += k as f64 * bin_hz * magnitude;
        total += magnitude;
    }
    if total == 0.0 {
        return Err(TimbreError::EmptySpectrum);
    }
    Ok(weighted / total)
}

/// Standard equal-temperament tuning: `440 · 2^((m − 69) / 12)`.
pub fn midi_to_hz(midi_note: i32) -> Result<f64, TimbreError> {
    if !(0..=127).contains(&midi_note) {
        return Err(TimbreError::MidiOutOfRange(midi_note));
    }
    Ok(440.0 * 2f64.powf((f64::from(midi_note) - 69.0) / 12.0))
}
