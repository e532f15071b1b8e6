//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured numbers. Run with:
//!
//! ```text
//! cargo test -p qmuse-cli --test acceptance -- --nocapture
//! ```

use std::process::Command;
use std::time::{Duration, Instant};

use statrs::distribution::{ChiSquared, ContinuousCDF};

use qmuse::harmony::{generate_cloud, Chord, ChordTag, CloudSpec, CrossfadeSchedule};
use qmuse::qcore::{rx_angle_for_probability, QuantumState, RngStream};
use qmuse::rhythm::{CellSpec, RhythmTemplate};
use qmuse::spatial::{pan_cube, pan_stereo, perturb, Position};
use qmuse::timbre::{particle_track, ring_modulate, spectral_centroid, ParticleNoiseParams};

fn finish(criterion: u32, name: &str, started: Instant, budget: Duration, detail: String) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < budget,
        "criterion {criterion} overran its {budget:?} budget: {elapsed:?}"
    );
    println!(
        "acceptance {criterion} PASS — {name}: {detail} ({:.2} s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_01_probability_angle_fidelity() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..=100u32 {
        let p = f64::from(i) / 100.0;
        let angle = rx_angle_for_probability(p).unwrap();
        let state = QuantumState::prepared_rx(angle).unwrap();
        let round_trip = state.probability_of_one(0).unwrap();
        worst = worst.max((round_trip - p).abs());
    }
    assert!(worst < 1e-12, "worst round-trip error {worst}");
    finish(
        1,
        "probability-to-angle round trip",
        started,
        Duration::from_secs(1),
        format!("101 probabilities, worst error {worst:.2e}"),
    );
}

#[test]
fn criterion_02_clave_combinatorics() {
    let started = Instant::now();
    let template = RhythmTemplate::son_clave();
    assert_eq!(template.fixed_count(), 19);
    assert_eq!(template.mutable_count(), 13);
    assert_eq!(template.realization_count().unwrap(), 8192);

    let fixed_ones = [0usize, 3, 6, 10, 12, 16, 22, 26];
    for (i, cell) in template.cells().iter().enumerate() {
        if fixed_ones.contains(&i) {
            assert_eq!(*cell, CellSpec::Fixed1, "cell {i}");
        }
    }
    for seed in 0..1000u64 {
        let realization = template
            .realize(0.5, &RngStream::new(seed, "acceptance-clave", 0))
            .unwrap();
        for (i, cell) in template.cells().iter().enumerate() {
            match cell {
                CellSpec::Fixed1 => assert!(realization.bits()[i], "seed {seed} cell {i}"),
                CellSpec::Fixed0 => assert!(!realization.bits()[i], "seed {seed} cell {i}"),
                CellSpec::Mutable => {}
            }
        }
    }
    finish(
        2,
        "clave combinatorics",
        started,
        Duration::from_secs(5),
        "19 fixed + 13 mutable cells, 8192 patterns, 1000 realizations clean".to_string(),
    );
}

#[test]
fn criterion_03_small_template_exhaustion() {
    let started = Instant::now();
    let template = RhythmTemplate::parse("1xxx0xxx").unwrap();
    assert_eq!(template.mutable_count(), 6);
    let mutable_positions: Vec<usize> = template
        .cells()
        .iter()
        .enumerate()
        .filter(|(_, cell)| matches!(cell, CellSpec::Mutable))
        .map(|(i, _)| i)
        .collect();

    let runs = 20_000u64;
    let mut counts = vec![0u64; 64];
    for run in 0..runs {
        let realization = template
            .realize(0.5, &RngStream::new(900, "acceptance-exhaustion", run))
            .unwrap();
        let mut pattern = 0usize;
        for (bit_index, &cell_index) in mutable_positions.iter().enumerate() {
            if realization.bits()[cell_index] {
                pattern |= 1 << bit_index;
            }
        }
        counts[pattern] += 1;
    }
    assert!(counts.iter().all(|&count| count > 0), "missed patterns");

    let expected = runs as f64 / 64.0;
    let chi_square: f64 = counts
        .iter()
        .map(|&count| (count as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new(63.0).unwrap().inverse_cdf(0.999);
    assert!(
        chi_square < critical,
        "chi-square {chi_square:.1} over critical {critical:.1}"
    );
    finish(
        3,
        "small-template exhaustion",
        started,
        Duration::from_secs(10),
        format!("all 64 patterns hit, chi-square {chi_square:.1} < {critical:.1}"),
    );
}

#[test]
fn criterion_04_crossfade_tracking() {
    let started = Instant::now();
    let schedule =
        CrossfadeSchedule::new(vec![(0.0, 0.0), (0.5, 0.0), (1.5, 1.0), (2.0, 1.0)]).unwrap();
    let spec = CloudSpec {
        chord_a: Chord::b_dim7(),
        chord_b: Chord::c_major(),
        schedule: schedule.clone(),
        duration_s: 2.0,
        note_rate_hz: 10_000.0,
        register_lo: 48,
        register_hi: 84,
        note_length_s: 0.01,
    };
    let notes = generate_cloud(&spec, &RngStream::new(4242, "acceptance-crossfade", 0)).unwrap();
    assert_eq!(notes.len(), 20_000);

    let bin_width = 0.1;
    let bins = 20usize;
    let mut b_count = vec![0u64; bins];
    let mut total = vec![0u64; bins];
    let mut p_sum = vec![0.0f64; bins];
    let mut p_variance_sum = vec![0.0f64; bins];
    for note in &notes {
        let bin = ((note.onset_s / bin_width) as usize).min(bins - 1);
        total[bin] += 1;
        if note.chord_tag == ChordTag::B {
            b_count[bin] += 1;
        }
        let p = schedule.probability_at(note.onset_s);
        p_sum[bin] += p;
        p_variance_sum[bin] += p * (1.0 - p);
    }
    for bin in 0..bins {
        let n = total[bin] as f64;
        let fraction = b_count[bin] as f64 / n;
        let expected = p_sum[bin] / n;
        let sigma = (p_variance_sum[bin]).sqrt() / n;
        assert!(
            (fraction - expected).abs() <= 3.0 * sigma,
            "bin {bin}: fraction {fraction:.4}, expected {expected:.4}, 3σ {:.4}",
            3.0 * sigma
        );
        let bin_start = bin as f64 * bin_width;
        let bin_end = bin_start + bin_width;
        if bin_end <= 0.5 {
            assert_eq!(b_count[bin], 0, "B notes before the crossfade (bin {bin})");
        }
        if bin_start >= 1.5 {
            assert_eq!(b_count[bin], total[bin], "A notes after the crossfade (bin {bin})");
        }
    }
    finish(
        4,
        "crossfade tracking",
        started,
        Duration::from_secs(10),
        "20 bins within 3σ, endpoints pure".to_string(),
    );
}

#[test]
fn criterion_05_pan_power() {
    let started = Instant::now();
    let mut rng = RngStream::new(5, "acceptance-pan", 0);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let position = Position::new(rng.next_f64(), rng.next_f64(), rng.next_f64()).unwrap();
        let stereo = pan_stereo(position.x()).unwrap();
        worst = worst.max((stereo.left.powi(2) + stereo.right.powi(2) - 1.0).abs());
        let cube: f64 = pan_cube(&position).gains.iter().map(|g| g * g).sum();
        worst = worst.max((cube - 1.0).abs());
    }
    assert!(worst < 1e-9, "worst power deviation {worst}");
    finish(
        5,
        "constant pan power",
        started,
        Duration::from_secs(1),
        format!("10000 positions, worst |Σg²−1| = {worst:.2e}"),
    );
}

#[test]
fn criterion_06_measurement_error_statistics() {
    let started = Instant::now();
    let root = RngStream::new(606, "acceptance-perturb", 0);
    let center = Position::center();

    let sample_x = |shots: u64, repeats: u64, label: &str| -> Vec<f64> {
        let family = root.child(label, shots);
        (0..repeats)
            .map(|repeat| {
                perturb(&center, shots, &family.child("repeat", repeat))
                    .unwrap()
                    .x()
            })
            .collect()
    };
    let stats = |values: &[f64]| -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, variance.sqrt())
    };

    let values = sample_x(100, 10_000, "main");
    let (mean, std) = stats(&values);
    assert!(
        (0.045..=0.055).contains(&std),
        "std {std:.4} outside [0.045, 0.055]"
    );
    assert!(
        (0.4985..=0.5015).contains(&mean),
        "mean {mean:.4} outside [0.4985, 0.5015]"
    );

    let ladder: Vec<f64> = [4u64, 16, 64, 256]
        .iter()
        .map(|&shots| stats(&sample_x(shots, 4000, "ladder")).1)
        .collect();
    for pair in ladder.windows(2) {
        assert!(
            pair[0] > pair[1],
            "dispersion not strictly decreasing: {ladder:?}"
        );
    }
    finish(
        6,
        "measurement-error statistics",
        started,
        Duration::from_secs(10),
        format!("std {std:.4}, mean {mean:.4}, ladder {ladder:?}"),
    );
}

#[test]
fn criterion_07_timbre_spectra() {
    let started = Instant::now();
    let params = ParticleNoiseParams::new(50.0, 0.9).unwrap();

    let mut rng = RngStream::new(7, "acceptance-timbre", 0);
    let track = particle_track(2.0, &params, &mut rng, 48_000).unwrap();
    let modulated = ring_modulate(&track, 1000.0, 0.0).unwrap();
    let carrier_centroid = spectral_centroid(&modulated).unwrap();
    assert!(
        (850.0..=1150.0).contains(&carrier_centroid),
        "modulated centroid {carrier_centroid:.1}"
    );

    let mut rng = RngStream::new(7, "acceptance-timbre", 1);
    let long_track = particle_track(10.0, &params, &mut rng, 48_000).unwrap();
    let mean = long_track.samples().iter().sum::<f64>() / long_track.len() as f64;
    assert!(mean.abs() < 0.05, "mean {mean:.4}");
    let low_centroid = spectral_centroid(&long_track).unwrap();
    assert!(low_centroid < 500.0, "unmodulated centroid {low_centroid:.1}");
    finish(
        7,
        "timbre spectra",
        started,
        Duration::from_secs(10),
        format!(
            "modulated centroid {carrier_centroid:.0} Hz, raw centroid {low_centroid:.0} Hz, mean {mean:.4}"
        ),
    );
}

#[test]
fn criterion_08_end_to_end_determinism() {
    let started = Instant::now();
    let binary = env!("CARGO_BIN_EXE_qmuse");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/demo.toml");
    let work = tempfile::tempdir().unwrap();

    let compose = |out_dir: &str, threads: Option<usize>| {
        let mut command = Command::new(binary);
        command
            .arg("compose")
            .arg(config)
            .arg("--seed")
            .arg("42")
            .arg("--out-dir")
            .arg(work.path().join(out_dir));
        if let Some(threads) = threads {
            command.arg("--threads").arg(threads.to_string());
        }
        let status = command.status().unwrap();
        assert!(status.success(), "compose into {out_dir} failed");
        (
            std::fs::read(work.path().join(out_dir).join("demo.wav")).unwrap(),
            std::fs::read(work.path().join(out_dir).join("demo.events.json")).unwrap(),
        )
    };

    let (wav_a, json_a) = compose("a", None);
    let (wav_b, json_b) = compose("b", None);
    let (wav_c, json_c) = compose("c", Some(1));
    let (wav_d, json_d) = compose("d", Some(8));
    assert_eq!(wav_a, wav_b, "rerun changed the WAV");
    assert_eq!(json_a, json_b, "rerun changed the JSON");
    assert_eq!(wav_a, wav_c, "thread count 1 changed the WAV");
    assert_eq!(wav_a, wav_d, "thread count 8 changed the WAV");
    assert_eq!(json_a, json_c, "thread count 1 changed the JSON");
    assert_eq!(json_a, json_d, "thread count 8 changed the JSON");
    finish(
        8,
        "end-to-end determinism",
        started,
        Duration::from_secs(60),
        format!("{} WAV bytes identical across 4 renders", wav_a.len()),
    );
}

#[test]
fn criterion_09_wav_conformance() {
    let started = Instant::now();
    use qmuse::render::{write_wav, BitDepth, MultiBuffer};

    // 1 s stereo at 48 kHz: deterministic two-tone content.
    let left: Vec<f64> = (0..48_000)
        .map(|i| 0.6 * (std::f64::consts::TAU * 440.0 * i as f64 / 48_000.0).sin())
        .collect();
    let right: Vec<f64> = (0..48_000)
        .map(|i| 0.6 * (std::f64::consts::TAU * 880.0 * i as f64 / 48_000.0).sin())
        .collect();
    let buffer = MultiBuffer::from_channels(vec![left.clone(), right.clone()], 48_000);

    let work = tempfile::tempdir().unwrap();
    let path = work.path().join("conformance.wav");
    write_wav(&buffer, &path, BitDepth::Sixteen).unwrap();
    let bytes = std::fs::read(&path).unwrap();

    // Independent header parse.
    let le_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let le_u16 = |at: usize| u16::from_le_bytes(bytes[at..at + 2].try_into().unwrap());
    assert_eq!(&bytes[0..4], b"RIFF");
    assert_eq!(le_u32(4) as usize, bytes.len() - 8);
    assert_eq!(&bytes[8..12], b"WAVE");
    assert_eq!(&bytes[12..16], b"fmt ");
    assert_eq!(le_u32(16), 16);
    assert_eq!(le_u16(20), 1, "PCM format tag");
    assert_eq!(le_u16(22), 2, "channel count");
    assert_eq!(le_u32(24), 48_000, "sample rate");
    assert_eq!(le_u32(28), 192_000, "byte rate");
    assert_eq!(le_u16(32), 4, "block align");
    assert_eq!(le_u16(34), 16, "bits per sample");
    assert_eq!(&bytes[36..40], b"data");
    assert_eq!(le_u32(40), 192_000, "data chunk size");
    assert_eq!(bytes.len(), 44 + 192_000);

    // Read-back equals independent quantization (symmetric 32767 scale,
    // round half away from zero).
    let quantize = |x: f64| (x.clamp(-1.0, 1.0) * 32767.0).round() as i16;
    for frame in 0..48_000 {
        let at = 44 + frame * 4;
        let decoded_left = i16::from_le_bytes(bytes[at..at + 2].try_into().unwrap());
        let decoded_right = i16::from_le_bytes(bytes[at + 2..at + 4].try_into().unwrap());
        assert_eq!(decoded_left, quantize(left[frame]), "frame {frame} left");
        assert_eq!(decoded_right, quantize(right[frame]), "frame {frame} right");
    }
    finish(
        9,
        "WAV conformance",
        started,
        Duration::from_secs(10),
        "header exact, 192000-byte data chunk, read-back equals quantized".to_string(),
    );
}
