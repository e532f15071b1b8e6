//! Constant-intensity panning and shot-noise position perturbation.
//!
//! Positions live in the unit cube (x left→right, y back→front, z
//! down→up). Stereo panning uses only x; cube panning drives eight
//! speakers at the corners. Perturbation re-reads a coordinate through a
//! finite number of qubit measurements: the empirical frequency of 1s is
//! the new coordinate, so fewer shots mean more dispersion and the result
//! is always in [0, 1].

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::qcore::{measure_probability_shots, QcoreError, RngStream};

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("coordinate {name} = {value} outside [0, 1]")]
    CoordinateOutOfRange { name: &'static str, value: f64 },
    #[error("event count must be at least 1")]
    ZeroEvents,
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("shots profile has {profile_len} entries for {events} events (need 1 or {events})")]
    ProfileLengthMismatch { profile_len: usize, events: usize },
    #[error("edge epsilon {0} outside [0, 0.5)")]
    BadEpsilon(f64),
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}

/// A virtual location in the unit cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    x: f64,
    y: f64,
    z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, SpatialError> {
        for (name, value) in [("x", x), ("y", y), ("z", z)] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(SpatialError::CoordinateOutOfRange { name, value });
            }
        }
        Ok(Self { x, y, z })
    }

    /// Center of the cube.
    pub fn center() -> Self {
        Self {
            x: 0.5,
            y: 0.5,
            z: 0.5,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

/// Constant-power stereo gains: `left² + right² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoGains {
    pub left: f64,
    pub right: f64,
}

/// Constant-power gains for eight speakers at the cube corners. Corner `i`
/// sits at `(i & 1, (i >> 1) & 1, (i >> 2) & 1)` in (x, y, z) bits, so
/// corner 0 is left-back-down and corner 7 right-front-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeGains {
    pub gains: [f64; 8],
}

// sin(c·π/2) evaluated as cos((1−c)·π/2): same value mathematically, but
// symmetric coordinates then yield bit-equal gains (a centered source is
// bit-identical on both speakers).
fn axis_gains(coordinate: f64) -> [f64; 2] {
    [
        (coordinate * FRAC_PI_2).cos(),
        ((1.0 - coordinate) * FRAC_PI_2).cos(),
    ]
}

/// Quarter-cycle intensity pan: `left = cos(x·π/2)`, `right = sin(x·π/2)`.
pub fn pan_stereo(x: f64) -> Result<StereoGains, SpatialError> {
    if !x.is_finite() || !(0.0..=1.0).contains(&x) {
        return Err(SpatialError::CoordinateOutOfRange { name: "x", value: x });
    }
    let [left, right] = axis_gains(x);
    Ok(StereoGains { left, right })
}

/// Three nested quarter-cycle pans: each corner's gain is the product of
/// its axis gains, so the squared gains sum to 1 exactly by the identity
/// `(cos² + sin²)³ = 1`.
pub fn pan_cube(position: &Position) -> CubeGains {
    let axis = axis_gains;
    let gx = axis(position.x);
    let gy = axis(position.y);
    let gz = axis(position.z);
    let mut gains = [0.0; 8];
    for (corner, gain) in gains.iter_mut().enumerate() {
        let xb = corner & 1;
        let yb = (corner >> 1) & 1;
        let zb = (corner >> 2) & 1;
        *gain = gx[xb] * gy[yb] * gz[zb];
    }
    CubeGains { gains }
}

/// A straight soundpath implied by evenly spaced stationary events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    pub start: Position,
    pub end: Position,
    pub event_count: usize,
}

/// Evenly spaced positions from start to end, endpoints inclusive.
/// A single event sits at the start.
pub fn linear_path(spec: &PathSpec) -> Result<Vec<Position>, SpatialError> {
    if spec.event_count == 0 {
        return Err(SpatialError::ZeroEvents);
    }
    if spec.event_count == 1 {
        return Ok(vec![spec.start]);
    }
    let n = spec.event_count;
    let mut positions = Vec::with_capacity(n);
    for k in 0..n {
        let frac = k as f64 / (n - 1) as f64;
        let lerp = |a: f64, b: f64| a + (b - a) * frac;
        positions.push(Position {
            x: lerp(spec.start.x, spec.end.x),
            y: lerp(spec.start.y, spec.end.y),
            z: lerp(spec.start.z, spec.end.z),
        });
    }
    Ok(positions)
}

/// Dispersion control for perturbation: per-event shot counts (one entry
/// applies to every event) and an optional epsilon pulling coordinates off
/// the dispersion-free edges 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbParams {
    shots: Vec<u64>,
    edge_epsilon: Option<f64>,
}

impl PerturbParams {
    /// Same shot count for every event.
    pub fn uniform(shots: u64) -> Result<Self, SpatialError> {
        Self::profile(vec![shots])
    }

    /// Per-event shot counts; length must be 1 or match the event count at
    /// use time.
    pub fn profile(shots: Vec<u64>) -> Result<Self, SpatialError> {
        if shots.is_empty() || shots.contains(&0) {
            return Err(SpatialError::ZeroShots);
        }
        Ok(Self {
            shots,
            edge_epsilon: None,
        })
    }

    /// Clamp coordinates into `[epsilon, 1 - epsilon]` before encoding, so
    /// events at the exact edges still jitter. Off by default.
    pub fn with_edge_epsilon(mut self, epsilon: f64) -> Result<Self, SpatialError> {
        if !epsilon.is_finite() || !(0.0..0.5).contains(&epsilon) {
            return Err(SpatialError::BadEpsilon(epsilon));
        }
        self.edge_epsilon = Some(epsilon);
        Ok(self)
    }

    pub fn shots(&self) -> &[u64] {
        &self.shots
    }

    fn shots_for_event(&self, event: usize) -> u64 {
        if self.shots.len() == 1 {
            self.shots[0]
        } else {
            self.shots[event]
        }
    }
}

/// Perturb one position: each coordinate `p` becomes the fraction of 1s in
/// `shots` measurements of `Rx(angle_for(p))|0⟩`. Values are quantized to
/// multiples of `1/shots` and always stay in [0, 1]. Coordinates at exactly
/// 0 or 1 are fixed points of the measurement and come back unchanged.
pub fn perturb(position: &Position, shots: u64, rng: &RngStream) -> Result<Position, SpatialError> {
    perturb_with_epsilon(position, shots, None, rng)
}

fn perturb_with_epsilon(
    position: &Position,
    shots: u64,
    edge_epsilon: Option<f64>,
    rng: &RngStream,
) -> Result<Position, SpatialError> {
    if shots == 0 {
        return Err(SpatialError::ZeroShots);
    }
    let encode = |p: f64| match edge_epsilon {
        Some(eps) => p.clamp(eps, 1.0 - eps),
        None => p,
    };
    let coordinate = |axis: u64, p: f64| -> Result<f64, SpatialError> {
        let mut axis_rng = rng.child("axis", axis);
        let ones = measure_probability_shots(encode(p), shots, &mut axis_rng)?;
        Ok(ones as f64 / shots as f64)
    };
    Ok(Position {
        x: coordinate(0, position.x)?,
        y: coordinate(1, position.y)?,
        z: coordinate(2, position.z)?,
    })
}

/// Perturb a whole path with per-event shot counts. Each event draws from
/// its own child stream, so the output is independent of evaluation order.
pub fn perturb_path(
    positions: &[Position],
    params: &PerturbParams,
    rng: &RngStream,
) -> Result<Vec<Position>, SpatialError> {
    if params.shots.len() != 1 && params.shots.len() != positions.len() {
        return Err(SpatialError::ProfileLengthMismatch {
            profile_len: params.shots.len(),
            events: positions.len(),
        });
    }
    positions
        .iter()
        .enumerate()
        .map(|(event, position)| {
            let event_rng = rng.child("event", event as u64);
            perturb_with_epsilon(
                position,
                params.shots_for_event(event),
                params.edge_epsilon,
                &event_rng,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn position_bounds() {
        assert!(Position::new(0.0, 0.5, 1.0).is_ok());
        assert!(matches!(
            Position::new(-0.1, 0.5, 0.5).unwrap_err(),
            SpatialError::CoordinateOutOfRange { name: "x", .. }
        ));
        assert!(Position::new(0.5, 1.1, 0.5).is_err());
        assert!(Position::new(0.5, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn stereo_pan_endpoints_and_center() {
        let left = pan_stereo(0.0).unwrap();
        assert_abs_diff_eq!(left.left, 1.0);
        assert_abs_diff_eq!(left.right, 0.0);

        let center = pan_stereo(0.5).unwrap();
        assert_abs_diff_eq!(center.left, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(center.right, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        // A centered source gets bit-equal gains.
        assert_eq!(center.left.to_bits(), center.right.to_bits());

        let right = pan_stereo(1.0).unwrap();
        assert_abs_diff_eq!(right.left, 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(right.right, 1.0);
    }

    #[test]
    fn stereo_pan_rejects_out_of_range() {
        assert!(pan_stereo(-0.01).is_err());
        assert!(pan_stereo(1.01).is_err());
    }

    #[test]
    fn cube_corners_are_one_hot() {
        for corner in 0..8usize {
            let position = Position::new(
                (corner & 1) as f64,
                ((corner >> 1) & 1) as f64,
                ((corner >> 2) & 1) as f64,
            )
            .unwrap();
            let gains = pan_cube(&position).gains;
            for (i, &g) in gains.iter().enumerate() {
                if i == corner {
                    assert_abs_diff_eq!(g, 1.0, epsilon = 1e-12);
                } else {
                    assert_abs_diff_eq!(g, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn cube_center_is_uniform() {
        let gains = pan_cube(&Position::center()).gains;
        let expected = std::f64::consts::FRAC_1_SQRT_2.powi(3);
        for &g in &gains {
            assert_abs_diff_eq!(g, expected, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(expected, 0.353553, epsilon = 1e-6);
    }

    #[test]
    fn pan_power_is_constant() {
        let mut rng = RngStream::new(0, "pan", 0);
        for _ in 0..10_000 {
            let position = Position::new(rng.next_f64(), rng.next_f64(), rng.next_f64()).unwrap();
            let stereo = pan_stereo(position.x()).unwrap();
            assert!((stereo.left.powi(2) + stereo.right.powi(2) - 1.0).abs() < 1e-9);
            let cube = pan_cube(&position);
            let power: f64 = cube.gains.iter().map(|g| g * g).sum();
            assert!((power - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_path_spacing() {
        let spec = PathSpec {
            start: Position::new(0.0, 0.5, 0.5).unwrap(),
            end: Position::new(1.0, 0.5, 0.5).unwrap(),
            event_count: 32,
        };
        let path = linear_path(&spec).unwrap();
        assert_eq!(path.len(), 32);
        for (k, position) in path.iter().enumerate() {
            assert_abs_diff_eq!(position.x(), k as f64 / 31.0, epsilon = 1e-12);
            assert_abs_diff_eq!(position.y(), 0.5);
        }
    }

    #[test]
    fn linear_path_degenerate_counts() {
        let start = Position::new(0.2, 0.3, 0.4).unwrap();
        let end = Position::new(0.8, 0.7, 0.6).unwrap();
        let one = linear_path(&PathSpec {
            start,
            end,
            event_count: 1,
        })
        .unwrap();
        assert_eq!(one, vec![start]);
        let two = linear_path(&PathSpec {
            start,
            end,
            event_count: 2,
        })
        .unwrap();
        assert_eq!(two, vec![start, end]);
        assert!(matches!(
            linear_path(&PathSpec {
                start,
                end,
                event_count: 0
            })
            .unwrap_err(),
            SpatialError::ZeroEvents
        ));
    }

    #[test]
    fn perturb_fixes_degenerate_coordinates() {
        let rng = RngStream::new(0, "perturb", 0);
        let position = Position::new(0.0, 1.0, 0.0).unwrap();
        for shots in [1, 10, 100] {
            let out = perturb(&position, shots, &rng).unwrap();
            assert_eq!(out, position);
        }
    }

    #[test]
    fn perturb_statistics_match_shot_noise() {
        // std of Binomial frequency at p = 0.5, N = 100: 0.05.
        let root = RngStream::new(61, "perturb", 0);
        let position = Position::center();
        let mut values = Vec::with_capacity(10_000);
        for repeat in 0..10_000u64 {
            let repeat_rng = root.child("repeat", repeat);
            values.push(perturb(&position, 100, &repeat_rng).unwrap().x());
        }
        let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
        let variance: f64 =
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
        let std = variance.sqrt();
        assert!((0.045..=0.055).contains(&std), "std {std}");
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn many_shots_pin_the_coordinate() {
        let rng = RngStream::new(62, "perturb", 0);
        let out = perturb(&Position::center(), 1_000_000, &rng).unwrap();
        assert!((out.x() - 0.5).abs() < 0.002, "x {}", out.x());
        assert!((out.y() - 0.5).abs() < 0.002);
        assert!((out.z() - 0.5).abs() < 0.002);
    }

    #[test]
    fn perturbed_values_are_quantized_frequencies() {
        let rng = RngStream::new(63, "perturb", 0);
        let out = perturb(&Position::center(), 8, &rng).unwrap();
        for value in [out.x(), out.y(), out.z()] {
            assert!((0.0..=1.0).contains(&value));
            let eighths = value * 8.0;
            assert_abs_diff_eq!(eighths, eighths.round(), epsilon = 1e-12);
        }
    }

    #[test]
    fn perturb_path_profile_validation() {
        let path = linear_path(&PathSpec {
            start: Position::new(0.0, 0.5, 0.5).unwrap(),
            end: Position::new(1.0, 0.5, 0.5).unwrap(),
            event_count: 4,
        })
        .unwrap();
        let params = PerturbParams::profile(vec![4, 4, 4]).unwrap();
        assert_eq!(
            perturb_path(&path, &params, &RngStream::new(0, "path", 0)).unwrap_err(),
            SpatialError::ProfileLengthMismatch {
                profile_len: 3,
                events: 4
            }
        );
        assert!(PerturbParams::profile(vec![]).is_err());
        assert!(PerturbParams::profile(vec![4, 0]).is_err());
    }

    #[test]
    fn high_shot_path_tracks_input() {
        let path = linear_path(&PathSpec {
            start: Position::new(0.0, 0.5, 0.5).unwrap(),
            end: Position::new(1.0, 0.5, 0.5).unwrap(),
            event_count: 8,
        })
        .unwrap();
        let params = PerturbParams::uniform(1_000_000).unwrap();
        let out = perturb_path(&path, &params, &RngStream::new(64, "path", 0)).unwrap();
        for (a, b) in path.iter().zip(&out) {
            assert!((a.x() - b.x()).abs() < 0.002);
            assert!((a.y() - b.y()).abs() < 0.002);
            assert!((a.z() - b.z()).abs() < 0.002);
        }
    }

    #[test]
    fn fewer_shots_disperse_more() {
        let path = vec![Position::center(); 64];
        let rng = RngStream::new(65, "path", 0);
        let mean_abs_dx = |shots: u64| {
            let params = PerturbParams::uniform(shots).unwrap();
            let out = perturb_path(&path, &params, &rng).unwrap();
            out.iter().map(|p| (p.x() - 0.5).abs()).sum::<f64>() / out.len() as f64
        };
        assert!(mean_abs_dx(4) > mean_abs_dx(4096));
    }

    #[test]
    fn dispersion_decreases_through_shot_ladder() {
        let root = RngStream::new(66, "ladder", 0);
        let position = Position::center();
        let std_for = |shots: u64| {
            let mut values = Vec::with_capacity(2000);
            for repeat in 0..2000u64 {
                let repeat_rng = root.child(&format!("s{shots}"), repeat);
                values.push(perturb(&position, shots, &repeat_rng).unwrap().x());
            }
            let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64)
                .sqrt()
        };
        let stds: Vec<f64> = [4, 16, 64, 256].iter().map(|&s| std_for(s)).collect();
        for pair in stds.windows(2) {
            assert!(pair[0] > pair[1], "stds not decreasing: {stds:?}");
        }
    }

    #[test]
    fn edge_epsilon_unfreezes_corners() {
        let params = PerturbParams::uniform(16)
            .unwrap()
            .with_edge_epsilon(0.01)
            .unwrap();
        let path = vec![Position::new(0.0, 0.0, 0.0).unwrap(); 32];
        let out = perturb_path(&path, &params, &RngStream::new(67, "edge", 0)).unwrap();
        assert!(out.iter().any(|p| p.x() > 0.0 || p.y() > 0.0 || p.z() > 0.0));
        assert!(PerturbParams::uniform(16).unwrap().with_edge_epsilon(0.5).is_err());
    }
}
