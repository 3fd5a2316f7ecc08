//! Synthetic ground truth and the two corruption regimes the fusion works
//! with: absolute poses that are noisy but drift-free, and odometry that is
//! locally accurate but drifts.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{Trajectory, TrajectoryError};
use crate::pose::{relative_pose, Pose, RelativePose};
use crate::quat::{quat_log, UnitQuaternion};

/// Seconds between generated frames.
pub const FRAME_INTERVAL: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation parameter: {0}")]
    Config(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    /// Closed circle; the last frame coincides with the first.
    Loop,
    /// One lap of a figure-eight.
    FigureEight,
    /// Constant step with a Gaussian random walk on the heading.
    RandomWalk,
}

impl FromStr for Shape {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "loop" => Ok(Self::Loop),
            "figure-eight" | "figure8" => Ok(Self::FigureEight),
            "random-walk" => Ok(Self::RandomWalk),
            other => Err(SimError::Config(format!("unknown shape {other:?}"))),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Loop => "loop",
            Self::FigureEight => "figure-eight",
            Self::RandomWalk => "random-walk",
        })
    }
}

fn yaw(heading: f64) -> UnitQuaternion {
    UnitQuaternion::from_axis_angle(&Vector3::z(), heading)
}

fn planar(p: Vector2<f64>, heading: f64) -> Pose {
    Pose::new(Vector3::new(p.x, p.y, 0.0), yaw(heading))
}

fn eight(s: f64) -> Vector2<f64> {
    Vector2::new(s.sin(), s.sin() * s.cos())
}

fn eight_tangent(s: f64) -> Vector2<f64> {
    Vector2::new(s.cos(), (2.0 * s).cos())
}

fn figure_eight(n: usize, step: f64) -> Vec<Pose> {
    // arc length of the unit curve by composite Simpson
    let m = 20_000;
    let h = TAU / m as f64;
    let speed = |s: f64| eight_tangent(s).norm();
    let mut length = speed(0.0) + speed(TAU);
    for k in 1..m {
        length += speed(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    length *= h / 3.0;
    let scale = (n - 1) as f64 * step / length;

    // advance the curve parameter so every chord has length `step`
    let probe = step / scale / 16.0;
    let mut s = 0.0;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let here = eight(s) * scale;
        let t = eight_tangent(s);
        out.push(planar(here, t.y.atan2(t.x)));
        let dist = |s2: f64| (eight(s2) * scale - here).norm() - step;
        let mut hi = s;
        while dist(hi) < 0.0 {
            hi += probe;
        }
        let mut lo = hi - probe;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dist(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
        }
        s = 0.5 * (lo + hi);
    }
    out
}

/// Planar ground-truth trajectory of `n` frames whose consecutive positions
/// are `step` meters apart, heading along the path.
pub fn generate_trajectory(
    shape: Shape,
    n: usize,
    step: f64,
    seed: u64,
) -> Result<Trajectory, SimError> {
    if n < 2 {
        return Err(SimError::Config("need at least 2 frames".into()));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(SimError::Config("step must be positive".into()));
    }
    let poses = match shape {
        Shape::Loop => {
            if n < 3 {
                return Err(SimError::Config("a closed loop needs at least 3 frames".into()));
            }
            let segments = (n - 1) as f64;
            let radius = step / (2.0 * (PI / segments).sin());
            (0..n)
                .map(|m| {
                    let a = TAU * m as f64 / segments;
                    planar(Vector2::new(a.cos(), a.sin()) * radius, a + PI / 2.0)
                })
                .collect()
        }
        Shape::FigureEight => figure_eight(n, step),
        Shape::RandomWalk => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let turn = Normal::new(0.0, 5f64.to_radians()).expect("valid sigma");
            let mut heading: f64 = 0.0;
            let mut p = Vector2::zeros();
            let mut out = Vec::with_capacity(n);
            for _ in 0..n - 1 {
                out.push(planar(p, heading));
                p += Vector2::new(heading.cos(), heading.sin()) * step;
                heading += turn.sample(&mut rng);
            }
            // the final frame keeps the heading it arrived with
            let arrived = *out.last().expect("n ≥ 2").q();
            out.push(Pose::new(Vector3::new(p.x, p.y, 0.0), arrived));
            out
        }
    };
    Ok(Trajectory::from_poses(&poses, FRAME_INTERVAL)?)
}

/// Noise applied by [`corrupt_absolute`] and [`corrupt_vo`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Per-axis Gaussian translation noise on absolute poses, meters.
    pub abs_t_sigma: f64,
    /// Gaussian rotation angle on absolute poses, degrees.
    pub abs_r_sigma: f64,
    /// Per-axis translation noise on each odometry step, meters.
    pub vo_t_sigma: f64,
    /// Rotation angle noise on each odometry step, degrees.
    pub vo_r_sigma: f64,
    /// Constant translation added to each odometry step along the observer's
    /// z axis, meters.
    pub vo_t_bias: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            abs_t_sigma: 0.0,
            abs_r_sigma: 0.0,
            vo_t_sigma: 0.0,
            vo_r_sigma: 0.0,
            vo_t_bias: 0.0,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("abs_t_sigma", self.abs_t_sigma),
            ("abs_r_sigma", self.abs_r_sigma),
            ("vo_t_sigma", self.vo_t_sigma),
            ("vo_r_sigma", self.vo_r_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("{name} must be non-negative")));
            }
        }
        if !self.vo_t_bias.is_finite() {
            return Err(SimError::Config("vo_t_bias must be finite".into()));
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

fn gaussian_vector(rng: &mut impl Rng, sigma: f64) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    for c in v.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *c = z * sigma;
    }
    v
}

/// Uniform random axis, Gaussian angle with standard deviation `sigma_deg`.
fn random_rotation(rng: &mut impl Rng, sigma_deg: f64) -> UnitQuaternion {
    let axis = loop {
        let a = gaussian_vector(rng, 1.0);
        if a.norm() > 1e-9 {
            break a;
        }
    };
    let z: f64 = StandardNormal.sample(rng);
    UnitQuaternion::from_axis_angle(&axis, (z * sigma_deg).to_radians())
}

/// Independent per-frame noise on every pose.
pub fn corrupt_absolute(traj: &Trajectory, nm: &NoiseModel) -> Result<Trajectory, SimError> {
    nm.validate()?;
    let mut rng = nm.rng(0);
    let poses = traj
        .poses()
        .map(|p| {
            let dt = gaussian_vector(&mut rng, nm.abs_t_sigma);
            let dq = random_rotation(&mut rng, nm.abs_r_sigma);
            Pose::new(p.t + dt, *p.q() * dq)
        })
        .collect();
    Ok(traj.with_poses(poses))
}

/// Per-step odometry: the true relative pose of frame `n` seen from `n + 1`,
/// with independent noise and a constant bias on every step.
pub fn corrupt_vo(traj: &Trajectory, nm: &NoiseModel) -> Result<Vec<RelativePose>, SimError> {
    nm.validate()?;
    let mut rng = nm.rng(1);
    let poses: Vec<&Pose> = traj.poses().collect();
    Ok(poses
        .windows(2)
        .map(|w| {
            let v = relative_pose(w[0], w[1]);
            let t = v.t + gaussian_vector(&mut rng, nm.vo_t_sigma) + Vector3::z() * nm.vo_t_bias;
            let q = v.rotation() * random_rotation(&mut rng, nm.vo_r_sigma);
            RelativePose::new(t, quat_log(&q))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpsError {
    #[error("GPS track is empty")]
    Empty,
    #[error("GPS timestamp at sample {index} is not after its predecessor")]
    NotIncreasing { index: usize },
    #[error("non-finite GPS value at sample {index}")]
    NonFinite { index: usize },
}

/// Sparse planar position fixes with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct GpsTrack {
    samples: Vec<(f64, Vector2<f64>)>,
}

impl GpsTrack {
    pub fn new(samples: Vec<(f64, Vector2<f64>)>) -> Result<Self, GpsError> {
        if samples.is_empty() {
            return Err(GpsError::Empty);
        }
        for (index, (t, p)) in samples.iter().enumerate() {
            if !(t.is_finite() && p.x.is_finite() && p.y.is_finite()) {
                return Err(GpsError::NonFinite { index });
            }
            if index > 0 && *t <= samples[index - 1].0 {
                return Err(GpsError::NotIncreasing { index });
            }
        }
        Ok(Self { samples })
    }

    /// x/y of every `every`-th frame, starting with the first.
    pub fn from_trajectory(traj: &Trajectory, every: usize) -> Result<Self, GpsError> {
        let samples = traj
            .records()
            .iter()
            .step_by(every.max(1))
            .map(|(ts, p)| (*ts, Vector2::new(p.t.x, p.t.y)))
            .collect();
        Self::new(samples)
    }

    pub fn samples(&self) -> &[(f64, Vector2<f64>)] {
        &self.samples
    }
}

/// Piecewise-linear positions at `timestamps`, clamped to the first and last
/// fix outside the track's time range.
pub fn interpolate_gps(track: &GpsTrack, timestamps: &[f64]) -> Vec<Vector2<f64>> {
    let s = &track.samples;
    timestamps
        .iter()
        .map(|&t| {
            let upper = s.partition_point(|(ts, _)| *ts <= t);
            if upper == 0 {
                return s[0].1;
            }
            if upper == s.len() {
                return s[s.len() - 1].1;
            }
            let (t0, p0) = s[upper - 1];
            let (t1, p1) = s[upper];
            if t == t0 {
                return p0;
            }
            let a = (t - t0) / (t1 - t0);
            p0 + (p1 - p0) * a
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::integrate;

    fn steps(traj: &Trajectory) -> Vec<f64> {
        let p: Vec<_> = traj.poses().collect();
        p.windows(2).map(|w| (w[1].t - w[0].t).norm()).collect()
    }

    #[test]
    fn loop_on_unit_circle_closes() {
        let n = 4;
        let step = 2.0 * (PI / 3.0).sin();
        let traj = generate_trajectory(Shape::Loop, n, step, 0).unwrap();
        assert_eq!(traj.len(), 4);
        for p in traj.poses() {
            assert!((p.t.norm() - 1.0).abs() <= 1e-12);
        }
        let first = traj.pose(0).unwrap().t;
        let last = traj.pose(3).unwrap().t;
        assert!((first - last).norm() <= 1e-6);
    }

    #[test]
    fn every_shape_has_constant_step() {
        for shape in [Shape::Loop, Shape::FigureEight, Shape::RandomWalk] {
            let traj = generate_trajectory(shape, 500, 0.25, 11).unwrap();
            for d in steps(&traj) {
                assert!((d - 0.25).abs() <= 1e-9, "{shape}: step {d}");
            }
        }
    }

    #[test]
    fn heading_follows_path() {
        for shape in [Shape::Loop, Shape::FigureEight, Shape::RandomWalk] {
            let traj = generate_trajectory(shape, 400, 0.1, 2).unwrap();
            let p: Vec<_> = traj.poses().collect();
            for w in p.windows(2) {
                let forward = w[0].q().rotate(&Vector3::x());
                let dir = (w[1].t - w[0].t).normalize();
                assert!(forward.dot(&dir) > 0.99, "{shape}");
            }
        }
    }

    #[test]
    fn random_walk_is_seeded() {
        let a = generate_trajectory(Shape::RandomWalk, 100, 0.1, 5).unwrap();
        let b = generate_trajectory(Shape::RandomWalk, 100, 0.1, 5).unwrap();
        let c = generate_trajectory(Shape::RandomWalk, 100, 0.1, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_parameters() {
        assert!(generate_trajectory(Shape::Loop, 1, 0.1, 0).is_err());
        assert!(generate_trajectory(Shape::Loop, 2, 0.1, 0).is_err());
        assert!(generate_trajectory(Shape::FigureEight, 10, 0.0, 0).is_err());
        let nm = NoiseModel {
            vo_t_sigma: -1.0,
            ..NoiseModel::default()
        };
        let traj = generate_trajectory(Shape::Loop, 10, 0.1, 0).unwrap();
        assert!(corrupt_vo(&traj, &nm).is_err());
        assert!("spiral".parse::<Shape>().is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let traj = generate_trajectory(Shape::FigureEight, 200, 0.1, 0).unwrap();
        let nm = NoiseModel::default();
        assert_eq!(corrupt_absolute(&traj, &nm).unwrap(), traj);
        let vo = corrupt_vo(&traj, &nm).unwrap();
        let rebuilt = integrate(traj.pose(0).unwrap(), &vo);
        for (a, b) in rebuilt.iter().zip(traj.poses()) {
            assert!((a.t - b.t).amax() <= 1e-9);
        }
    }

    #[test]
    fn corruption_is_seeded() {
        let traj = generate_trajectory(Shape::Loop, 100, 0.1, 0).unwrap();
        let nm = NoiseModel {
            abs_t_sigma: 0.5,
            abs_r_sigma: 5.0,
            vo_t_sigma: 0.01,
            vo_r_sigma: 0.1,
            vo_t_bias: 0.01,
            seed: 42,
        };
        assert_eq!(corrupt_absolute(&traj, &nm).unwrap(), corrupt_absolute(&traj, &nm).unwrap());
        assert_eq!(corrupt_vo(&traj, &nm).unwrap(), corrupt_vo(&traj, &nm).unwrap());
        let other = NoiseModel { seed: 43, ..nm };
        assert_ne!(corrupt_vo(&traj, &nm).unwrap(), corrupt_vo(&traj, &other).unwrap());
    }

    #[test]
    fn gps_interpolation_examples() {
        let track = GpsTrack::new(vec![
            (0.0, Vector2::new(0.0, 0.0)),
            (2.0, Vector2::new(4.0, -2.0)),
            (3.0, Vector2::new(5.0, 1.0)),
        ])
        .unwrap();
        let out = interpolate_gps(&track, &[0.0, 1.0, 2.0, 2.5, 3.0, -1.0, 9.0]);
        assert_eq!(out[0], Vector2::new(0.0, 0.0));
        assert_eq!(out[1], Vector2::new(2.0, -1.0));
        assert_eq!(out[2], Vector2::new(4.0, -2.0));
        assert_eq!(out[3], Vector2::new(4.5, -0.5));
        assert_eq!(out[4], Vector2::new(5.0, 1.0));
        assert_eq!(out[5], Vector2::new(0.0, 0.0));
        assert_eq!(out[6], Vector2::new(5.0, 1.0));
    }

    #[test]
    fn gps_track_validation() {
        assert_eq!(GpsTrack::new(vec![]).unwrap_err(), GpsError::Empty);
        let dup = vec![(1.0, Vector2::zeros()), (1.0, Vector2::zeros())];
        assert_eq!(GpsTrack::new(dup).unwrap_err(), GpsError::NotIncreasing { index: 1 });
    }
}
