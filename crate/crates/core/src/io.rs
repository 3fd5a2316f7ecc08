//! Plain-text trajectory, odometry and GPS files.
//!
//! All three are UTF-8, one record per LF-terminated line, fields separated
//! by whitespace. Blank lines and lines starting with `#` are skipped.
//!
//! | file       | fields                                 |
//! |------------|----------------------------------------|
//! | trajectory | `timestamp tx ty tz qu qv1 qv2 qv3`    |
//! | odometry   | `timestamp tx ty tz w1 w2 w3`          |
//! | GPS        | `timestamp x y`                        |
//!
//! Quaternions are scalar-first; odometry rotations are log-quaternions.
//! Numbers are written in scientific notation with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Vector2, Vector3};
use thiserror::Error;

use crate::pose::{Pose, RelativePose};
use crate::quat::{LogQuaternion, UnitQuaternion};
use crate::sim::{GpsError, GpsTrack};

/// Norm deviation tolerated for quaternions read from files; accepted values
/// are renormalized.
pub const FILE_UNIT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("timestamp at record {index} is not after its predecessor")]
    NotIncreasing { index: usize },
    #[error("non-finite timestamp at record {index}")]
    NonFinite { index: usize },
}

/// Timestamped pose sequence with strictly increasing timestamps (seconds).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    records: Vec<(f64, Pose)>,
}

fn check_timestamps(ts: impl Iterator<Item = f64>) -> Result<(), TrajectoryError> {
    let mut prev = f64::NEG_INFINITY;
    for (index, t) in ts.enumerate() {
        if !t.is_finite() {
            return Err(TrajectoryError::NonFinite { index });
        }
        if t <= prev {
            return Err(TrajectoryError::NotIncreasing { index });
        }
        prev = t;
    }
    Ok(())
}

impl Trajectory {
    pub fn new(records: Vec<(f64, Pose)>) -> Result<Self, TrajectoryError> {
        check_timestamps(records.iter().map(|r| r.0))?;
        Ok(Self { records })
    }

    /// Frames at `0, dt, 2dt, …`.
    pub fn from_poses(poses: &[Pose], dt: f64) -> Result<Self, TrajectoryError> {
        Self::new(
            poses
                .iter()
                .enumerate()
                .map(|(i, p)| (i as f64 * dt, *p))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(f64, Pose)] {
        &self.records
    }

    pub fn timestamps(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.0)
    }

    pub fn poses(&self) -> impl ExactSizeIterator<Item = &Pose> + '_ {
        self.records.iter().map(|r| &r.1)
    }

    pub fn pose(&self, index: usize) -> Option<&Pose> {
        self.records.get(index).map(|r| &r.1)
    }

    /// Same timestamps with new poses.
    pub fn with_poses(&self, poses: Vec<Pose>) -> Self {
        assert_eq!(poses.len(), self.len(), "pose count");
        Self {
            records: self.timestamps().zip(poses).collect(),
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Gps(#[from] GpsError),
}

/// Data lines as `(line number, fields)`, skipping comments and blanks.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, raw)| {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((n + 1, line.split_whitespace().collect()))
        }
    })
}

fn parse_fields<const N: usize>(line: usize, fields: &[&str]) -> Result<[f64; N], IoError> {
    if fields.len() != N {
        return Err(IoError::Parse {
            line,
            message: format!("expected {N} fields, found {}", fields.len()),
        });
    }
    let mut out = [0.0; N];
    for (slot, f) in out.iter_mut().zip(fields) {
        *slot = f.parse::<f64>().map_err(|_| IoError::Parse {
            line,
            message: format!("invalid number {f:?}"),
        })?;
        if !slot.is_finite() {
            return Err(IoError::Parse {
                line,
                message: format!("non-finite value {f:?}"),
            });
        }
    }
    Ok(out)
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_owned(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::File {
        path: path.to_owned(),
        source,
    })
}

fn push_numbers(out: &mut String, values: &[f64]) {
    for (n, v) in values.iter().enumerate() {
        if n > 0 {
            out.push(' ');
        }
        // -0.0 and 0.0 both print as zero
        let v = if *v == 0.0 { 0.0 } else { *v };
        write!(out, "{v:.16e}").expect("write to string");
    }
    out.push('\n');
}

pub fn parse_trajectory(text: &str) -> Result<Trajectory, IoError> {
    let mut records = Vec::new();
    for (line, fields) in data_lines(text) {
        let [ts, tx, ty, tz, qu, q1, q2, q3] = parse_fields::<8>(line, &fields)?;
        let v = Vector3::new(q1, q2, q3);
        UnitQuaternion::with_tolerance(qu, v, FILE_UNIT_TOLERANCE).map_err(|e| IoError::Parse {
            line,
            message: e.to_string(),
        })?;
        let q = UnitQuaternion::normalize(qu, v).expect("checked near unit");
        records.push((ts, Pose::new(Vector3::new(tx, ty, tz), q)));
    }
    Ok(Trajectory::new(records)?)
}

pub fn format_trajectory(traj: &Trajectory) -> String {
    let mut out = String::from("# timestamp tx ty tz qu qv1 qv2 qv3\n");
    for (ts, p) in traj.records() {
        let q = p.q().to_vector4();
        push_numbers(&mut out, &[*ts, p.t.x, p.t.y, p.t.z, q[0], q[1], q[2], q[3]]);
    }
    out
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory, IoError> {
    parse_trajectory(&read_text(path.as_ref())?)
}

pub fn write_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_text(path.as_ref(), &format_trajectory(traj))
}

/// Odometry records `(timestamp, v)`; the timestamp is that of the observing
/// (later) frame.
pub fn parse_vo(text: &str) -> Result<Vec<(f64, RelativePose)>, IoError> {
    let mut out = Vec::new();
    for (line, fields) in data_lines(text) {
        let [ts, tx, ty, tz, w1, w2, w3] = parse_fields::<7>(line, &fields)?;
        out.push((
            ts,
            RelativePose::new(Vector3::new(tx, ty, tz), LogQuaternion::new(w1, w2, w3)),
        ));
    }
    check_timestamps(out.iter().map(|r| r.0))?;
    Ok(out)
}

pub fn format_vo(vo: &[(f64, RelativePose)]) -> String {
    let mut out = String::from("# timestamp tx ty tz w1 w2 w3\n");
    for (ts, v) in vo {
        push_numbers(&mut out, &[*ts, v.t.x, v.t.y, v.t.z, v.w.0.x, v.w.0.y, v.w.0.z]);
    }
    out
}

pub fn read_vo(path: impl AsRef<Path>) -> Result<Vec<(f64, RelativePose)>, IoError> {
    parse_vo(&read_text(path.as_ref())?)
}

pub fn write_vo(vo: &[(f64, RelativePose)], path: impl AsRef<Path>) -> Result<(), IoError> {
    write_text(path.as_ref(), &format_vo(vo))
}

pub fn parse_gps(text: &str) -> Result<GpsTrack, IoError> {
    let mut samples = Vec::new();
    for (line, fields) in data_lines(text) {
        let [ts, x, y] = parse_fields::<3>(line, &fields)?;
        samples.push((ts, Vector2::new(x, y)));
    }
    Ok(GpsTrack::new(samples)?)
}

pub fn format_gps(track: &GpsTrack) -> String {
    let mut out = String::from("# timestamp x y\n");
    for (ts, p) in track.samples() {
        push_numbers(&mut out, &[*ts, p.x, p.y]);
    }
    out
}

pub fn read_gps(path: impl AsRef<Path>) -> Result<GpsTrack, IoError> {
    parse_gps(&read_text(path.as_ref())?)
}

pub fn write_gps(track: &GpsTrack, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_text(path.as_ref(), &format_gps(track))
}
