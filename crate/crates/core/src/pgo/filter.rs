use super::PgoError;
use crate::io::Trajectory;
use crate::pose::{rotation_error_deg, Pose};

pub const DEFAULT_MEDIAN_WINDOW: usize = 51;

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Sliding-window median over `window` frames (odd), truncated at the ends.
///
/// Translations take the per-coordinate median. Rotations take the window
/// member with the smallest summed angular distance to the others; ties go
/// to the earliest frame.
pub fn temporal_median_filter(traj: &Trajectory, window: usize) -> Result<Trajectory, PgoError> {
    if window == 0 || window % 2 == 0 {
        return Err(PgoError::Config(format!(
            "median window must be odd and positive, got {window}"
        )));
    }
    let poses: Vec<Pose> = traj.poses().copied().collect();
    let n = poses.len();
    let half = window / 2;
    let mut out = Vec::with_capacity(n);
    let mut buf = Vec::with_capacity(window);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let members = &poses[lo..hi];
        let mut t = nalgebra::Vector3::zeros();
        for axis in 0..3 {
            buf.clear();
            buf.extend(members.iter().map(|p| p.t[axis]));
            t[axis] = median(&mut buf);
        }
        let mut best = (f64::INFINITY, 0);
        for (a, pa) in members.iter().enumerate() {
            let cost: f64 = members
                .iter()
                .map(|pb| rotation_error_deg(pa.q(), pb.q()))
                .sum();
            if cost < best.0 {
                best = (cost, a);
            }
        }
        out.push(Pose::new(t, *members[best.1].q()));
    }
    Ok(Trajectory::new(traj.timestamps().zip(out).collect())?)
}
