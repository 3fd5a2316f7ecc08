use nalgebra::{Matrix3, Matrix4};
use serde::Serialize;

use super::constraint::Constraint;
use super::solver::{gauss_newton_solve, StateVector};
use super::{PgoConfig, PgoError};
use crate::io::Trajectory;
use crate::pose::{advance, compose, integrate, relative_pose, Pose, RelativePose};

/// Constraints of one window: for each pose an absolute translation and an
/// absolute rotation, then the relative translation and rotation to its
/// successor. `vo[n]` is the relative pose of window pose `n` observed from
/// pose `n + 1`.
pub fn build_window_graph(
    abs_poses: &[Pose],
    vo: &[RelativePose],
    cfg: &PgoConfig,
) -> Result<Vec<Constraint>, PgoError> {
    let n = abs_poses.len();
    if n == 0 {
        return Err(PgoError::TooFewPoses { needed: 1, got: 0 });
    }
    if vo.len() + 1 != n {
        return Err(PgoError::LengthMismatch {
            expected: n - 1,
            got: vo.len(),
        });
    }
    let cov_t = Matrix3::identity();
    let cov_r = Matrix4::identity() * cfg.sigma_rot;
    let mut out = Vec::with_capacity(4 * n - 2);
    for (i, p) in abs_poses.iter().enumerate() {
        out.push(Constraint::abs_translation(i, p.t, cov_t)?);
        out.push(Constraint::abs_rotation(i, *p.q(), cov_r)?);
        if let Some(v) = vo.get(i) {
            out.push(Constraint::rel_translation(i, i + 1, v.t, cov_t)?);
            out.push(Constraint::rel_rotation(i, i + 1, v.rotation(), cov_r)?);
        }
    }
    Ok(out)
}

/// Relative pose spanning a chain of consecutive measurements, dead-reckoned
/// from `reference`. The observer-frame translation depends on the absolute
/// rotation along the chain, so the result is only exact when `reference` is
/// the true pose at the start of the chain.
pub fn compose_span(reference: &Pose, vo: &[RelativePose]) -> RelativePose {
    let end = integrate(reference, vo).pop().expect("non-empty");
    relative_pose(reference, &end)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowStats {
    /// Index of the window's first grid pose.
    pub first: usize,
    pub iterations: usize,
    pub converged: bool,
    pub initial_objective: f64,
    pub final_objective: f64,
}

#[derive(Debug, Clone)]
pub struct Fusion {
    pub trajectory: Trajectory,
    /// Frame indices optimized by the windows.
    pub grid: Vec<usize>,
    pub windows: Vec<WindowStats>,
}

fn grid_indices(frames: usize, spacing: usize) -> Vec<usize> {
    let grid: Vec<usize> = (0..frames).step_by(spacing).collect();
    if grid.len() < 2 {
        vec![0, frames - 1]
    } else {
        grid
    }
}

/// Fuses per-frame absolute poses with per-frame odometry (`vo[n]` relates
/// frame `n` to `n + 1`).
///
/// Frames `0, k, 2k, …` form the optimization grid. A window of `T` grid
/// poses slides over it one grid pose at a time; each window starts from the
/// latest estimates of its poses, the first window emits all its poses and
/// every later window emits only its newest one. Frames between grid poses
/// are dead-reckoned from the nearest refined grid pose; odometry spanning two
/// grid poses is chained starting from the current estimate of the earlier one. With fewer than `T`
/// grid poses a single window covers all of them.
pub fn fuse_trajectory(
    abs: &Trajectory,
    vo: &[RelativePose],
    cfg: &PgoConfig,
) -> Result<Fusion, PgoError> {
    cfg.validate()?;
    let frames = abs.len();
    if frames < 2 {
        return Err(PgoError::TooFewPoses {
            needed: 2,
            got: frames,
        });
    }
    if vo.len() + 1 != frames {
        return Err(PgoError::LengthMismatch {
            expected: frames - 1,
            got: vo.len(),
        });
    }
    let poses: Vec<Pose> = abs.poses().copied().collect();
    let grid = grid_indices(frames, cfg.spacing);
    let observed: Vec<Pose> = grid.iter().map(|&g| poses[g]).collect();
    let size = cfg.window.min(grid.len());
    let mut current = observed.clone();
    // Odometry between grid poses, each span dead-reckoned from the latest
    // estimate of its first pose when a window first needs it.
    let mut grid_vo: Vec<RelativePose> = Vec::with_capacity(grid.len() - 1);
    let mut fused: Vec<Pose> = Vec::with_capacity(grid.len());
    let mut windows = Vec::with_capacity(grid.len() - size + 1);
    for first in 0..=(grid.len() - size) {
        let span = first..first + size;
        while grid_vo.len() < first + size - 1 {
            let m = grid_vo.len();
            grid_vo.push(compose_span(&current[m], &vo[grid[m]..grid[m + 1]]));
        }
        let constraints =
            build_window_graph(&observed[span.clone()], &grid_vo[first..first + size - 1], cfg)?;
        let z0 = StateVector::new(current[span.clone()].to_vec());
        let report = gauss_newton_solve(&constraints, &z0, cfg)?;
        windows.push(WindowStats {
            first,
            iterations: report.iterations,
            converged: report.converged,
            initial_objective: report.initial_objective,
            final_objective: report.final_objective,
        });
        let solved = report.state.into_poses();
        if first == 0 {
            fused.extend_from_slice(&solved);
        } else {
            fused.push(solved[size - 1]);
        }
        current[span].copy_from_slice(&solved);
    }

    let mut out = Vec::with_capacity(frames);
    let mut m = 0;
    for f in 0..frames {
        while m + 1 < grid.len() && grid[m + 1] <= f {
            m += 1;
        }
        // nearest grid pose, ties going to the earlier one
        let pose = if m + 1 < grid.len() && grid[m + 1] - f < f - grid[m] {
            let mut p = fused[m + 1];
            for n in (f..grid[m + 1]).rev() {
                p = compose(&p, &vo[n]);
            }
            p
        } else {
            let mut p = fused[m];
            for v in &vo[grid[m]..f] {
                p = advance(&p, v);
            }
            p
        };
        out.push(pose);
    }
    let trajectory = Trajectory::new(abs.timestamps().zip(out).collect())?;
    Ok(Fusion {
        trajectory,
        grid,
        windows,
    })
}
