//! On-manifold Gauss-Newton pose-graph optimization over a moving window of
//! poses, and the driver that fuses a whole trajectory with it.
//!
//! A window of `T` poses is linearized around the current estimate. Each pose
//! contributes six manifold coordinates `[δt, δθ]`: translations update
//! additively and rotations by right-multiplying `exp(δθ)`. Constraint
//! residuals are whitened with `Lᵀ`, where `S = L Lᵀ` is the constraint's
//! matrix, and the stacked system `min ‖J Δz − r‖²` is solved by a
//! column-pivoted QR factorization.

mod constraint;
mod filter;
mod solver;
mod window;

pub use constraint::{Constraint, ConstraintKind, Observation};
pub use filter::{temporal_median_filter, DEFAULT_MEDIAN_WINDOW};
pub use solver::{gauss_newton_solve, linearize, objective, SolveReport, StateVector};
pub use window::{build_window_graph, compose_span, fuse_trajectory, Fusion, WindowStats};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::TrajectoryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PgoError {
    #[error("constraint matrix is not symmetric positive-definite")]
    NotPositiveDefinite,
    #[error("constraint matrix must be {expected}x{expected}, got {rows}x{cols}")]
    CovarianceShape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("constraint references pose {index} but the window has {len} poses")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("relative constraint between pose {0} and itself")]
    SelfLoop(usize),
    #[error("rank-deficient system; unconstrained manifold columns {columns:?}")]
    RankDeficient { columns: Vec<usize> },
    #[error("expected {expected} odometry measurements, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("need at least {needed} poses, got {got}")]
    TooFewPoses { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Window and solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgoConfig {
    /// Poses per optimization window.
    pub window: usize,
    /// Frames between consecutive window poses.
    pub spacing: usize,
    /// Scale of the `σ I₄` matrix on rotation constraints. Translation
    /// constraints use the identity.
    pub sigma_rot: f64,
    pub max_iters: usize,
    /// Stop once `‖Δz‖` falls below this.
    pub step_tol: f64,
}

impl Default for PgoConfig {
    fn default() -> Self {
        Self {
            window: 7,
            spacing: 150,
            sigma_rot: 10.0,
            max_iters: 50,
            step_tol: 1e-8,
        }
    }
}

impl PgoConfig {
    pub fn validate(&self) -> Result<(), PgoError> {
        if self.window < 2 {
            return Err(PgoError::Config("window must hold at least 2 poses".into()));
        }
        if self.spacing < 1 {
            return Err(PgoError::Config("spacing must be at least 1 frame".into()));
        }
        if !(self.sigma_rot > 0.0 && self.sigma_rot.is_finite()) {
            return Err(PgoError::Config("sigma_rot must be positive".into()));
        }
        if self.max_iters < 1 {
            return Err(PgoError::Config("max_iters must be at least 1".into()));
        }
        if !(self.step_tol >= 0.0) {
            return Err(PgoError::Config("step_tol must be non-negative".into()));
        }
        Ok(())
    }
}
