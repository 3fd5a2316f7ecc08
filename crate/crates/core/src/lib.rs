//! Refines noisy but drift-free absolute pose estimates with smooth but
//! drifting visual odometry.
//!
//! The core is an on-manifold Gauss-Newton pose-graph optimizer run over a
//! moving window of poses ([`pgo`]), built on unit-quaternion calculus
//! ([`quat`]) and observer-frame relative poses ([`pose`]). Around it sit a
//! synthetic trajectory and sensor simulator ([`sim`]), error metrics
//! ([`eval`]), plain-text file formats ([`io`]) and the `mapfuse` command
//! line ([`cli`]).

pub mod cli;
pub mod eval;
pub mod io;
pub mod pgo;
pub mod pose;
pub mod quat;
pub mod sim;

pub use eval::{aggregate, compare, ErrorReport};
pub use io::Trajectory;
pub use pgo::{fuse_trajectory, gauss_newton_solve, PgoConfig, PgoError};
pub use pose::{relative_pose, rotation_error_deg, Pose, RelativePose};
pub use quat::{quat_exp, quat_log, LogQuaternion, UnitQuaternion};
pub use sim::{NoiseModel, Shape};
