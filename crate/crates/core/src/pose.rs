//! Poses, observer-frame relative poses and the weighted pose-distance loss.

use nalgebra::Vector3;
use thiserror::Error;

use crate::quat::{quat_exp, quat_log, LogQuaternion, UnitQuaternion};

/// A 6-DoF pose: translation in meters and a rotation kept on the `u ≥ 0`
/// hemisphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub t: Vector3<f64>,
    q: UnitQuaternion,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(t: Vector3<f64>, q: UnitQuaternion) -> Self {
        Self {
            t,
            q: q.canonicalize(),
        }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_log(t: Vector3<f64>, w: &LogQuaternion) -> Self {
        Self::new(t, quat_exp(w))
    }

    pub fn q(&self) -> &UnitQuaternion {
        &self.q
    }

    pub fn set_q(&mut self, q: UnitQuaternion) {
        self.q = q.canonicalize();
    }

    pub fn w(&self) -> LogQuaternion {
        quat_log(&self.q)
    }
}

/// Pose of frame `i` expressed in the coordinate system of observer `j`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RelativePose {
    pub t: Vector3<f64>,
    pub w: LogQuaternion,
}

impl RelativePose {
    pub fn new(t: Vector3<f64>, w: LogQuaternion) -> Self {
        Self { t, w }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn rotation(&self) -> UnitQuaternion {
        quat_exp(&self.w)
    }
}

/// `v_ij = (q_j (t_i − t_j) q_j⁻¹, log(q_j⁻¹ q_i))`.
pub fn relative_pose(p_i: &Pose, p_j: &Pose) -> RelativePose {
    let t = p_j.q.rotate(&(p_i.t - p_j.t));
    let w = quat_log(&(p_j.q.inverse() * p_i.q));
    RelativePose { t, w }
}

/// Recovers `p_i` from the observer pose `p_j` and `v_ij = relative_pose(p_i, p_j)`.
pub fn compose(p_j: &Pose, v_ij: &RelativePose) -> Pose {
    let t = p_j.t + p_j.q.inverse().rotate(&v_ij.t);
    Pose::new(t, p_j.q * v_ij.rotation())
}

/// Recovers the observer `p_j` from `p_i` and `v_ij = relative_pose(p_i, p_j)`.
pub fn advance(p_i: &Pose, v_ij: &RelativePose) -> Pose {
    let q_j = p_i.q * v_ij.rotation().inverse();
    let t_j = p_i.t - q_j.inverse().rotate(&v_ij.t);
    Pose::new(t_j, q_j)
}

/// Dead-reckons a trajectory from `start` through consecutive relative poses,
/// where `vo[n]` relates frame `n` to its successor `n + 1`.
pub fn integrate(start: &Pose, vo: &[RelativePose]) -> Vec<Pose> {
    let mut out = Vec::with_capacity(vo.len() + 1);
    out.push(*start);
    let mut cur = *start;
    for v in vo {
        cur = advance(&cur, v);
        out.push(cur);
    }
    out
}

/// Rotation angle between two orientations in degrees, `[0°, 180°]`.
pub fn rotation_error_deg(q_a: &UnitQuaternion, q_b: &UnitQuaternion) -> f64 {
    (q_a.inverse() * *q_b).angle().to_degrees()
}

/// Anything with a translation and a log-rotation that the pose distance can
/// compare.
pub trait Pose6 {
    fn translation(&self) -> Vector3<f64>;
    fn log_rotation(&self) -> Vector3<f64>;
}

impl Pose6 for Pose {
    fn translation(&self) -> Vector3<f64> {
        self.t
    }

    fn log_rotation(&self) -> Vector3<f64> {
        self.w().0
    }
}

impl Pose6 for RelativePose {
    fn translation(&self) -> Vector3<f64> {
        self.t
    }

    fn log_rotation(&self) -> Vector3<f64> {
        self.w.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("prediction has {pred} poses but ground truth has {gt}")]
    LengthMismatch { pred: usize, gt: usize },
    #[error("{len} poses cannot form a tuple of {tuple_size} frames spaced {spacing} apart")]
    TooShort {
        len: usize,
        tuple_size: usize,
        spacing: usize,
    },
    #[error("invalid loss configuration: {0}")]
    Config(String),
    #[error("pair ({i}, {j}) out of range for {len} poses")]
    PairOutOfRange { i: usize, j: usize, len: usize },
}

/// Weights and sampling for the geometry-aware loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Log-weight on the translation term.
    pub beta: f64,
    /// Log-weight on the rotation term.
    pub gamma: f64,
    /// Weight of the relative-pose term.
    pub alpha: f64,
    /// Frames per sampled tuple.
    pub tuple_size: usize,
    /// Gap in frames between neighbouring tuple elements.
    pub spacing: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            beta: 0.0,
            gamma: -3.0,
            alpha: 1.0,
            tuple_size: 3,
            spacing: 10,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), LossError> {
        if self.tuple_size < 2 {
            return Err(LossError::Config("tuple size must be at least 2".into()));
        }
        if self.spacing < 1 {
            return Err(LossError::Config("spacing must be at least 1".into()));
        }
        if !(self.alpha >= 0.0) {
            return Err(LossError::Config("alpha must be non-negative".into()));
        }
        Ok(())
    }

    /// Frames spanned by one tuple.
    pub fn tuple_span(&self) -> usize {
        self.spacing * (self.tuple_size - 1) + 1
    }
}

/// `‖t − t*‖₁ e^{−β} + β + ‖w − w*‖₁ e^{−γ} + γ`.
pub fn pose_distance_h<P: Pose6>(p: &P, p_star: &P, beta: f64, gamma: f64) -> f64 {
    let dt = (p.translation() - p_star.translation()).lp_norm(1);
    let dw = (p.log_rotation() - p_star.log_rotation()).lp_norm(1);
    dt * (-beta).exp() + beta + dw * (-gamma).exp() + gamma
}

/// Elementwise difference `(t_i − t_j, w_i − w_j)` used by the supervised
/// relative term.
pub fn difference_pose(p_i: &Pose, p_j: &Pose) -> RelativePose {
    RelativePose::new(p_i.t - p_j.t, LogQuaternion(p_i.w().0 - p_j.w().0))
}

/// Image pairs `(a, a + k)` formed by neighbouring elements of every tuple
/// `(i, i + k, …, i + k(s − 1))`, start index stride one. Pairs shared by
/// overlapping tuples are repeated.
pub fn tuple_pairs(len: usize, cfg: &LossConfig) -> Vec<(usize, usize)> {
    let span = cfg.tuple_span();
    if len < span {
        return Vec::new();
    }
    let mut pairs = Vec::with_capacity((len - span + 1) * (cfg.tuple_size - 1));
    for start in 0..=(len - span) {
        for m in 0..cfg.tuple_size - 1 {
            let a = start + m * cfg.spacing;
            pairs.push((a, a + cfg.spacing));
        }
    }
    pairs
}

/// Supervised loss over absolute poses plus `alpha` times the loss over
/// sampled relative pairs.
pub fn mapnet_loss(pred: &[Pose], gt: &[Pose], cfg: &LossConfig) -> Result<f64, LossError> {
    cfg.validate()?;
    if pred.len() != gt.len() {
        return Err(LossError::LengthMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    if pred.len() < cfg.tuple_span() {
        return Err(LossError::TooShort {
            len: pred.len(),
            tuple_size: cfg.tuple_size,
            spacing: cfg.spacing,
        });
    }
    let absolute: f64 = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| pose_distance_h(p, g, cfg.beta, cfg.gamma))
        .sum();
    if cfg.alpha == 0.0 {
        return Ok(absolute);
    }
    let relative: f64 = tuple_pairs(pred.len(), cfg)
        .into_iter()
        .map(|(a, b)| {
            let v = difference_pose(&pred[a], &pred[b]);
            let v_star = difference_pose(&gt[a], &gt[b]);
            pose_distance_h(&v, &v_star, cfg.beta, cfg.gamma)
        })
        .sum();
    Ok(absolute + cfg.alpha * relative)
}

/// Self-supervised loss against visual odometry: each `(i, j, v̂_ij)` compares
/// the observer-frame relative pose of the predictions with the measurement.
pub fn vo_loss(
    pred: &[Pose],
    vo: &[(usize, usize, RelativePose)],
    cfg: &LossConfig,
) -> Result<f64, LossError> {
    let mut total = 0.0;
    for &(i, j, ref v_hat) in vo {
        if i >= pred.len() || j >= pred.len() {
            return Err(LossError::PairOutOfRange {
                i,
                j,
                len: pred.len(),
            });
        }
        let v = relative_pose(&pred[i], &pred[j]);
        total += pose_distance_h(&v, v_hat, cfg.beta, cfg.gamma);
    }
    Ok(total)
}
