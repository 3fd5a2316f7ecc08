//! Unit quaternions, the log/exp maps between them and 3-vectors, and the
//! analytic derivatives the pose-graph Jacobians are assembled from.
//!
//! Conventions:
//!
//! * components are stored scalar-first, `(u, v1, v2, v3)`;
//! * products follow the Hamilton convention (`i·j = k`);
//! * the log map returns the *half-angle* vector, so that
//!   `exp(w) = (cos‖w‖, ŵ sin‖w‖)` rotates by `2‖w‖` about `ŵ`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Matrix4x3, Vector3, Vector4};
use thiserror::Error;

/// Maximum deviation of `‖q‖` from one accepted by [`UnitQuaternion::new`].
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Upper bound on `‖log q‖` after canonicalization.
pub const MAX_LOG_NORM: f64 = PI / 2.0;

/// Below this norm the log and exp maps switch to their Taylor expansions.
const SERIES_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuatError {
    #[error("quaternion norm {norm} deviates from 1 by more than {tolerance}")]
    NotUnit { norm: f64, tolerance: f64 },
    #[error("quaternion has zero or non-finite norm")]
    Degenerate,
}

/// A rotation as a unit quaternion `(u, v)`.
#[derive(Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    u: f64,
    v: Vector3<f64>,
}

impl fmt::Debug for UnitQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "UnitQuaternion({}, [{}, {}, {}])",
            self.u, self.v.x, self.v.y, self.v.z
        )
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl UnitQuaternion {
    pub fn identity() -> Self {
        Self {
            u: 1.0,
            v: Vector3::zeros(),
        }
    }

    /// Wraps `(u, v)` without renormalizing; rejects inputs whose norm is
    /// further than [`UNIT_TOLERANCE`] from one.
    pub fn new(u: f64, v: Vector3<f64>) -> Result<Self, QuatError> {
        Self::with_tolerance(u, v, UNIT_TOLERANCE)
    }

    /// Like [`new`](Self::new) with a caller-chosen tolerance.
    pub fn with_tolerance(u: f64, v: Vector3<f64>, tolerance: f64) -> Result<Self, QuatError> {
        let norm = (u * u + v.norm_squared()).sqrt();
        if !norm.is_finite() {
            return Err(QuatError::Degenerate);
        }
        if (norm - 1.0).abs() > tolerance {
            return Err(QuatError::NotUnit { norm, tolerance });
        }
        Ok(Self { u, v })
    }

    /// Scales an arbitrary non-zero 4-vector onto the unit sphere.
    pub fn normalize(u: f64, v: Vector3<f64>) -> Result<Self, QuatError> {
        let norm = (u * u + v.norm_squared()).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(QuatError::Degenerate);
        }
        Ok(Self {
            u: u / norm,
            v: v / norm,
        })
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        let half = 0.5 * angle;
        Self {
            u: half.cos(),
            v: axis * (half.sin() / n),
        }
    }

    pub fn from_vector4(c: &Vector4<f64>) -> Result<Self, QuatError> {
        Self::new(c[0], Vector3::new(c[1], c[2], c[3]))
    }

    pub fn scalar(&self) -> f64 {
        self.u
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.v
    }

    /// Components as `(u, v1, v2, v3)`.
    pub fn to_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.u, self.v.x, self.v.y, self.v.z)
    }

    pub fn norm(&self) -> f64 {
        (self.u * self.u + self.v.norm_squared()).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.u * other.u + self.v.dot(&other.v)
    }

    /// `-q`, the same rotation on the opposite hemisphere.
    pub fn negated(&self) -> Self {
        Self {
            u: -self.u,
            v: -self.v,
        }
    }

    /// Representative with `u ≥ 0`. When `u == 0` the first non-zero vector
    /// component is made positive, so `q` and `-q` always map to the same value.
    pub fn canonicalize(&self) -> Self {
        let flip = if self.u != 0.0 {
            self.u < 0.0
        } else {
            self.v
                .iter()
                .find(|c| **c != 0.0)
                .is_some_and(|c| *c < 0.0)
        };
        if flip {
            self.negated()
        } else {
            *self
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.canonicalize() == *self
    }

    /// Conjugate `(u, -v)`, the inverse of a unit quaternion.
    pub fn inverse(&self) -> Self {
        Self {
            u: self.u,
            v: -self.v,
        }
    }

    pub fn log(&self) -> LogQuaternion {
        quat_log(self)
    }

    /// Rotates `t` by `q·(0, t)·q⁻¹`.
    pub fn rotate(&self, t: &Vector3<f64>) -> Vector3<f64> {
        quat_rotate(self, t)
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.u, self.v.x, self.v.y, self.v.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn angle(&self) -> f64 {
        2.0 * self.v.norm().atan2(self.u.abs())
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, rhs: UnitQuaternion) -> UnitQuaternion {
        quat_mul(&self, &rhs)
    }
}

/// Minimal 3-d rotation parameter: half the rotation angle times the unit axis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogQuaternion(pub Vector3<f64>);

impl LogQuaternion {
    pub fn zero() -> Self {
        Self(Vector3::zeros())
    }

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn exp(&self) -> UnitQuaternion {
        quat_exp(self)
    }
}

impl From<Vector3<f64>> for LogQuaternion {
    fn from(w: Vector3<f64>) -> Self {
        Self(w)
    }
}

/// `log q = v/‖v‖ · acos(u)` on the `u ≥ 0` hemisphere, zero for `v = 0`.
///
/// The angle is evaluated as `atan2(‖v‖, u)`, which equals `acos(u)` on the
/// unit sphere without losing precision near the identity.
pub fn quat_log(q: &UnitQuaternion) -> LogQuaternion {
    let q = q.canonicalize();
    let s = q.v.norm();
    if s < SERIES_THRESHOLD {
        // asin(s)/s ≈ 1 + s²/6
        return LogQuaternion(q.v * (1.0 + s * s / 6.0));
    }
    LogQuaternion(q.v * (s.atan2(q.u) / s))
}

/// `exp w = (cos‖w‖, w/‖w‖ · sin‖w‖)`.
pub fn quat_exp(w: &LogQuaternion) -> UnitQuaternion {
    let theta = w.0.norm();
    if theta < SERIES_THRESHOLD {
        let t2 = theta * theta;
        return UnitQuaternion {
            u: 1.0 - 0.5 * t2,
            v: w.0 * (1.0 - t2 / 6.0),
        };
    }
    UnitQuaternion {
        u: theta.cos(),
        v: w.0 * (theta.sin() / theta),
    }
}

/// Hamilton product `a·b`.
pub fn quat_mul(a: &UnitQuaternion, b: &UnitQuaternion) -> UnitQuaternion {
    UnitQuaternion {
        u: a.u * b.u - a.v.dot(&b.v),
        v: b.v * a.u + a.v * b.u + a.v.cross(&b.v),
    }
}

pub fn quat_inv(q: &UnitQuaternion) -> UnitQuaternion {
    q.inverse()
}

/// Vector part of `q·(0, t)·q̄`, written out as
/// `(u² − v·v) t + 2 (v·t) v + 2u (v × t)`.
pub fn quat_rotate(q: &UnitQuaternion, t: &Vector3<f64>) -> Vector3<f64> {
    let (u, v) = (q.u, &q.v);
    t * (u * u - v.norm_squared()) + v * (2.0 * v.dot(t)) + v.cross(t) * (2.0 * u)
}

fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Matrix `L(a)` with `a·b = L(a)·b` for 4-vectors, i.e. `∂(a·b)/∂b`.
pub fn dquatmul_left(a: &UnitQuaternion) -> Matrix4<f64> {
    let (w, x, y, z) = (a.u, a.v.x, a.v.y, a.v.z);
    Matrix4::new(
        w, -x, -y, -z, //
        x, w, -z, y, //
        y, z, w, -x, //
        z, -y, x, w,
    )
}

/// Matrix `R(b)` with `a·b = R(b)·a` for 4-vectors, i.e. `∂(a·b)/∂a`.
pub fn dquatmul_right(b: &UnitQuaternion) -> Matrix4<f64> {
    let (w, x, y, z) = (b.u, b.v.x, b.v.y, b.v.z);
    Matrix4::new(
        w, -x, -y, -z, //
        x, w, z, -y, //
        y, -z, w, x, //
        z, y, -x, w,
    )
}

/// Derivatives of [`quat_rotate`] with respect to `t` (3×3, the rotation
/// matrix) and with respect to the four components of `q` (3×4), the latter
/// taken through the conjugate form `q·(0, t)·q̄`.
pub fn dquatrotate(q: &UnitQuaternion, t: &Vector3<f64>) -> (Matrix3<f64>, Matrix3x4<f64>) {
    let (u, v) = (q.u, &q.v);
    let d_t = q.to_rotation_matrix();
    let d_u = t * (2.0 * u) + v.cross(t) * 2.0;
    let d_v = t * v.transpose() * -2.0
        + Matrix3::identity() * (2.0 * v.dot(t))
        + v * t.transpose() * 2.0
        - skew(t) * (2.0 * u);
    let mut d_q = Matrix3x4::zeros();
    d_q.set_column(0, &d_u);
    d_q.fixed_view_mut::<3, 3>(0, 1).copy_from(&d_v);
    (d_t, d_q)
}

/// `∂ exp(δ)/∂δ` at `δ = 0`: the 4×3 matrix `[0; I₃]`.
pub fn exp_map_derivative_at_zero() -> Matrix4x3<f64> {
    Matrix4x3::new(
        0.0, 0.0, 0.0, //
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        0.0, 0.0, 1.0,
    )
}

/// Jacobian of `δ ↦ q·exp(δ)` at `δ = 0`, as a 4×3 matrix.
pub fn right_perturbation_jacobian(q: &UnitQuaternion) -> Matrix4x3<f64> {
    dquatmul_left(q) * exp_map_derivative_at_zero()
}
