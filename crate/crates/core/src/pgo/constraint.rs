use nalgebra::{DMatrix, DVector, Matrix3, Matrix3x4, Matrix4, Vector3, Vector4};
use serde::Serialize;

use super::solver::StateVector;
use super::PgoError;
use crate::quat::{dquatmul_left, dquatmul_right, dquatrotate, right_perturbation_jacobian, UnitQuaternion};

/// Manifold coordinates per pose: `[δt, δθ]`.
pub(crate) const POSE_DOF: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConstraintKind {
    AbsTranslation,
    AbsRotation,
    RelTranslation,
    RelRotation,
}

impl ConstraintKind {
    pub fn is_relative(&self) -> bool {
        matches!(self, Self::RelTranslation | Self::RelRotation)
    }

    pub fn residual_dim(&self) -> usize {
        match self {
            Self::AbsTranslation | Self::RelTranslation => 3,
            Self::AbsRotation | Self::RelRotation => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Translation(Vector3<f64>),
    Rotation(UnitQuaternion),
}

/// One whitened residual block of the pose graph.
#[derive(Debug, Clone)]
pub struct Constraint {
    kind: ConstraintKind,
    i: usize,
    j: Option<usize>,
    observation: Observation,
    covariance: DMatrix<f64>,
    // Lᵀ from S = L Lᵀ
    whitening: DMatrix<f64>,
}

impl Constraint {
    fn build(
        kind: ConstraintKind,
        i: usize,
        j: Option<usize>,
        observation: Observation,
        covariance: DMatrix<f64>,
    ) -> Result<Self, PgoError> {
        let n = kind.residual_dim();
        if covariance.shape() != (n, n) {
            return Err(PgoError::CovarianceShape {
                expected: n,
                rows: covariance.nrows(),
                cols: covariance.ncols(),
            });
        }
        if j == Some(i) {
            return Err(PgoError::SelfLoop(i));
        }
        let sym = (&covariance - covariance.transpose()).amax();
        if !(sym <= 1e-12 * covariance.amax().max(1.0)) {
            return Err(PgoError::NotPositiveDefinite);
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or(PgoError::NotPositiveDefinite)?;
        let whitening = chol.l().transpose();
        Ok(Self {
            kind,
            i,
            j,
            observation,
            covariance,
            whitening,
        })
    }

    pub fn abs_translation(i: usize, t: Vector3<f64>, cov: Matrix3<f64>) -> Result<Self, PgoError> {
        Self::build(
            ConstraintKind::AbsTranslation,
            i,
            None,
            Observation::Translation(t),
            to_dyn(&cov),
        )
    }

    pub fn abs_rotation(i: usize, q: UnitQuaternion, cov: Matrix4<f64>) -> Result<Self, PgoError> {
        Self::build(
            ConstraintKind::AbsRotation,
            i,
            None,
            Observation::Rotation(q),
            to_dyn(&cov),
        )
    }

    /// Observed translation of pose `i` in the frame of observer `j`.
    pub fn rel_translation(
        i: usize,
        j: usize,
        t: Vector3<f64>,
        cov: Matrix3<f64>,
    ) -> Result<Self, PgoError> {
        Self::build(
            ConstraintKind::RelTranslation,
            i,
            Some(j),
            Observation::Translation(t),
            to_dyn(&cov),
        )
    }

    /// Observed `q_j⁻¹ q_i`.
    pub fn rel_rotation(
        i: usize,
        j: usize,
        q: UnitQuaternion,
        cov: Matrix4<f64>,
    ) -> Result<Self, PgoError> {
        Self::build(
            ConstraintKind::RelRotation,
            i,
            Some(j),
            Observation::Rotation(q),
            to_dyn(&cov),
        )
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> Option<usize> {
        self.j
    }

    pub fn observation(&self) -> &Observation {
        &self.observation
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// `Lᵀ`, the whitening applied to residual and Jacobian.
    pub fn whitening(&self) -> &DMatrix<f64> {
        &self.whitening
    }

    fn check_indices(&self, len: usize) -> Result<(), PgoError> {
        for index in std::iter::once(self.i).chain(self.j) {
            if index >= len {
                return Err(PgoError::IndexOutOfRange { index, len });
            }
        }
        Ok(())
    }

    /// The un-whitened prediction `f_c(z)` and observation `k_c` as plain
    /// vectors. Rotation observations are flipped onto the hemisphere of the
    /// prediction.
    fn predict(&self, z: &StateVector) -> (DVector<f64>, DVector<f64>) {
        let poses = z.poses();
        let pi = &poses[self.i];
        match (self.kind, &self.observation) {
            (ConstraintKind::AbsTranslation, Observation::Translation(k)) => {
                (DVector::from_column_slice(pi.t.as_slice()), DVector::from_column_slice(k.as_slice()))
            }
            (ConstraintKind::AbsRotation, Observation::Rotation(k)) => {
                let f = pi.q().to_vector4();
                (to_dvec4(&f), to_dvec4(&aligned(k, &f)))
            }
            (ConstraintKind::RelTranslation, Observation::Translation(k)) => {
                let pj = &poses[self.j.expect("relative constraint")];
                let f = pj.q().rotate(&(pi.t - pj.t));
                (DVector::from_column_slice(f.as_slice()), DVector::from_column_slice(k.as_slice()))
            }
            (ConstraintKind::RelRotation, Observation::Rotation(k)) => {
                let pj = &poses[self.j.expect("relative constraint")];
                let f = (pj.q().inverse() * *pi.q()).to_vector4();
                (to_dvec4(&f), to_dvec4(&aligned(k, &f)))
            }
            _ => unreachable!("observation type fixed by constructor"),
        }
    }

    /// Whitened residual `Lᵀ (k_c − f_c(z))`.
    pub fn residual(&self, z: &StateVector) -> Result<DVector<f64>, PgoError> {
        self.check_indices(z.len())?;
        let (f, k) = self.predict(z);
        Ok(&self.whitening * (k - f))
    }

    /// Whitened residual and the whitened Jacobian of `f_c` with respect to
    /// the `6T` manifold coordinates of `z`.
    pub fn residual_and_jacobian(
        &self,
        z: &StateVector,
    ) -> Result<(DVector<f64>, DMatrix<f64>), PgoError> {
        let rows = self.kind.residual_dim();
        let mut jac = DMatrix::zeros(rows, POSE_DOF * z.len());
        let mut res = DVector::zeros(rows);
        self.linearize_into(z, &mut jac, &mut res, 0)?;
        Ok((res, jac))
    }

    /// Writes the whitened residual and Jacobian rows starting at `row`. Only
    /// the non-zero column blocks are touched.
    pub(crate) fn linearize_into(
        &self,
        z: &StateVector,
        jac: &mut DMatrix<f64>,
        res: &mut DVector<f64>,
        row: usize,
    ) -> Result<(), PgoError> {
        self.check_indices(z.len())?;
        let (f, k) = self.predict(z);
        let n = self.kind.residual_dim();
        res.rows_mut(row, n).copy_from(&(&self.whitening * (k - f)));
        let poses = z.poses();
        let pi = &poses[self.i];
        let ci = POSE_DOF * self.i;
        match self.kind {
            ConstraintKind::AbsTranslation => {
                let w = self.whitening.fixed_view::<3, 3>(0, 0);
                jac.fixed_view_mut::<3, 3>(row, ci).copy_from(&w);
            }
            ConstraintKind::AbsRotation => {
                let w = self.whitening.fixed_view::<4, 4>(0, 0);
                let block = right_perturbation_jacobian(pi.q());
                jac.fixed_view_mut::<4, 3>(row, ci + 3).copy_from(&(w * block));
            }
            ConstraintKind::RelTranslation => {
                let w = self.whitening.fixed_view::<3, 3>(0, 0);
                let j = self.j.expect("relative constraint");
                let cj = POSE_DOF * j;
                let pj = &poses[j];
                let (d_t, d_q): (Matrix3<f64>, Matrix3x4<f64>) = dquatrotate(pj.q(), &(pi.t - pj.t));
                let d_t = w * d_t;
                jac.fixed_view_mut::<3, 3>(row, ci).copy_from(&d_t);
                jac.fixed_view_mut::<3, 3>(row, cj).copy_from(&(-d_t));
                let d_theta = w * (d_q * right_perturbation_jacobian(pj.q()));
                jac.fixed_view_mut::<3, 3>(row, cj + 3).copy_from(&d_theta);
            }
            ConstraintKind::RelRotation => {
                let w = self.whitening.fixed_view::<4, 4>(0, 0);
                let j = self.j.expect("relative constraint");
                let cj = POSE_DOF * j;
                let qj_inv = poses[j].q().inverse();
                let d_i = dquatmul_left(&qj_inv) * right_perturbation_jacobian(pi.q());
                // conj(q_j)·q_i = R(q_i)·conj(q_j); d conj(q)/dq = diag(1, −1, −1, −1)
                let conj = Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0));
                let d_j = dquatmul_right(pi.q()) * conj * right_perturbation_jacobian(poses[j].q());
                jac.fixed_view_mut::<4, 3>(row, ci + 3).copy_from(&(w * d_i));
                jac.fixed_view_mut::<4, 3>(row, cj + 3).copy_from(&(w * d_j));
            }
        }
        Ok(())
    }
}

fn aligned(k: &UnitQuaternion, f: &Vector4<f64>) -> Vector4<f64> {
    let k = k.to_vector4();
    if k.dot(f) < 0.0 {
        -k
    } else {
        k
    }
}

fn to_dvec4(v: &Vector4<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

fn to_dyn<const N: usize>(m: &nalgebra::SMatrix<f64, N, N>) -> DMatrix<f64> {
    DMatrix::from_column_slice(N, N, m.as_slice())
}
