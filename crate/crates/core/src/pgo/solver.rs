use nalgebra::{DMatrix, DVector, Vector3};

use super::constraint::{Constraint, POSE_DOF};
use super::{PgoConfig, PgoError};
use crate::pose::Pose;
use crate::quat::{quat_exp, LogQuaternion};

/// Poses of one window, updated on the manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    poses: Vec<Pose>,
}

impl StateVector {
    pub fn new(poses: Vec<Pose>) -> Self {
        Self { poses }
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn into_poses(self) -> Vec<Pose> {
        self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Dimension of the update, `6T`.
    pub fn manifold_dim(&self) -> usize {
        POSE_DOF * self.poses.len()
    }

    /// `z ⊞ Δz`: `t ← t + δt`, `q ← q · exp(δθ)`.
    pub fn retract(&self, delta: &DVector<f64>) -> Self {
        assert_eq!(delta.len(), self.manifold_dim(), "update dimension");
        let poses = self
            .poses
            .iter()
            .enumerate()
            .map(|(n, p)| {
                let d = delta.fixed_rows::<6>(POSE_DOF * n);
                let dt = Vector3::new(d[0], d[1], d[2]);
                let dw = LogQuaternion::new(d[3], d[4], d[5]);
                Pose::new(p.t + dt, *p.q() * quat_exp(&dw))
            })
            .collect();
        Self { poses }
    }
}

/// `E(z) = Σ_c ‖Lᵀ (k_c − f_c(z))‖²`.
pub fn objective(constraints: &[Constraint], z: &StateVector) -> Result<f64, PgoError> {
    let mut e = 0.0;
    for c in constraints {
        e += c.residual(z)?.norm_squared();
    }
    Ok(e)
}

/// Stacks every constraint's whitened Jacobian and residual, in order.
pub fn linearize(
    constraints: &[Constraint],
    z: &StateVector,
) -> Result<(DMatrix<f64>, DVector<f64>), PgoError> {
    let rows: usize = constraints.iter().map(|c| c.kind().residual_dim()).sum();
    let cols = z.manifold_dim();
    let mut jac = DMatrix::zeros(rows, cols);
    let mut res = DVector::zeros(rows);
    let mut row = 0;
    for c in constraints {
        c.linearize_into(z, &mut jac, &mut res, row)?;
        row += c.kind().residual_dim();
    }
    Ok((jac, res))
}

/// Minimizer of `‖J Δ − r‖²`.
///
/// Rows are rotated one at a time into an upper-triangular `R` by Givens
/// rotations, which keeps the work inside the band of the window Jacobian.
/// If a diagonal of `R` vanishes the system is refactored by column-pivoted
/// QR, which either solves it or names the columns that are not determined.
pub(crate) fn least_squares_step(
    jac: &DMatrix<f64>,
    res: &DVector<f64>,
) -> Result<DVector<f64>, PgoError> {
    match givens_solve(jac, res) {
        Some(x) => Ok(x),
        None => pivoted_solve(jac, res),
    }
}

/// Relative size below which a diagonal of `R` counts as zero.
const RANK_TOL: f64 = 1e-10;

fn givens_solve(jac: &DMatrix<f64>, res: &DVector<f64>) -> Option<DVector<f64>> {
    let (m, n) = jac.shape();
    // row-major R with its right-hand side; `end[c]` is one past the last
    // non-zero of row c, zero while the row is still empty
    let mut r = vec![0.0; n * n];
    let mut d = vec![0.0; n];
    let mut end = vec![0usize; n];
    let mut x = vec![0.0; n];
    for row in 0..m {
        let mut lo = n;
        let mut hi = 0;
        for c in 0..n {
            x[c] = jac[(row, c)];
            if x[c] != 0.0 {
                lo = lo.min(c);
                hi = c + 1;
            }
        }
        let mut y = res[row];
        let mut c = lo;
        while c < hi {
            if x[c] == 0.0 {
                c += 1;
                continue;
            }
            let rc = &mut r[c * n..(c + 1) * n];
            if end[c] == 0 {
                rc[c..hi].copy_from_slice(&x[c..hi]);
                d[c] = y;
                end[c] = hi;
                break;
            }
            let h = rc[c].hypot(x[c]);
            let (cs, sn) = (rc[c] / h, x[c] / h);
            let span = end[c].max(hi);
            for k in c..span {
                let (a, b) = (rc[k], x[k]);
                rc[k] = cs * a + sn * b;
                x[k] = cs * b - sn * a;
            }
            x[c] = 0.0;
            let (a, b) = (d[c], y);
            d[c] = cs * a + sn * b;
            y = cs * b - sn * a;
            end[c] = span;
            hi = span;
            c += 1;
        }
    }

    let scale = (0..n).map(|c| r[c * n + c].abs()).fold(0.0, f64::max);
    if (0..n).any(|c| !(r[c * n + c].abs() > RANK_TOL * scale)) {
        return None;
    }
    let mut sol = DVector::zeros(n);
    for c in (0..n).rev() {
        let mut acc = d[c];
        for k in c + 1..end[c] {
            acc -= r[c * n + k] * sol[k];
        }
        sol[c] = acc / r[c * n + c];
    }
    Some(sol)
}

fn pivoted_solve(jac: &DMatrix<f64>, res: &DVector<f64>) -> Result<DVector<f64>, PgoError> {
    let (m, n) = jac.shape();
    // zero rows keep the factorization square so pivoting still finds the free columns
    let padded = if m < n { jac.clone().resize_vertically(n, 0.0) } else { jac.clone() };
    let res = if m < n { res.clone().resize_vertically(n, 0.0) } else { res.clone() };
    let qr = padded.col_piv_qr();
    let r = qr.r();

    // original column index of each pivoted position
    let mut order = DMatrix::from_fn(1, n, |_, c| c as f64);
    qr.p().permute_columns(&mut order);

    let scale = (0..n).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    let tol = scale * RANK_TOL;
    let deficient: Vec<usize> = (0..n)
        .filter(|&k| !(r[(k, k)].abs() > tol) || scale == 0.0)
        .map(|k| order[(0, k)] as usize)
        .collect();
    if !deficient.is_empty() {
        let mut columns = deficient;
        columns.sort_unstable();
        return Err(PgoError::RankDeficient { columns });
    }

    let mut qtr = res;
    qr.q_tr_mul(&mut qtr);
    let upper = r.view((0, 0), (n, n)).upper_triangle();
    let mut x = upper
        .solve_upper_triangular(&qtr.rows(0, n).into_owned())
        .ok_or_else(|| PgoError::RankDeficient { columns: Vec::new() })?;
    qr.p().inv_permute_rows(&mut x);
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub state: StateVector,
    /// Gauss-Newton iterations performed, counting the one that met the
    /// step tolerance.
    pub iterations: usize,
    pub converged: bool,
    pub initial_objective: f64,
    pub final_objective: f64,
    /// `‖Δz‖` of the last step taken.
    pub last_step: f64,
}

/// Undamped Gauss-Newton on the pose manifold starting from `z0`.
pub fn gauss_newton_solve(
    constraints: &[Constraint],
    z0: &StateVector,
    cfg: &PgoConfig,
) -> Result<SolveReport, PgoError> {
    cfg.validate()?;
    let initial_objective = objective(constraints, z0)?;
    let mut z = z0.clone();
    let mut iterations = 0;
    let mut converged = false;
    let mut last_step = f64::INFINITY;
    while iterations < cfg.max_iters {
        iterations += 1;
        let (jac, res) = linearize(constraints, &z)?;
        let delta = least_squares_step(&jac, &res)?;
        last_step = delta.norm();
        z = z.retract(&delta);
        if last_step < cfg.step_tol {
            converged = true;
            break;
        }
    }
    let final_objective = objective(constraints, &z)?;
    Ok(SolveReport {
        state: z,
        iterations,
        converged,
        initial_objective,
        final_objective,
        last_step,
    })
}
