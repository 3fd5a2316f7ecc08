//! Oracles shared by the integration tests and the acceptance harness. None
//! of them reuse the library's own derivative or solver code.

#![allow(dead_code)]

use mapfuse::io::Trajectory;
use mapfuse::pgo::{Constraint, StateVector};
use mapfuse::pose::{integrate, Pose, RelativePose};
use mapfuse::quat::{quat_exp, LogQuaternion, UnitQuaternion};
use mapfuse::sim::{corrupt_absolute, corrupt_vo, generate_trajectory, NoiseModel, Shape};
use nalgebra::{DMatrix, DVector, Vector3, Vector4};
use rand::Rng;

/// Uniform on the unit sphere in R⁴, flipped to `u ≥ 0`.
pub fn random_unit_quaternion(rng: &mut impl Rng) -> UnitQuaternion {
    loop {
        let c = Vector4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = c.norm();
        if n > 0.1 && n <= 1.0 {
            let c = if c[0] < 0.0 { -c / n } else { c / n };
            return UnitQuaternion::from_vector4(&c).expect("normalized");
        }
    }
}

pub fn random_pose(rng: &mut impl Rng, extent: f64) -> Pose {
    let t = Vector3::from_fn(|_, _| rng.random_range(-extent..extent));
    Pose::new(t, random_unit_quaternion(rng))
}

/// Applies `z ⊞ δ` by hand: translations add, rotations right-multiply by
/// `exp(δθ)`.
pub fn perturb(z: &StateVector, delta: &[f64]) -> StateVector {
    let poses = z
        .poses()
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let d = &delta[6 * n..6 * n + 6];
            let q = *p.q() * quat_exp(&LogQuaternion::new(d[3], d[4], d[5]));
            Pose::new(p.t + Vector3::new(d[0], d[1], d[2]), q)
        })
        .collect();
    StateVector::new(poses)
}

/// Central differences of the whitened prediction `−r(z ⊞ δ)` in each of the
/// `6T` manifold directions.
pub fn finite_difference_jacobian(c: &Constraint, z: &StateVector, h: f64) -> DMatrix<f64> {
    let dim = 6 * z.len();
    let rows = c.kind().residual_dim();
    let mut jac = DMatrix::zeros(rows, dim);
    for k in 0..dim {
        let mut d = vec![0.0; dim];
        d[k] = h;
        let plus = c.residual(&perturb(z, &d)).unwrap();
        d[k] = -h;
        let minus = c.residual(&perturb(z, &d)).unwrap();
        // r = Lᵀ(k − f) so ∂(Lᵀ f) = −∂r
        jac.set_column(k, &(-(plus - minus) / (2.0 * h)));
    }
    jac
}

/// Objective recomputed from residuals only.
pub fn energy(constraints: &[Constraint], z: &StateVector) -> f64 {
    constraints
        .iter()
        .map(|c| c.residual(z).unwrap().norm_squared())
        .sum()
}

/// Nelder-Mead with the dimension-adaptive coefficients of Gao and Han,
/// restarted from the best vertex until a restart no longer improves.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], scale: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        f(x)
    };
    let mut best: (Vec<f64>, f64) = (x0.to_vec(), f64::INFINITY);
    let mut step = scale;
    loop {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let start = best.0.clone();
        let f0 = eval(&start);
        simplex.push((start.clone(), f0));
        for k in 0..n {
            let mut x = start.clone();
            x[k] += step;
            let fx = eval(&x);
            simplex.push((x, fx));
        }
        let before = best.1.min(f0);
        for _ in 0..200_000 {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            if spread <= 1e-15 * (1.0 + simplex[0].1.abs()) {
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex[..n].iter().map(|v| v.0[k]).sum::<f64>() / nf)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                (0..n).map(|k| centroid[k] + t * (simplex[n].0[k] - centroid[k])).collect()
            };
            let xr = along(-alpha);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(-alpha * beta);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let outside = fr < simplex[n].1;
                let xc = along(if outside { -gamma } else { gamma });
                let fc = eval(&xc);
                if fc < fr.min(simplex[n].1) {
                    simplex[n] = (xc, fc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for v in simplex.iter_mut().skip(1) {
                        let x: Vec<f64> = (0..n).map(|k| x_best[k] + delta * (v.0[k] - x_best[k])).collect();
                        let fx = eval(&x);
                        *v = (x, fx);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best.1 {
            best = simplex[0].clone();
        }
        step *= 0.5;
        if before - best.1 <= 1e-13 || evals.get() >= max_evals {
            return best;
        }
    }
}

/// Linear interpolation written directly from the two bracketing samples.
pub fn interpolate_oracle(samples: &[(f64, [f64; 2])], t: f64) -> [f64; 2] {
    if t <= samples[0].0 {
        return samples[0].1;
    }
    let last = samples[samples.len() - 1];
    if t >= last.0 {
        return last.1;
    }
    for w in samples.windows(2) {
        let ((t0, p0), (t1, p1)) = (w[0], w[1]);
        if t >= t0 && t <= t1 {
            let a = (t - t0) / (t1 - t0);
            return [p0[0] + a * (p1[0] - p0[0]), p0[1] + a * (p1[1] - p0[1])];
        }
    }
    unreachable!("t inside the sample range")
}

/// Noise levels of the drift-versus-noise scenario.
pub fn fusion_noise(seed: u64) -> NoiseModel {
    NoiseModel {
        abs_t_sigma: 0.5,
        abs_r_sigma: 5.0,
        vo_t_sigma: 0.01,
        vo_r_sigma: 0.1,
        vo_t_bias: 0.01,
        seed,
    }
}

pub struct Scenario {
    pub gt: Trajectory,
    pub abs: Trajectory,
    pub vo: Vec<RelativePose>,
}

impl Scenario {
    pub fn loop_with(frames: usize, nm: &NoiseModel) -> Self {
        let gt = generate_trajectory(Shape::Loop, frames, 0.1, nm.seed).unwrap();
        let abs = corrupt_absolute(&gt, nm).unwrap();
        let vo = corrupt_vo(&gt, nm).unwrap();
        Self { gt, abs, vo }
    }

    /// Odometry dead-reckoned from the true first pose.
    pub fn integrated_vo(&self) -> Trajectory {
        self.gt.with_poses(integrate(self.gt.pose(0).unwrap(), &self.vo))
    }
}

pub fn mean_translation_error(est: &Trajectory, gt: &Trajectory) -> f64 {
    let errs: Vec<f64> = est
        .poses()
        .zip(gt.poses())
        .map(|(a, b)| (a.t - b.t).norm())
        .collect();
    errs.iter().sum::<f64>() / errs.len() as f64
}

pub fn max_rotation_gap_deg(a: &Trajectory, b: &Trajectory) -> f64 {
    a.poses()
        .zip(b.poses())
        .map(|(p, q)| {
            let (pu, pv) = (p.q().scalar(), p.q().vector());
            let (qu, qv) = (q.q().scalar(), q.q().vector());
            // vector part of conj(p)·q
            let v = qv * pu - pv * qu - pv.cross(qv);
            let u = pu * qu + pv.dot(qv);
            2.0 * v.norm().atan2(u.abs()).to_degrees()
        })
        .fold(0.0, f64::max)
}

pub fn dvec(values: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(values)
}

pub use mapfuse::pgo::ConstraintKind;

pub const KINDS: [ConstraintKind; 4] = [
    ConstraintKind::AbsTranslation,
    ConstraintKind::AbsRotation,
    ConstraintKind::RelTranslation,
    ConstraintKind::RelRotation,
];

fn random_spd<const N: usize>(rng: &mut impl Rng) -> nalgebra::SMatrix<f64, N, N> {
    let a = nalgebra::SMatrix::<f64, N, N>::from_fn(|_, _| rng.random_range(-1.0..1.0));
    a * a.transpose() + nalgebra::SMatrix::<f64, N, N>::identity() * 0.5
}

fn small_rotation(rng: &mut impl Rng, max_angle: f64) -> UnitQuaternion {
    let w = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)) * (0.5 * max_angle);
    quat_exp(&LogQuaternion(w))
}

/// A random constraint of `kind` on a random two-pose state, observed close to
/// its prediction so the hemisphere choice is stable under small perturbations.
pub fn random_constraint(kind: ConstraintKind, rng: &mut impl Rng) -> (Constraint, StateVector) {
    let z = StateVector::new(vec![random_pose(rng, 5.0), random_pose(rng, 5.0)]);
    let (p0, p1) = (z.poses()[0], z.poses()[1]);
    let jitter = Vector3::from_fn(|_, _| rng.random_range(-0.3..0.3));
    let c = match kind {
        ConstraintKind::AbsTranslation => Constraint::abs_translation(0, p0.t + jitter, random_spd(rng)),
        ConstraintKind::AbsRotation => {
            Constraint::abs_rotation(0, *p0.q() * small_rotation(rng, 0.5), random_spd(rng))
        }
        ConstraintKind::RelTranslation => {
            let f = p1.q().rotate(&(p0.t - p1.t));
            Constraint::rel_translation(0, 1, f + jitter, random_spd(rng))
        }
        ConstraintKind::RelRotation => {
            let f = p1.q().inverse() * *p0.q();
            Constraint::rel_rotation(0, 1, f * small_rotation(rng, 0.5), random_spd(rng))
        }
    }
    .unwrap();
    (c, z)
}

/// Worst `‖J − J_fd‖_F / ‖J_fd‖_F` over `count` random instances of `kind`.
pub fn worst_jacobian_error(kind: ConstraintKind, count: usize, rng: &mut impl Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let (c, z) = random_constraint(kind, rng);
        let (_, analytic) = c.residual_and_jacobian(&z).unwrap();
        let numeric = finite_difference_jacobian(&c, &z, 1e-6);
        worst = worst.max((analytic - &numeric).norm() / numeric.norm());
    }
    worst
}

fn noisy(rng: &mut impl Rng, p: &Pose) -> Pose {
    let dt = Vector3::from_fn(|_, _| rng.random_range(-0.2..0.2));
    Pose::new(p.t + dt, *p.q() * small_rotation(rng, 0.2))
}

/// Three true poses, absolute observations and odometry with seeded noise,
/// and a start state perturbed away from the observations.
pub fn three_pose_window(rng: &mut impl Rng, sigma_rot: f64) -> (Vec<Constraint>, StateVector) {
    use mapfuse::pose::relative_pose;
    let truth: Vec<Pose> = (0..3).map(|_| random_pose(rng, 2.0)).collect();
    let mut cs = Vec::new();
    let cov_t = nalgebra::Matrix3::identity();
    let cov_r = nalgebra::Matrix4::identity() * sigma_rot;
    for i in 0..3 {
        let a = noisy(rng, &truth[i]);
        cs.push(Constraint::abs_translation(i, a.t, cov_t).unwrap());
        cs.push(Constraint::abs_rotation(i, *a.q(), cov_r).unwrap());
        if i + 1 < 3 {
            let v = relative_pose(&truth[i], &truth[i + 1]);
            let dt = Vector3::from_fn(|_, _| rng.random_range(-0.05..0.05));
            let q = v.rotation() * small_rotation(rng, 0.05);
            cs.push(Constraint::rel_translation(i, i + 1, v.t + dt, cov_t).unwrap());
            cs.push(Constraint::rel_rotation(i, i + 1, q, cov_r).unwrap());
        }
    }
    let z0 = StateVector::new(truth.iter().map(|p| noisy(rng, p)).collect());
    (cs, z0)
}

/// Collinear pure-translation window of three poses: rotations identity and
/// exactly observed, positions and odometry along x only. Returns the
/// constraints, a start state and the hand-solved x coordinates.
pub fn pure_translation_window() -> (Vec<Constraint>, StateVector, [f64; 3]) {
    let a = [0.3, 1.1, 1.8];
    let r = [-0.9, -0.75];
    let id = UnitQuaternion::identity();
    let cov_t = nalgebra::Matrix3::identity();
    let cov_r = nalgebra::Matrix4::identity() * 10.0;
    let mut cs = Vec::new();
    for i in 0..3 {
        cs.push(Constraint::abs_translation(i, Vector3::new(a[i], 0.0, 0.0), cov_t).unwrap());
        cs.push(Constraint::abs_rotation(i, id, cov_r).unwrap());
        if i < 2 {
            cs.push(Constraint::rel_translation(i, i + 1, Vector3::new(r[i], 0.0, 0.0), cov_t).unwrap());
            cs.push(Constraint::rel_rotation(i, i + 1, id, cov_r).unwrap());
        }
    }
    // normal equations [[2,−1,0],[−1,3,−1],[0,−1,2]] t = b, inverse = adj / 8
    let b = [a[0] + r[0], a[1] - r[0] + r[1], a[2] - r[1]];
    let x = [
        (5.0 * b[0] + 2.0 * b[1] + b[2]) / 8.0,
        (2.0 * b[0] + 4.0 * b[1] + 2.0 * b[2]) / 8.0,
        (b[0] + 2.0 * b[1] + 5.0 * b[2]) / 8.0,
    ];
    let z0 = StateVector::new(vec![
        Pose::new(Vector3::new(0.0, 0.2, -0.1), quat_exp(&LogQuaternion::new(0.02, -0.03, 0.05))),
        Pose::new(Vector3::new(1.5, -0.3, 0.0), id),
        Pose::new(Vector3::new(2.2, 0.1, 0.3), id),
    ]);
    (cs, z0, x)
}
