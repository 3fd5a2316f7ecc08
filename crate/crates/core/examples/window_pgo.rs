// One pose-graph window solved by Gauss-Newton on the pose manifold.

use mapfuse::pgo::{build_window_graph, gauss_newton_solve, PgoConfig, StateVector};
use mapfuse::pose::{relative_pose, Pose};
use mapfuse::quat::{quat_exp, LogQuaternion};
use nalgebra::Vector3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let truth: Vec<Pose> = (0..7)
        .map(|i| {
            let a = 0.3 * i as f64;
            Pose::new(Vector3::new(a, a.sin(), 0.0), quat_exp(&LogQuaternion::new(0.0, 0.0, a / 2.0)))
        })
        .collect();
    // absolute observations off by a few decimeters, odometry exact
    let observed: Vec<Pose> = truth
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let k = i as f64;
            Pose::new(p.t + Vector3::new(0.3 * k.sin(), -0.2 * k.cos(), 0.1), *p.q())
        })
        .collect();
    let vo: Vec<_> = truth.windows(2).map(|w| relative_pose(&w[0], &w[1])).collect();

    let cfg = PgoConfig::default();
    let graph = build_window_graph(&observed, &vo, &cfg)?;
    println!("{} constraints over {} poses", graph.len(), observed.len());

    let report = gauss_newton_solve(&graph, &StateVector::new(observed.clone()), &cfg)?;
    println!(
        "{} iterations, objective {:.4} -> {:.4}, converged {}",
        report.iterations, report.initial_objective, report.final_objective, report.converged
    );
    let err = |ps: &[Pose]| ps.iter().zip(&truth).map(|(a, b)| (a.t - b.t).norm()).sum::<f64>() / 7.0;
    println!("mean error {:.3} m -> {:.3} m", err(&observed), err(report.state.poses()));
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
