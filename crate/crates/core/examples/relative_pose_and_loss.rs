// Observer-frame relative poses, chaining them, and the weighted pose loss.

use mapfuse::pose::{
    advance, compose, integrate, mapnet_loss, pose_distance_h, relative_pose, LossConfig, Pose,
};
use mapfuse::quat::UnitQuaternion;
use nalgebra::Vector3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let poses: Vec<Pose> = (0..21)
        .map(|i| {
            let a = 0.1 * i as f64;
            Pose::new(
                Vector3::new(a.cos(), a.sin(), 0.0) * 4.0,
                UnitQuaternion::from_axis_angle(&Vector3::z(), a),
            )
        })
        .collect();

    let v = relative_pose(&poses[3], &poses[4]);
    println!("frame 3 seen from frame 4: t = {:?}, w = {:?}", v.t.as_slice(), v.w.0.as_slice());
    let p3 = compose(&poses[4], &v);
    let p4 = advance(&poses[3], &v);
    println!(
        "compose error {:.1e}, advance error {:.1e}",
        (p3.t - poses[3].t).norm(),
        (p4.t - poses[4].t).norm()
    );

    let vo: Vec<_> = poses.windows(2).map(|w| relative_pose(&w[0], &w[1])).collect();
    let chained = integrate(&poses[0], &vo);
    println!("dead reckoning end error {:.1e}", (chained[20].t - poses[20].t).norm());

    let cfg = LossConfig::default();
    println!("h(p, p) = {}", pose_distance_h(&poses[0], &poses[0], cfg.beta, cfg.gamma));
    let shifted: Vec<Pose> = poses
        .iter()
        .map(|p| Pose::new(p.t + Vector3::new(0.1, 0.0, 0.0), *p.q()))
        .collect();
    println!("loss of exact prediction {}", mapnet_loss(&poses, &poses, &cfg)?);
    println!("loss with a 0.1 m offset {:.4}", mapnet_loss(&shifted, &poses, &cfg)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
