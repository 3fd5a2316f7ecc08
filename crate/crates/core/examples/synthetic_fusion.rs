// Noisy absolute poses fused with drifting odometry on a simulated loop.

use mapfuse::eval::compare;
use mapfuse::pgo::{fuse_trajectory, PgoConfig};
use mapfuse::pose::integrate;
use mapfuse::sim::{corrupt_absolute, corrupt_vo, generate_trajectory, NoiseModel, Shape};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let gt = generate_trajectory(Shape::Loop, 1000, 0.1, 0)?;
    let noise = NoiseModel {
        abs_t_sigma: 0.5,
        abs_r_sigma: 5.0,
        vo_t_sigma: 0.01,
        vo_r_sigma: 0.1,
        vo_t_bias: 0.01,
        seed: 42,
    };
    let abs = corrupt_absolute(&gt, &noise)?;
    let vo = corrupt_vo(&gt, &noise)?;
    let dead = gt.with_poses(integrate(gt.pose(0).expect("non-empty"), &vo));

    println!("{:<22} {:>8} {:>8}", "", "mean m", "mean deg");
    let show = |name: &str, r: &mapfuse::ErrorReport| {
        println!("{name:<22} {:>8.3} {:>8.2}", r.mean_t, r.mean_r)
    };
    show("absolute", &compare(&abs, &gt)?);
    show("integrated odometry", &compare(&dead, &gt)?);
    for spacing in [1, 10, 150] {
        let cfg = PgoConfig {
            spacing,
            ..PgoConfig::default()
        };
        let fused = fuse_trajectory(&abs, &vo, &cfg)?;
        show(&format!("fused, spacing {spacing}"), &compare(&fused.trajectory, &gt)?);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
