// Writing and reading the trajectory, odometry and GPS text formats.

use mapfuse::io::{read_gps, read_trajectory, read_vo, write_gps, write_trajectory, write_vo};
use mapfuse::sim::{corrupt_vo, generate_trajectory, GpsTrack, NoiseModel, Shape};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("mapfuse-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let gt = generate_trajectory(Shape::Loop, 100, 0.1, 0)?;
    let vo = corrupt_vo(&gt, &NoiseModel { vo_t_sigma: 0.01, seed: 1, ..NoiseModel::default() })?;
    let stamped: Vec<_> = gt.timestamps().skip(1).zip(vo).collect();
    let gps = GpsTrack::from_trajectory(&gt, 10)?;

    write_trajectory(&gt, dir.join("gt.txt"))?;
    write_vo(&stamped, dir.join("vo.txt"))?;
    write_gps(&gps, dir.join("gps.txt"))?;

    let text = std::fs::read_to_string(dir.join("gt.txt"))?;
    println!("{}", text.lines().take(3).collect::<Vec<_>>().join("\n"));

    // quaternions are renormalized on read, so compare to a tolerance
    let traj = read_trajectory(dir.join("gt.txt"))?;
    let pose_gap = traj
        .poses()
        .zip(gt.poses())
        .map(|(a, b)| (a.t - b.t).amax().max((a.q().to_vector4() - b.q().to_vector4()).amax()))
        .fold(0.0, f64::max);
    let vo_back = read_vo(dir.join("vo.txt"))?;
    let vo_gap = vo_back
        .iter()
        .zip(&stamped)
        .map(|((ta, a), (tb, b))| (ta - tb).abs().max((a.t - b.t).amax()).max((a.w.0 - b.w.0).amax()))
        .fold(0.0, f64::max);
    assert!(pose_gap <= 1e-12 && vo_gap <= 1e-12 && vo_back.len() == stamped.len());
    assert_eq!(read_gps(dir.join("gps.txt"))?, gps);
    println!("read back: poses within {pose_gap:.1e}, odometry within {vo_gap:.1e}, gps exact");
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
