// Densifying sparse GPS fixes onto frame timestamps.

use mapfuse::sim::{generate_trajectory, interpolate_gps, GpsTrack, Shape};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let gt = generate_trajectory(Shape::RandomWalk, 500, 0.5, 3)?;
    let track = GpsTrack::from_trajectory(&gt, 25)?;
    let stamps: Vec<f64> = gt.timestamps().collect();
    let dense = interpolate_gps(&track, &stamps);

    let errs: Vec<f64> = dense
        .iter()
        .zip(gt.poses())
        .map(|(g, p)| (g - p.t.xy()).norm())
        .collect();
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    println!(
        "{} fixes -> {} positions, mean gap to truth {:.3} m, worst {:.3} m",
        track.samples().len(),
        dense.len(),
        errs.iter().sum::<f64>() / errs.len() as f64,
        worst
    );
    // outside the fixes the track is held at its end points
    let beyond = interpolate_gps(&track, &[-1.0, 1e6]);
    println!("clamped: {:?} {:?}", beyond[0].as_slice(), beyond[1].as_slice());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
