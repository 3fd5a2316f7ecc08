// Temporal median filtering removes isolated outliers.

use mapfuse::eval::compare;
use mapfuse::pgo::temporal_median_filter;
use mapfuse::sim::{generate_trajectory, Shape};
use nalgebra::Vector3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let gt = generate_trajectory(Shape::FigureEight, 600, 0.05, 0)?;
    let spiky = gt.with_poses(
        gt.poses()
            .enumerate()
            .map(|(i, p)| {
                let mut p = *p;
                if i % 60 == 30 {
                    p.t += Vector3::new(5.0, -3.0, 1.0);
                }
                p
            })
            .collect(),
    );
    for window in [1, 11, 51] {
        let r = compare(&temporal_median_filter(&spiky, window)?, &gt)?;
        println!("window {window:>2}: mean {:.4} m, max {:.4} m", r.mean_t, r.cdf.last().expect("cdf").0);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
