// Error reports, their JSON form, and scene/sequence averages.

use mapfuse::eval::{aggregate, compare_with_cdf};
use mapfuse::sim::{corrupt_absolute, generate_trajectory, NoiseModel, Shape};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut reports = Vec::new();
    for (scene, shape, sigma) in [
        ("office", Shape::Loop, 0.2),
        ("office", Shape::Loop, 0.4),
        ("street", Shape::RandomWalk, 1.0),
    ] {
        let gt = generate_trajectory(shape, 300, 0.1, 1)?;
        let est = corrupt_absolute(
            &gt,
            &NoiseModel {
                abs_t_sigma: sigma,
                abs_r_sigma: 2.0,
                seed: (sigma * 10.0) as u64,
                ..NoiseModel::default()
            },
        )?;
        let report = compare_with_cdf(&est, &gt, 5)?;
        println!("{scene}: {}", report.summary_line());
        reports.push((scene.to_owned(), report));
    }
    let cdf = &reports[0].1.cdf;
    println!("cdf of the first run: {cdf:.3?}");

    let summary = aggregate(&reports)?;
    println!(
        "median over scenes {:.3} m / {:.2} deg, over sequences {:.3} m / {:.2} deg",
        summary.avg_median_scene.t, summary.avg_median_scene.r, summary.avg_median_seq.t, summary.avg_median_seq.r
    );
    let json = reports[2].1.to_json();
    println!("report document: {} bytes, starts {:?}", json.len(), &json[..30]);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
