//! Command-line pipeline: `simulate`, `fuse`, `eval`.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::eval::{compare_with_cdf, EvalError, DEFAULT_CDF_POINTS};
use crate::io::{self, IoError};
use crate::pgo::{fuse_trajectory, temporal_median_filter, PgoConfig, PgoError, DEFAULT_MEDIAN_WINDOW};
use crate::sim::{self, GpsTrack, NoiseModel, Shape, SimError};

#[derive(Debug, Parser)]
#[command(name = "mapfuse", version, about = "Fuse absolute poses with visual odometry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate ground truth plus corrupted absolute poses and odometry.
    Simulate(SimulateArgs),
    /// Refine absolute poses with odometry by moving-window pose-graph optimization.
    Fuse(FuseArgs),
    /// Compare an estimated trajectory against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// loop, figure-eight or random-walk
    #[arg(long, default_value = "loop")]
    pub shape: String,
    #[arg(long, default_value_t = 1000)]
    pub frames: usize,
    /// Distance between consecutive frames, meters.
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub abs_t_sigma: f64,
    /// Degrees.
    #[arg(long, default_value_t = 0.0)]
    pub abs_r_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub vo_t_sigma: f64,
    /// Degrees per step.
    #[arg(long, default_value_t = 0.0)]
    pub vo_r_sigma: f64,
    /// Meters per step along the observer z axis.
    #[arg(long, default_value_t = 0.0)]
    pub vo_t_bias: f64,
    #[arg(long)]
    pub out_gt: PathBuf,
    #[arg(long)]
    pub out_abs: PathBuf,
    #[arg(long)]
    pub out_vo: PathBuf,
    #[arg(long, requires = "gps_every")]
    pub out_gps: Option<PathBuf>,
    /// Keep one GPS fix every N frames.
    #[arg(long, requires = "out_gps")]
    pub gps_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub abs: PathBuf,
    #[arg(long)]
    pub vo: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Poses per window.
    #[arg(long, default_value_t = PgoConfig::default().window)]
    pub window: usize,
    /// Frames between window poses.
    #[arg(long, default_value_t = PgoConfig::default().spacing)]
    pub spacing: usize,
    #[arg(long, default_value_t = PgoConfig::default().sigma_rot)]
    pub sigma_rot: f64,
    #[arg(long, default_value_t = PgoConfig::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = PgoConfig::default().step_tol)]
    pub tol: f64,
    /// Median-filter the result over W frames (51 when given without a value).
    #[arg(long, num_args = 0..=1, default_missing_value = "51")]
    pub median_window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub out_report: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CDF_POINTS)]
    pub cdf_points: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 3,
            Self::Numerical(_) => 4,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<PgoError> for CliError {
    fn from(e: PgoError) -> Self {
        match e {
            PgoError::RankDeficient { .. } => Self::Numerical(e.to_string()),
            PgoError::Config(_) => Self::Usage(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => Self::Usage(e.to_string()),
            SimError::Trajectory(_) => Self::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::CdfPoints(_) => Self::Usage(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

fn report_io(e: std::io::Error) -> CliError {
    CliError::Data(e.to_string())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Fuse(a) => fuse(a, out),
        Command::Eval(a) => eval(a, out),
    }
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let shape: Shape = a.shape.parse()?;
    let nm = NoiseModel {
        abs_t_sigma: a.abs_t_sigma,
        abs_r_sigma: a.abs_r_sigma,
        vo_t_sigma: a.vo_t_sigma,
        vo_r_sigma: a.vo_r_sigma,
        vo_t_bias: a.vo_t_bias,
        seed: a.seed,
    };
    nm.validate()?;
    if a.gps_every == Some(0) {
        return Err(CliError::Usage("--gps-every must be at least 1".into()));
    }
    let gt = sim::generate_trajectory(shape, a.frames, a.step, a.seed)?;
    let abs = sim::corrupt_absolute(&gt, &nm)?;
    let vo = sim::corrupt_vo(&gt, &nm)?;
    let stamped: Vec<_> = gt.timestamps().skip(1).zip(vo).collect();

    io::write_trajectory(&gt, &a.out_gt)?;
    io::write_trajectory(&abs, &a.out_abs)?;
    io::write_vo(&stamped, &a.out_vo)?;
    if let (Some(path), Some(every)) = (&a.out_gps, a.gps_every) {
        let track = GpsTrack::from_trajectory(&gt, every).map_err(|e| CliError::Data(e.to_string()))?;
        io::write_gps(&track, path)?;
    }
    writeln!(out, "simulated {} frames ({shape})", gt.len()).map_err(report_io)?;
    Ok(())
}

fn fuse(a: &FuseArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = PgoConfig {
        window: a.window,
        spacing: a.spacing,
        sigma_rot: a.sigma_rot,
        max_iters: a.max_iters,
        step_tol: a.tol,
    };
    cfg.validate()?;
    if let Some(w) = a.median_window {
        if w == 0 || w % 2 == 0 {
            return Err(CliError::Usage(format!("--median-window must be odd, got {w}")));
        }
    }
    let abs = io::read_trajectory(&a.abs)?;
    let vo = io::read_vo(&a.vo)?;
    if abs.len() < 2 {
        return Err(CliError::Data(format!(
            "{} holds {} poses, need at least 2",
            a.abs.display(),
            abs.len()
        )));
    }
    if vo.len() + 1 != abs.len() {
        return Err(CliError::Data(format!(
            "{} poses need {} odometry lines, found {}",
            abs.len(),
            abs.len() - 1,
            vo.len()
        )));
    }
    for (n, ((ts, _), expect)) in vo.iter().zip(abs.timestamps().skip(1)).enumerate() {
        if *ts != expect {
            return Err(CliError::Data(format!(
                "odometry record {} has timestamp {ts}, expected {expect}",
                n + 1
            )));
        }
    }
    let rel: Vec<_> = vo.into_iter().map(|(_, v)| v).collect();
    let fusion = fuse_trajectory(&abs, &rel, &cfg)?;
    let mut traj = fusion.trajectory;
    if let Some(w) = a.median_window {
        traj = temporal_median_filter(&traj, w)?;
    }
    io::write_trajectory(&traj, &a.out)?;
    let iters: usize = fusion.windows.iter().map(|w| w.iterations).sum();
    let unconverged = fusion.windows.iter().filter(|w| !w.converged).count();
    writeln!(
        out,
        "fused {} frames: {} windows over {} grid poses, {} iterations, {} not converged",
        traj.len(),
        fusion.windows.len(),
        fusion.grid.len(),
        iters,
        unconverged
    )
    .map_err(report_io)?;
    if a.median_window.is_some() {
        writeln!(out, "median filter window {}", a.median_window.unwrap_or(DEFAULT_MEDIAN_WINDOW))
            .map_err(report_io)?;
    }
    Ok(())
}

fn eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.cdf_points < 2 {
        return Err(CliError::Usage("--cdf-points must be at least 2".into()));
    }
    let est = io::read_trajectory(&a.est)?;
    let gt = io::read_trajectory(&a.gt)?;
    let report = compare_with_cdf(&est, &gt, a.cdf_points)?;
    std::fs::write(&a.out_report, report.to_json() + "\n")
        .map_err(|e| CliError::Data(format!("{}: {e}", a.out_report.display())))?;
    writeln!(out, "{}", report.summary_line()).map_err(report_io)?;
    Ok(())
}
