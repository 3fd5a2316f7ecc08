//! Per-frame translation and rotation errors and their summaries.
//!
//! [`ErrorReport::to_json`] writes a JSON object with the keys
//!
//! * `frames`: number of compared frames;
//! * `median_t`, `mean_t`: meters; `median_r`, `mean_r`: degrees;
//! * `per_frame`: `[[t_err, r_err], …]` in frame order;
//! * `cdf`: `[[threshold_m, fraction], …]` of the translation errors, with
//!   evenly spaced thresholds from 0 to the largest error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::Trajectory;
use crate::pose::rotation_error_deg;

pub const DEFAULT_CDF_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("estimate has {est} frames but ground truth has {gt}")]
    LengthMismatch { est: usize, gt: usize },
    #[error("timestamps differ at frame {index}: {est} vs {gt}")]
    TimestampMismatch { index: usize, est: f64, gt: f64 },
    #[error("nothing to evaluate")]
    Empty,
    #[error("need at least 2 CDF points, got {0}")]
    CdfPoints(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub frames: usize,
    pub median_t: f64,
    pub median_r: f64,
    pub mean_t: f64,
    pub mean_r: f64,
    pub per_frame: Vec<(f64, f64)>,
    pub cdf: Vec<(f64, f64)>,
}

impl ErrorReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One-line human summary.
    pub fn summary_line(&self) -> String {
        format!(
            "frames {}  median {:.4} m {:.4} deg  mean {:.4} m {:.4} deg",
            self.frames, self.median_t, self.median_r, self.mean_t, self.mean_r
        )
    }
}

/// Median with the midpoint of the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Fraction of `errors` at or below each of `points` thresholds spread evenly
/// over `[0, max]`. The last threshold is the maximum itself.
pub fn cdf(errors: &[f64], points: usize) -> Vec<(f64, f64)> {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let max = *sorted.last().unwrap_or(&0.0);
    let n = sorted.len() as f64;
    (0..points)
        .map(|k| {
            let thr = if k + 1 == points {
                max
            } else {
                max * k as f64 / (points - 1) as f64
            };
            let count = sorted.partition_point(|e| *e <= thr);
            (thr, count as f64 / n)
        })
        .collect()
}

pub fn compare(est: &Trajectory, gt: &Trajectory) -> Result<ErrorReport, EvalError> {
    compare_with_cdf(est, gt, DEFAULT_CDF_POINTS)
}

/// Frame-by-frame errors of `est` against `gt`; timestamps must match exactly.
pub fn compare_with_cdf(
    est: &Trajectory,
    gt: &Trajectory,
    cdf_points: usize,
) -> Result<ErrorReport, EvalError> {
    if est.len() != gt.len() {
        return Err(EvalError::LengthMismatch {
            est: est.len(),
            gt: gt.len(),
        });
    }
    if est.is_empty() {
        return Err(EvalError::Empty);
    }
    if cdf_points < 2 {
        return Err(EvalError::CdfPoints(cdf_points));
    }
    let mut per_frame = Vec::with_capacity(est.len());
    for (index, ((te, pe), (tg, pg))) in est.records().iter().zip(gt.records()).enumerate() {
        if te != tg {
            return Err(EvalError::TimestampMismatch {
                index,
                est: *te,
                gt: *tg,
            });
        }
        per_frame.push(((pe.t - pg.t).norm(), rotation_error_deg(pe.q(), pg.q())));
    }
    let t: Vec<f64> = per_frame.iter().map(|e| e.0).collect();
    let r: Vec<f64> = per_frame.iter().map(|e| e.1).collect();
    Ok(ErrorReport {
        frames: per_frame.len(),
        median_t: median(&t).expect("non-empty"),
        median_r: median(&r).expect("non-empty"),
        mean_t: mean(&t),
        mean_r: mean(&r),
        cdf: cdf(&t, cdf_points),
        per_frame,
    })
}

/// Translation (m) and rotation (deg) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub t: f64,
    pub r: f64,
}

/// Averages over a set of sequence reports.
///
/// The `*_scene` fields first average the sequences of each scene and then
/// average across scenes; the `*_seq` fields average across all sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenes: usize,
    pub sequences: usize,
    pub avg_median_scene: ErrorPair,
    pub avg_median_seq: ErrorPair,
    pub avg_mean_scene: ErrorPair,
    pub avg_mean_seq: ErrorPair,
}

pub fn aggregate(reports: &[(String, ErrorReport)]) -> Result<Summary, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::Empty);
    }
    let pick = |f: &dyn Fn(&ErrorReport) -> ErrorPair| -> (ErrorPair, ErrorPair) {
        let avg = |items: &[ErrorPair]| ErrorPair {
            t: items.iter().map(|e| e.t).sum::<f64>() / items.len() as f64,
            r: items.iter().map(|e| e.r).sum::<f64>() / items.len() as f64,
        };
        let all: Vec<ErrorPair> = reports.iter().map(|(_, r)| f(r)).collect();
        // scenes in order of first appearance
        let mut scenes: Vec<(&str, Vec<ErrorPair>)> = Vec::new();
        for (name, r) in reports {
            match scenes.iter_mut().find(|(s, _)| *s == name.as_str()) {
                Some((_, v)) => v.push(f(r)),
                None => scenes.push((name, vec![f(r)])),
            }
        }
        let per_scene: Vec<ErrorPair> = scenes.iter().map(|(_, v)| avg(v)).collect();
        (avg(&per_scene), avg(&all))
    };
    let (median_scene, median_seq) = pick(&|r| ErrorPair {
        t: r.median_t,
        r: r.median_r,
    });
    let (mean_scene, mean_seq) = pick(&|r| ErrorPair {
        t: r.mean_t,
        r: r.mean_r,
    });
    let mut names: Vec<&str> = reports.iter().map(|(s, _)| s.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    Ok(Summary {
        scenes: names.len(),
        sequences: reports.len(),
        avg_median_scene: median_scene,
        avg_median_seq: median_seq,
        avg_mean_scene: mean_scene,
        avg_mean_seq: mean_seq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Pose;
    use crate::quat::UnitQuaternion;
    use nalgebra::Vector3;

    fn line(offsets: &[f64]) -> Trajectory {
        let poses: Vec<Pose> = offsets
            .iter()
            .map(|x| Pose::new(Vector3::new(*x, 0.0, 0.0), UnitQuaternion::identity()))
            .collect();
        Trajectory::from_poses(&poses, 1.0).unwrap()
    }

    fn report(median_t: f64, mean_t: f64) -> ErrorReport {
        ErrorReport {
            frames: 1,
            median_t,
            median_r: 10.0 * median_t,
            mean_t,
            mean_r: 10.0 * mean_t,
            per_frame: vec![],
            cdf: vec![],
        }
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let t = line(&[0.0, 1.0, 2.0]);
        let r = compare(&t, &t).unwrap();
        assert_eq!((r.median_t, r.mean_t, r.median_r, r.mean_r), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(r.cdf.last().unwrap().1, 1.0);
    }

    #[test]
    fn three_frame_fixture() {
        let gt = line(&[0.0, 0.0, 0.0]);
        let est = line(&[1.0, -2.0, 3.0]);
        let r = compare(&est, &gt).unwrap();
        assert_eq!(r.median_t, 2.0);
        assert_eq!(r.mean_t, 2.0);
        assert_eq!(r.per_frame, vec![(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
    }

    #[test]
    fn mismatches_are_errors() {
        assert!(matches!(
            compare(&line(&[0.0]), &line(&[0.0, 1.0])),
            Err(EvalError::LengthMismatch { .. })
        ));
        let gt = line(&[0.0, 1.0]);
        let shifted = Trajectory::new(vec![(0.0, Pose::identity()), (1.5, Pose::identity())]).unwrap();
        assert!(matches!(
            compare(&shifted, &gt),
            Err(EvalError::TimestampMismatch { index: 1, .. })
        ));
        let empty = Trajectory::default();
        assert_eq!(compare(&empty, &empty), Err(EvalError::Empty));
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let c = cdf(&[0.3, 0.1, 0.7, 0.2, 0.2], 11);
        assert_eq!(c.len(), 11);
        assert!(c.windows(2).all(|w| w[0].1 <= w[1].1 && w[0].0 <= w[1].0));
        assert_eq!(*c.last().unwrap(), (0.7, 1.0));
        assert_eq!(c[0], (0.0, 0.0));
    }

    #[test]
    fn aggregate_examples() {
        let one = aggregate(&[("a".into(), report(1.5, 2.0))]).unwrap();
        assert_eq!(one.avg_median_scene, ErrorPair { t: 1.5, r: 15.0 });
        assert_eq!(one.avg_mean_seq, ErrorPair { t: 2.0, r: 20.0 });

        let two = aggregate(&[("a".into(), report(1.0, 1.0)), ("b".into(), report(3.0, 3.0))]).unwrap();
        assert_eq!(two.avg_median_scene.t, 2.0);

        // scene a: sequences 1, 2; scene b: sequence 6
        let grouped = aggregate(&[
            ("a".into(), report(1.0, 2.0)),
            ("b".into(), report(6.0, 9.0)),
            ("a".into(), report(2.0, 4.0)),
        ])
        .unwrap();
        assert_eq!((grouped.scenes, grouped.sequences), (2, 3));
        assert_eq!(grouped.avg_median_scene.t, (1.5 + 6.0) / 2.0);
        assert_eq!(grouped.avg_median_seq.t, 3.0);
        assert_eq!(grouped.avg_mean_scene.t, (3.0 + 9.0) / 2.0);
        assert_eq!(grouped.avg_mean_seq.t, 5.0);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let gt = line(&[0.0, 0.0]);
        let est = line(&[0.5, 1.0]);
        let r = compare_with_cdf(&est, &gt, 5).unwrap();
        let back = ErrorReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(compare_with_cdf(&est, &gt, 1).is_err());
    }
}
