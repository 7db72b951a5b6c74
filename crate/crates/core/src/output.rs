//! Persisted run files: a per-(step, road) CSV and a JSON summary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{Summary, Trajectory};

pub const STEPS_FILE: &str = "steps.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("no run found in {0}")]
    MissingRun(PathBuf),
}

/// One row of the steps file.
///
/// `x`, `x_hat` and the violation magnitudes describe the state at `k`;
/// `d`, `tier` and `clamped` describe the transition out of it and are empty
/// on the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub k: usize,
    pub road: u32,
    pub x: f64,
    pub x_hat: f64,
    pub d: Option<f64>,
    pub tier: Option<u8>,
    pub clamped: Option<bool>,
    pub upper_violation: f64,
    pub floor_violation: f64,
}

pub fn step_rows(traj: &Trajectory) -> Vec<StepRow> {
    let mut rows = Vec::with_capacity(traj.states.len() * traj.scenario.graph.len());
    for (k, state) in traj.states.iter().enumerate() {
        let step = traj.steps.get(k);
        for (i, check) in traj.checks[k].iter().enumerate() {
            rows.push(StepRow {
                k,
                road: check.road.0,
                x: state.x[i],
                x_hat: state.x_hat[i],
                d: step.map(|s| s.input.d[i]),
                tier: step.map(|s| s.tiers[i].level()),
                clamped: step.map(|s| s.input.clamped[i]),
                upper_violation: check.upper_violation,
                floor_violation: check.floor_violation,
            });
        }
    }
    rows
}

/// Writes `steps.csv` and `summary.json` into `dir`, creating it if needed.
pub fn write_trajectory(traj: &Trajectory, dir: &Path) -> Result<Summary, OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let steps_path = dir.join(STEPS_FILE);
    let csv_err = |source| OutputError::Csv {
        path: steps_path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&steps_path).map_err(csv_err)?;
    for row in step_rows(traj) {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: steps_path.clone(),
        source,
    })?;

    let summary = traj.summary();
    let summary_path = dir.join(SUMMARY_FILE);
    let io_err = |source| OutputError::Io {
        path: summary_path.clone(),
        source,
    };
    let mut out = BufWriter::new(File::create(&summary_path).map_err(io_err)?);
    serde_json::to_writer_pretty(&mut out, &summary).map_err(|source| OutputError::Json {
        path: summary_path.clone(),
        source,
    })?;
    out.write_all(b"\n").map_err(io_err)?;
    out.flush().map_err(io_err)?;
    Ok(summary)
}

pub fn read_steps(dir: &Path) -> Result<Vec<StepRow>, OutputError> {
    let path = dir.join(STEPS_FILE);
    if !path.is_file() {
        return Err(OutputError::MissingRun(dir.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(&path).map_err(|source| OutputError::Csv {
        path: path.clone(),
        source,
    })?;
    r.deserialize()
        .collect::<Result<Vec<StepRow>, _>>()
        .map_err(|source| OutputError::Csv { path, source })
}

pub fn read_summary(dir: &Path) -> Result<Summary, OutputError> {
    let path = dir.join(SUMMARY_FILE);
    if !path.is_file() {
        return Err(OutputError::MissingRun(dir.to_path_buf()));
    }
    let text = fs::read_to_string(&path).map_err(|source| OutputError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json { path, source })
}

/// Human-readable digest of a summary.
pub fn format_report(s: &Summary) -> String {
    let fraction = s
        .full_tier_fraction
        .map_or_else(|| "n/a".to_string(), |f| format!("{:.4}", f));
    let min_after = s
        .min_xhat_after_full_tier
        .map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
    let mut out = String::new();
    out.push_str(&format!(
        "roads {}  steps {}  seed {}\n",
        s.roads, s.steps, s.seed
    ));
    out.push_str(&format!(
        "total x: initial {:.6}  final {:.6}\n",
        s.total_x_per_step.first().copied().unwrap_or(0.0),
        s.total_x_per_step.last().copied().unwrap_or(0.0)
    ));
    out.push_str(&format!(
        "total x_hat: initial {:.6}  final {:.6}  max drift {:e}\n",
        s.total_xhat_initial, s.total_xhat_final, s.max_frs_drift
    ));
    out.push_str(&format!(
        "min x_hat {:.6}  after all-tier-0 steps {}\n",
        s.min_xhat, min_after
    ));
    out.push_str(&format!(
        "tiers {:?}  all-tier-0 steps {} ({})\n",
        s.tier_histogram, s.full_tier_steps, fraction
    ));
    out.push_str(&format!(
        "violations: upper {}  floor {}  floor after tier-0 {}\n",
        s.violation_counts.upper,
        s.violation_counts.floor,
        s.violation_counts.floor_after_full_tier
    ));
    out.push_str(&format!(
        "clamped withdrawals {}  unreachable constraints {}",
        s.clamp_events, s.unreachable_constraints
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{load_scenario, run};

    fn two_road(horizon: usize) -> Trajectory {
        let doc = format!(
            r#"{{"version": 1,
                "graph": {{"n": 2, "edges": [[1, 2], [2, 1]], "inlets": [1], "outlets": [2]}},
                "horizon": 1, "seed": 9, "p": {{"min": 0.2, "max": 0.8}}}}"#
        );
        let mut s = load_scenario(&doc).unwrap();
        s.horizon = horizon;
        run(&s).unwrap()
    }

    #[test]
    fn row_counts() {
        let dir = tempfile::tempdir().unwrap();
        write_trajectory(&two_road(0), dir.path()).unwrap();
        let rows = read_steps(dir.path()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.k == 0 && r.d.is_none()));

        write_trajectory(&two_road(1), dir.path()).unwrap();
        let rows = read_steps(dir.path()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(
            rows.iter().map(|r| (r.k, r.road)).collect::<Vec<_>>(),
            vec![(0, 1), (0, 2), (1, 1), (1, 2)]
        );
        assert!(rows[0].tier.is_some() && rows[3].tier.is_none());
    }

    #[test]
    fn header_and_round_trip() {
        let traj = two_road(25);
        let dir = tempfile::tempdir().unwrap();
        let summary = write_trajectory(&traj, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(STEPS_FILE)).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "k,road,x,x_hat,d,tier,clamped,upper_violation,floor_violation"
        );
        let rows = read_steps(dir.path()).unwrap();
        assert_eq!(rows, step_rows(&traj));
        assert_eq!(read_summary(dir.path()).unwrap(), summary);
    }

    #[test]
    fn missing_run() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_steps(dir.path()),
            Err(OutputError::MissingRun(_))
        ));
        assert!(matches!(
            read_summary(dir.path()),
            Err(OutputError::MissingRun(_))
        ));
    }

    #[test]
    fn report_mentions_key_figures() {
        let report = format_report(&two_road(3).summary());
        assert!(report.contains("steps 3"));
        assert!(report.contains("min x_hat"));
    }
}
