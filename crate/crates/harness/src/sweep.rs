//! Batch runs: one cell per (mode, varied value), `trials_per_cell` seeded
//! trials per cell, per-trial rows and per-cell summaries.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use arn_core::executive::{run_trial_on, TrialConfig, TrialError, TrialMetrics};
use arn_core::human::Mode;

use crate::stats::{self, Comparison};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error("trial {cell} seed {seed}: {source}")]
    Trial {
        cell: CellKey,
        seed: u64,
        #[source]
        source: TrialError,
    },
    #[error(transparent)]
    Map(TrialError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// The parameter swept across cells, besides the mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vary {
    /// Modes only.
    Mode,
    NRobots(Vec<usize>),
    /// Per-robot door-open probability of the idle human.
    Laziness(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub base: TrialConfig,
    #[serde(default = "default_vary")]
    pub vary: Vary,
    /// Crossed with `vary`.
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    pub trials_per_cell: usize,
    #[serde(default)]
    pub seed_base: u64,
}

fn default_vary() -> Vary {
    Vary::Mode
}

fn default_modes() -> Vec<Mode> {
    Mode::ALL.to_vec()
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, SweepError> {
        let spec: SweepSpec =
            serde_json::from_str(text).map_err(|e| SweepError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: &str| Err(SweepError::InvalidSpec(m.into()));
        if self.trials_per_cell == 0 {
            return bad("trials_per_cell must be at least 1");
        }
        if self.modes.is_empty() {
            return bad("modes must not be empty");
        }
        if self
            .seed_base
            .checked_add(self.trials_per_cell as u64)
            .is_none()
        {
            return bad("seed range overflows");
        }
        match &self.vary {
            Vary::Mode => {}
            Vary::NRobots(ns) if ns.is_empty() || ns.contains(&0) => {
                return bad("n_robots values must be non-empty and positive")
            }
            Vary::Laziness(ps) if ps.is_empty() || ps.iter().any(|p| !(0.0..=1.0).contains(p)) => {
                return bad("laziness values must be non-empty probabilities")
            }
            _ => {}
        }
        self.base
            .validate()
            .map_err(|e| SweepError::InvalidSpec(e.to_string()))
    }

    /// Cells in output order: varied value outer, mode inner.
    pub fn cells(&self) -> Vec<CellKey> {
        let values: Vec<(usize, Option<f64>)> = match &self.vary {
            Vary::Mode => vec![(self.base.n_robots, self.base.human.laziness_override)],
            Vary::NRobots(ns) => ns
                .iter()
                .map(|&n| (n, self.base.human.laziness_override))
                .collect(),
            Vary::Laziness(ps) => ps.iter().map(|&p| (self.base.n_robots, Some(p))).collect(),
        };
        values
            .into_iter()
            .flat_map(|(n_robots, laziness)| {
                self.modes.iter().map(move |&mode| CellKey {
                    mode,
                    n_robots,
                    laziness,
                })
            })
            .collect()
    }

    pub fn config(&self, cell: &CellKey, seed: u64) -> TrialConfig {
        let mut cfg = self.base.clone();
        cfg.mode = cell.mode;
        cfg.n_robots = cell.n_robots;
        cfg.human.laziness_override = cell.laziness;
        cfg.seed = seed;
        cfg
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub mode: Mode,
    pub n_robots: usize,
    pub laziness: Option<f64>,
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/n={}", self.mode, self.n_robots)?;
        if let Some(p) = self.laziness {
            write!(f, "/p={p}")?;
        }
        Ok(())
    }
}

/// One `trials.csv` row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub mode: Mode,
    pub n_robots: usize,
    pub laziness: Option<f64>,
    pub seed: u64,
    pub t_h: u64,
    /// Per-robot completion times joined with `;`.
    pub t_r: String,
    pub t_all: u64,
    pub t_r_last: u64,
    pub team_time: u64,
    pub door_openings: u32,
    pub replans: u32,
    pub timed_out: bool,
}

impl TrialRow {
    fn new(cell: &CellKey, seed: u64, m: &TrialMetrics) -> Self {
        Self {
            mode: cell.mode,
            n_robots: cell.n_robots,
            laziness: cell.laziness,
            seed,
            t_h: m.t_h,
            t_r: m
                .t_r
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            t_all: m.t_all,
            t_r_last: m.t_r_last,
            team_time: m.team_time,
            door_openings: m.door_openings,
            replans: m.replans,
            timed_out: m.timed_out,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    fn of(x: &[f64]) -> Self {
        Self {
            mean: stats::mean(x),
            sd: stats::sd(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    THuman,
    TAll,
    TRLast,
    TeamTime,
    DoorOpenings,
    Replans,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::THuman,
        Metric::TAll,
        Metric::TRLast,
        Metric::TeamTime,
        Metric::DoorOpenings,
        Metric::Replans,
    ];

    pub fn of(self, m: &TrialMetrics) -> f64 {
        match self {
            Metric::THuman => m.t_h as f64,
            Metric::TAll => m.t_all as f64,
            Metric::TRLast => m.t_r_last as f64,
            Metric::TeamTime => m.team_time as f64,
            Metric::DoorOpenings => m.door_openings as f64,
            Metric::Replans => m.replans as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: CellKey,
    pub n: usize,
    pub timeouts: usize,
    pub t_h: MeanSd,
    pub t_all: MeanSd,
    pub t_r_last: MeanSd,
    pub team_time: MeanSd,
    pub door_openings: MeanSd,
    pub replans: MeanSd,
}

impl CellSummary {
    pub fn summarize(cell: CellKey, trials: &[TrialMetrics]) -> Self {
        let col = |k: Metric| MeanSd::of(&trials.iter().map(|m| k.of(m)).collect::<Vec<_>>());
        Self {
            cell,
            n: trials.len(),
            timeouts: trials.iter().filter(|m| m.timed_out).count(),
            t_h: col(Metric::THuman),
            t_all: col(Metric::TAll),
            t_r_last: col(Metric::TRLast),
            team_time: col(Metric::TeamTime),
            door_openings: col(Metric::DoorOpenings),
            replans: col(Metric::Replans),
        }
    }

    pub fn get(&self, k: Metric) -> MeanSd {
        match k {
            Metric::THuman => self.t_h,
            Metric::TAll => self.t_all,
            Metric::TRLast => self.t_r_last,
            Metric::TeamTime => self.team_time,
            Metric::DoorOpenings => self.door_openings,
            Metric::Replans => self.replans,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub summary: CellSummary,
    /// In seed order.
    pub trials: Vec<TrialMetrics>,
}

impl CellResult {
    pub fn column(&self, k: Metric) -> Vec<f64> {
        self.trials.iter().map(|m| k.of(m)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub cells: Vec<CellResult>,
}

/// Feedback against each baseline in the same (n_robots, laziness) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub a: CellKey,
    pub b: CellKey,
    pub metric: Metric,
    pub result: Comparison,
}

impl SweepResult {
    pub fn cell(&self, key: &CellKey) -> Option<&CellResult> {
        self.cells.iter().find(|c| &c.summary.cell == key)
    }

    pub fn rows(&self) -> Vec<TrialRow> {
        self.cells
            .iter()
            .flat_map(|c| {
                c.trials.iter().enumerate().map(move |(i, m)| {
                    TrialRow::new(&c.summary.cell, self.spec.seed_base + i as u64, m)
                })
            })
            .collect()
    }

    /// Compares every non-Feedback cell against the Feedback cell with the
    /// same robot count and laziness, for each metric. Empty when there are
    /// fewer than two trials per cell.
    pub fn comparisons(&self) -> Vec<ModeComparison> {
        let mut out = Vec::new();
        for a in self
            .cells
            .iter()
            .filter(|c| c.summary.cell.mode == Mode::Feedback)
        {
            let ak = a.summary.cell;
            for b in &self.cells {
                let bk = b.summary.cell;
                if bk.mode == Mode::Feedback
                    || bk.n_robots != ak.n_robots
                    || bk.laziness != ak.laziness
                {
                    continue;
                }
                for metric in Metric::ALL {
                    if let Ok(result) = stats::compare(&a.column(metric), &b.column(metric)) {
                        out.push(ModeComparison {
                            a: ak,
                            b: bk,
                            metric,
                            result,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "units": {
                "time": "seconds",
                "door_openings": "count",
                "replans": "count",
                "note": "times are simulated seconds; published reference tables state no unit (presumably minutes), so only orderings are comparable",
            },
            "trials_per_cell": self.spec.trials_per_cell,
            "seed_base": self.spec.seed_base,
            "cells": self.cells.iter().map(|c| &c.summary).collect::<Vec<_>>(),
            "comparisons": self.comparisons(),
        })
    }

    /// Writes `trials.csv` and `summary.json` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<(), SweepError> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("trials.csv"))?;
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        let text = serde_json::to_string_pretty(&self.summary_json())?;
        std::fs::write(dir.join("summary.json"), text + "\n")?;
        Ok(())
    }
}

/// Runs every cell of `spec` on the rayon pool. Results depend only on the
/// spec: each trial is seeded by `seed_base + trial index` and collected in
/// order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let map = Arc::new(spec.base.load_map().map_err(SweepError::Map)?);
    let cells = spec.cells();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..spec.trials_per_cell as u64).map(move |i| (c, spec.seed_base + i)))
        .collect();
    let metrics: Vec<TrialMetrics> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            run_trial_on(&spec.config(&cells[c], seed), Arc::clone(&map))
                .map(|out| out.metrics)
                .map_err(|source| SweepError::Trial {
                    cell: cells[c],
                    seed,
                    source,
                })
        })
        .collect::<Result<_, _>>()?;
    let cells = cells
        .into_iter()
        .zip(metrics.chunks(spec.trials_per_cell))
        .map(|(key, trials)| CellResult {
            summary: CellSummary::summarize(key, trials),
            trials: trials.to_vec(),
        })
        .collect();
    Ok(SweepResult {
        spec: spec.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(vary: Vary, trials: usize) -> SweepSpec {
        SweepSpec {
            base: TrialConfig {
                n_robots: 1,
                objects_per_robot: 1,
                ..TrialConfig::default()
            },
            vary,
            modes: vec![Mode::Feedback, Mode::NoComm],
            trials_per_cell: trials,
            seed_base: 7,
        }
    }

    #[test]
    fn parse_defaults_and_errors() {
        let spec = SweepSpec::parse(r#"{"trials_per_cell": 4}"#).unwrap();
        assert_eq!(spec.vary, Vary::Mode);
        assert_eq!(spec.modes, Mode::ALL.to_vec());
        assert_eq!(spec.cells().len(), 3);

        let spec = SweepSpec::parse(
            r#"{"vary": {"n_robots": [1, 2]}, "modes": ["nocomm"], "trials_per_cell": 1}"#,
        )
        .unwrap();
        assert_eq!(
            spec.cells().iter().map(|c| c.n_robots).collect::<Vec<_>>(),
            vec![1, 2]
        );

        for bad in [
            r#"{"trials_per_cell": 0}"#,
            r#"{"trials_per_cell": 1, "modes": []}"#,
            r#"{"trials_per_cell": 1, "vary": {"laziness": [1.5]}}"#,
            r#"{"trials_per_cell": 1, "vary": {"n_robots": [0]}}"#,
            r#"{"trials_per_cell": 1, "bogus": 1}"#,
            r#"{"trials_per_cell": 2, "seed_base": 18446744073709551615}"#,
        ] {
            assert!(
                matches!(SweepSpec::parse(bad), Err(SweepError::InvalidSpec(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn same_seed_same_row() {
        let mut spec = small(Vary::Mode, 1);
        spec.modes = vec![Mode::Feedback, Mode::Feedback];
        let rows = run_sweep(&spec).unwrap().rows();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], rows[1]);
    }

    #[test]
    fn summary_means_match_rows() {
        let res = run_sweep(&small(Vary::Laziness(vec![0.3, 0.9]), 5)).unwrap();
        let rows = res.rows();
        assert_eq!(rows.len(), 4 * 5);
        for c in &res.cells {
            let k = c.summary.cell;
            let mine: Vec<&TrialRow> = rows
                .iter()
                .filter(|r| r.mode == k.mode && r.laziness == k.laziness)
                .collect();
            assert_eq!(mine.len(), c.summary.n);
            let mean = mine.iter().map(|r| r.t_all as f64).sum::<f64>() / mine.len() as f64;
            assert!((mean - c.summary.t_all.mean).abs() < 1e-9);
            let doors =
                mine.iter().map(|r| r.door_openings as f64).sum::<f64>() / mine.len() as f64;
            assert!((doors - c.summary.door_openings.mean).abs() < 1e-9);
            assert_eq!(
                mine.iter().map(|r| r.seed).collect::<Vec<_>>(),
                (7..12).collect::<Vec<_>>()
            );
        }
        // Feedback against NoComm at each laziness value, every metric.
        assert_eq!(res.comparisons().len(), 2 * Metric::ALL.len());
    }

    #[test]
    fn independent_of_thread_count() {
        let spec = small(Vary::NRobots(vec![1, 2]), 3);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_sweep(&spec).unwrap().rows())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn writes_csv_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let res = run_sweep(&small(Vary::Mode, 2)).unwrap();
        res.write(dir.path()).unwrap();
        let mut rd = csv::Reader::from_path(dir.path().join("trials.csv")).unwrap();
        let back: Vec<TrialRow> = rd.deserialize().collect::<Result<_, _>>().unwrap();
        assert_eq!(back, res.rows());
        let summary: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("summary.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(summary["units"]["time"], "seconds");
        assert_eq!(summary["cells"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn sd_uses_n_minus_one() {
        let trials: Vec<TrialMetrics> = [10, 20, 30]
            .iter()
            .map(|&t| TrialMetrics::new(t, vec![0], 0, 0, false))
            .collect();
        let s = CellSummary::summarize(
            CellKey {
                mode: Mode::NoComm,
                n_robots: 1,
                laziness: None,
            },
            &trials,
        );
        assert_eq!(s.t_h.mean, 20.0);
        assert!((s.t_h.sd - 10.0).abs() < 1e-12);
    }
}
