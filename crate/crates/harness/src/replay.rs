//! Recomputes trial metrics from an event log.

use std::collections::BTreeMap;

use serde::Serialize;

use arn_core::executive::TrialMetrics;
use arn_core::sim::{EventType, SimEvent};
use arn_core::world::{DoorKind, WorldMap};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplaySummary {
    pub end: u64,
    pub events: usize,
    pub by_type: BTreeMap<String, usize>,
    /// None when the log has no `trial_end` line.
    pub finished: Option<bool>,
    pub metrics: TrialMetrics,
}

/// Robots are numbered by the highest index in the log; robots without a
/// `robot_done` line and a human without `human_done` count as running to
/// the end of the log.
pub fn summarize(events: &[SimEvent], m: &WorldMap) -> ReplaySummary {
    let end = events.last().map_or(0, |e| e.t);
    let mut by_type = BTreeMap::new();
    let mut done: BTreeMap<usize, u64> = BTreeMap::new();
    let mut n_robots = 0;
    let mut t_h = None;
    let mut openings = 0;
    let mut replans = 0;
    let mut finished = None;
    for e in events {
        let name = serde_json::to_value(e.kind).expect("event type serializes");
        *by_type
            .entry(name.as_str().unwrap_or_default().to_owned())
            .or_insert(0) += 1;
        if let Some(r) = e.robot {
            n_robots = n_robots.max(r + 1);
        }
        match e.kind {
            EventType::RobotDone => {
                if let Some(r) = e.robot {
                    done.entry(r).or_insert(e.t);
                }
            }
            EventType::HumanDone => t_h = t_h.or(Some(e.t)),
            EventType::DoorOpened => {
                let human_door = e
                    .door
                    .as_deref()
                    .and_then(|d| m.door_id(d).ok())
                    .is_some_and(|d| m.door(d).kind == DoorKind::HumanOperated);
                if human_door {
                    openings += 1;
                }
            }
            EventType::Replan if e.robot.is_none() => replans += 1,
            EventType::TrialEnd => finished = Some(e.detail == "finished"),
            _ => {}
        }
    }
    let t_r = (0..n_robots)
        .map(|r| done.get(&r).copied().unwrap_or(end))
        .collect();
    let timed_out = finished == Some(false);
    ReplaySummary {
        end,
        events: events.len(),
        by_type,
        finished,
        metrics: TrialMetrics::new(t_h.unwrap_or(end), t_r, openings, replans, timed_out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use arn_core::executive::{run_trial_on, TrialConfig};
    use arn_core::human::Mode;
    use arn_core::sim::{parse_event_log, write_event_log};
    use arn_core::world::office3;
    use std::sync::Arc;

    #[test]
    fn replayed_metrics_match_the_run() {
        let m = Arc::new(office3());
        for mode in Mode::ALL {
            for seed in 0..4 {
                let cfg = TrialConfig {
                    mode,
                    seed,
                    ..TrialConfig::default()
                };
                let out = run_trial_on(&cfg, Arc::clone(&m)).unwrap();
                let events = parse_event_log(&write_event_log(&out.events)).unwrap();
                let s = summarize(&events, &m);
                assert_eq!(s.metrics, out.metrics, "{mode} seed {seed}");
                assert_eq!(s.finished, Some(!out.metrics.timed_out));
                assert_eq!(s.events, out.events.len());
            }
        }
    }

    #[test]
    fn empty_log() {
        let s = summarize(&[], &office3());
        assert_eq!(s.end, 0);
        assert_eq!(s.finished, None);
        assert!(s.metrics.t_r.is_empty());
    }
}
