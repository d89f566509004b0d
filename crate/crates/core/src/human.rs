//! Virtual human: works on a task of Gaussian length, glances at the robots
//! every `check_period`, and opens the human-operated door with a
//! probability that depends on whether it is idle, focused, or finished.
//!
//! Focus intervals start at Gaussian-spaced instants while the task runs.
//! Each lasts two or four minutes (uniform); in feedback mode the human
//! announces it with `p_issue_feedback`. Without feedback the interval still
//! happens, the robots just are not told. The no-communication human cannot
//! see the robots and walks to the door once a minute with a fixed chance.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::restrictor::FeedbackKind;

/// Task time lost per walk to the door.
pub const DOOR_TRIP_S: u64 = 15;
pub const NOCOMM_CHECK_PERIOD_S: u64 = 60;
pub const NOCOMM_OPEN_P: f64 = 0.6;
pub const MIN_FEEDBACK_GAP_S: f64 = 30.0;
/// Sampled task length is clamped below at this fraction of the mean.
pub const MIN_TASK_FRACTION: f64 = 0.25;

#[derive(Debug, Error, PartialEq)]
pub enum HumanError {
    #[error("invalid human config: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Feedback,
    NoFeedback,
    NoComm,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Feedback, Mode::NoFeedback, Mode::NoComm];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Feedback => "feedback",
            Mode::NoFeedback => "nofeedback",
            Mode::NoComm => "nocomm",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "feedback" => Ok(Mode::Feedback),
            "nofeedback" => Ok(Mode::NoFeedback),
            "nocomm" => Ok(Mode::NoComm),
            other => Err(format!(
                "unknown mode {other:?} (feedback|nofeedback|nocomm)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HumanConfig {
    pub task_mean: f64,
    pub task_sd: f64,
    pub check_period: u64,
    pub p_open_idle: f64,
    pub p_open_busy: f64,
    pub p_open_done: f64,
    pub p_issue_feedback: f64,
    pub feedback_gap_mean: f64,
    pub feedback_gap_sd: f64,
    pub mode: Mode,
    /// Replaces `p_open_idle` (and caps `p_open_busy`) when set.
    pub laziness_override: Option<f64>,
}

impl Default for HumanConfig {
    fn default() -> Self {
        Self {
            task_mean: 960.0,
            task_sd: 180.0,
            check_period: 20,
            p_open_idle: 0.6,
            p_open_busy: 0.2,
            p_open_done: 0.9,
            p_issue_feedback: 0.9,
            feedback_gap_mean: 180.0,
            feedback_gap_sd: 60.0,
            mode: Mode::Feedback,
            laziness_override: None,
        }
    }
}

impl HumanConfig {
    pub fn validate(&self) -> Result<(), HumanError> {
        let bad = |m: String| Err(HumanError::InvalidConfig(m));
        if !(self.task_mean.is_finite() && self.task_mean >= 0.0) {
            return bad(format!(
                "task_mean must be non-negative, got {}",
                self.task_mean
            ));
        }
        if !(self.task_sd.is_finite() && self.task_sd >= 0.0) {
            return bad(format!(
                "task_sd must be non-negative, got {}",
                self.task_sd
            ));
        }
        if self.check_period == 0 {
            return bad("check_period must be positive".into());
        }
        if !(self.feedback_gap_mean.is_finite()
            && self.feedback_gap_sd.is_finite()
            && self.feedback_gap_sd >= 0.0)
        {
            return bad("feedback gap parameters must be finite, sd non-negative".into());
        }
        let probs = [
            ("p_open_idle", Some(self.p_open_idle)),
            ("p_open_busy", Some(self.p_open_busy)),
            ("p_open_done", Some(self.p_open_done)),
            ("p_issue_feedback", Some(self.p_issue_feedback)),
            ("laziness_override", self.laziness_override),
        ];
        for (name, p) in probs {
            if let Some(p) = p {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("{name} must be in [0,1], got {p}"));
                }
            }
        }
        Ok(())
    }

    fn idle_p(&self) -> f64 {
        self.laziness_override.unwrap_or(self.p_open_idle)
    }

    fn busy_p(&self) -> f64 {
        self.p_open_busy.min(self.idle_p())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum HumanAction {
    OpenDoor,
    Feedback { kind: FeedbackKind },
}

#[derive(Clone, Debug)]
pub struct HumanState {
    pub task_remaining: u64,
    /// End of the announced busy period; feedback mode only.
    pub busy_until: Option<u64>,
    /// End of the current focus interval, announced or not.
    pub focus_until: Option<u64>,
    pub next_check: u64,
    pub next_feedback_at: Option<u64>,
    pub done: bool,
    pub door_openings: u32,
    pub finished_at: Option<u64>,
    /// Task seconds still owed to door trips.
    pub trip_remaining: u64,
    /// Focus schedule stream, split off the trial generator at init so the
    /// schedule does not depend on how many door draws were made.
    schedule: ChaCha8Rng,
}

fn sample_gap(cfg: &HumanConfig, rng: &mut impl Rng) -> u64 {
    let gap = Normal::new(cfg.feedback_gap_mean, cfg.feedback_gap_sd)
        .expect("validated gap parameters")
        .sample(rng);
    gap.max(MIN_FEEDBACK_GAP_S).round() as u64
}

/// Fresh human with a sampled task length and the first check and focus
/// instants scheduled.
pub fn init(cfg: &HumanConfig, rng: &mut impl Rng) -> Result<HumanState, HumanError> {
    cfg.validate()?;
    let task = Normal::new(cfg.task_mean, cfg.task_sd)
        .expect("validated task parameters")
        .sample(rng)
        .max(MIN_TASK_FRACTION * cfg.task_mean)
        .round() as u64;
    let mut schedule = ChaCha8Rng::seed_from_u64(rng.random());
    let (next_check, next_feedback_at) = match cfg.mode {
        Mode::NoComm => (NOCOMM_CHECK_PERIOD_S, None),
        _ => (cfg.check_period, Some(sample_gap(cfg, &mut schedule))),
    };
    Ok(HumanState {
        task_remaining: task,
        busy_until: None,
        focus_until: None,
        next_check,
        next_feedback_at,
        done: task == 0,
        door_openings: 0,
        finished_at: (task == 0).then_some(0),
        trip_remaining: 0,
        schedule,
    })
}

impl HumanState {
    pub fn is_focused(&self, now: u64) -> bool {
        self.focus_until.is_some_and(|f| f > now)
    }

    pub fn is_busy(&self, now: u64) -> bool {
        self.busy_until.is_some_and(|b| b > now)
    }

    /// Per-robot open probability at a check instant.
    pub fn open_probability(&self, cfg: &HumanConfig, now: u64) -> f64 {
        match cfg.mode {
            Mode::NoComm => NOCOMM_OPEN_P,
            _ if self.done => cfg.p_open_done,
            _ if self.is_focused(now) => cfg.busy_p(),
            _ => cfg.idle_p(),
        }
    }

    fn record_open(&mut self) {
        self.door_openings += 1;
        if !self.done {
            self.trip_remaining += DOOR_TRIP_S;
        }
    }
}

/// Advances the human to `now` (one second after the previous call) and
/// returns what it does at this instant.
///
/// `waiting_robots` counts robots the human can see waiting at its door;
/// the no-communication human ignores it.
pub fn act(
    st: &mut HumanState,
    cfg: &HumanConfig,
    waiting_robots: usize,
    now: u64,
    rng: &mut impl Rng,
) -> Vec<HumanAction> {
    let mut out = Vec::new();
    if !st.done {
        if st.trip_remaining > 0 {
            st.trip_remaining -= 1;
        } else {
            st.task_remaining = st.task_remaining.saturating_sub(1);
            if st.task_remaining == 0 {
                st.done = true;
                st.finished_at = Some(now);
                st.next_feedback_at = None;
            }
        }
    }

    if let Some(at) = st.next_feedback_at {
        if now >= at && !st.done {
            let kind = if st.schedule.random_bool(0.5) {
                FeedbackKind::Busy2
            } else {
                FeedbackKind::Busy4
            };
            let announce = st.schedule.random_bool(cfg.p_issue_feedback);
            let until = now + kind.busy_for();
            st.focus_until = Some(until);
            if cfg.mode == Mode::Feedback && announce {
                st.busy_until = Some(until);
                out.push(HumanAction::Feedback { kind });
            }
            st.next_feedback_at = Some(until + sample_gap(cfg, &mut st.schedule));
        }
    }

    if now >= st.next_check {
        let period = match cfg.mode {
            Mode::NoComm => NOCOMM_CHECK_PERIOD_S,
            _ => cfg.check_period,
        };
        st.next_check = now + period;
        let p = st.open_probability(cfg, now);
        let open = match cfg.mode {
            Mode::NoComm => rng.random_bool(p),
            _ => {
                // One draw per visible robot, all drawn for a fixed call order.
                let mut any = false;
                for _ in 0..waiting_robots {
                    any |= rng.random_bool(p);
                }
                any
            }
        };
        if open {
            st.record_open();
            out.push(HumanAction::OpenDoor);
        }
    }
    out
}
