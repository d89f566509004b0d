//! Feedback to constraint conversion and goal deferral.
//!
//! A `busy4` press defers short tasks for four minutes, `busy2` defers long
//! tasks for two. Constraints carry their own expiry; the set is stateful
//! across cycles rather than rebuilt from the latest feedback alone.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{plan, GoalSpec, Literal, ObjectId, SymbolicState};
use crate::world::WorldMap;

/// Tasks whose cheapest completion is below this many seconds are short.
pub const SHORT_TASK_THRESHOLD_S: u64 = 150;
pub const BUSY2_DEFER_S: u64 = 120;
pub const BUSY4_DEFER_S: u64 = 240;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RestrictorError {
    #[error("object {0} has no duration class")]
    UnclassifiedObject(String),
}

/// The feedback library: the two buttons a human can press.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackKind {
    Busy2,
    Busy4,
}

impl FeedbackKind {
    /// Length of the announced unavailability.
    pub fn busy_for(self) -> u64 {
        match self {
            FeedbackKind::Busy2 => BUSY2_DEFER_S,
            FeedbackKind::Busy4 => BUSY4_DEFER_S,
        }
    }

    pub fn deferred_class(self) -> TaskClass {
        match self {
            FeedbackKind::Busy2 => TaskClass::Long,
            FeedbackKind::Busy4 => TaskClass::Short,
        }
    }
}

impl fmt::Display for FeedbackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackKind::Busy2 => "busy2",
            FeedbackKind::Busy4 => "busy4",
        })
    }
}

impl FromStr for FeedbackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "busy2" => Ok(FeedbackKind::Busy2),
            "busy4" => Ok(FeedbackKind::Busy4),
            other => Err(format!("unknown feedback kind {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub kind: FeedbackKind,
    pub issued_at: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskClass {
    #[serde(rename = "short_tasks")]
    Short,
    #[serde(rename = "long_tasks")]
    Long,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedConstraint {
    #[serde(rename = "class")]
    pub deferred_class: TaskClass,
    pub expires_at: u64,
}

/// Active deferrals, at most one per class.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    active: BTreeMap<TaskClass, u64>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = TimedConstraint> + '_ {
        self.active.iter().map(|(&c, &e)| TimedConstraint {
            deferred_class: c,
            expires_at: e,
        })
    }

    /// True iff `class` is deferred at time `now`.
    pub fn defers(&self, class: TaskClass, now: u64) -> bool {
        self.active.get(&class).is_some_and(|&e| e > now)
    }

    pub fn insert(&mut self, c: TimedConstraint) {
        self.active.insert(c.deferred_class, c.expires_at);
    }
}

/// Next constraint set: expired entries dropped, then `h` (if any) replaces
/// the entry for the class it defers.
pub fn convert(prev: &ConstraintSet, h: Option<&FeedbackEvent>, now: u64) -> ConstraintSet {
    let mut next = ConstraintSet {
        active: prev
            .active
            .iter()
            .filter(|(_, &e)| e > now)
            .map(|(&c, &e)| (c, e))
            .collect(),
    };
    if let Some(h) = h {
        let expires_at = h.issued_at + h.kind.busy_for();
        if expires_at > now {
            next.insert(TimedConstraint {
                deferred_class: h.kind.deferred_class(),
                expires_at,
            });
        }
    }
    next
}

/// `g` without the delivery literals whose class is currently deferred.
pub fn effective_goals(
    g: &GoalSpec,
    c: &ConstraintSet,
    classes: &BTreeMap<ObjectId, TaskClass>,
    now: u64,
) -> Result<GoalSpec, RestrictorError> {
    let mut out = GoalSpec::default();
    for lit in &g.literals {
        if let Literal::Located(o) = lit {
            let class = classes
                .get(o)
                .ok_or_else(|| RestrictorError::UnclassifiedObject(o.0.clone()))?;
            if c.defers(*class, now) {
                continue;
            }
        }
        out.literals.insert(lit.clone());
    }
    Ok(out)
}

/// Duration class per goal object: the cheapest single-robot delivery cost
/// over `states`, compared with [`SHORT_TASK_THRESHOLD_S`]. Objects no state
/// can deliver are long.
pub fn classify_tasks(
    g: &GoalSpec,
    states: &[SymbolicState],
    m: &WorldMap,
) -> BTreeMap<ObjectId, TaskClass> {
    g.objects()
        .map(|o| {
            let goal = GoalSpec::deliver([o.clone()]);
            let best = states
                .iter()
                .filter_map(|s| plan(s, &goal, m).ok())
                .map(|p| p.cost())
                .min();
            let class = match best {
                Some(cost) if cost < SHORT_TASK_THRESHOLD_S => TaskClass::Short,
                _ => TaskClass::Long,
            };
            (o.clone(), class)
        })
        .collect()
}
