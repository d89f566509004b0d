//! Team planning by iterative inter-dependent planning.
//!
//! Robots are first planned independently. Each later round replans them in
//! index order against the door occupancy of lower-indexed teammates, with
//! every second of overlap at a door added to the cost. A replacement plan
//! is kept only if it is cheaper under that surcharge and does not stretch
//! the team's planned makespan.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{
    door_intervals, search, GoalSpec, Plan, PlanError, Reservations, SymbolicState,
};
use crate::world::{DoorId, WorldMap};

pub const MAX_ROUNDS: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IidpError {
    #[error("{states} states but {goals} goal specs")]
    LengthMismatch { states: usize, goals: usize },
    #[error("robot {robot}: {source}")]
    Planner { robot: usize, source: PlanError },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamPlan {
    pub plans: Vec<Plan>,
    /// Robots in expected order of first arrival at each door.
    pub queue_order: BTreeMap<DoorId, Vec<usize>>,
    /// Robots whose goals were unreachable; their plans are empty.
    pub unsolvable: Vec<usize>,
    /// Rounds after the independent one that changed at least one plan.
    pub rounds: usize,
}

impl TeamPlan {
    /// Latest planned finish over the team, each plan started at its offset.
    pub fn makespan(&self, starts: &[u64]) -> u64 {
        self.plans
            .iter()
            .zip(starts)
            .map(|(p, &s)| s + p.cost())
            .max()
            .unwrap_or(0)
    }
}

/// Plan cost with the congestion surcharge against `res`.
pub fn surcharged_cost(plan: &Plan, res: &Reservations, start: u64) -> u64 {
    plan.cost()
        + door_intervals(plan, start)
            .into_iter()
            .map(|(d, s, e)| res.overlap(d, s, e))
            .sum::<u64>()
}

/// Joint plan with every robot starting at `now`.
pub fn plan_team(
    states: &[SymbolicState],
    goals: &[GoalSpec],
    m: &WorldMap,
    now: u64,
) -> Result<TeamPlan, IidpError> {
    plan_team_from(states, goals, m, &vec![now; states.len()])
}

/// Joint plan where robot `i`'s plan starts at `starts[i]` (after whatever
/// it is currently doing).
pub fn plan_team_from(
    states: &[SymbolicState],
    goals: &[GoalSpec],
    m: &WorldMap,
    starts: &[u64],
) -> Result<TeamPlan, IidpError> {
    if states.len() != goals.len() || states.len() != starts.len() {
        return Err(IidpError::LengthMismatch {
            states: states.len(),
            goals: goals.len(),
        });
    }
    let n = states.len();
    let mut plans = Vec::with_capacity(n);
    let mut unsolvable = Vec::new();
    for (i, (s, g)) in states.iter().zip(goals).enumerate() {
        match search(s, g, m, None) {
            Ok((p, _)) => plans.push(p),
            Err(PlanError::Unsolvable(_)) => {
                unsolvable.push(i);
                plans.push(Plan::default());
            }
            Err(e) => {
                return Err(IidpError::Planner {
                    robot: i,
                    source: e,
                })
            }
        }
    }
    let mut team = TeamPlan {
        plans,
        unsolvable,
        ..TeamPlan::default()
    };
    let budget = team.makespan(starts);

    for _ in 0..MAX_ROUNDS {
        let mut changed = false;
        for i in 1..n {
            if team.unsolvable.contains(&i) {
                continue;
            }
            let mut res = Reservations::default();
            for (plan, &start) in team.plans[..i].iter().zip(starts) {
                for (d, s, e) in door_intervals(plan, start) {
                    res.add(d, s, e);
                }
            }
            if res.is_empty() {
                continue;
            }
            let current = surcharged_cost(&team.plans[i], &res, starts[i]);
            let (candidate, cost) = search(&states[i], &goals[i], m, Some((&res, starts[i])))
                .map_err(|e| IidpError::Planner {
                    robot: i,
                    source: e,
                })?;
            if candidate != team.plans[i]
                && cost < current
                && starts[i] + candidate.cost() <= budget
            {
                team.plans[i] = candidate;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        team.rounds += 1;
    }

    team.queue_order = queue_order(&team.plans, starts);
    Ok(team)
}

fn queue_order(plans: &[Plan], starts: &[u64]) -> BTreeMap<DoorId, Vec<usize>> {
    let mut first: BTreeMap<DoorId, Vec<(u64, usize)>> = BTreeMap::new();
    for (i, p) in plans.iter().enumerate() {
        let mut seen = Vec::new();
        for (d, s, _) in door_intervals(p, starts[i]) {
            if !seen.contains(&d) {
                seen.push(d);
                first.entry(d).or_default().push((s, i));
            }
        }
    }
    first
        .into_iter()
        .map(|(d, mut v)| {
            v.sort_unstable();
            (d, v.into_iter().map(|(_, i)| i).collect())
        })
        .collect()
}
