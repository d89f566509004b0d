//! Wire format between the loop and its clients: the per-tick frame of
//! poses, trajectories, plans and constraints, and the two client commands.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executive::{Ack, Command, InboxHandle};
use crate::motion::plan_trajectory;
use crate::planner::{ActionKind, TaskAction};
use crate::restrictor::{ConstraintSet, FeedbackKind, TimedConstraint};
use crate::sim::SimState;
use crate::world::{Cell, WorldMap};

pub const NEXT_ACTIONS_SHOWN: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GatewayError {
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("unknown door {0}")]
    UnknownDoor(String),
    #[error("executive is not running")]
    Closed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseFrame {
    pub x: u16,
    pub y: u16,
    pub facing_door: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotFrame {
    pub id: usize,
    pub pose: PoseFrame,
    /// Remaining waypoints of the current action; while waiting at a door,
    /// the path through it.
    pub trajectory: Vec<Cell>,
    pub next_actions: Vec<String>,
    pub waiting_at: Option<String>,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoorFrame {
    pub id: String,
    pub open: bool,
    pub queue: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanFrame {
    pub busy_until: Option<u64>,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub t: u64,
    pub robots: Vec<RobotFrame>,
    pub doors: Vec<DoorFrame>,
    pub constraints: Vec<TimedConstraint>,
    pub human: HumanFrame,
}

impl Frame {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frame serializes")
    }
}

/// Read-only view of the simulation at its current tick.
pub fn snapshot(
    sim: &SimState,
    c: &ConstraintSet,
    busy_until: Option<u64>,
    human_done: bool,
) -> Frame {
    let m = &sim.map;
    let robots = sim
        .robots
        .iter()
        .map(|r| {
            let trajectory = match (&r.active, r.waiting_at) {
                (_, Some(d)) => {
                    plan_trajectory(&r.pose, &TaskAction::new(ActionKind::GoThrough(d), 3), m)
                        .map(|t| t.waypoints)
                        .unwrap_or_else(|_| vec![r.pose.cell()])
                }
                (Some(a), None) => {
                    let k = (a.elapsed as usize).min(a.trajectory.waypoints.len() - 1);
                    a.trajectory.waypoints[k..].to_vec()
                }
                (None, None) => vec![r.pose.cell()],
            };
            let next_actions = r
                .active
                .iter()
                .map(|a| &a.action)
                .chain(r.plan.iter())
                .take(NEXT_ACTIONS_SHOWN)
                .map(|a| a.kind.label(m))
                .collect();
            RobotFrame {
                id: r.id,
                pose: PoseFrame {
                    x: r.pose.x,
                    y: r.pose.y,
                    facing_door: r.pose.facing_door.map(|d| m.door(d).name.clone()),
                },
                trajectory,
                next_actions,
                waiting_at: r.waiting_at.map(|d| m.door(d).name.clone()),
                done: r.is_done(),
            }
        })
        .collect();
    let doors = sim
        .doors
        .iter()
        .map(|d| DoorFrame {
            id: m.door(d.id).name.clone(),
            open: d.open,
            queue: d.queue.clone(),
        })
        .collect();
    Frame {
        t: sim.now,
        robots,
        doors,
        constraints: c.iter().filter(|k| k.expires_at > sim.now).collect(),
        human: HumanFrame {
            busy_until,
            done: human_done,
        },
    }
}

/// Client to server messages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Feedback {
        kind: FeedbackKind,
        /// Sim-time of the button press in milliseconds; defaults to the
        /// cycle the message is applied at.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        issued_at_ms: Option<u64>,
    },
    OpenDoor {
        door: String,
    },
}

pub fn parse_client_message(text: &str) -> Result<ClientMessage, GatewayError> {
    serde_json::from_str(text).map_err(|e| GatewayError::MalformedMessage(e.to_string()))
}

/// Resolves names against the map.
pub fn to_command(msg: &ClientMessage, m: &WorldMap) -> Result<Command, GatewayError> {
    match msg {
        ClientMessage::Feedback { kind, issued_at_ms } => Ok(Command::Feedback {
            kind: *kind,
            issued_at: issued_at_ms.map(|ms| ms / 1000),
        }),
        ClientMessage::OpenDoor { door } => m
            .door_id(door)
            .map(Command::OpenDoor)
            .map_err(|_| GatewayError::UnknownDoor(door.clone())),
    }
}

/// Parses, validates and enqueues one client message.
pub fn submit(inbox: &InboxHandle, m: &WorldMap, text: &str) -> Result<Ack, GatewayError> {
    let msg = parse_client_message(text)?;
    let cmd = to_command(&msg, m)?;
    inbox.submit(cmd).ok_or(GatewayError::Closed)
}
