//! Brute-force reference for the task planner: uniform-cost enumeration over
//! the full symbolic state, every action of the map tried at every node,
//! durations recomputed here from breadth-first distances.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use arn_core::planner::{
    apply, satisfies, ActionKind, GoalSpec, ObjectId, Place, RobotId, SymbolicState, TaskAction,
};
use arn_core::world::{load_map, office3, Cell, DoorKind, WorldMap};

pub struct Scenario {
    pub name: &'static str,
    pub map: WorldMap,
    pub start: SymbolicState,
    pub goal: GoalSpec,
}

/// Robot R1 -> R2 through one closed robot-openable door.
pub fn two_rooms() -> WorldMap {
    load_map(
        r#"{"width": 7, "height": 1,
            "rooms": {"R1": [[0,0],[1,0],[2,0]], "R2": [[4,0],[5,0],[6,0]]},
            "doors": [{"id": "d", "cell": [3,0], "connects": ["R1", "R2"], "kind": "robot_openable", "close_delay_s": 30}],
            "stations": [{"id": "S", "cell": [6,0]}],
            "base_station": "S"}"#,
    )
    .unwrap()
}

/// Within-room BFS distance.
fn dist(m: &WorldMap, from: Cell, to: Cell) -> Option<u64> {
    let room = m.room_of(from)?;
    let mut seen = HashMap::from([(from, 0u64)]);
    let mut q = VecDeque::from([from]);
    while let Some(c) = q.pop_front() {
        let d = seen[&c];
        if c == to {
            return Some(d);
        }
        for n in c.neighbours(m.width(), m.height()) {
            if m.room_of(n) == Some(room) && !seen.contains_key(&n) {
                seen.insert(n, d + 1);
                q.push_back(n);
            }
        }
    }
    None
}

fn duration(m: &WorldMap, s: &SymbolicState, kind: &ActionKind) -> Option<u64> {
    Some(match kind {
        ActionKind::Approach(d) => dist(m, s.cell, m.door(*d).approach_from(s.robot_room)?)?.max(1),
        ActionKind::OpenDoor(d) => match m.door(*d).kind {
            DoorKind::RobotOpenable => 5,
            DoorKind::HumanOperated => 20,
        },
        ActionKind::GoThrough(_) => 3,
        ActionKind::Load { station, .. } => dist(m, s.cell, m.station(*station).cell)? + 10,
        ActionKind::Unload(_) => dist(m, s.cell, m.base_station().cell)? + 10,
    })
}

fn candidates(m: &WorldMap, s: &SymbolicState) -> Vec<ActionKind> {
    let mut out = Vec::new();
    for d in m.doors() {
        out.push(ActionKind::Approach(d.id));
        out.push(ActionKind::OpenDoor(d.id));
        out.push(ActionKind::GoThrough(d.id));
    }
    for (o, place) in &s.object_at {
        if let Place::Station(station) = place {
            out.push(ActionKind::Load {
                object: o.clone(),
                station: *station,
            });
        }
        out.push(ActionKind::Unload(o.clone()));
    }
    out
}

/// Minimum total duration to reach `g`, or None if unreachable.
pub fn optimal_cost(m: &WorldMap, start: &SymbolicState, g: &GoalSpec) -> Option<u64> {
    let mut best: HashMap<SymbolicState, u64> = HashMap::from([(start.clone(), 0)]);
    let mut states = vec![start.clone()];
    let mut heap = BinaryHeap::from([Reverse((0u64, 0usize))]);
    while let Some(Reverse((cost, i))) = heap.pop() {
        let s = states[i].clone();
        if best[&s] < cost {
            continue;
        }
        if satisfies(&s, g) {
            return Some(cost);
        }
        for kind in candidates(m, &s) {
            let Some(dur) = duration(m, &s, &kind) else {
                continue;
            };
            let Ok(next) = apply(&s, &TaskAction::new(kind, dur as u32), m) else {
                continue;
            };
            let c = cost + dur;
            if best.get(&next).is_none_or(|&b| c < b) {
                best.insert(next.clone(), c);
                states.push(next);
                heap.push(Reverse((c, states.len() - 1)));
            }
        }
    }
    None
}

/// Replays `actions` from `start`, checking each precondition and the
/// stated durations. Returns the final state.
pub fn execute<'a>(
    m: &WorldMap,
    start: &SymbolicState,
    actions: impl IntoIterator<Item = &'a TaskAction>,
) -> Result<SymbolicState, String> {
    let mut s = start.clone();
    for (i, a) in actions.into_iter().enumerate() {
        let expect = duration(m, &s, &a.kind).ok_or_else(|| format!("step {i}: no duration"))?;
        if expect != a.duration as u64 {
            return Err(format!("step {i}: duration {} != {expect}", a.duration));
        }
        s = apply(&s, a, m).map_err(|e| format!("step {i}: {e}"))?;
    }
    Ok(s)
}

fn at(m: &WorldMap, station: &str) -> Cell {
    m.station(m.station_id(station).unwrap()).cell
}

fn objects(mut s: SymbolicState, m: &WorldMap, placed: &[(&str, &str)]) -> SymbolicState {
    for (o, station) in placed {
        s = s.with_object(
            ObjectId::new(*o),
            Place::Station(m.station_id(station).unwrap()),
        );
    }
    s
}

/// Twelve fixtures with at most three objects.
pub fn scenarios() -> Vec<Scenario> {
    let mut out = Vec::new();
    let m = two_rooms();
    out.push(Scenario {
        name: "two rooms, reach R2",
        start: SymbolicState::new(RobotId(0), Cell::new(0, 0), &m).unwrap(),
        goal: GoalSpec::robot_in(m.room_id("R2").unwrap()),
        map: m,
    });

    let o = office3();
    let corridor = o.room(o.room_id("C").unwrap()).cells[5];
    let r = |cell| SymbolicState::new(RobotId(0), cell, &o).unwrap();
    let deliver = |names: &[&str]| GoalSpec::deliver(names.iter().map(|n| ObjectId::new(*n)));
    let cases: Vec<(&'static str, SymbolicState, GoalSpec)> = vec![
        (
            "L1 own object",
            objects(r(at(&o, "L1")), &o, &[("O1", "L1")]),
            deliver(&["O1"]),
        ),
        (
            "L2 own object",
            objects(r(at(&o, "L2")), &o, &[("O2", "L2")]),
            deliver(&["O2"]),
        ),
        (
            "L3 from base",
            objects(r(at(&o, "B")), &o, &[("O3", "L3")]),
            deliver(&["O3"]),
        ),
        (
            "two objects from corridor",
            objects(r(corridor), &o, &[("O1", "L1"), ("O2", "L2")]),
            deliver(&["O1", "O2"]),
        ),
        (
            "three objects from L1",
            objects(
                r(at(&o, "L1")),
                &o,
                &[("O1", "L1"), ("O2", "L2"), ("O3", "L3")],
            ),
            deliver(&["O1", "O2", "O3"]),
        ),
        (
            "three objects from base",
            objects(
                r(at(&o, "B")),
                &o,
                &[("O1", "L1"), ("O2", "L2"), ("O3", "L3")],
            ),
            deliver(&["O1", "O2", "O3"]),
        ),
        (
            "carrying one, fetch another",
            objects(r(corridor), &o, &[("O2", "L2")])
                .with_object(ObjectId::new("O1"), Place::Robot(RobotId(0))),
            deliver(&["O1", "O2"]),
        ),
        (
            "one already delivered",
            objects(r(at(&o, "L3")), &o, &[("O3", "L3")])
                .with_object(ObjectId::new("O1"), Place::Base),
            deliver(&["O1", "O3"]),
        ),
        (
            "goal subset of objects",
            objects(
                r(at(&o, "L2")),
                &o,
                &[("O1", "L1"), ("O2", "L2"), ("O3", "L3")],
            ),
            deliver(&["O3"]),
        ),
        (
            "base door already open",
            {
                let mut s = objects(r(corridor), &o, &[("O1", "L1")]);
                s.door_open[o.door_id("db").unwrap().index()] = true;
                s
            },
            deliver(&["O1"]),
        ),
        (
            "facing d2 from inside R2",
            {
                let d2 = o.door_id("d2").unwrap();
                let mut s = objects(
                    r(o.door(d2).approach_from(o.room_id("R2").unwrap()).unwrap()),
                    &o,
                    &[("O2", "L2"), ("O1", "L1")],
                );
                s.facing_door = Some(d2);
                s
            },
            deliver(&["O1", "O2"]),
        ),
    ];
    for (name, start, goal) in cases {
        out.push(Scenario {
            name,
            map: office3(),
            start,
            goal,
        });
    }
    out
}
