//! Motion planner: expands one task action into a cell-level trajectory.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{ActionKind, TaskAction};
use crate::world::{Cell, DoorId, WorldMap};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MotionError {
    #[error("no path from {from} to {to}")]
    NoPath { from: Cell, to: Cell },
    #[error("pose {0} is not inside a room")]
    NotInRoom(Cell),
}

/// Live robot configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pose {
    pub x: u16,
    pub y: u16,
    pub facing_door: Option<DoorId>,
}

impl Pose {
    pub fn at(cell: Cell) -> Self {
        Self {
            x: cell.x,
            y: cell.y,
            facing_door: None,
        }
    }

    pub fn cell(&self) -> Cell {
        Cell::new(self.x, self.y)
    }
}

/// Ordered waypoints `L_1..L_M`, consecutive entries 4-adjacent or equal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Cell>,
}

impl Trajectory {
    pub fn stationary(at: Cell) -> Self {
        Self {
            waypoints: vec![at],
        }
    }

    /// Number of moves, i.e. `M - 1`.
    pub fn cost(&self) -> u32 {
        self.waypoints.len().saturating_sub(1) as u32
    }

    pub fn end(&self) -> Cell {
        *self
            .waypoints
            .last()
            .expect("trajectory has at least one waypoint")
    }

    pub fn is_well_formed(&self) -> bool {
        !self.waypoints.is_empty()
            && self
                .waypoints
                .windows(2)
                .all(|w| w[0] == w[1] || w[0].is_adjacent(w[1]))
    }
}

/// A* over a `width` x `height` grid with the Manhattan heuristic.
///
/// Neighbours expand in N, E, S, W order and ties on `f` break towards the
/// larger `g`, then insertion order, so equal inputs give equal paths.
pub fn astar(
    start: Cell,
    goal: Cell,
    width: u16,
    height: u16,
    passable: impl Fn(Cell) -> bool,
) -> Option<Vec<Cell>> {
    if !passable(start) || !passable(goal) {
        return None;
    }
    let n = width as usize * height as usize;
    let idx = |c: Cell| c.y as usize * width as usize + c.x as usize;
    let mut g = vec![u32::MAX; n];
    let mut parent: Vec<Option<Cell>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    g[idx(start)] = 0;
    heap.push(Reverse((start.manhattan(goal), Reverse(0u32), seq, start)));
    while let Some(Reverse((_, Reverse(gc), _, c))) = heap.pop() {
        if closed[idx(c)] {
            continue;
        }
        closed[idx(c)] = true;
        if c == goal {
            let mut path = vec![c];
            let mut cur = c;
            while let Some(p) = parent[idx(cur)] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for nb in c.neighbours(width, height) {
            let i = idx(nb);
            if closed[i] || !passable(nb) {
                continue;
            }
            let ng = gc + 1;
            if ng < g[i] {
                g[i] = ng;
                parent[i] = Some(c);
                seq += 1;
                heap.push(Reverse((ng + nb.manhattan(goal), Reverse(ng), seq, nb)));
            }
        }
    }
    None
}

/// Shortest path between two cells of the same room, never leaving it.
pub fn path_within_room(m: &WorldMap, from: Cell, to: Cell) -> Result<Vec<Cell>, MotionError> {
    let room = m.room_of(from).ok_or(MotionError::NotInRoom(from))?;
    astar(from, to, m.width(), m.height(), |c| {
        m.room_of(c) == Some(room)
    })
    .ok_or(MotionError::NoPath { from, to })
}

/// Trajectory realizing `a` from pose `p`.
///
/// Approach, Load and Unload move inside the current room; GoThrough steps
/// onto the door cell and off on the far side; OpenDoor stays in place.
pub fn plan_trajectory(p: &Pose, a: &TaskAction, m: &WorldMap) -> Result<Trajectory, MotionError> {
    let here = p.cell();
    match &a.kind {
        ActionKind::OpenDoor(_) => Ok(Trajectory::stationary(here)),
        ActionKind::Approach(d) => {
            let room = m.room_of(here).ok_or(MotionError::NotInRoom(here))?;
            let door = m.door(*d);
            let target = door.approach_from(room).ok_or(MotionError::NoPath {
                from: here,
                to: door.cell,
            })?;
            Ok(Trajectory {
                waypoints: path_within_room(m, here, target)?,
            })
        }
        ActionKind::GoThrough(d) => {
            let room = m.room_of(here).ok_or(MotionError::NotInRoom(here))?;
            let door = m.door(*d);
            let (near, far) = match door.other_side(room) {
                Some(other) => (
                    door.approach_from(room).expect("adjoining room"),
                    door.approach_from(other).expect("adjoining room"),
                ),
                None => {
                    return Err(MotionError::NoPath {
                        from: here,
                        to: door.cell,
                    })
                }
            };
            let mut waypoints = path_within_room(m, here, near)?;
            waypoints.push(door.cell);
            waypoints.push(far);
            Ok(Trajectory { waypoints })
        }
        ActionKind::Load { station, .. } => {
            let target = m.station(*station).cell;
            Ok(Trajectory {
                waypoints: path_within_room(m, here, target)?,
            })
        }
        ActionKind::Unload(_) => {
            let target = m.base_station().cell;
            Ok(Trajectory {
                waypoints: path_within_room(m, here, target)?,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::ObjectId;
    use crate::world::{load_map, office3};
    use std::collections::VecDeque;

    fn bfs_distance(
        start: Cell,
        goal: Cell,
        w: u16,
        h: u16,
        passable: impl Fn(Cell) -> bool,
    ) -> Option<u32> {
        if !passable(start) || !passable(goal) {
            return None;
        }
        let idx = |c: Cell| c.y as usize * w as usize + c.x as usize;
        let mut dist = vec![u32::MAX; w as usize * h as usize];
        dist[idx(start)] = 0;
        let mut q = VecDeque::from([start]);
        while let Some(c) = q.pop_front() {
            if c == goal {
                return Some(dist[idx(c)]);
            }
            for n in c.neighbours(w, h) {
                if passable(n) && dist[idx(n)] == u32::MAX {
                    dist[idx(n)] = dist[idx(c)] + 1;
                    q.push_back(n);
                }
            }
        }
        None
    }

    fn corridor() -> WorldMap {
        let text = serde_json::json!({
            "width": 8, "height": 1,
            "rooms": {"A": [[0,0],[1,0],[2,0],[3,0],[4,0],[5,0]], "Z": [[7,0]]},
            "doors": [{"id": "d", "cell": [6,0], "connects": ["A", "Z"], "kind": "robot_openable", "close_delay_s": 30}],
            "stations": [{"id": "S", "cell": [0,0]}],
            "base_station": "S"
        });
        load_map(&text.to_string()).unwrap()
    }

    #[test]
    fn straight_corridor_approach() {
        let m = corridor();
        let d = m.door_id("d").unwrap();
        let a = TaskAction::new(ActionKind::Approach(d), 5);
        let t = plan_trajectory(&Pose::at(Cell::new(0, 0)), &a, &m).unwrap();
        assert_eq!(t.waypoints.len(), 6);
        assert_eq!(t.cost(), 5);
        assert_eq!(t.end(), Cell::new(5, 0));
    }

    #[test]
    fn in_place_actions_are_single_waypoint() {
        let m = office3();
        let l1 = m.station(m.station_id("L1").unwrap());
        let a = TaskAction::new(
            ActionKind::Load {
                object: ObjectId::new("O1"),
                station: l1.id,
            },
            10,
        );
        let t = plan_trajectory(&Pose::at(l1.cell), &a, &m).unwrap();
        assert_eq!(t.waypoints, vec![l1.cell]);
        let open = TaskAction::new(ActionKind::OpenDoor(m.door_id("d1").unwrap()), 5);
        assert_eq!(
            plan_trajectory(&Pose::at(l1.cell), &open, &m)
                .unwrap()
                .waypoints
                .len(),
            1
        );
    }

    #[test]
    fn office3_approach_matches_bfs() {
        let m = office3();
        let db = m.door_id("db").unwrap();
        let c = m.room_id("C").unwrap();
        // Robot standing in the corridor below d1.
        let start = Cell::new(16, 6);
        let a = TaskAction::new(ActionKind::Approach(db), 1);
        let t = plan_trajectory(&Pose::at(start), &a, &m).unwrap();
        let target = m.door(db).approach_from(c).unwrap();
        assert_eq!(t.end(), target);
        let oracle = bfs_distance(start, target, m.width(), m.height(), |x| {
            m.room_of(x) == Some(c)
        });
        assert_eq!(Some(t.cost()), oracle);
        assert!(t.is_well_formed());
    }

    #[test]
    fn go_through_crosses_only_target_door() {
        let m = office3();
        let d1 = m.door_id("d1").unwrap();
        let r1 = m.room_id("R1").unwrap();
        let start = m.door(d1).approach_from(r1).unwrap();
        let a = TaskAction::new(ActionKind::GoThrough(d1), 3);
        let t = plan_trajectory(&Pose::at(start), &a, &m).unwrap();
        assert_eq!(t.waypoints.len(), 3);
        let doors: Vec<_> = t.waypoints.iter().filter_map(|&c| m.door_at(c)).collect();
        assert_eq!(doors, vec![d1]);
    }

    #[test]
    fn wall_pose_has_no_path() {
        let m = office3();
        let a = TaskAction::new(ActionKind::Approach(m.door_id("d1").unwrap()), 1);
        assert_eq!(
            plan_trajectory(&Pose::at(Cell::new(0, 0)), &a, &m),
            Err(MotionError::NotInRoom(Cell::new(0, 0)))
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn astar_matches_bfs(
                w in 2u16..12, h in 2u16..12,
                walls in proptest::collection::vec(any::<bool>(), 144),
                sx in 0u16..12, sy in 0u16..12, gx in 0u16..12, gy in 0u16..12,
            ) {
                let start = Cell::new(sx % w, sy % h);
                let goal = Cell::new(gx % w, gy % h);
                // Roughly 30% walls.
                let blocked = |c: Cell| {
                    let i = c.y as usize * 12 + c.x as usize;
                    walls[i] && (i * 7919) % 10 < 6 && c != start && c != goal
                };
                let passable = |c: Cell| !blocked(c);
                let oracle = bfs_distance(start, goal, w, h, passable);
                let path = astar(start, goal, w, h, passable);
                prop_assert_eq!(path.as_ref().map(|p| p.len() as u32 - 1), oracle);
                if let Some(p) = path {
                    let traj = Trajectory { waypoints: p.clone() };
                    prop_assert!(traj.is_well_formed());
                    prop_assert!(p.iter().all(|&c| passable(c)));
                    prop_assert_eq!(Some(p), astar(start, goal, w, h, passable));
                }
            }
        }
    }
}
