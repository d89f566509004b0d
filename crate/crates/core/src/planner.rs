//! Single-robot symbolic task planner.
//!
//! Five actions (`approach`, `opendoor`, `gothrough`, `load`, `unload`) over
//! a state of robot room, faced door, carried object, door and object
//! fluents. Plans are minimum total duration, found by uniform-cost search;
//! equal-cost plans are ordered lexicographically by action kind
//! (approach < opendoor < gothrough < load < unload) and then argument id.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{Cell, DoorId, DoorKind, RoomId, StationId, WorldMap};

pub const OPEN_ROBOT_DOOR_S: u32 = 5;
/// Planning estimate for request-and-wait at a human-operated door.
pub const OPEN_HUMAN_DOOR_ESTIMATE_S: u32 = 20;
pub const GO_THROUGH_S: u32 = 3;
pub const HANDLE_OBJECT_S: u32 = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("cannot execute {action}: {missing}")]
    PreconditionViolation { action: String, missing: String },
    #[error("goal unreachable: {0}")]
    Unsolvable(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("cell {0} is not inside a room")]
    NotInRoom(Cell),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub String);

impl ObjectId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RobotId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Place {
    Station(StationId),
    Robot(RobotId),
    Base,
}

/// One robot's view of the world.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicState {
    pub robot: RobotId,
    /// Cell the robot rests on; drives motion-dependent durations.
    pub cell: Cell,
    pub robot_room: RoomId,
    pub facing_door: Option<DoorId>,
    pub carried: Option<ObjectId>,
    /// Indexed by door.
    pub door_open: Vec<bool>,
    pub object_at: BTreeMap<ObjectId, Place>,
}

impl SymbolicState {
    /// Robot resting on `cell`, empty-handed, facing nothing, doors closed.
    pub fn new(robot: RobotId, cell: Cell, m: &WorldMap) -> Result<Self, PlanError> {
        let robot_room = m.room_of(cell).ok_or(PlanError::NotInRoom(cell))?;
        Ok(Self {
            robot,
            cell,
            robot_room,
            facing_door: None,
            carried: None,
            door_open: m.doors().iter().map(|d| d.open).collect(),
            object_at: BTreeMap::new(),
        })
    }

    pub fn with_object(mut self, object: ObjectId, place: Place) -> Self {
        if place == Place::Robot(self.robot) {
            self.carried = Some(object.clone());
        }
        self.object_at.insert(object, place);
        self
    }

    pub fn is_open(&self, d: DoorId) -> bool {
        self.door_open.get(d.index()).copied().unwrap_or(false)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionKind {
    Approach(DoorId),
    OpenDoor(DoorId),
    GoThrough(DoorId),
    Load {
        object: ObjectId,
        station: StationId,
    },
    Unload(ObjectId),
}

impl ActionKind {
    pub fn door(&self) -> Option<DoorId> {
        match self {
            ActionKind::Approach(d) | ActionKind::OpenDoor(d) | ActionKind::GoThrough(d) => {
                Some(*d)
            }
            _ => None,
        }
    }

    pub fn object(&self) -> Option<&ObjectId> {
        match self {
            ActionKind::Load { object, .. } | ActionKind::Unload(object) => Some(object),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ActionKind::Approach(_) => "approach",
            ActionKind::OpenDoor(_) => "opendoor",
            ActionKind::GoThrough(_) => "gothrough",
            ActionKind::Load { .. } => "load",
            ActionKind::Unload(_) => "unload",
        }
    }

    /// `approach(d1)` style label.
    pub fn label(&self, m: &WorldMap) -> String {
        let arg = match self {
            ActionKind::Approach(d) | ActionKind::OpenDoor(d) | ActionKind::GoThrough(d) => {
                m.door(*d).name.clone()
            }
            ActionKind::Load { object, .. } | ActionKind::Unload(object) => object.0.clone(),
        };
        format!("{}({})", self.name(), arg)
    }
}

/// An action with its planned duration in seconds.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskAction {
    pub kind: ActionKind,
    pub duration: u32,
}

impl TaskAction {
    pub fn new(kind: ActionKind, duration: u32) -> Self {
        Self { kind, duration }
    }
}

/// Per-robot action queue; the front is the next action to execute.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub actions: VecDeque<TaskAction>,
}

impl Plan {
    pub fn new(actions: impl IntoIterator<Item = TaskAction>) -> Self {
        Self {
            actions: actions.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn front(&self) -> Option<&TaskAction> {
        self.actions.front()
    }

    pub fn pop(&mut self) -> Option<TaskAction> {
        self.actions.pop_front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TaskAction> {
        self.actions.iter()
    }

    /// Sum of planned durations.
    pub fn cost(&self) -> u64 {
        self.actions.iter().map(|a| a.duration as u64).sum()
    }

    /// One action per line with its step index, e.g. `approach(d1,0).`
    pub fn dump(&self, m: &WorldMap) -> String {
        let mut out = String::new();
        for (i, a) in self.actions.iter().enumerate() {
            let label = a.kind.label(m);
            let label = label.strip_suffix(')').unwrap_or(&label);
            out.push_str(&format!("{label},{i}).\n"));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Literal {
    /// `located(O, base_station)`
    Located(ObjectId),
    /// Robot ends in the given room; used for navigation subgoals.
    RobotIn(RoomId),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub literals: BTreeSet<Literal>,
}

impl GoalSpec {
    pub fn deliver<I, O>(objects: I) -> Self
    where
        I: IntoIterator<Item = O>,
        O: Into<ObjectId>,
    {
        Self {
            literals: objects
                .into_iter()
                .map(|o| Literal::Located(o.into()))
                .collect(),
        }
    }

    pub fn robot_in(room: RoomId) -> Self {
        Self {
            literals: BTreeSet::from([Literal::RobotIn(room)]),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn objects(&self) -> impl Iterator<Item = &ObjectId> {
        self.literals.iter().filter_map(|l| match l {
            Literal::Located(o) => Some(o),
            Literal::RobotIn(_) => None,
        })
    }

    pub fn with(mut self, lit: Literal) -> Self {
        self.literals.insert(lit);
        self
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        ObjectId::new(s)
    }
}

/// True iff every literal of `g` holds in `s`.
pub fn satisfies(s: &SymbolicState, g: &GoalSpec) -> bool {
    g.literals.iter().all(|l| match l {
        Literal::Located(o) => s.object_at.get(o) == Some(&Place::Base),
        Literal::RobotIn(r) => s.robot_room == *r,
    })
}

fn violation(a: &TaskAction, m: &WorldMap, missing: impl Into<String>) -> PlanError {
    PlanError::PreconditionViolation {
        action: a.kind.label(m),
        missing: missing.into(),
    }
}

/// Successor of `s` under `a`, or the first failed precondition.
pub fn apply(s: &SymbolicState, a: &TaskAction, m: &WorldMap) -> Result<SymbolicState, PlanError> {
    let mut next = s.clone();
    match &a.kind {
        ActionKind::Approach(d) => {
            let door = m.door(*d);
            let Some(target) = door.approach_from(s.robot_room) else {
                return Err(violation(
                    a,
                    m,
                    format!("door {} not adjoining room", door.name),
                ));
            };
            next.facing_door = Some(*d);
            next.cell = target;
        }
        ActionKind::OpenDoor(d) => {
            if s.facing_door != Some(*d) {
                return Err(violation(
                    a,
                    m,
                    format!("not facing door {}", m.door(*d).name),
                ));
            }
            next.door_open[d.index()] = true;
        }
        ActionKind::GoThrough(d) => {
            let door = m.door(*d);
            if s.facing_door != Some(*d) {
                return Err(violation(a, m, format!("not facing door {}", door.name)));
            }
            if !s.is_open(*d) {
                return Err(violation(a, m, format!("door {} is closed", door.name)));
            }
            let other = door
                .other_side(s.robot_room)
                .expect("faced door adjoins room");
            next.robot_room = other;
            next.cell = door.approach_from(other).expect("door adjoins other side");
            next.facing_door = None;
            // Doors swing shut behind the robot.
            next.door_open[d.index()] = false;
        }
        ActionKind::Load { object, station } => {
            match s.object_at.get(object) {
                Some(Place::Station(at)) if at == station => {}
                Some(_) => return Err(violation(a, m, format!("{object} is not at the station"))),
                None => return Err(PlanError::UnknownObject(object.0.clone())),
            }
            let st = m.station(*station);
            if st.room != s.robot_room {
                return Err(violation(
                    a,
                    m,
                    format!("robot not in the room of {}", st.name),
                ));
            }
            if s.facing_door.is_some() {
                return Err(violation(a, m, "robot is facing a door"));
            }
            if s.carried.is_some() {
                return Err(violation(a, m, "robot already carries an object"));
            }
            next.carried = Some(object.clone());
            next.object_at.insert(object.clone(), Place::Robot(s.robot));
            next.cell = st.cell;
        }
        ActionKind::Unload(object) => {
            if s.carried.as_ref() != Some(object) {
                return Err(violation(a, m, format!("robot does not carry {object}")));
            }
            if s.robot_room != m.base_room() {
                return Err(violation(a, m, "robot not in the base room"));
            }
            next.carried = None;
            next.object_at.insert(object.clone(), Place::Base);
            next.cell = m.base_station().cell;
            next.facing_door = None;
        }
    }
    Ok(next)
}

/// Planned duration of `kind` when started from a robot resting on `from`.
pub fn action_duration(kind: &ActionKind, from: Cell, m: &WorldMap) -> Option<u32> {
    let room = m.room_of(from)?;
    let d = match kind {
        ActionKind::Approach(d) => m
            .room_distance(from, m.door(*d).approach_from(room)?)?
            .max(1),
        ActionKind::OpenDoor(d) => match m.door(*d).kind {
            DoorKind::RobotOpenable => OPEN_ROBOT_DOOR_S,
            DoorKind::HumanOperated => OPEN_HUMAN_DOOR_ESTIMATE_S,
        },
        ActionKind::GoThrough(_) => GO_THROUGH_S,
        ActionKind::Load { station, .. } => {
            m.room_distance(from, m.station(*station).cell)? + HANDLE_OBJECT_S
        }
        ActionKind::Unload(_) => m.room_distance(from, m.base_station().cell)? + HANDLE_OBJECT_S,
    };
    Some(d)
}

// ---------------------------------------------------------------------------
// Search

/// Door occupancy claimed by other robots, in absolute seconds `[start, end)`.
#[derive(Clone, Debug, Default)]
pub struct Reservations {
    by_door: HashMap<DoorId, Vec<(u64, u64)>>,
}

impl Reservations {
    pub fn add(&mut self, door: DoorId, start: u64, end: u64) {
        if end > start {
            self.by_door.entry(door).or_default().push((start, end));
        }
    }

    /// Total overlap of `[start, end)` with the intervals claimed at `door`.
    pub fn overlap(&self, door: DoorId, start: u64, end: u64) -> u64 {
        self.by_door.get(&door).map_or(0, |v| {
            v.iter()
                .map(|&(s, e)| e.min(end).saturating_sub(s.max(start)))
                .sum()
        })
    }

    pub fn is_empty(&self) -> bool {
        self.by_door.is_empty()
    }
}

/// Door occupancy intervals of a plan started at `start`: every `opendoor`
/// and `gothrough` action at a door, as `(door, begin, end)`.
pub fn door_intervals(plan: &Plan, start: u64) -> Vec<(DoorId, u64, u64)> {
    let mut t = start;
    let mut out = Vec::new();
    for a in plan.iter() {
        let end = t + a.duration as u64;
        if let ActionKind::OpenDoor(d) | ActionKind::GoThrough(d) = a.kind {
            out.push((d, t, end));
        }
        t = end;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Loc {
    Station(StationId),
    Held,
    Base,
    Elsewhere,
}

impl Loc {
    fn code(self) -> u64 {
        match self {
            Loc::Held => 0,
            Loc::Base => 1,
            Loc::Elsewhere => 2,
            Loc::Station(st) => st.index() as u64 + 3,
        }
    }
}

/// Doors a search can track in its open-door bitmask.
pub const MAX_SEARCH_DOORS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Node {
    cell: Cell,
    room: RoomId,
    facing: Option<DoorId>,
    carried: Option<u8>,
    open: u64,
    objects: Vec<Loc>,
}

// Packed into a few words; the derived impl spends most of the search in
// the hasher.
impl std::hash::Hash for Node {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        let opt = |v: Option<usize>| v.map_or(0, |x| x as u64 + 1);
        h.write_u64(
            self.cell.x as u64
                | (self.cell.y as u64) << 16
                | (self.room.index() as u64) << 32
                | opt(self.facing.map(DoorId::index)) << 48,
        );
        h.write_u64(self.open ^ opt(self.carried.map(usize::from)).rotate_right(8));
        for chunk in self.objects.chunks(4) {
            let w = chunk
                .iter()
                .enumerate()
                .fold(0u64, |w, (k, l)| w | (l.code() & 0xffff) << (16 * k));
            h.write_u64(w);
        }
    }
}

/// Search-internal action; objects by index so expanding a node allocates
/// nothing but the node itself.
#[derive(Clone, Copy, Debug)]
enum Step {
    Approach(DoorId),
    Open(DoorId),
    Through(DoorId),
    Load(u8, StationId),
    Unload(u8),
}

struct Problem<'a> {
    m: &'a WorldMap,
    objects: Vec<ObjectId>,
    goal_objects: Vec<u8>,
    goal_room: Option<RoomId>,
    door_rank: Vec<u16>,
    base_room: RoomId,
}

type SeqKey = Rc<Vec<(u8, u16)>>;

impl Problem<'_> {
    fn is_goal(&self, n: &Node) -> bool {
        self.goal_objects
            .iter()
            .all(|&o| n.objects[o as usize] == Loc::Base)
            && self.goal_room.is_none_or(|r| n.room == r)
    }

    fn kind(&self, step: Step) -> ActionKind {
        match step {
            Step::Approach(d) => ActionKind::Approach(d),
            Step::Open(d) => ActionKind::OpenDoor(d),
            Step::Through(d) => ActionKind::GoThrough(d),
            Step::Load(o, station) => ActionKind::Load {
                object: self.objects[o as usize].clone(),
                station,
            },
            Step::Unload(o) => ActionKind::Unload(self.objects[o as usize].clone()),
        }
    }

    fn key(&self, step: Step) -> (u8, u16) {
        match step {
            Step::Approach(d) => (0, self.door_rank[d.index()]),
            Step::Open(d) => (1, self.door_rank[d.index()]),
            Step::Through(d) => (2, self.door_rank[d.index()]),
            Step::Load(o, _) => (3, o as u16),
            Step::Unload(o) => (4, o as u16),
        }
    }

    fn successors(&self, n: &Node, out: &mut Vec<(Step, u32, Node)>) {
        let m = self.m;
        out.clear();
        for door in m.doors() {
            let d = door.id;
            if !door.adjoins(n.room) {
                continue;
            }
            if n.facing != Some(d) {
                let approach = door.approach_from(n.room).expect("adjoining");
                if let Some(dist) = m.room_distance(n.cell, approach) {
                    let mut next = n.clone();
                    next.facing = Some(d);
                    next.cell = approach;
                    out.push((Step::Approach(d), dist.max(1), next));
                }
                continue;
            }
            let bit = 1u64 << d.index();
            if n.open & bit == 0 {
                let dur =
                    action_duration(&ActionKind::OpenDoor(d), n.cell, m).expect("door duration");
                let mut next = n.clone();
                next.open |= bit;
                out.push((Step::Open(d), dur, next));
            } else {
                let other = door.other_side(n.room).expect("adjoining");
                let mut next = n.clone();
                next.room = other;
                next.cell = door.approach_from(other).expect("adjoining");
                next.facing = None;
                next.open &= !bit;
                out.push((Step::Through(d), GO_THROUGH_S, next));
            }
        }
        if n.carried.is_none() && n.facing.is_none() {
            for &o in &self.goal_objects {
                if let Loc::Station(st) = n.objects[o as usize] {
                    let station = m.station(st);
                    if station.room != n.room {
                        continue;
                    }
                    if let Some(dist) = m.room_distance(n.cell, station.cell) {
                        let mut next = n.clone();
                        next.carried = Some(o);
                        next.objects[o as usize] = Loc::Held;
                        next.cell = station.cell;
                        out.push((Step::Load(o, st), dist + HANDLE_OBJECT_S, next));
                    }
                }
            }
        }
        if let Some(o) = n.carried {
            if n.room == self.base_room {
                let base = m.base_station().cell;
                if let Some(dist) = m.room_distance(n.cell, base) {
                    let mut next = n.clone();
                    next.carried = None;
                    next.objects[o as usize] = Loc::Base;
                    next.cell = base;
                    next.facing = None;
                    out.push((Step::Unload(o), dist + HANDLE_OBJECT_S, next));
                }
            }
        }
    }
}

/// Minimum-duration plan from `s` to a state satisfying `g`.
pub fn plan(s: &SymbolicState, g: &GoalSpec, m: &WorldMap) -> Result<Plan, PlanError> {
    search(s, g, m, None).map(|(p, _)| p)
}

/// Uniform-cost search. With `congestion`, each door action additionally
/// costs its overlap (seconds) with the reserved intervals, the plan being
/// started at the given absolute time. Returns the plan and its search cost.
pub fn search(
    s: &SymbolicState,
    g: &GoalSpec,
    m: &WorldMap,
    congestion: Option<(&Reservations, u64)>,
) -> Result<(Plan, u64), PlanError> {
    if m.room_of(s.cell) != Some(s.robot_room) {
        return Err(PlanError::NotInRoom(s.cell));
    }
    for o in g.objects() {
        if !s.object_at.contains_key(o) {
            return Err(PlanError::UnknownObject(o.0.clone()));
        }
    }
    if satisfies(s, g) {
        return Ok((Plan::default(), 0));
    }
    if m.doors().len() > MAX_SEARCH_DOORS {
        return Err(PlanError::Unsolvable(format!(
            "map has {} doors, search supports {MAX_SEARCH_DOORS}",
            m.doors().len()
        )));
    }

    // Relevant objects: goal objects plus whatever is in hand.
    let mut relevant: BTreeSet<ObjectId> = g.objects().cloned().collect();
    if let Some(c) = &s.carried {
        relevant.insert(c.clone());
    }
    let objects: Vec<ObjectId> = relevant.into_iter().collect();
    if objects.len() > u8::MAX as usize {
        return Err(PlanError::Unsolvable(format!(
            "{} objects in one search",
            objects.len()
        )));
    }
    let goal_objects: Vec<u8> = g
        .objects()
        .map(|o| objects.binary_search(o).expect("goal object indexed") as u8)
        .collect();
    let goal_room = g.literals.iter().find_map(|l| match l {
        Literal::RobotIn(r) => Some(*r),
        _ => None,
    });
    let mut names: Vec<(&str, usize)> = m
        .doors()
        .iter()
        .map(|d| (d.name.as_str(), d.id.index()))
        .collect();
    names.sort();
    let mut door_rank = vec![0u16; m.doors().len()];
    for (rank, (_, i)) in names.into_iter().enumerate() {
        door_rank[i] = rank as u16;
    }

    let start = Node {
        cell: s.cell,
        room: s.robot_room,
        facing: s.facing_door,
        carried: s
            .carried
            .as_ref()
            .map(|c| objects.binary_search(c).expect("carried indexed") as u8),
        open: m
            .doors()
            .iter()
            .filter(|d| s.is_open(d.id))
            .fold(0, |bits, d| bits | 1 << d.id.index()),
        objects: objects
            .iter()
            .map(|o| match s.object_at.get(o) {
                Some(Place::Station(st)) => Loc::Station(*st),
                Some(Place::Robot(r)) if *r == s.robot => Loc::Held,
                Some(Place::Robot(_)) => Loc::Elsewhere,
                Some(Place::Base) => Loc::Base,
                None => Loc::Elsewhere,
            })
            .collect(),
    };
    let problem = Problem {
        m,
        goal_objects,
        goal_room,
        door_rank,
        objects,
        base_room: m.base_room(),
    };

    // Nodes are interned once; per-node bookkeeping is indexed by id.
    struct Entry {
        parent: Option<(usize, Step, u32)>,
        time: u64,
        cost: u64,
        seq: SeqKey,
        closed: bool,
    }
    let mut ids: HashMap<Node, usize> = HashMap::with_capacity(4096);
    ids.insert(start.clone(), 0);
    let mut nodes = vec![start];
    let root_seq: SeqKey = Rc::new(Vec::new());
    let mut entries = vec![Entry {
        parent: None,
        time: 0,
        cost: 0,
        seq: Rc::clone(&root_seq),
        closed: false,
    }];
    let mut heap: BinaryHeap<Reverse<(u64, SeqKey, usize)>> = BinaryHeap::new();
    heap.push(Reverse((0, root_seq, 0)));
    let mut succ = Vec::new();

    while let Some(Reverse((cost, seq, idx))) = heap.pop() {
        let e = &entries[idx];
        if e.closed || !Rc::ptr_eq(&e.seq, &seq) {
            continue;
        }
        entries[idx].closed = true;
        if problem.is_goal(&nodes[idx]) {
            let mut actions = Vec::new();
            let mut cur = idx;
            while let Some((p, step, dur)) = entries[cur].parent {
                actions.push(TaskAction::new(problem.kind(step), dur));
                cur = p;
            }
            actions.reverse();
            return Ok((Plan::new(actions), cost));
        }
        let time = entries[idx].time;
        problem.successors(&nodes[idx], &mut succ);
        for (step, dur, next) in succ.drain(..) {
            let mut extra = 0;
            if let (Some((res, t0)), Step::Open(d) | Step::Through(d)) = (congestion, step) {
                extra = res.overlap(d, t0 + time, t0 + time + dur as u64);
            }
            let ncost = cost + dur as u64 + extra;
            let key = problem.key(step);
            let nid = match ids.get(&next) {
                Some(&i) => {
                    let e = &entries[i];
                    let better = match ncost.cmp(&e.cost) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => seq.iter().chain([&key]).lt(e.seq.iter()),
                    };
                    if e.closed || !better {
                        continue;
                    }
                    i
                }
                None => {
                    let i = nodes.len();
                    ids.insert(next.clone(), i);
                    nodes.push(next);
                    entries.push(Entry {
                        parent: None,
                        time: 0,
                        cost: u64::MAX,
                        seq: Rc::clone(&seq),
                        closed: false,
                    });
                    i
                }
            };
            let mut nseq = Vec::with_capacity(seq.len() + 1);
            nseq.extend_from_slice(&seq);
            nseq.push(key);
            let nseq = Rc::new(nseq);
            entries[nid] = Entry {
                parent: Some((idx, step, dur)),
                time: time + dur as u64,
                cost: ncost,
                seq: Rc::clone(&nseq),
                closed: false,
            };
            heap.push(Reverse((ncost, nseq, nid)));
        }
    }
    Err(PlanError::Unsolvable(format!(
        "robot {} cannot reach {} goal literal(s)",
        s.robot.0,
        g.literals.len()
    )))
}
