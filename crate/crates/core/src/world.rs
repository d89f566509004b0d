//! Grid office environment: rooms, doors, stations and the map file format.
//!
//! A map is a 4-connected grid. Every passable cell is either a room cell or
//! a door cell; door cells are the only links between rooms. Maps are
//! immutable once loaded, so they can be shared read-only between trials.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest accepted grid side, in cells.
pub const MAX_SIDE: u16 = 1024;

/// The map shipped with the crate: corridor `C`, loading rooms `R1..R3`,
/// base room `B`. Doors `d1..d3` are robot-openable, `db` needs a human.
pub const OFFICE3_JSON: &str = include_str!("../fixtures/office3.json");

#[derive(Debug, Error)]
pub enum MapError {
    #[error("malformed map file: {0}")]
    Parse(String),
    #[error("invalid map: {0}")]
    Validation(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WorldError {
    #[error("unknown room {0}")]
    UnknownRoom(String),
    #[error("unknown door {0}")]
    UnknownDoor(String),
    #[error("unknown station {0}")]
    UnknownStation(String),
}

/// Grid coordinate; x grows rightward, y downward. Serialized as `[x, y]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u16; 2]", into = "[u16; 2]")]
pub struct Cell {
    pub x: u16,
    pub y: u16,
}

impl Cell {
    pub const fn new(x: u16, y: u16) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        (self.x.abs_diff(other.x) + self.y.abs_diff(other.y)) as u32
    }

    pub fn is_adjacent(self, other: Cell) -> bool {
        self.manhattan(other) == 1
    }

    /// Neighbours in the fixed N, E, S, W order, clipped to the grid.
    pub fn neighbours(self, width: u16, height: u16) -> impl Iterator<Item = Cell> {
        let Cell { x, y } = self;
        [
            (y > 0).then(|| Cell::new(x, y - 1)),
            (x + 1 < width).then(|| Cell::new(x + 1, y)),
            (y + 1 < height).then(|| Cell::new(x, y + 1)),
            (x > 0).then(|| Cell::new(x - 1, y)),
        ]
        .into_iter()
        .flatten()
    }
}

impl From<[u16; 2]> for Cell {
    fn from([x, y]: [u16; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [u16; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

macro_rules! index_id {
    ($name:ident) => {
        #[derive(
            Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        pub struct $name(pub u16);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

index_id!(RoomId);
index_id!(DoorId);
index_id!(StationId);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoorKind {
    RobotOpenable,
    HumanOperated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Wall,
    Free(RoomId),
    Door(DoorId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Room {
    pub id: RoomId,
    pub name: String,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Door {
    pub id: DoorId,
    pub name: String,
    pub cell: Cell,
    pub connects: (RoomId, RoomId),
    pub kind: DoorKind,
    /// Initial state; the simulator owns the live state.
    pub open: bool,
    pub close_delay: u32,
    /// Cell next to the door inside `connects.0` / `connects.1`.
    pub approach: (Cell, Cell),
}

impl Door {
    pub fn adjoins(&self, room: RoomId) -> bool {
        self.connects.0 == room || self.connects.1 == room
    }

    /// Room on the far side when coming from `room`.
    pub fn other_side(&self, room: RoomId) -> Option<RoomId> {
        if self.connects.0 == room {
            Some(self.connects.1)
        } else if self.connects.1 == room {
            Some(self.connects.0)
        } else {
            None
        }
    }

    /// Approach cell on the side of `room`.
    pub fn approach_from(&self, room: RoomId) -> Option<Cell> {
        if self.connects.0 == room {
            Some(self.approach.0)
        } else if self.connects.1 == room {
            Some(self.approach.1)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Station {
    pub id: StationId,
    pub name: String,
    pub cell: Cell,
    pub room: RoomId,
    pub object: Option<String>,
}

/// Validated office map.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldMap {
    width: u16,
    height: u16,
    cells: Vec<CellKind>,
    rooms: Vec<Room>,
    doors: Vec<Door>,
    stations: Vec<Station>,
    base_station: StationId,
    /// Key cell (door approach or station) -> within-room distance grid.
    key_distances: HashMap<Cell, Vec<u32>>,
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    width: u16,
    height: u16,
    #[serde(default)]
    walls: Vec<Cell>,
    rooms: BTreeMap<String, Vec<Cell>>,
    #[serde(default)]
    doors: Vec<DoorFile>,
    stations: Vec<StationFile>,
    base_station: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DoorFile {
    id: String,
    cell: Cell,
    connects: (String, String),
    kind: DoorKind,
    close_delay_s: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    open: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationFile {
    id: String,
    cell: Cell,
    #[serde(default)]
    object: Option<String>,
}

/// Parses and validates a map file. Cells that are neither in a room nor a
/// door are walls, whether or not they appear in `walls`.
pub fn load_map(text: &str) -> Result<WorldMap, MapError> {
    let file: MapFile = serde_json::from_str(text).map_err(|e| MapError::Parse(e.to_string()))?;
    WorldMap::from_file(file)
}

pub fn office3() -> WorldMap {
    load_map(OFFICE3_JSON).expect("bundled office3 map is valid")
}

fn invalid(msg: impl Into<String>) -> MapError {
    MapError::Validation(msg.into())
}

impl WorldMap {
    fn from_file(file: MapFile) -> Result<Self, MapError> {
        let (width, height) = (file.width, file.height);
        if width == 0 || height == 0 {
            return Err(invalid("width and height must be positive"));
        }
        if width > MAX_SIDE || height > MAX_SIDE {
            return Err(invalid(format!(
                "grid larger than {MAX_SIDE} cells per side"
            )));
        }
        let in_grid = |c: Cell| c.x < width && c.y < height;
        let idx = |c: Cell| c.y as usize * width as usize + c.x as usize;

        let mut cells = vec![CellKind::Wall; width as usize * height as usize];
        let mut explicit_walls = BTreeSet::new();
        for &w in &file.walls {
            if !in_grid(w) {
                return Err(invalid(format!("wall {w} outside grid")));
            }
            explicit_walls.insert(w);
        }

        let mut rooms = Vec::with_capacity(file.rooms.len());
        let mut room_ids = BTreeMap::new();
        for (i, (name, room_cells)) in file.rooms.iter().enumerate() {
            let id = RoomId(i as u16);
            if room_cells.is_empty() {
                return Err(invalid(format!("room {name} has no cells")));
            }
            for &c in room_cells {
                if !in_grid(c) {
                    return Err(invalid(format!("room {name} cell {c} outside grid")));
                }
                if explicit_walls.contains(&c) {
                    return Err(invalid(format!("room {name} cell {c} is a wall")));
                }
                match cells[idx(c)] {
                    CellKind::Wall => cells[idx(c)] = CellKind::Free(id),
                    _ => return Err(invalid(format!("cell {c} assigned to more than one room"))),
                }
            }
            room_ids.insert(name.clone(), id);
            rooms.push(Room {
                id,
                name: name.clone(),
                cells: room_cells.clone(),
            });
        }

        let room_of = |name: &str| {
            room_ids
                .get(name)
                .copied()
                .ok_or_else(|| invalid(format!("unknown room {name}")))
        };

        let mut doors = Vec::with_capacity(file.doors.len());
        let mut door_names = BTreeSet::new();
        for (i, d) in file.doors.iter().enumerate() {
            let id = DoorId(i as u16);
            if !door_names.insert(d.id.clone()) {
                return Err(invalid(format!("duplicate door id {}", d.id)));
            }
            if !in_grid(d.cell) {
                return Err(invalid(format!("door {} outside grid", d.id)));
            }
            let a = room_of(&d.connects.0)?;
            let b = room_of(&d.connects.1)?;
            if a == b {
                return Err(invalid(format!("door {} connects a room to itself", d.id)));
            }
            if !(d.close_delay_s > 0.0
                && d.close_delay_s.is_finite()
                && d.close_delay_s <= u32::MAX as f64)
            {
                return Err(invalid(format!(
                    "door {} close_delay_s must be positive",
                    d.id
                )));
            }
            if explicit_walls.contains(&d.cell) {
                return Err(invalid(format!("door {} sits on a wall", d.id)));
            }
            match cells[idx(d.cell)] {
                CellKind::Wall => cells[idx(d.cell)] = CellKind::Door(id),
                CellKind::Free(_) => return Err(invalid("door not on boundary")),
                CellKind::Door(_) => {
                    return Err(invalid(format!("door {} overlaps another door", d.id)))
                }
            }
            doors.push(Door {
                id,
                name: d.id.clone(),
                cell: d.cell,
                connects: (a, b),
                kind: d.kind,
                open: d.open,
                close_delay: d.close_delay_s.round().max(1.0) as u32,
                approach: (d.cell, d.cell),
            });
        }

        // Door cells must touch both of their rooms.
        for door in &mut doors {
            let touching = |room: RoomId| {
                door.cell
                    .neighbours(width, height)
                    .find(|&n| cells[idx(n)] == CellKind::Free(room))
            };
            match (touching(door.connects.0), touching(door.connects.1)) {
                (Some(a), Some(b)) => door.approach = (a, b),
                _ => return Err(invalid("door not on boundary")),
            }
        }

        // Rooms only meet through doors.
        for y in 0..height {
            for x in 0..width {
                let c = Cell::new(x, y);
                if let CellKind::Free(r) = cells[idx(c)] {
                    for n in c.neighbours(width, height) {
                        if let CellKind::Free(o) = cells[idx(n)] {
                            if o != r {
                                return Err(invalid(format!(
                                    "rooms {} and {} touch at {c} without a door",
                                    rooms[r.index()].name,
                                    rooms[o.index()].name
                                )));
                            }
                        }
                    }
                }
            }
        }

        let mut stations = Vec::with_capacity(file.stations.len());
        let mut station_names = BTreeMap::new();
        let mut objects = BTreeSet::new();
        for (i, s) in file.stations.iter().enumerate() {
            let id = StationId(i as u16);
            if station_names.insert(s.id.clone(), id).is_some() {
                return Err(invalid(format!("duplicate station id {}", s.id)));
            }
            if !in_grid(s.cell) {
                return Err(invalid(format!("station {} outside grid", s.id)));
            }
            let room = match cells[idx(s.cell)] {
                CellKind::Free(r) => r,
                _ => {
                    return Err(invalid(format!(
                        "station {} is not on a free room cell",
                        s.id
                    )))
                }
            };
            if let Some(o) = &s.object {
                if !objects.insert(o.clone()) {
                    return Err(invalid(format!(
                        "object {o} placed at more than one station"
                    )));
                }
            }
            stations.push(Station {
                id,
                name: s.id.clone(),
                cell: s.cell,
                room,
                object: s.object.clone(),
            });
        }
        let base_station = *station_names.get(&file.base_station).ok_or_else(|| {
            invalid(format!(
                "base station {} is not a station",
                file.base_station
            ))
        })?;

        let mut map = WorldMap {
            width,
            height,
            cells,
            rooms,
            doors,
            stations,
            base_station,
            key_distances: HashMap::new(),
        };

        for room in &map.rooms {
            let dist = map.bfs_within_room(room.cells[0]);
            if room.cells.iter().any(|&c| dist[idx(c)] == u32::MAX) {
                return Err(invalid(format!("room {} is not connected", room.name)));
            }
        }
        if !map.is_connected() {
            return Err(invalid("free-cell graph is disconnected"));
        }

        let mut keys: Vec<Cell> = map.stations.iter().map(|s| s.cell).collect();
        for d in &map.doors {
            keys.push(d.approach.0);
            keys.push(d.approach.1);
        }
        for k in keys {
            if !map.key_distances.contains_key(&k) {
                let dist = map.bfs_within_room(k);
                map.key_distances.insert(k, dist);
            }
        }
        Ok(map)
    }

    fn idx(&self, c: Cell) -> usize {
        c.y as usize * self.width as usize + c.x as usize
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn cell(&self, c: Cell) -> CellKind {
        if self.contains(c) {
            self.cells[self.idx(c)]
        } else {
            CellKind::Wall
        }
    }

    pub fn is_passable(&self, c: Cell) -> bool {
        !matches!(self.cell(c), CellKind::Wall)
    }

    pub fn room_of(&self, c: Cell) -> Option<RoomId> {
        match self.cell(c) {
            CellKind::Free(r) => Some(r),
            _ => None,
        }
    }

    pub fn rooms(&self) -> &[Room] {
        &self.rooms
    }

    pub fn doors(&self) -> &[Door] {
        &self.doors
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn room(&self, id: RoomId) -> &Room {
        &self.rooms[id.index()]
    }

    pub fn door(&self, id: DoorId) -> &Door {
        &self.doors[id.index()]
    }

    pub fn station(&self, id: StationId) -> &Station {
        &self.stations[id.index()]
    }

    pub fn base_station(&self) -> &Station {
        self.station(self.base_station)
    }

    pub fn base_room(&self) -> RoomId {
        self.base_station().room
    }

    pub fn room_id(&self, name: &str) -> Result<RoomId, WorldError> {
        self.rooms
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.id)
            .ok_or_else(|| WorldError::UnknownRoom(name.to_string()))
    }

    pub fn door_id(&self, name: &str) -> Result<DoorId, WorldError> {
        self.doors
            .iter()
            .find(|d| d.name == name)
            .map(|d| d.id)
            .ok_or_else(|| WorldError::UnknownDoor(name.to_string()))
    }

    pub fn station_id(&self, name: &str) -> Result<StationId, WorldError> {
        self.stations
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.id)
            .ok_or_else(|| WorldError::UnknownStation(name.to_string()))
    }

    /// Stations other than the base, in file order.
    pub fn loading_stations(&self) -> impl Iterator<Item = &Station> {
        let base = self.base_station;
        self.stations.iter().filter(move |s| s.id != base)
    }

    pub fn door_at(&self, c: Cell) -> Option<DoorId> {
        match self.cell(c) {
            CellKind::Door(d) => Some(d),
            _ => None,
        }
    }

    /// The door linking rooms `a` and `b`, if there is one.
    pub fn door_between(&self, a: RoomId, b: RoomId) -> Result<Option<&Door>, WorldError> {
        for r in [a, b] {
            if r.index() >= self.rooms.len() {
                return Err(WorldError::UnknownRoom(format!("#{}", r.0)));
            }
        }
        if a == b {
            return Ok(None);
        }
        Ok(self
            .doors
            .iter()
            .find(|d| d.connects == (a, b) || d.connects == (b, a)))
    }

    /// Shortest 4-connected distance between two cells of the same room,
    /// moving only over that room's cells.
    pub fn room_distance(&self, from: Cell, to: Cell) -> Option<u32> {
        let room = self.room_of(from)?;
        if self.room_of(to) != Some(room) {
            return None;
        }
        if from == to {
            return Some(0);
        }
        let d = if let Some(grid) = self.key_distances.get(&to) {
            grid[self.idx(from)]
        } else if let Some(grid) = self.key_distances.get(&from) {
            grid[self.idx(to)]
        } else {
            self.bfs_within_room(from)[self.idx(to)]
        };
        (d != u32::MAX).then_some(d)
    }

    fn bfs_within_room(&self, start: Cell) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.cells.len()];
        let Some(room) = self.room_of(start) else {
            return dist;
        };
        dist[self.idx(start)] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            let d = dist[self.idx(c)];
            for n in c.neighbours(self.width, self.height) {
                let i = self.idx(n);
                if dist[i] == u32::MAX && self.cells[i] == CellKind::Free(room) {
                    dist[i] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    fn is_connected(&self) -> bool {
        let passable: Vec<Cell> = (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| Cell::new(x, y)))
            .filter(|&c| self.is_passable(c))
            .collect();
        let Some(&start) = passable.first() else {
            return false;
        };
        let mut seen = vec![false; self.cells.len()];
        seen[self.idx(start)] = true;
        let mut count = 1;
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in c.neighbours(self.width, self.height) {
                let i = self.idx(n);
                if !seen[i] && self.is_passable(n) {
                    seen[i] = true;
                    count += 1;
                    queue.push_back(n);
                }
            }
        }
        count == passable.len()
    }

    /// Serializes back to the map file format.
    pub fn to_json(&self) -> String {
        let walls = (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| Cell::new(x, y)))
            .filter(|&c| self.cell(c) == CellKind::Wall)
            .collect();
        let file = MapFile {
            width: self.width,
            height: self.height,
            walls,
            rooms: self
                .rooms
                .iter()
                .map(|r| (r.name.clone(), r.cells.clone()))
                .collect(),
            doors: self
                .doors
                .iter()
                .map(|d| DoorFile {
                    id: d.name.clone(),
                    cell: d.cell,
                    connects: (
                        self.room(d.connects.0).name.clone(),
                        self.room(d.connects.1).name.clone(),
                    ),
                    kind: d.kind,
                    close_delay_s: d.close_delay as f64,
                    open: d.open,
                })
                .collect(),
            stations: self
                .stations
                .iter()
                .map(|s| StationFile {
                    id: s.name.clone(),
                    cell: s.cell,
                    object: s.object.clone(),
                })
                .collect(),
            base_station: self.base_station().name.clone(),
        };
        serde_json::to_string(&file).expect("map serializes")
    }

    /// ASCII rendering: `#` wall, `.` room, `D` door, station initials.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let c = Cell::new(x, y);
                let ch = if let Some(s) = self.stations.iter().find(|s| s.cell == c) {
                    s.name.chars().next().unwrap_or('S')
                } else {
                    match self.cell(c) {
                        CellKind::Wall => '#',
                        CellKind::Free(_) => '.',
                        CellKind::Door(_) => 'D',
                    }
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}
