//! The closed loop: plan the team, execute one second, let the human look
//! and react, turn feedback into constraints, replan when they change.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{snapshot, Frame};
use crate::human::{self, HumanAction, HumanConfig, HumanError, HumanState, Mode};
use crate::iidp::{plan_team_from, IidpError};
use crate::planner::{GoalSpec, ObjectId, Place, RobotId, SymbolicState};
use crate::restrictor::{
    classify_tasks, convert, effective_goals, ConstraintSet, FeedbackEvent, FeedbackKind,
    RestrictorError, TaskClass,
};
use crate::sim::{EventType, SimError, SimEvent, SimState};
use crate::world::{load_map, office3, DoorId, MapError, WorldMap};

pub const DEFAULT_MAX_SIM_SECONDS: u64 = 7200;

#[derive(Debug, Error)]
pub enum TrialError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("cannot read map {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid trial config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Human(#[from] HumanError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Planning(#[from] IidpError),
    #[error(transparent)]
    Restrictor(#[from] RestrictorError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    /// Map file; the bundled office map when absent.
    pub map: Option<PathBuf>,
    pub n_robots: usize,
    pub objects_per_robot: usize,
    pub mode: Mode,
    pub seed: u64,
    pub human: HumanConfig,
    pub max_sim_seconds: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            map: None,
            n_robots: 3,
            objects_per_robot: 3,
            mode: Mode::Feedback,
            seed: 0,
            human: HumanConfig::default(),
            max_sim_seconds: DEFAULT_MAX_SIM_SECONDS,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<(), TrialError> {
        if self.n_robots == 0 {
            return Err(TrialError::InvalidConfig(
                "n_robots must be at least 1".into(),
            ));
        }
        if self.max_sim_seconds == 0 {
            return Err(TrialError::InvalidConfig(
                "max_sim_seconds must be positive".into(),
            ));
        }
        self.human.validate()?;
        Ok(())
    }

    pub fn load_map(&self) -> Result<WorldMap, TrialError> {
        match &self.map {
            None => Ok(office3()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| TrialError::Io {
                    path: path.clone(),
                    source,
                })?;
                Ok(load_map(&text)?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub t_h: u64,
    pub t_r: Vec<u64>,
    pub t_all: u64,
    pub t_r_last: u64,
    pub team_time: u64,
    pub door_openings: u32,
    pub replans: u32,
    pub timed_out: bool,
}

impl TrialMetrics {
    pub fn new(t_h: u64, t_r: Vec<u64>, door_openings: u32, replans: u32, timed_out: bool) -> Self {
        let t_r_last = t_r.iter().copied().max().unwrap_or(0);
        Self {
            t_h,
            t_all: t_h + t_r.iter().sum::<u64>(),
            t_r_last,
            team_time: t_h.max(t_r_last),
            t_r,
            door_openings,
            replans,
            timed_out,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutput {
    pub metrics: TrialMetrics,
    pub events: Vec<SimEvent>,
}

/// Something to apply at the next cycle; the simulated human and the live
/// gateway both feed these through the inbox.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Feedback {
        kind: FeedbackKind,
        issued_at: Option<u64>,
    },
    OpenDoor(DoorId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub seq: u64,
    /// Cycle at which the command was enqueued; it applies at the next one.
    pub tick: u64,
}

/// Producer side of the executive inbox. Cloneable and thread-safe.
#[derive(Clone, Debug)]
pub struct InboxHandle {
    tx: Sender<(u64, Command)>,
    seq: Arc<AtomicU64>,
    clock: Arc<AtomicU64>,
}

impl InboxHandle {
    pub fn submit(&self, cmd: Command) -> Option<Ack> {
        let seq = self.seq.fetch_add(1, Ordering::SeqCst);
        let tick = self.clock.load(Ordering::SeqCst);
        self.tx.send((seq, cmd)).ok().map(|_| Ack { seq, tick })
    }

    pub fn now(&self) -> u64 {
        self.clock.load(Ordering::SeqCst)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopOutcome {
    Running,
    Finished,
    TimedOut,
}

/// Replanned goal sets, for auditing the constraint lifecycle.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplanRecord {
    pub t: u64,
    pub constraints: ConstraintSet,
    pub goals: Vec<GoalSpec>,
}

pub struct Executive {
    cfg: TrialConfig,
    sim: SimState,
    human: Option<HumanState>,
    rng: ChaCha8Rng,
    constraints: ConstraintSet,
    classes: BTreeMap<ObjectId, TaskClass>,
    full_goals: Vec<GoalSpec>,
    inbox: Receiver<(u64, Command)>,
    handle: InboxHandle,
    events: Vec<SimEvent>,
    replans: u32,
    door_openings: u32,
    applied: u64,
    announced_busy: Option<u64>,
    history: Vec<ReplanRecord>,
    outcome: LoopOutcome,
}

/// Start states and delivery goals: robots round-robin over the loading
/// stations; robot `i`'s `j`-th object sits at loading station `i + j`.
pub fn initial_states(
    cfg: &TrialConfig,
    m: &WorldMap,
) -> Result<Vec<(SymbolicState, GoalSpec)>, TrialError> {
    let loading: Vec<_> = m.loading_stations().map(|s| s.id).collect();
    if loading.is_empty() {
        return Err(TrialError::InvalidConfig(
            "map has no loading stations".into(),
        ));
    }
    (0..cfg.n_robots)
        .map(|i| {
            let home = loading[i % loading.len()];
            let mut s = SymbolicState::new(RobotId(i as u16), m.station(home).cell, m)
                .map_err(|e| TrialError::InvalidConfig(e.to_string()))?;
            let mut names = Vec::new();
            for j in 0..cfg.objects_per_robot {
                let name = ObjectId::new(format!("O{}", i * cfg.objects_per_robot + j + 1));
                s = s.with_object(
                    name.clone(),
                    Place::Station(loading[(i + j) % loading.len()]),
                );
                names.push(name);
            }
            Ok((s, GoalSpec::deliver(names)))
        })
        .collect()
}

impl Executive {
    /// Trial with a simulated human.
    pub fn new(cfg: TrialConfig, map: Arc<WorldMap>) -> Result<Self, TrialError> {
        Self::build(cfg, map, true)
    }

    /// Live session: commands come only from the inbox.
    pub fn live(cfg: TrialConfig, map: Arc<WorldMap>) -> Result<Self, TrialError> {
        Self::build(cfg, map, false)
    }

    fn build(
        mut cfg: TrialConfig,
        map: Arc<WorldMap>,
        simulated_human: bool,
    ) -> Result<Self, TrialError> {
        cfg.validate()?;
        cfg.human.mode = cfg.mode;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let human = if simulated_human {
            Some(human::init(&cfg.human, &mut rng)?)
        } else {
            None
        };
        let starts = initial_states(&cfg, &map)?;
        let all_goals = starts.iter().fold(GoalSpec::default(), |mut g, (_, gi)| {
            g.literals.extend(gi.literals.iter().cloned());
            g
        });
        // Reference robot: empty-handed at the base station, every object
        // where it starts.
        let mut reference = SymbolicState::new(RobotId(u16::MAX), map.base_station().cell, &map)
            .map_err(|e| TrialError::InvalidConfig(e.to_string()))?;
        for (s, _) in &starts {
            for (o, p) in &s.object_at {
                reference = reference.with_object(o.clone(), *p);
            }
        }
        let classes = classify_tasks(&all_goals, &[reference], &map);
        let states: Vec<_> = starts.iter().map(|(s, _)| s.clone()).collect();
        let goals: Vec<_> = starts.iter().map(|(_, g)| g.clone()).collect();
        let team = plan_team_from(&states, &goals, &map, &vec![0; states.len()])?;
        let robots = starts
            .into_iter()
            .zip(team.plans)
            .map(|((s, g), p)| (s, g.clone(), p))
            .collect();
        let sim = SimState::new(map, robots);
        let (tx, inbox) = mpsc::channel();
        let handle = InboxHandle {
            tx,
            seq: Arc::new(AtomicU64::new(0)),
            clock: Arc::new(AtomicU64::new(0)),
        };
        let mut exec = Self {
            cfg,
            sim,
            human,
            rng,
            constraints: ConstraintSet::default(),
            classes,
            full_goals: goals,
            inbox,
            handle,
            events: Vec::new(),
            replans: 0,
            door_openings: 0,
            applied: 0,
            announced_busy: None,
            history: Vec::new(),
            outcome: LoopOutcome::Running,
        };
        let mut ev = Vec::new();
        exec.sim.start_idle(&mut ev)?;
        exec.events.extend(ev);
        Ok(exec)
    }

    pub fn inbox(&self) -> InboxHandle {
        self.handle.clone()
    }

    pub fn sim(&self) -> &SimState {
        &self.sim
    }

    pub fn human(&self) -> Option<&HumanState> {
        self.human.as_ref()
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn classes(&self) -> &BTreeMap<ObjectId, TaskClass> {
        &self.classes
    }

    pub fn events(&self) -> &[SimEvent] {
        &self.events
    }

    pub fn history(&self) -> &[ReplanRecord] {
        &self.history
    }

    pub fn replans(&self) -> u32 {
        self.replans
    }

    /// Inbox commands applied so far.
    pub fn applied(&self) -> u64 {
        self.applied
    }

    pub fn now(&self) -> u64 {
        self.sim.now
    }

    pub fn outcome(&self) -> LoopOutcome {
        self.outcome
    }

    pub fn frame(&self) -> Frame {
        let busy_until = match &self.human {
            Some(h) => h.busy_until.filter(|&b| b > self.sim.now),
            None => self.announced_busy.filter(|&b| b > self.sim.now),
        };
        let done = self.human.as_ref().is_some_and(|h| h.done);
        snapshot(&self.sim, &self.constraints, busy_until, done)
    }

    fn log(&mut self, kind: EventType, robot: Option<usize>, door: Option<String>, detail: String) {
        self.events.push(SimEvent {
            t: self.sim.now,
            kind,
            robot,
            door,
            detail,
        });
    }

    /// One cycle of the loop: execute, let the human act, apply inbox
    /// commands, convert feedback to constraints and replan if they changed.
    pub fn step(&mut self) -> Result<LoopOutcome, TrialError> {
        if self.outcome != LoopOutcome::Running {
            return Ok(self.outcome);
        }
        let ev = self.sim.tick()?;
        self.events.extend(ev);
        let now = self.sim.now;

        if let Some(h) = self.human.as_mut() {
            let was_done = h.done;
            let waiting = self.sim.waiting_count();
            let actions = human::act(h, &self.cfg.human, waiting, now, &mut self.rng);
            if !was_done && h.done {
                self.events.push(SimEvent {
                    t: now,
                    kind: EventType::HumanDone,
                    robot: None,
                    door: None,
                    detail: String::new(),
                });
            }
            for a in actions {
                let cmd = match a {
                    HumanAction::OpenDoor => match self.sim.human_door() {
                        Some(d) => Command::OpenDoor(d),
                        None => continue,
                    },
                    HumanAction::Feedback { kind } => Command::Feedback {
                        kind,
                        issued_at: Some(now),
                    },
                };
                self.handle.submit(cmd);
            }
        }

        let mut next = convert(&self.constraints, None, now);
        while let Ok((seq, cmd)) = self.inbox.try_recv() {
            self.applied += 1;
            match cmd {
                Command::OpenDoor(d) => {
                    let mut ev = Vec::new();
                    self.sim.open_door(d, &mut ev)?;
                    self.events.extend(ev);
                    self.door_openings += 1;
                }
                Command::Feedback { kind, issued_at } => {
                    if self.cfg.mode != Mode::Feedback {
                        self.log(
                            EventType::Feedback,
                            None,
                            None,
                            format!("{kind} ignored (seq {seq})"),
                        );
                        continue;
                    }
                    let h = FeedbackEvent {
                        kind,
                        issued_at: issued_at.unwrap_or(now).min(now),
                    };
                    next = convert(&next, Some(&h), now);
                    let until = h.issued_at + kind.busy_for();
                    self.announced_busy = Some(self.announced_busy.map_or(until, |b| b.max(until)));
                    self.log(
                        EventType::Feedback,
                        None,
                        None,
                        format!("{kind} (seq {seq})"),
                    );
                }
            }
        }

        if next != self.constraints && !self.sim.all_done() {
            self.constraints = next;
            self.replan()?;
        } else {
            self.constraints = next;
        }
        let mut ev = Vec::new();
        self.sim.start_idle(&mut ev)?;
        self.events.extend(ev);
        self.handle.clock.store(now, Ordering::SeqCst);

        let human_done = self.human.as_ref().is_none_or(|h| h.done);
        self.outcome = if self.sim.all_done() && human_done {
            LoopOutcome::Finished
        } else if now >= self.cfg.max_sim_seconds {
            LoopOutcome::TimedOut
        } else {
            LoopOutcome::Running
        };
        if self.outcome != LoopOutcome::Running {
            let detail = match self.outcome {
                LoopOutcome::Finished => "finished",
                _ => "timed out",
            };
            self.log(EventType::TrialEnd, None, None, detail.into());
        }
        Ok(self.outcome)
    }

    fn replan(&mut self) -> Result<(), TrialError> {
        let now = self.sim.now;
        let m = Arc::clone(&self.sim.map);
        let mut states = Vec::with_capacity(self.sim.robots.len());
        let mut goals = Vec::with_capacity(self.sim.robots.len());
        let mut starts = Vec::with_capacity(self.sim.robots.len());
        for (i, r) in self.sim.robots.iter().enumerate() {
            let mut s = r.projected_state(&m);
            // Doors close on their own; plan as if only a door the robot is
            // standing at and has seen open stays open.
            for (d, open) in s.door_open.iter_mut().enumerate() {
                *open = *open
                    && s.facing_door.is_some_and(|f| f.index() == d)
                    && self.sim.doors[d].open;
            }
            let g = if r.is_done() {
                GoalSpec::default()
            } else {
                effective_goals(&self.full_goals[i], &self.constraints, &self.classes, now)?
            };
            states.push(s);
            goals.push(g);
            starts.push(now + r.busy_for());
        }
        let team = plan_team_from(&states, &goals, &m, &starts)?;
        for (r, p) in self.sim.robots.iter_mut().zip(team.plans) {
            if !r.is_done() {
                r.plan = p;
            }
        }
        self.replans += 1;
        let detail = goals
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let objs: Vec<&str> = g.objects().map(|o| o.0.as_str()).collect();
                format!("r{i}:[{}]", objs.join(","))
            })
            .collect::<Vec<_>>()
            .join(" ");
        let constraints = self
            .constraints
            .iter()
            .map(|c| format!("{:?}<{}", c.deferred_class, c.expires_at))
            .collect::<Vec<_>>()
            .join(",");
        self.log(
            EventType::Replan,
            None,
            None,
            format!("{{{constraints}}} {detail}"),
        );
        for &i in &team.unsolvable {
            self.log(EventType::Replan, Some(i), None, "unsolvable".into());
        }
        self.history.push(ReplanRecord {
            t: now,
            constraints: self.constraints.clone(),
            goals,
        });
        Ok(())
    }

    /// Runs to completion or timeout.
    pub fn run(&mut self) -> Result<LoopOutcome, TrialError> {
        loop {
            match self.step()? {
                LoopOutcome::Running => {}
                done => return Ok(done),
            }
        }
    }

    pub fn metrics(&self) -> TrialMetrics {
        let cap = self.sim.now;
        let t_r = self
            .sim
            .robots
            .iter()
            .map(|r| r.done_at.unwrap_or(cap))
            .collect();
        let t_h = self
            .human
            .as_ref()
            .map_or(0, |h| h.finished_at.unwrap_or(cap));
        TrialMetrics::new(
            t_h,
            t_r,
            self.door_openings,
            self.replans,
            self.outcome == LoopOutcome::TimedOut,
        )
    }

    pub fn into_output(self) -> TrialOutput {
        TrialOutput {
            metrics: self.metrics(),
            events: self.events,
        }
    }
}

/// Loads the map named by `cfg` and runs one trial.
pub fn run_trial(cfg: &TrialConfig) -> Result<TrialOutput, TrialError> {
    let map = Arc::new(cfg.load_map()?);
    run_trial_on(cfg, map)
}

/// Runs one trial on an already loaded map.
pub fn run_trial_on(cfg: &TrialConfig, map: Arc<WorldMap>) -> Result<TrialOutput, TrialError> {
    let mut exec = Executive::new(cfg.clone(), map)?;
    exec.run()?;
    Ok(exec.into_output())
}
