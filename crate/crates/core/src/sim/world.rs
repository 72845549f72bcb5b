//! Mutable mission state: objects, agents, beliefs, tasks, claims, score,
//! and the event log.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::belief::{measurement_update, predict_moving, BeliefGrid, MotionKind, MotionParams, Observation};
use crate::grid::{cell_center, cell_of, CellIndex, Position};
use crate::ids::{AgentId, ObjectId, TaskId};
use crate::tasks::{FoundTask, ObjectClass};

use super::ScenarioConfig;

const MOTION_SALT: u64 = 0x6d6f74696f6e;

/// Where an object currently is in its lifecycle. `Delivered` is absorbing;
/// `Lost` marks objects destroyed by a carrier crash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectStatus {
    InField,
    BeingCarried,
    Delivered,
    Lost,
}

#[derive(Debug, Clone)]
pub struct SimObject {
    pub id: ObjectId,
    pub class: ObjectClass,
    pub true_pos: Position,
    pub status: ObjectStatus,
    pub heading: f64,
}

/// A timed straight flight between two positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub from: Position,
    pub to: Position,
    pub start: f64,
    pub end: f64,
}

impl Leg {
    pub fn new(from: Position, to: Position, start: f64, speed: f64) -> Self {
        let duration = from.distance_to(to) / speed;
        Self {
            from,
            to,
            start,
            end: start + duration,
        }
    }

    pub fn at(&self, t: f64) -> Position {
        if self.end <= self.start || t >= self.end {
            return self.to;
        }
        if t <= self.start {
            return self.from;
        }
        let f = (t - self.start) / (self.end - self.start);
        Position::new(
            self.from.x + (self.to.x - self.from.x) * f,
            self.from.y + (self.to.y - self.from.y) * f,
        )
    }
}

/// What an agent is doing right now.
#[derive(Debug, Clone, PartialEq)]
pub enum Activity {
    Idle,
    Deciding { until: f64 },
    Flying { leg: Leg, waypoints: Vec<CellIndex>, next: usize },
    Approaching { task: TaskId, leg: Leg },
    Picking { object: ObjectId, until: f64 },
    Transferring { object: ObjectId, leg: Leg },
    Dropping { object: ObjectId, until: f64 },
    Crashed,
}

/// The agent state machine's coarse phase, mostly for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Deciding,
    Exploring,
    Approaching,
    Picking,
    Transferring,
    Dropping,
    Crashed,
    Idle,
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: AgentId,
    /// Anchor position; authoritative whenever the activity has no leg.
    pub pos: Position,
    pub activity: Activity,
    /// Bumped on every interrupt so stale completion events are ignored.
    pub gen: u64,
    pub budget_used: f64,
    pub carried: Option<ObjectId>,
}

impl AgentState {
    pub fn phase(&self) -> Phase {
        match self.activity {
            Activity::Idle => Phase::Idle,
            Activity::Deciding { .. } => Phase::Deciding,
            Activity::Flying { .. } => Phase::Exploring,
            Activity::Approaching { .. } => Phase::Approaching,
            Activity::Picking { .. } => Phase::Picking,
            Activity::Transferring { .. } => Phase::Transferring,
            Activity::Dropping { .. } => Phase::Dropping,
            Activity::Crashed => Phase::Crashed,
        }
    }

    pub fn position_at(&self, t: f64) -> Position {
        match &self.activity {
            Activity::Flying { leg, .. } | Activity::Approaching { leg, .. } | Activity::Transferring { leg, .. } => {
                leg.at(t)
            }
            _ => self.pos,
        }
    }

    pub fn is_crashed(&self) -> bool {
        matches!(self.activity, Activity::Crashed)
    }

    pub fn is_interruptible(&self) -> bool {
        matches!(self.activity, Activity::Flying { .. } | Activity::Idle)
    }
}

/// The simulator's world. Single-threaded and fully deterministic given the
/// scenario config.
pub struct World {
    pub cfg: ScenarioConfig,
    pub clock: f64,
    pub objects: Vec<SimObject>,
    pub agents: Vec<AgentState>,
    /// One belief per object, retired (None) once delivered or lost.
    pub beliefs: Vec<Option<BeliefGrid>>,
    /// Live found tasks, keyed by task id (1:1 with object ids).
    pub tasks: BTreeMap<TaskId, FoundTask>,
    /// Task claims: which agent committed to which task.
    pub claimed_tasks: BTreeMap<TaskId, usize>,
    /// Cells claimed by each agent's current exploration action.
    pub claimed_cells: Vec<BTreeSet<CellIndex>>,
    pub score: u32,
    pub trace: Vec<(f64, u32)>,
    pub log: Vec<String>,
    motion_rng: ChaCha8Rng,
    ticks: u64,
}

impl World {
    pub fn init(cfg: &ScenarioConfig) -> Self {
        let grid = cfg.grid.clone();
        let classes = cfg.object_classes();
        let mut placement_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut motion_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ MOTION_SALT);

        let mut objects = Vec::with_capacity(classes.len());
        for (i, class) in classes.iter().enumerate() {
            let pos = match &cfg.placements {
                Some(fixed) => fixed[i],
                None => Position::new(
                    placement_rng.gen_range(0.0..grid.width_m),
                    placement_rng.gen_range(0.0..grid.height_m),
                ),
            };
            let heading = if class.kind == MotionKind::Moving {
                motion_rng.gen_range(0.0..std::f64::consts::TAU)
            } else {
                0.0
            };
            objects.push(SimObject {
                id: ObjectId(i as u32),
                class: *class,
                true_pos: pos,
                status: ObjectStatus::InField,
                heading,
            });
        }

        let beliefs = objects
            .iter()
            .map(|o| Some(BeliefGrid::uniform(o.id, o.class.kind, &grid)))
            .collect();

        let agents = (0..cfg.uav_count)
            .map(|i| AgentState {
                id: AgentId(i as u32),
                pos: grid.drop_box,
                activity: Activity::Idle,
                gen: 0,
                budget_used: 0.0,
                carried: None,
            })
            .collect();

        let mut world = Self {
            cfg: cfg.clone(),
            clock: 0.0,
            objects,
            agents,
            beliefs,
            tasks: BTreeMap::new(),
            claimed_tasks: BTreeMap::new(),
            claimed_cells: vec![BTreeSet::new(); cfg.uav_count],
            score: 0,
            trace: Vec::new(),
            log: Vec::new(),
            motion_rng,
            ticks: 0,
        };

        world.log_line(
            "config",
            None,
            &format!(
                "strategy={} seed={} t0={} uavs={} objects={} width={} height={} cell={}",
                cfg.strategy.name(),
                cfg.seed,
                fmt_f(cfg.t0),
                cfg.uav_count,
                world.objects.len(),
                fmt_f(cfg.grid.width_m),
                fmt_f(cfg.grid.height_m),
                fmt_f(cfg.grid.cell_size_m),
            ),
        );
        for obj in &world.objects {
            let line = format!(
                "object={} class={} x={} y={}",
                obj.id,
                class_name(obj.class),
                fmt_f(obj.true_pos.x),
                fmt_f(obj.true_pos.y)
            );
            world.log.push(format_line(0.0, "place", None, &line));
        }
        world
    }

    pub fn log_line(&mut self, kind: &str, agent: Option<usize>, payload: &str) {
        self.log.push(format_line(self.clock, kind, agent.map(|a| a as u32), payload));
    }

    pub fn agent_position(&self, agent: usize) -> Position {
        self.agents[agent].position_at(self.clock)
    }

    pub fn agent_cell(&self, agent: usize) -> CellIndex {
        cell_of(self.agent_position(agent), &self.cfg.grid).expect("agents stay inside the arena")
    }

    pub fn remaining_budget(&self) -> f64 {
        (self.cfg.t0 - self.clock).max(0.0)
    }

    pub fn is_task_claimed(&self, task: TaskId) -> bool {
        self.claimed_tasks.contains_key(&task)
    }

    /// Cells claimed by every agent except `agent`.
    pub fn cells_claimed_by_others(&self, agent: usize) -> BTreeSet<CellIndex> {
        self.claimed_cells
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != agent)
            .flat_map(|(_, cells)| cells.iter().copied())
            .collect()
    }

    /// Unclaimed live tasks whose object can still be picked up.
    pub fn unclaimed_tasks(&self) -> Vec<&FoundTask> {
        self.tasks
            .values()
            .filter(|t| !self.claimed_tasks.contains_key(&t.task_id))
            .collect()
    }

    /// Advances every in-field moving object along its random-walk heading,
    /// reflecting at the arena walls. Headings are redrawn every fifth step;
    /// draws happen for every moving object regardless of status so that the
    /// random stream does not depend on pickup history more than necessary.
    pub fn step_moving_objects(&mut self, dt: f64) {
        assert!(dt > 0.0, "dt must be positive");
        self.ticks += 1;
        let resample = self.ticks.is_multiple_of(5);
        let speed = self.cfg.object_speed;
        let (w, h) = (self.cfg.grid.width_m, self.cfg.grid.height_m);
        for obj in &mut self.objects {
            if obj.class.kind != MotionKind::Moving {
                continue;
            }
            if resample {
                obj.heading = self.motion_rng.gen_range(0.0..std::f64::consts::TAU);
            }
            if obj.status != ObjectStatus::InField || speed <= 0.0 {
                continue;
            }
            let mut x = obj.true_pos.x + obj.heading.cos() * speed * dt;
            let mut y = obj.true_pos.y + obj.heading.sin() * speed * dt;
            if x < 0.0 {
                x = -x;
                obj.heading = std::f64::consts::PI - obj.heading;
            } else if x > w {
                x = 2.0 * w - x;
                obj.heading = std::f64::consts::PI - obj.heading;
            }
            if y < 0.0 {
                y = -y;
                obj.heading = -obj.heading;
            } else if y > h {
                y = 2.0 * h - y;
                obj.heading = -obj.heading;
            }
            obj.true_pos = Position::new(x.clamp(0.0, w), y.clamp(0.0, h));
        }
    }

    /// Applies the random-walk prediction to every live moving-object grid.
    pub fn predict_beliefs(&mut self) {
        let params = MotionParams::new(self.cfg.p_out, 1.0).expect("validated config");
        for belief in self.beliefs.iter_mut().flatten() {
            if belief.kind == MotionKind::Moving {
                *belief = predict_moving(belief, &params).expect("kind checked");
            }
        }
    }

    /// One sensing pass for an agent: the cell under it and every in-field
    /// object inside that cell.
    pub fn sense(&self, agent: usize) -> Observation {
        assert!(!self.agents[agent].is_crashed(), "crashed agents do not sense");
        let cell = self.agent_cell(agent);
        let mut detections = BTreeMap::new();
        for obj in &self.objects {
            if obj.status == ObjectStatus::InField
                && cell_of(obj.true_pos, &self.cfg.grid).expect("objects stay inside") == cell
            {
                detections.insert(obj.id, cell);
            }
        }
        Observation::new([cell].into_iter().collect(), detections, self.clock).expect("detections are in the FoV")
    }

    /// Folds an observation into beliefs and the shared task set. Detections
    /// are relayed to the whole team, so tasks and grids are global. Returns
    /// newly created tasks.
    pub fn apply_observation(&mut self, obs: &Observation) -> Vec<TaskId> {
        let mut new_tasks = Vec::new();
        for idx in 0..self.beliefs.len() {
            let Some(belief) = self.beliefs[idx].as_ref() else {
                continue;
            };
            let id = belief.object_id;
            let per_object = Observation::new(
                obs.observed_cells().clone(),
                obs.detection_of(id).map(|c| (id, c)).into_iter().collect(),
                obs.time,
            )
            .expect("subset of a valid observation");
            self.beliefs[idx] = Some(measurement_update(belief, &per_object).expect("ids match"));
        }
        let detected: Vec<(ObjectId, CellIndex)> = self
            .objects
            .iter()
            .filter_map(|o| obs.detection_of(o.id).map(|c| (o.id, c)))
            .collect();
        for (id, cell) in detected {
            let task_id = TaskId(id.0);
            let est = cell_center(cell, &self.cfg.grid).expect("valid cell");
            let class = self.objects[id.0 as usize].class;
            match self.tasks.get_mut(&task_id) {
                Some(task) => {
                    task.last_seen = self.clock;
                    if class.kind == MotionKind::Moving {
                        task.est_pos = est;
                    }
                }
                None => {
                    self.tasks.insert(task_id, FoundTask::new(task_id, class, est, self.clock));
                    self.log_line(
                        "found",
                        None,
                        &format!("task={task_id} cell=({},{}) points={} kind={}", cell.col, cell.row, class.points, kind_name(class.kind)),
                    );
                    new_tasks.push(task_id);
                }
            }
        }
        new_tasks
    }

    /// Removes unclaimed moving tasks that have gone unobserved for longer
    /// than the tracking timeout. Claimed tasks stay with their executor.
    pub fn expire_tasks(&mut self) {
        let now = self.clock;
        let timeout = self.cfg.tracking_timeout;
        let expired: Vec<TaskId> = self
            .tasks
            .values()
            .filter(|t| !self.claimed_tasks.contains_key(&t.task_id) && t.is_expired(now, timeout))
            .map(|t| t.task_id)
            .collect();
        for task in expired {
            self.tasks.remove(&task);
            self.log_line("expire", None, &format!("task={task}"));
        }
    }

    pub fn record_delivery(&mut self, agent: usize, object: ObjectId) {
        let points = self.objects[object.0 as usize].class.points;
        self.objects[object.0 as usize].status = ObjectStatus::Delivered;
        self.beliefs[object.0 as usize] = None;
        self.score += points;
        let score = self.score;
        self.trace.push((self.clock, score));
        self.log_line("deliver", Some(agent), &format!("object={object} points={points} score={score}"));
    }

    pub fn status_counts(&self) -> (usize, usize, usize, usize) {
        let mut counts = (0, 0, 0, 0);
        for obj in &self.objects {
            match obj.status {
                ObjectStatus::Delivered => counts.0 += 1,
                ObjectStatus::Lost => counts.1 += 1,
                ObjectStatus::InField => counts.2 += 1,
                ObjectStatus::BeingCarried => counts.3 += 1,
            }
        }
        counts
    }

    pub fn all_objects_resolved(&self) -> bool {
        self.objects
            .iter()
            .all(|o| matches!(o.status, ObjectStatus::Delivered | ObjectStatus::Lost))
    }

    pub fn all_agents_crashed(&self) -> bool {
        self.agents.iter().all(|a| a.is_crashed())
    }
}

pub fn class_name(class: ObjectClass) -> String {
    match class.kind {
        MotionKind::Static => format!("static{}", class.points),
        MotionKind::Moving => format!("moving{}", class.points),
    }
}

pub fn kind_name(kind: MotionKind) -> &'static str {
    match kind {
        MotionKind::Static => "static",
        MotionKind::Moving => "moving",
    }
}

pub fn fmt_f(v: f64) -> String {
    format!("{v:.3}")
}

pub fn format_line(t: f64, kind: &str, agent: Option<u32>, payload: &str) -> String {
    let agent = agent.map(|a| a.to_string()).unwrap_or_else(|| "-".to_string());
    if payload.is_empty() {
        format!("{t:.3} {kind} {agent}")
    } else {
        format!("{t:.3} {kind} {agent} {payload}")
    }
}

pub fn path_text(path: &[CellIndex]) -> String {
    path.iter()
        .map(|c| format!("({},{})", c.col, c.row))
        .collect::<Vec<_>>()
        .join(">")
}
