//! The event loop: a continuous-time queue of sensing ticks, activity
//! completions, and crash injections, processed in (time, insertion) order
//! so that agents always act one at a time.

use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{cell_center, cell_of, CellIndex};
use crate::ids::{ObjectId, TaskId};

use super::policies::{make_policy, DecisionOutcome, Directive, Policy};
use super::world::{Activity, Leg, ObjectStatus, World};
use super::{MissionReport, ScenarioConfig};

const STRATEGY_SALT: u64 = 0x706f6c696379;

#[derive(Debug, Clone, PartialEq)]
enum EventKind {
    Tick,
    AgentDone { agent: usize, gen: u64 },
    Crash { agent: usize },
}

#[derive(Debug, PartialEq)]
struct Event {
    t: f64,
    seq: u64,
    kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed so the BinaryHeap pops the earliest (time, seq) first.
        other.t.total_cmp(&self.t).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct Engine {
    world: World,
    policy: Box<dyn Policy>,
    strategy_rng: ChaCha8Rng,
    queue: BinaryHeap<Event>,
    seq: u64,
    /// When the current activity of each agent started, for budget tallies.
    activity_start: Vec<f64>,
}

pub(crate) fn run(cfg: &ScenarioConfig) -> MissionReport {
    let world = World::init(cfg);
    let policy = make_policy(cfg);
    let mut engine = Engine {
        world,
        policy,
        strategy_rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ STRATEGY_SALT),
        queue: BinaryHeap::new(),
        seq: 0,
        activity_start: vec![0.0; cfg.uav_count],
    };

    engine.push(0.0, EventKind::Tick);
    let calc = engine.policy.calc_time();
    for agent in 0..cfg.uav_count {
        engine.world.agents[agent].activity = Activity::Deciding { until: calc };
        let gen = engine.world.agents[agent].gen;
        engine.push(calc, EventKind::AgentDone { agent, gen });
    }
    for &(agent, time) in &cfg.crashes {
        engine.push(time, EventKind::Crash { agent: agent as usize });
    }

    let t0 = cfg.t0;
    while let Some(event) = engine.queue.pop() {
        if event.t > t0 {
            break;
        }
        engine.world.clock = event.t;
        match event.kind {
            EventKind::Tick => engine.process_tick(t0),
            EventKind::AgentDone { agent, gen } => {
                let state = &engine.world.agents[agent];
                if state.gen == gen && !state.is_crashed() {
                    engine.advance_agent(agent);
                }
            }
            EventKind::Crash { agent } => engine.crash_agent(agent),
        }
        if engine.world.all_objects_resolved() || engine.world.all_agents_crashed() {
            break;
        }
    }

    let (delivered, lost, infield, carried) = engine.world.status_counts();
    let score = engine.world.score;
    engine.world.log_line(
        "end",
        None,
        &format!("score={score} delivered={delivered} lost={lost} infield={infield} carried={carried}"),
    );
    MissionReport {
        final_score: engine.world.score,
        trace: engine.world.trace.clone(),
        log: engine.world.log.clone(),
        sim_end: engine.world.clock,
    }
}

impl Engine {
    fn push(&mut self, t: f64, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Event { t, seq, kind });
    }

    /// Sensing, belief prediction, truth motion, expiry, and detection
    /// reactions, once per simulated second.
    fn process_tick(&mut self, t0: f64) {
        let now = self.world.clock;
        if now > 0.0 {
            self.world.step_moving_objects(1.0);
            self.world.predict_beliefs();
        }

        let mut new_tasks: Vec<(TaskId, usize)> = Vec::new();
        for agent in 0..self.world.agents.len() {
            if self.world.agents[agent].is_crashed() {
                continue;
            }
            let obs = self.world.sense(agent);
            for task in self.world.apply_observation(&obs) {
                new_tasks.push((task, agent));
            }
        }
        self.world.expire_tasks();
        self.pursue_moving_targets();
        self.shadow_targets_while_deciding();

        if !new_tasks.is_empty() {
            let mut reactors = self.policy.reactors(&self.world, &new_tasks);
            reactors.sort_unstable();
            reactors.dedup();
            for agent in reactors {
                self.interrupt(agent);
            }
        }

        if now + 1.0 <= t0 {
            self.push(now + 1.0, EventKind::Tick);
        }
    }

    /// Keeps approaches to moving targets honest: an executor close enough
    /// to track its target (within one cell footprint) steers at the
    /// target's current position each second; one that has lost the track
    /// for longer than the tracking timeout gives the attempt up.
    fn pursue_moving_targets(&mut self) {
        let now = self.world.clock;
        let track_range = self.world.cfg.grid.cell_size_m;

        for agent in 0..self.world.agents.len() {
            let Activity::Approaching { task, ref leg } = self.world.agents[agent].activity else {
                continue;
            };
            let object = ObjectId(task.0);
            let obj = &self.world.objects[object.0 as usize];
            if obj.class.kind != crate::belief::MotionKind::Moving || obj.status != ObjectStatus::InField {
                continue;
            }
            let pos = leg.at(now);
            let target = obj.true_pos;
            // Inside tracking range the executor steers at the target's
            // current position; outside it the flight re-aims whenever a
            // teammate's detection moved the shared estimate. Claims on
            // uncatchably distant movers are already rejected at planning
            // time, and the arrival gate settles whatever is left.
            if pos.distance_to(target) <= track_range {
                if let Some(t) = self.world.tasks.get_mut(&task) {
                    t.last_seen = now;
                    t.est_pos = target;
                }
                self.world.agents[agent].pos = pos;
                let leg = Leg::new(pos, target, now, self.world.cfg.cost.uav_speed);
                let end = leg.end;
                self.set_activity(agent, Activity::Approaching { task, leg }, Some(end));
            } else if let Some(est) = self.world.tasks.get(&task).map(|t| t.est_pos) {
                if est.distance_to(leg.to) > 1e-9 {
                    self.world.agents[agent].pos = pos;
                    let leg = Leg::new(pos, est, now, self.world.cfg.cost.uav_speed);
                    let end = leg.end;
                    self.set_activity(agent, Activity::Approaching { task, leg }, Some(end));
                }
            }
        }
    }

    /// A deciding agent hovers; if a moving target sits within tracking
    /// range its camera keeps the lock and the platform station-keeps over
    /// it, so the track is still warm when the decision lands. The agent is
    /// slower to decide, not blind while doing so.
    fn shadow_targets_while_deciding(&mut self) {
        let track_range = self.world.cfg.grid.cell_size_m;
        for agent in 0..self.world.agents.len() {
            if !matches!(self.world.agents[agent].activity, Activity::Deciding { .. }) {
                continue;
            }
            let pos = self.world.agents[agent].pos;
            let target = self
                .world
                .objects
                .iter()
                .filter(|o| o.class.kind == crate::belief::MotionKind::Moving)
                .filter(|o| o.status == ObjectStatus::InField)
                .find(|o| pos.distance_to(o.true_pos) <= track_range)
                .map(|o| o.true_pos);
            if let Some(target) = target {
                self.world.agents[agent].pos = target;
            }
        }
    }

    /// Aborts a flying or idle agent into a fresh decision.
    fn interrupt(&mut self, agent: usize) {
        let now = self.world.clock;
        if !self.world.agents[agent].is_interruptible() {
            return;
        }
        if let Activity::Flying { leg, .. } = &self.world.agents[agent].activity {
            self.world.agents[agent].pos = leg.at(now);
        }
        self.world.claimed_cells[agent].clear();
        self.start_deciding(agent);
    }

    fn close_activity_segment(&mut self, agent: usize) {
        let now = self.world.clock;
        let elapsed = now - self.activity_start[agent];
        if elapsed > 0.0 {
            self.world.agents[agent].budget_used += elapsed;
        }
        self.activity_start[agent] = now;
    }

    fn set_activity(&mut self, agent: usize, activity: Activity, done_at: Option<f64>) {
        self.close_activity_segment(agent);
        let state = &mut self.world.agents[agent];
        state.gen += 1;
        state.activity = activity;
        let gen = state.gen;
        if let Some(t) = done_at {
            self.push(t, EventKind::AgentDone { agent, gen });
        }
    }

    fn start_deciding(&mut self, agent: usize) {
        let until = self.world.clock + self.policy.calc_time();
        self.set_activity(agent, Activity::Deciding { until }, Some(until));
    }

    fn start_flight(&mut self, agent: usize, waypoints: Vec<CellIndex>) {
        debug_assert!(!waypoints.is_empty());
        let now = self.world.clock;
        let from = self.world.agents[agent].pos;
        let to = cell_center(waypoints[0], &self.world.cfg.grid).expect("valid waypoint");
        let leg = Leg::new(from, to, now, self.world.cfg.cost.uav_speed);
        let end = leg.end;
        self.set_activity(
            agent,
            Activity::Flying {
                leg,
                waypoints,
                next: 1,
            },
            Some(end),
        );
    }

    /// Handles the completion event of the agent's current activity.
    fn advance_agent(&mut self, agent: usize) {
        let now = self.world.clock;
        match self.world.agents[agent].activity.clone() {
            Activity::Deciding { .. } => {
                let outcome = self.policy.decide(agent, &self.world, &mut self.strategy_rng);
                self.apply_directive(agent, outcome);
            }
            Activity::Flying { leg, waypoints, next } => {
                self.world.agents[agent].pos = leg.to;
                if next < waypoints.len() {
                    let to = cell_center(waypoints[next], &self.world.cfg.grid).expect("valid waypoint");
                    let leg = Leg::new(leg.to, to, now, self.world.cfg.cost.uav_speed);
                    let end = leg.end;
                    self.set_activity(
                        agent,
                        Activity::Flying {
                            leg,
                            waypoints,
                            next: next + 1,
                        },
                        Some(end),
                    );
                } else {
                    self.world.claimed_cells[agent].clear();
                    self.start_deciding(agent);
                }
            }
            Activity::Approaching { task, leg } => {
                self.world.agents[agent].pos = leg.to;
                self.finish_approach(agent, task);
            }
            Activity::Picking { object, .. } => {
                self.world.agents[agent].carried = Some(object);
                self.world.log_line("carry", Some(agent), &format!("object={object}"));
                let from = self.world.agents[agent].pos;
                let leg = Leg::new(from, self.world.cfg.grid.drop_box, now, self.world.cfg.cost.uav_speed);
                let end = leg.end;
                self.set_activity(agent, Activity::Transferring { object, leg }, Some(end));
            }
            Activity::Transferring { object, leg } => {
                self.world.agents[agent].pos = leg.to;
                let kind = self.world.objects[object.0 as usize].class.kind;
                let until = now + self.world.cfg.cost.t_drop(kind);
                self.set_activity(agent, Activity::Dropping { object, until }, Some(until));
            }
            Activity::Dropping { object, .. } => {
                self.world.agents[agent].carried = None;
                self.world.record_delivery(agent, object);
                let task = TaskId(object.0);
                self.world.tasks.remove(&task);
                self.world.claimed_tasks.remove(&task);
                self.start_deciding(agent);
            }
            Activity::Idle | Activity::Crashed => {}
        }
    }

    /// Pickup gate at the end of an approach: the object must still be in
    /// the field and inside the agent's arrival cell. Once picking starts it
    /// always succeeds.
    fn finish_approach(&mut self, agent: usize, task: TaskId) {
        let now = self.world.clock;
        let object = ObjectId(task.0);
        let (status, true_pos, kind) = {
            let obj = &self.world.objects[object.0 as usize];
            (obj.status, obj.true_pos, obj.class.kind)
        };
        let agent_cell = self.world.agent_cell(agent);
        let target_cell = cell_of(true_pos, &self.world.cfg.grid).expect("objects stay inside");
        if status == ObjectStatus::InField && target_cell == agent_cell {
            self.world.objects[object.0 as usize].status = ObjectStatus::BeingCarried;
            self.world.log_line("pickup", Some(agent), &format!("object={object}"));
            let until = now + self.world.cfg.cost.t_pick(kind);
            self.set_activity(agent, Activity::Picking { object, until }, Some(until));
        } else {
            // The target drifted out from under the estimate; give it up.
            self.world.claimed_tasks.remove(&task);
            self.world.tasks.remove(&task);
            self.world
                .log_line("abort", Some(agent), &format!("task={task} reason=target-moved"));
            self.start_deciding(agent);
        }
    }

    fn apply_directive(&mut self, agent: usize, outcome: DecisionOutcome) {
        if let Some(payload) = &outcome.log_payload {
            self.world.log_line("decide", Some(agent), payload);
        }
        match outcome.directive {
            Directive::Explore(action) => {
                let cell = self.world.agent_cell(agent);
                let waypoints = action.flight_waypoints(cell).to_vec();
                if waypoints.is_empty() {
                    self.set_activity(agent, Activity::Idle, None);
                    return;
                }
                self.world.claimed_cells[agent] = action.cells_observed.clone();
                self.start_flight(agent, waypoints);
            }
            Directive::Fly(waypoints) => {
                if waypoints.is_empty() {
                    self.set_activity(agent, Activity::Idle, None);
                    return;
                }
                self.start_flight(agent, waypoints);
            }
            Directive::Execute(task) => {
                assert!(
                    !self.world.claimed_tasks.contains_key(&task),
                    "policy executed an already-claimed task"
                );
                let est = self.world.tasks.get(&task).expect("executing a live task").est_pos;
                self.world.claimed_tasks.insert(task, agent);
                self.world.log_line("claim", Some(agent), &format!("task={task}"));
                let from = self.world.agents[agent].pos;
                let leg = Leg::new(from, est, self.world.clock, self.world.cfg.cost.uav_speed);
                let end = leg.end;
                self.set_activity(agent, Activity::Approaching { task, leg }, Some(end));
            }
            Directive::Hold => {
                self.set_activity(agent, Activity::Idle, None);
            }
        }
    }

    fn crash_agent(&mut self, agent: usize) {
        if self.world.agents[agent].is_crashed() {
            return;
        }
        let now = self.world.clock;
        self.world.agents[agent].pos = self.world.agents[agent].position_at(now);

        // A held or in-progress object goes down with the agent.
        let held = self.world.agents[agent].carried.or(match self.world.agents[agent].activity {
            Activity::Picking { object, .. } => Some(object),
            Activity::Transferring { object, .. } => Some(object),
            Activity::Dropping { object, .. } => Some(object),
            _ => None,
        });
        if let Some(object) = held {
            self.world.objects[object.0 as usize].status = ObjectStatus::Lost;
            self.world.beliefs[object.0 as usize] = None;
            self.world.tasks.remove(&TaskId(object.0));
            self.world.claimed_tasks.remove(&TaskId(object.0));
            self.world.log_line("lost", Some(agent), &format!("object={object}"));
        }
        self.world.agents[agent].carried = None;

        let released: Vec<TaskId> = self
            .world
            .claimed_tasks
            .iter()
            .filter(|(_, owner)| **owner == agent)
            .map(|(task, _)| *task)
            .collect();
        for task in released {
            self.world.claimed_tasks.remove(&task);
            self.world.log_line("release", Some(agent), &format!("task={task}"));
        }
        self.world.claimed_cells[agent].clear();

        self.set_activity(agent, Activity::Crashed, None);
        self.world.log_line("crash", Some(agent), "");
    }
}
