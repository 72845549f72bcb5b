//! Decision policies: the reward-prediction planner and the three
//! rule-based benchmark strategies, all driving the same world model.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::belief::MotionKind;
use crate::grid::{cell_of, neighbors, CellIndex, Connectivity};
use crate::ids::TaskId;
use crate::planner::{self, PlanAction, PlanContext, SearchTarget};
use crate::reward::BudgetQuantizer;
use crate::sim::world::{path_text, ObjectStatus, World};
use crate::sim::{ScenarioConfig, Strategy};
use crate::tasks::{task_cost_from, FoundTask};

/// What a policy wants an agent to do next.
#[derive(Debug, Clone)]
pub(crate) enum Directive {
    /// Fly an exploration action and claim its cells.
    Explore(planner::ExploreAction),
    /// Claim and execute a found task.
    Execute(TaskId),
    /// Plain movement without claims (benchmark patterns).
    Fly(Vec<CellIndex>),
    /// Nothing worth doing; wait for news.
    Hold,
}

pub(crate) struct DecisionOutcome {
    pub directive: Directive,
    /// Payload for a `decide` log line, when the policy wants one.
    pub log_payload: Option<String>,
}

pub(crate) trait Policy {
    /// Dead time charged before each decision's action starts.
    fn calc_time(&self) -> f64;

    /// Chooses the agent's next action. Called one agent at a time, so the
    /// claim board already reflects earlier decisions.
    fn decide(&mut self, agent: usize, world: &World, rng: &mut ChaCha8Rng) -> DecisionOutcome;

    /// Which agents should abandon their current activity in response to
    /// newly found tasks. Entries are (task, detecting agent).
    fn reactors(&mut self, world: &World, new_tasks: &[(TaskId, usize)]) -> Vec<usize>;
}

pub(crate) fn make_policy(cfg: &ScenarioConfig) -> Box<dyn Policy> {
    match cfg.strategy {
        Strategy::Proposed => Box::new(ProposedPolicy {
            horizon: cfg.horizon,
            calc_time: cfg.calc_time,
            tracking_timeout: cfg.tracking_timeout,
        }),
        Strategy::Random => Box::new(RandomPolicy),
        Strategy::CoverFieldFirst => Box::new(CoverPolicy::new(cfg, false)),
        Strategy::CoverAndPickup => Box::new(CoverPolicy::new(cfg, true)),
    }
}

/// Where and when an agent's current activity leaves it free: flyers at
/// their final waypoint when the flight ends, executors at the drop box when
/// the delivery ends, everyone else where they stand.
fn peer_availability(world: &World, agent: usize) -> (crate::grid::Position, f64) {
    use crate::grid::cell_center;
    use crate::sim::world::Activity;
    let now = world.clock;
    let speed = world.cfg.cost.uav_speed;
    let state = &world.agents[agent];
    match &state.activity {
        Activity::Idle | Activity::Deciding { .. } | Activity::Crashed => (state.position_at(now), now),
        Activity::Flying { leg, waypoints, next } => {
            let mut t = leg.end;
            let mut pos = leg.to;
            for cell in &waypoints[(*next).min(waypoints.len())..] {
                let target = cell_center(*cell, &world.cfg.grid).expect("valid waypoint");
                t += pos.distance_to(target) / speed;
                pos = target;
            }
            (pos, t)
        }
        Activity::Approaching { task, leg } => {
            let kind = world
                .tasks
                .get(task)
                .map(|t| t.class.kind)
                .unwrap_or(MotionKind::Static);
            let transfer = leg.to.distance_to(world.cfg.grid.drop_box) / speed;
            let t = leg.end + world.cfg.cost.t_pick(kind) + transfer + world.cfg.cost.t_drop(kind);
            (world.cfg.grid.drop_box, t)
        }
        Activity::Picking { object, until } => {
            let kind = world.objects[object.0 as usize].class.kind;
            let transfer = state.pos.distance_to(world.cfg.grid.drop_box) / speed;
            (world.cfg.grid.drop_box, until + transfer + world.cfg.cost.t_drop(kind))
        }
        Activity::Transferring { object, leg } => {
            let kind = world.objects[object.0 as usize].class.kind;
            (world.cfg.grid.drop_box, leg.end + world.cfg.cost.t_drop(kind))
        }
        Activity::Dropping { until, .. } => (world.cfg.grid.drop_box, *until),
    }
}

/// A live, unclaimed, unexpired task sitting in the given cell right now.
fn pickable_task_in_cell(world: &World, cell: CellIndex, movers_only: bool) -> Option<TaskId> {
    world
        .unclaimed_tasks()
        .into_iter()
        .filter(|t| !t.is_expired(world.clock, world.cfg.tracking_timeout))
        .filter(|t| !movers_only || t.class.kind == MotionKind::Moving)
        .filter(|t| cell_of(t.est_pos, &world.cfg.grid).expect("estimates stay inside") == cell)
        .map(|t| t.task_id)
        .next()
}

fn random_step(world: &World, agent: usize, rng: &mut ChaCha8Rng) -> Directive {
    let cell = world.agent_cell(agent);
    let options = neighbors(cell, &world.cfg.grid, Connectivity::Four).expect("valid cell");
    if options.is_empty() {
        return Directive::Hold;
    }
    let pick = rng.gen_range(0..options.len());
    Directive::Fly(vec![options[pick]])
}

// ---------------------------------------------------------------------------
// Reward-prediction strategy

struct ProposedPolicy {
    horizon: usize,
    calc_time: f64,
    tracking_timeout: f64,
}

impl Policy for ProposedPolicy {
    fn calc_time(&self) -> f64 {
        self.calc_time
    }

    fn decide(&mut self, agent: usize, world: &World, _rng: &mut ChaCha8Rng) -> DecisionOutcome {
        // Live tasks, minus unclaimed movers that went stale since the last
        // whole-second expiry pass.
        let tasks: Vec<FoundTask> = world
            .tasks
            .values()
            .filter(|t| world.is_task_claimed(t.task_id) || !t.is_expired(world.clock, self.tracking_timeout))
            .cloned()
            .collect();
        let claimed: BTreeSet<TaskId> = world.claimed_tasks.keys().copied().collect();
        let claimed_cells = world.cells_claimed_by_others(agent);
        let targets: Vec<SearchTarget<'_>> = world
            .objects
            .iter()
            .filter(|o| o.status == ObjectStatus::InField)
            .filter(|o| !tasks.iter().any(|t| t.task_id.0 == o.id.0))
            .filter_map(|o| {
                world.beliefs[o.id.0 as usize].as_ref().map(|belief| SearchTarget {
                    belief,
                    class: o.class,
                })
            })
            .collect();
        // Peers are modeled where and when their broadcast action leaves
        // them free, less the replan they will pay before acting on
        // anything new.
        let peers: Vec<_> = world
            .agents
            .iter()
            .enumerate()
            .filter(|(i, a)| *i != agent && !a.is_crashed())
            .map(|(i, _)| {
                let (pos, free_at) = peer_availability(world, i);
                (pos, (world.cfg.t0 - free_at - self.calc_time).max(0.0))
            })
            .collect();

        let ctx = PlanContext {
            my_position: world.agent_position(agent),
            my_budget: world.remaining_budget(),
            now: world.clock,
            tracking_timeout: self.tracking_timeout,
            found_tasks: &tasks,
            targets: &targets,
            claimed_tasks: &claimed,
            claimed_cells: &claimed_cells,
            peers: &peers,
            grid: &world.cfg.grid,
            cost: &world.cfg.cost,
            quantizer: BudgetQuantizer::default(),
            replan_overhead: self.calc_time,
        };
        let decision = planner::replan(&ctx, self.horizon);

        let top: String = decision
            .top_candidates
            .iter()
            .map(|c| format!("{}:{:.6}", path_text(&c.action.path), c.score))
            .collect::<Vec<_>>()
            .join(",");
        match decision.action {
            Some(PlanAction::Explore(action)) => {
                let payload = format!(
                    "action=explore cost={:.3} path={} top={}",
                    action.cost,
                    path_text(&action.path),
                    top
                );
                DecisionOutcome {
                    directive: Directive::Explore(action),
                    log_payload: Some(payload),
                }
            }
            Some(PlanAction::Execute(task)) => DecisionOutcome {
                directive: Directive::Execute(task),
                log_payload: Some(format!("action=execute task={task} top={top}")),
            },
            None => DecisionOutcome {
                directive: Directive::Hold,
                log_payload: Some(format!("action=idle top={top}")),
            },
        }
    }

    fn reactors(&mut self, world: &World, new_tasks: &[(TaskId, usize)]) -> Vec<usize> {
        // The detector replans right away: movers outrun the tracking window
        // if the path finishes first, and even for statics the first-pickup
        // discount of standing on the find decays as the agent flies on.
        let mut out: Vec<usize> = new_tasks.iter().map(|&(_, detector)| detector).collect();
        // A mover find also wakes any peer close enough to catch it, in case
        // the detector itself is busy with a pickup.
        let reach = 2.0 * world.cfg.grid.cell_size_m + world.cfg.cost.uav_speed * world.cfg.tracking_timeout;
        for &(task, detector) in new_tasks {
            let Some(t) = world.tasks.get(&task) else { continue };
            if t.class.kind != MotionKind::Moving {
                continue;
            }
            for (i, a) in world.agents.iter().enumerate() {
                if i != detector
                    && !a.is_crashed()
                    && world.agent_position(i).distance_to(t.est_pos) <= reach
                {
                    out.push(i);
                }
            }
        }
        // Idle agents wake on any news.
        for (i, a) in world.agents.iter().enumerate() {
            if matches!(a.activity, crate::sim::world::Activity::Idle) {
                out.push(i);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Random benchmark: wander one cell at a time, pick up whatever appears.

struct RandomPolicy;

impl Policy for RandomPolicy {
    fn calc_time(&self) -> f64 {
        0.0
    }

    fn decide(&mut self, agent: usize, world: &World, rng: &mut ChaCha8Rng) -> DecisionOutcome {
        let cell = world.agent_cell(agent);
        if let Some(task) = pickable_task_in_cell(world, cell, false) {
            return DecisionOutcome {
                directive: Directive::Execute(task),
                log_payload: None,
            };
        }
        DecisionOutcome {
            directive: random_step(world, agent, rng),
            log_payload: None,
        }
    }

    fn reactors(&mut self, world: &World, new_tasks: &[(TaskId, usize)]) -> Vec<usize> {
        // Whoever stands in the cell of a fresh find reacts.
        let mut out = Vec::new();
        for &(task, _) in new_tasks {
            let Some(t) = world.tasks.get(&task) else { continue };
            let cell = cell_of(t.est_pos, &world.cfg.grid).expect("estimate inside arena");
            for (i, a) in world.agents.iter().enumerate() {
                if !a.is_crashed() && world.agent_cell(i) == cell {
                    out.push(i);
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Coverage benchmarks

#[derive(Debug, Clone)]
enum CoverPhase {
    /// Flying to the band origin; the pattern has not started, no reactions.
    Transit,
    /// Serpentine over the band; `next` indexes the next unvisited waypoint.
    Covering { next: usize },
    /// Coming back to the interrupted cell after a delivery.
    Returning { resume: usize, back: CellIndex },
    /// Cover-field-first only: working through found statics by efficiency.
    Collecting,
    /// Band done; random search for whatever remains.
    Roaming,
}

struct CoverAgent {
    waypoints: Vec<CellIndex>,
    phase: CoverPhase,
}

/// Shared machinery for cover-field-first and cover-and-pickup. The flag
/// `pickup_during_cover` distinguishes them: cover-and-pickup grabs any
/// object it finds mid-pattern, cover-field-first only movers (statics wait
/// for the collection pass after coverage).
struct CoverPolicy {
    pickup_during_cover: bool,
    agents: Vec<CoverAgent>,
}

impl CoverPolicy {
    fn new(cfg: &ScenarioConfig, pickup_during_cover: bool) -> Self {
        let rows = cfg.grid.rows();
        let cols = cfg.grid.cols();
        let n = cfg.uav_count;
        let base = rows / n;
        let extra = rows % n;
        let mut agents = Vec::with_capacity(n);
        let mut row0 = 0;
        for i in 0..n {
            let band_rows = base + usize::from(i < extra);
            let mut waypoints = Vec::with_capacity(band_rows * cols);
            for (k, row) in (row0..row0 + band_rows).enumerate() {
                if k % 2 == 0 {
                    waypoints.extend((0..cols).map(|col| CellIndex::new(col, row)));
                } else {
                    waypoints.extend((0..cols).rev().map(|col| CellIndex::new(col, row)));
                }
            }
            row0 += band_rows;
            agents.push(CoverAgent {
                waypoints,
                phase: CoverPhase::Transit,
            });
        }
        Self {
            pickup_during_cover,
            agents,
        }
    }

    /// During the pattern, cover-and-pickup reacts to anything and
    /// cover-field-first to movers only; while roaming both take anything.
    fn movers_only(&self, phase: &CoverPhase) -> bool {
        match phase {
            CoverPhase::Roaming => false,
            _ => !self.pickup_during_cover,
        }
    }

    fn collect_best_static(&self, world: &World, agent: usize) -> Option<TaskId> {
        let pos = world.agent_position(agent);
        world
            .unclaimed_tasks()
            .into_iter()
            .filter(|t| t.class.kind == MotionKind::Static)
            .min_by(|a, b| {
                let ea = task_cost_from(pos, a, &world.cfg.cost, &world.cfg.grid) / f64::from(a.reward);
                let eb = task_cost_from(pos, b, &world.cfg.cost, &world.cfg.grid) / f64::from(b.reward);
                ea.total_cmp(&eb).then(a.task_id.cmp(&b.task_id))
            })
            .map(|t| t.task_id)
    }
}

impl Policy for CoverPolicy {
    fn calc_time(&self) -> f64 {
        0.0
    }

    fn decide(&mut self, agent: usize, world: &World, rng: &mut ChaCha8Rng) -> DecisionOutcome {
        let cell = world.agent_cell(agent);
        let directive = loop {
            match self.agents[agent].phase.clone() {
                CoverPhase::Transit => {
                    let state = &mut self.agents[agent];
                    if state.waypoints.is_empty() {
                        state.phase = CoverPhase::Covering { next: 0 };
                        continue;
                    }
                    if cell == state.waypoints[0] {
                        state.phase = CoverPhase::Covering { next: 1 };
                        continue;
                    }
                    break Directive::Fly(vec![state.waypoints[0]]);
                }
                CoverPhase::Covering { mut next } => {
                    while next < self.agents[agent].waypoints.len() && self.agents[agent].waypoints[next] == cell {
                        next += 1;
                    }
                    self.agents[agent].phase = CoverPhase::Covering { next };
                    let movers_only = self.movers_only(&CoverPhase::Covering { next });
                    if let Some(task) = pickable_task_in_cell(world, cell, movers_only) {
                        self.agents[agent].phase = CoverPhase::Returning { resume: next, back: cell };
                        break Directive::Execute(task);
                    }
                    if next >= self.agents[agent].waypoints.len() {
                        self.agents[agent].phase = if self.pickup_during_cover {
                            CoverPhase::Roaming
                        } else {
                            CoverPhase::Collecting
                        };
                        continue;
                    }
                    break Directive::Fly(vec![self.agents[agent].waypoints[next]]);
                }
                CoverPhase::Returning { resume, back } => {
                    let movers_only = self.movers_only(&CoverPhase::Returning { resume, back });
                    if let Some(task) = pickable_task_in_cell(world, cell, movers_only) {
                        break Directive::Execute(task);
                    }
                    if cell == back {
                        self.agents[agent].phase = CoverPhase::Covering { next: resume };
                        continue;
                    }
                    break Directive::Fly(vec![back]);
                }
                CoverPhase::Collecting => {
                    if let Some(task) = self.collect_best_static(world, agent) {
                        break Directive::Execute(task);
                    }
                    self.agents[agent].phase = CoverPhase::Roaming;
                    continue;
                }
                CoverPhase::Roaming => {
                    if let Some(task) = pickable_task_in_cell(world, cell, false) {
                        break Directive::Execute(task);
                    }
                    break random_step(world, agent, rng);
                }
            }
        };
        DecisionOutcome {
            directive,
            log_payload: None,
        }
    }

    fn reactors(&mut self, world: &World, new_tasks: &[(TaskId, usize)]) -> Vec<usize> {
        let mut out = Vec::new();
        for &(task, _) in new_tasks {
            let Some(t) = world.tasks.get(&task) else { continue };
            let cell = cell_of(t.est_pos, &world.cfg.grid).expect("estimate inside arena");
            for (i, a) in world.agents.iter().enumerate() {
                if a.is_crashed() || world.agent_cell(i) != cell {
                    continue;
                }
                let phase = &self.agents[i].phase;
                let reacts = match phase {
                    CoverPhase::Transit | CoverPhase::Collecting => false,
                    other => !self.movers_only(other) || t.class.kind == MotionKind::Moving,
                };
                if reacts {
                    out.push(i);
                }
            }
        }
        out
    }
}
