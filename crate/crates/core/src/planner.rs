//! Action enumeration and selection.
//!
//! Each replan enumerates candidate exploration paths on the grid, scores
//! every candidate by the expected change in predicted deliverable reward,
//! and picks the best. A candidate's score combines, per undiscovered
//! object, the probability of finding it along the path with the reward
//! prediction that would result, plus a no-find term that prices the pure
//! loss of budget. When the best exploration has negative value the agent
//! executes a found task instead.
//!
//! Planning is a pure function of a context snapshot; coordination happens
//! through the claim sets in the context, which the caller keeps current.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::belief::{mass_in, BeliefGrid};
use crate::grid::{cell_center, cell_of, travel_time, CellIndex, GridSpec, Position};
use crate::ids::TaskId;
use crate::reward::{predict_reward_multi, predict_reward_single, BudgetQuantizer, DpInstance, DpItem};
use crate::tasks::{task_cost_from, CostParams, FoundTask, ObjectClass};

/// An exploration path over grid cells. `path` starts at the agent's cell or
/// at the cell the action routes to first; `cost` includes the flight to the
/// path start when that is not the agent's cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExploreAction {
    pub path: Vec<CellIndex>,
    pub cost: f64,
    pub cells_observed: BTreeSet<CellIndex>,
}

impl ExploreAction {
    /// Cells the flight actually steers to, skipping the leading path cell
    /// when the agent already stands in it.
    pub fn flight_waypoints(&self, current_cell: CellIndex) -> &[CellIndex] {
        if self.path.first() == Some(&current_cell) {
            &self.path[1..]
        } else {
            &self.path[..]
        }
    }
}

/// What an agent decides to do next.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanAction {
    Explore(ExploreAction),
    Execute(TaskId),
}

/// An undiscovered object the planner can still search for: its belief grid
/// plus its score class.
#[derive(Debug, Clone)]
pub struct SearchTarget<'a> {
    pub belief: &'a BeliefGrid,
    pub class: ObjectClass,
}

/// Snapshot of everything one agent needs to plan.
#[derive(Debug, Clone)]
pub struct PlanContext<'a> {
    pub my_position: Position,
    pub my_budget: f64,
    /// Current mission time; found-task ages are measured against it.
    pub now: f64,
    /// Tracking timeout for moving tasks.
    pub tracking_timeout: f64,
    /// Live (unexpired) found tasks, including claimed ones.
    pub found_tasks: &'a [FoundTask],
    /// Belief grids of objects that are still unfound and in the field.
    pub targets: &'a [SearchTarget<'a>],
    pub claimed_tasks: &'a BTreeSet<TaskId>,
    pub claimed_cells: &'a BTreeSet<CellIndex>,
    /// Alive peers as (position, remaining budget).
    pub peers: &'a [(Position, f64)],
    pub grid: &'a GridSpec,
    pub cost: &'a CostParams,
    pub quantizer: BudgetQuantizer,
    /// Dead time every decision costs before its action starts. Folded into
    /// an action's budget consumption when predicting rewards, so that a
    /// pickup that only fits the budget *now* is not gambled away on one
    /// more exploration hop.
    pub replan_overhead: f64,
}

impl<'a> PlanContext<'a> {
    fn selectable_tasks(&self) -> Vec<FoundTask> {
        let mut tasks: Vec<FoundTask> = self
            .found_tasks
            .iter()
            .filter(|t| !self.claimed_tasks.contains(&t.task_id))
            .cloned()
            .collect();
        tasks.sort_by_key(|t| t.task_id);
        tasks
    }

    /// Sum of expected score over targets for one cell; claimed cells are
    /// worth nothing.
    fn cell_score(&self, cell: CellIndex) -> f64 {
        if self.claimed_cells.contains(&cell) {
            return 0.0;
        }
        self.targets
            .iter()
            .map(|t| t.belief.prob_at(cell) * f64::from(t.class.points))
            .sum()
    }
}

/// A candidate with its evaluated reward increase, for decision logging.
#[derive(Debug, Clone)]
pub struct ScoredCandidate {
    pub action: ExploreAction,
    pub score: f64,
}

/// Outcome of one planning pass. `action` is `None` when the agent has
/// nothing useful left to do (mission idle).
#[derive(Debug, Clone)]
pub struct Decision {
    pub action: Option<PlanAction>,
    /// Up to five best exploration candidates, best first.
    pub top_candidates: Vec<ScoredCandidate>,
}

fn self_avoiding_walks(start: CellIndex, horizon: usize, spec: &GridSpec) -> Vec<Vec<CellIndex>> {
    fn extend(path: &mut Vec<CellIndex>, remaining: usize, spec: &GridSpec, out: &mut Vec<Vec<CellIndex>>) {
        if remaining == 0 {
            out.push(path.clone());
            return;
        }
        let here = *path.last().expect("path never empty");
        let mut extended = false;
        for next in crate::grid::neighbors(here, spec, crate::grid::Connectivity::Four).expect("valid cell") {
            if path.contains(&next) {
                continue;
            }
            extended = true;
            path.push(next);
            extend(path, remaining - 1, spec, out);
            path.pop();
        }
        if !extended && path.len() > 1 {
            // Boxed in before reaching the horizon: keep the maximal walk.
            out.push(path.clone());
        }
    }
    let mut out = Vec::new();
    let mut path = vec![start];
    extend(&mut path, horizon, spec, &mut out);
    out
}

fn straight_paths(from: CellIndex, horizon: usize, spec: &GridSpec) -> Vec<Vec<CellIndex>> {
    let mut out = Vec::new();
    for (dc, dr) in [(-1i64, 0i64), (0, -1), (0, 1), (1, 0)] {
        let mut path = vec![from];
        for step in 1..=horizon as i64 {
            let col = from.col as i64 + dc * step;
            let row = from.row as i64 + dr * step;
            if col < 0 || row < 0 || col as usize >= spec.cols() || row as usize >= spec.rows() {
                break;
            }
            path.push(CellIndex::new(col as usize, row as usize));
        }
        if path.len() > 1 {
            out.push(path);
        }
    }
    out
}

fn path_cost(path: &[CellIndex], ctx: &PlanContext<'_>) -> f64 {
    let my_cell = cell_of(ctx.my_position, ctx.grid).expect("agent inside arena");
    let mut cost = 0.0;
    let mut from = ctx.my_position;
    for (i, cell) in path.iter().enumerate() {
        if i == 0 && *cell == my_cell {
            continue; // already standing in the first path cell
        }
        let to = cell_center(*cell, ctx.grid).expect("valid cell");
        cost += travel_time(from, to, ctx.cost.uav_speed).expect("validated speed");
        from = to;
    }
    cost
}

/// Enumerates exploration candidates: every self-avoiding four-connected
/// walk of `horizon` moves from the agent's cell, plus the four straight
/// sweeps of the same length from the cell with the highest predicted score.
/// Candidates observing the same cell set collapse to the cheapest one.
pub fn enumerate_actions(ctx: &PlanContext<'_>, horizon: usize) -> Vec<ExploreAction> {
    assert!(horizon >= 1, "horizon must be at least 1");
    let my_cell = cell_of(ctx.my_position, ctx.grid).expect("agent inside arena");
    let mut paths = self_avoiding_walks(my_cell, horizon, ctx.grid);

    // Sweeps from the most promising cell, when any cell is promising at
    // all. Score ties break toward the cell closest to the agent (a flat
    // map must not send everyone racing to one corner), then lexicographic.
    let mut best: Option<(f64, f64, CellIndex)> = None;
    for cell in ctx.grid.cells() {
        let score = ctx.cell_score(cell);
        if score <= 0.0 {
            continue;
        }
        let dist = ctx.my_position.distance_to(cell_center(cell, ctx.grid).expect("valid cell"));
        let better = match &best {
            None => true,
            Some((s, d, c)) => {
                score > *s || (score == *s && (dist < *d || (dist == *d && cell < *c)))
            }
        };
        if better {
            best = Some((score, dist, cell));
        }
    }
    if let Some((_, _, best)) = best {
        paths.extend(straight_paths(best, 2 * horizon, ctx.grid));
    }

    let mut candidates: Vec<ExploreAction> = paths
        .into_iter()
        .map(|path| {
            let cost = path_cost(&path, ctx);
            let mut cells_observed: BTreeSet<CellIndex> = path.iter().copied().collect();
            // The camera keeps sensing during the flight to a remote path
            // start, one cell per second of flight; credit those cells so
            // repositioning sweeps are priced by what they really observe.
            if path.first() != Some(&my_cell) {
                cells_observed.insert(my_cell);
                let start = cell_center(path[0], ctx.grid).expect("valid cell");
                let duration = travel_time(ctx.my_position, start, ctx.cost.uav_speed).expect("validated speed");
                let mut t = 1.0;
                while t < duration {
                    let f = t / duration;
                    let pos = Position::new(
                        ctx.my_position.x + (start.x - ctx.my_position.x) * f,
                        ctx.my_position.y + (start.y - ctx.my_position.y) * f,
                    );
                    cells_observed.insert(cell_of(pos, ctx.grid).expect("line stays inside the arena"));
                    t += 1.0;
                }
            }
            ExploreAction {
                path,
                cost,
                cells_observed,
            }
        })
        .collect();

    // Deduplicate by observed cell set, keeping the cheapest (then the
    // lexicographically smallest path, for determinism).
    candidates.sort_by(|a, b| {
        a.cells_observed
            .cmp(&b.cells_observed)
            .then(a.cost.total_cmp(&b.cost))
            .then(a.path.cmp(&b.path))
    });
    candidates.dedup_by(|b, a| a.cells_observed == b.cells_observed);
    candidates.sort_by(|a, b| a.path.len().cmp(&b.path.len()).then(a.path.cmp(&b.path)));
    candidates
}

fn team_reward(ctx: &PlanContext<'_>, self_pos: Position, self_budget: f64, tasks: &[FoundTask]) -> u32 {
    let mut agents = Vec::with_capacity(1 + ctx.peers.len());
    agents.push((self_pos, self_budget));
    agents.extend_from_slice(ctx.peers);
    predict_reward_multi(&agents, tasks, ctx.cost, ctx.grid, &ctx.quantizer)
}

fn evaluate_with_base(a: &ExploreAction, ctx: &PlanContext<'_>, selectable: &[FoundTask], j_base: u32) -> f64 {
    if !(a.cost < ctx.my_budget) {
        return f64::NEG_INFINITY;
    }
    let budget_after = (ctx.my_budget - a.cost - ctx.replan_overhead).max(0.0);
    let end_pos = cell_center(*a.path.last().expect("paths are never empty"), ctx.grid).expect("valid cell");
    let j_base = f64::from(j_base);

    // Moving tasks that will have gone stale by the time this action ends
    // cannot be delivered afterwards; leaving them out of the post-action
    // predictions is what makes skipping a fresh mover cost its points.
    let end_time = ctx.now + a.cost + ctx.replan_overhead;
    let post_tasks: Vec<FoundTask> = selectable
        .iter()
        .filter(|t| !t.is_expired(end_time, ctx.tracking_timeout))
        .cloned()
        .collect();

    let observable: BTreeSet<CellIndex> = a
        .cells_observed
        .iter()
        .filter(|c| !ctx.claimed_cells.contains(c))
        .copied()
        .collect();

    let mut value = 0.0;
    let mut p_total = 0.0;
    // Hypothetical finds of the same class in the same cell predict the same
    // reward; group them so the DP runs once per distinct outcome.
    let mut find_cache: BTreeMap<(CellIndex, u32, bool), f64> = BTreeMap::new();
    for target in ctx.targets {
        let p = mass_in(target.belief, &observable);
        if p <= 0.0 {
            continue;
        }
        p_total += p;
        let place = observable
            .iter()
            .copied()
            .max_by(|x, y| {
                target
                    .belief
                    .prob_at(*x)
                    .total_cmp(&target.belief.prob_at(*y))
                    .then(y.cmp(x))
            })
            .expect("observable cells nonempty when mass is positive");
        let key = (
            place,
            target.class.points,
            target.class.kind == crate::belief::MotionKind::Moving,
        );
        let j_with = *find_cache.entry(key).or_insert_with(|| {
            let mut tasks = post_tasks.clone();
            tasks.push(FoundTask::new(
                TaskId(u32::MAX),
                target.class,
                cell_center(place, ctx.grid).expect("valid cell"),
                end_time,
            ));
            f64::from(team_reward(ctx, end_pos, budget_after, &tasks))
        });
        value += p * (j_with - j_base);
    }

    // Per-object find probabilities are not exclusive, so their sum can pass
    // 1. Past that point the weights stop being a distribution over what one
    // pass can actually yield: normalize the find terms back to unit total
    // weight and drop the (would-be negative) no-find term, instead of
    // letting an inflated sum drown the value of what is already in hand.
    if p_total > 1.0 {
        value /= p_total;
    } else {
        let j_nofind = f64::from(team_reward(ctx, end_pos, budget_after, &post_tasks));
        value += (1.0 - p_total) * (j_nofind - j_base);
    }
    value
}

/// Expected reward increase of an exploration action, or negative infinity
/// when the action does not fit the remaining budget.
pub fn evaluate_action(a: &ExploreAction, ctx: &PlanContext<'_>) -> f64 {
    let selectable = ctx.selectable_tasks();
    let j_base = team_reward(ctx, ctx.my_position, ctx.my_budget, &selectable);
    evaluate_with_base(a, ctx, &selectable, j_base)
}

fn execute_fallback(ctx: &PlanContext<'_>, selectable: &[FoundTask]) -> Option<PlanAction> {
    // A moving target is only worth claiming while it can be reached before
    // its track goes stale; chasing a distant sighting just feeds aborts.
    let pursuit_slack = 2.0 * ctx.grid.cell_size_m / ctx.cost.uav_speed;
    let catchable = |t: &FoundTask| {
        if t.class.kind != crate::belief::MotionKind::Moving {
            return true;
        }
        let age = (ctx.now - t.last_seen).max(0.0);
        let approach = travel_time(ctx.my_position, t.est_pos, ctx.cost.uav_speed).expect("validated speed");
        approach <= (ctx.tracking_timeout - age).max(0.0) + pursuit_slack
    };
    let selectable: Vec<FoundTask> = selectable.iter().filter(|t| catchable(t)).cloned().collect();
    if selectable.is_empty() {
        return None;
    }
    let items: Vec<DpItem> = selectable
        .iter()
        .map(|t| DpItem {
            task_id: t.task_id,
            cost_from_box: task_cost_from(ctx.grid.drop_box, t, ctx.cost, ctx.grid),
            cost_from_agent: task_cost_from(ctx.my_position, t, ctx.cost, ctx.grid),
            reward: t.reward,
        })
        .collect();
    let instance = DpInstance {
        items: items.clone(),
        budget: ctx.my_budget,
    };
    let solution = predict_reward_single(&instance, &ctx.quantizer);
    if let Some(idx) = solution.pick_first() {
        return Some(PlanAction::Execute(items[idx].task_id));
    }
    // The optimum has no dedicated first pickup. Either everything fits from
    // the drop box (the first slot is degenerate) or the table's value rides
    // on from-box pickups this agent cannot start from where it stands. In
    // both cases the executable plans are exactly "task k first, the rest
    // priced from the box": score each reachable k that way and take the
    // best, breaking ties toward expiring movers, then the biggest
    // first-pickup saving.
    let mut best: Option<(u32, bool, f64, TaskId)> = None;
    for (k, item) in items.iter().enumerate() {
        if item.cost_from_agent > ctx.my_budget {
            continue;
        }
        let rest: Vec<DpItem> = items
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, it)| DpItem {
                cost_from_agent: it.cost_from_box,
                ..it.clone()
            })
            .collect();
        let remainder = predict_reward_single(
            &DpInstance {
                items: rest,
                budget: ctx.my_budget - item.cost_from_agent,
            },
            &ctx.quantizer,
        );
        let value = item.reward + remainder.value;
        let mover = selectable[k].class.kind == crate::belief::MotionKind::Moving;
        let saving = item.cost_from_box - item.cost_from_agent;
        let better = match &best {
            None => true,
            Some((v, m, s, id)) => {
                value > *v
                    || (value == *v
                        && ((mover && !*m)
                            || (mover == *m
                                && (saving > *s || (saving == *s && item.task_id < *id)))))
            }
        };
        if better {
            best = Some((value, mover, saving, item.task_id));
        }
    }
    best.map(|(_, _, _, task)| PlanAction::Execute(task))
}

/// Scores every enumerated action and picks what to do. Ties between equal
/// scores break toward fewer path cells, then the lexicographically smaller
/// path. A best score below zero (or no feasible exploration) falls back to
/// executing a found task; with nothing to execute either, the agent idles.
pub fn select_action(ctx: &PlanContext<'_>, horizon: usize) -> Decision {
    let actions = enumerate_actions(ctx, horizon);
    let selectable = ctx.selectable_tasks();
    let j_base = team_reward(ctx, ctx.my_position, ctx.my_budget, &selectable);

    let mut scored: Vec<ScoredCandidate> = actions
        .into_iter()
        .map(|action| {
            let score = evaluate_with_base(&action, ctx, &selectable, j_base);
            ScoredCandidate { action, score }
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.action.path.len().cmp(&b.action.path.len()))
            .then(a.action.path.cmp(&b.action.path))
    });

    // Strictly positive expected gain explores. At exactly zero there is
    // nothing reachable left to find, so executing a banked task (saving its
    // future approach leg) is weakly better; exploration at zero is kept
    // only as a fallback walk when nothing is executable either.
    let best_feasible = scored.first().filter(|c| c.score.is_finite());
    let action = match best_feasible {
        Some(best) if best.score > 0.0 => Some(PlanAction::Explore(best.action.clone())),
        Some(best) if best.score == 0.0 => {
            execute_fallback(ctx, &selectable).or_else(|| Some(PlanAction::Explore(best.action.clone())))
        }
        _ => execute_fallback(ctx, &selectable),
    };
    scored.truncate(5);
    Decision {
        action,
        top_candidates: scored,
    }
}

/// One replanning pass. The context must already reflect every peer's
/// latest broadcast claim (claimed tasks excluded from selection, claimed
/// cells marked, crashed peers dropped); the returned decision is what this
/// agent broadcasts as its own claim. The simulator grants replan turns one
/// agent at a time, so no two agents ever plan against the same board
/// simultaneously.
pub fn replan(ctx: &PlanContext<'_>, horizon: usize) -> Decision {
    select_action(ctx, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{BeliefGrid, MotionKind};
    use crate::grid::GridSpec;
    use crate::ids::ObjectId;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    fn big_grid() -> GridSpec {
        GridSpec::new(100.0, 100.0, 10.0, Position::new(50.0, 50.0)).unwrap()
    }

    struct Fixture {
        grid: GridSpec,
        cost: CostParams,
        tasks: Vec<FoundTask>,
        beliefs: Vec<(BeliefGrid, ObjectClass)>,
        claimed_tasks: BTreeSet<TaskId>,
        claimed_cells: BTreeSet<CellIndex>,
        peers: Vec<(Position, f64)>,
        my_position: Position,
        my_budget: f64,
    }

    impl Fixture {
        fn new(grid: GridSpec) -> Self {
            Self {
                grid,
                cost: CostParams::default(),
                tasks: Vec::new(),
                beliefs: Vec::new(),
                claimed_tasks: BTreeSet::new(),
                claimed_cells: BTreeSet::new(),
                peers: Vec::new(),
                my_position: Position::new(55.0, 35.0),
                my_budget: 500.0,
            }
        }

        fn ctx<'a>(&'a self, targets: &'a mut Vec<SearchTarget<'a>>) -> PlanContext<'a> {
            targets.clear();
            targets.extend(self.beliefs.iter().map(|(belief, class)| SearchTarget {
                belief,
                class: *class,
            }));
            PlanContext {
                my_position: self.my_position,
                my_budget: self.my_budget,
                now: 0.0,
                tracking_timeout: f64::INFINITY,
                found_tasks: &self.tasks,
                targets,
                claimed_tasks: &self.claimed_tasks,
                claimed_cells: &self.claimed_cells,
                peers: &self.peers,
                grid: &self.grid,
                cost: &self.cost,
                quantizer: BudgetQuantizer::default(),
                replan_overhead: 0.0,
            }
        }
    }

    fn static_class(points: u32) -> ObjectClass {
        ObjectClass::new(MotionKind::Static, points).unwrap()
    }

    fn grid_from_cells(id: u32, cells: &[(usize, usize, f64)]) -> BeliefGrid {
        let mut probs = vec![0.0; 60];
        for &(col, row, p) in cells {
            probs[row * 10 + col] = p;
        }
        let text: String = (0..6)
            .map(|r| {
                (0..10)
                    .map(|c| probs[r * 10 + c].to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n");
        BeliefGrid::from_flat_text(ObjectId(id), MotionKind::Static, 10, 6, &text).unwrap()
    }

    #[test]
    fn walk_counts() {
        let g = big_grid();
        assert_eq!(self_avoiding_walks(CellIndex::new(5, 5), 1, &g).len(), 4);
        assert_eq!(self_avoiding_walks(CellIndex::new(0, 0), 1, &g).len(), 2);
        // 4 * 3 * 3 three-step self-avoiding walks away from the boundary.
        assert_eq!(self_avoiding_walks(CellIndex::new(5, 5), 3, &g).len(), 36);
    }

    #[test]
    fn enumeration_counts_without_targets() {
        let f = Fixture::new(grid());
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        // No probability anywhere: only the four one-step walks remain.
        assert_eq!(enumerate_actions(&ctx, 1).len(), 4);
    }

    #[test]
    fn enumeration_adds_best_cell_paths() {
        let mut f = Fixture::new(grid());
        f.beliefs.push((
            BeliefGrid::point_mass(ObjectId(0), MotionKind::Static, &f.grid, CellIndex::new(1, 1)),
            static_class(3),
        ));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let actions = enumerate_actions(&ctx, 1);
        // Four local walks plus up to four sweeps from the point-mass cell.
        assert!(actions.len() > 4 && actions.len() <= 8, "got {}", actions.len());
        assert!(actions.iter().any(|a| a.cells_observed.contains(&CellIndex::new(1, 1))));
    }

    #[test]
    fn enumeration_at_corner() {
        let mut f = Fixture::new(grid());
        f.my_position = Position::new(1.0, 1.0);
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        assert_eq!(enumerate_actions(&ctx, 1).len(), 2);
    }

    #[test]
    fn costs_include_travel_to_path_start() {
        let mut f = Fixture::new(grid());
        f.beliefs.push((
            BeliefGrid::point_mass(ObjectId(0), MotionKind::Static, &f.grid, CellIndex::new(0, 0)),
            static_class(3),
        ));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let actions = enumerate_actions(&ctx, 1);
        let far = actions
            .iter()
            .find(|a| a.path.first() == Some(&CellIndex::new(0, 0)))
            .expect("sweep from the best cell exists");
        let direct = f.my_position.distance_to(Position::new(5.0, 5.0)) / 2.0;
        assert!(far.cost > direct - 1e-9);
    }

    #[test]
    fn zero_mass_paths_score_zero_without_tasks() {
        let mut f = Fixture::new(grid());
        f.beliefs.push((
            BeliefGrid::point_mass(ObjectId(0), MotionKind::Static, &f.grid, CellIndex::new(0, 0)),
            static_class(3),
        ));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        // A one-step walk to (6,3) observes no mass; nothing is at stake.
        let action = enumerate_actions(&ctx, 1)
            .into_iter()
            .find(|a| a.path == vec![CellIndex::new(5, 3), CellIndex::new(6, 3)])
            .unwrap();
        assert_eq!(evaluate_action(&action, &ctx), 0.0);
    }

    #[test]
    fn budget_erosion_is_penalized() {
        // One found task that fits the budget now but not after paying for
        // an empty exploration: the no-find term prices the lost reward.
        let mut f = Fixture::new(grid());
        f.my_budget = 50.0;
        f.tasks
            .push(FoundTask::new(TaskId(0), static_class(2), Position::new(55.0, 35.0), 0.0));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let action = enumerate_actions(&ctx, 1)
            .into_iter()
            .find(|a| a.path == vec![CellIndex::new(5, 3), CellIndex::new(6, 3)])
            .unwrap();
        // By hand: the task costs ~48.5 s from here, so J = 2 now; after the
        // 5 s hop nothing fits from anywhere and J drops to 0, so R = -2.
        let r = evaluate_action(&action, &ctx);
        assert!((r - (-2.0)).abs() < 1e-9, "got {r}");
    }

    #[test]
    fn certain_find_is_worth_its_points() {
        let mut f = Fixture::new(grid());
        f.my_budget = 500.0;
        f.beliefs.push((
            BeliefGrid::point_mass(ObjectId(0), MotionKind::Static, &f.grid, CellIndex::new(6, 3)),
            static_class(3),
        ));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let action = enumerate_actions(&ctx, 1)
            .into_iter()
            .find(|a| a.cells_observed.contains(&CellIndex::new(6, 3)))
            .unwrap();
        let r = evaluate_action(&action, &ctx);
        assert!((r - 3.0).abs() < 1e-9, "got {r}");
    }

    #[test]
    fn infeasible_action_scores_negative_infinity() {
        let mut f = Fixture::new(grid());
        f.my_budget = 4.0; // cheaper than any one-step hop
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let actions = enumerate_actions(&ctx, 1);
        assert!(actions.iter().all(|a| evaluate_action(a, &ctx) == f64::NEG_INFINITY));
    }

    #[test]
    fn tight_budget_selects_execution() {
        let mut f = Fixture::new(grid());
        f.my_budget = 50.0;
        f.tasks
            .push(FoundTask::new(TaskId(0), static_class(2), Position::new(55.0, 35.0), 0.0));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let decision = select_action(&ctx, 3);
        assert_eq!(decision.action, Some(PlanAction::Execute(TaskId(0))));
    }

    #[test]
    fn generous_budget_prefers_exploring_over_low_value_task() {
        let mut f = Fixture::new(grid());
        f.my_budget = 800.0;
        f.tasks
            .push(FoundTask::new(TaskId(0), static_class(1), Position::new(55.0, 35.0), 0.0));
        f.beliefs.push((
            BeliefGrid::point_mass(ObjectId(1), MotionKind::Static, &f.grid, CellIndex::new(6, 3)),
            static_class(3),
        ));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let decision = select_action(&ctx, 3);
        assert!(matches!(decision.action, Some(PlanAction::Explore(_))), "{decision:?}");
    }

    #[test]
    fn uniform_belief_and_no_tasks_explores() {
        let mut f = Fixture::new(grid());
        f.my_budget = 800.0;
        f.beliefs
            .push((BeliefGrid::uniform(ObjectId(0), MotionKind::Static, &f.grid), static_class(2)));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let decision = select_action(&ctx, 3);
        assert!(matches!(decision.action, Some(PlanAction::Explore(_))));
    }

    #[test]
    fn nothing_to_do_idles() {
        let mut f = Fixture::new(grid());
        f.my_budget = 4.0;
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let decision = select_action(&ctx, 3);
        assert_eq!(decision.action, None);
    }

    #[test]
    fn fresh_mover_task_is_secured_before_it_goes_stale() {
        // Exploring for ~15 s would outlive the 4 s tracking window, so the
        // post-action prediction loses the mover's 3 points and R < 0.
        let mut f = Fixture::new(grid());
        f.my_budget = 700.0;
        f.tasks.push(FoundTask::new(
            TaskId(0),
            ObjectClass::new(MotionKind::Moving, 3).unwrap(),
            Position::new(65.0, 35.0),
            0.0,
        ));
        let mut targets = Vec::new();
        let mut ctx = f.ctx(&mut targets);
        ctx.tracking_timeout = 4.0;
        let decision = select_action(&ctx, 3);
        assert_eq!(decision.action, Some(PlanAction::Execute(TaskId(0))));

        // With an infinite tracking window the same scene explores.
        f.beliefs
            .push((BeliefGrid::uniform(ObjectId(1), MotionKind::Static, &f.grid), static_class(2)));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let decision = select_action(&ctx, 3);
        assert!(matches!(decision.action, Some(PlanAction::Explore(_))));
    }

    #[test]
    fn claimed_task_is_not_selected_again() {
        let mut f = Fixture::new(grid());
        f.my_budget = 60.0;
        f.tasks
            .push(FoundTask::new(TaskId(7), static_class(3), Position::new(55.0, 35.0), 0.0));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let first = replan(&ctx, 3);
        assert_eq!(first.action, Some(PlanAction::Execute(TaskId(7))));

        // The second replanner sees the claim and must not take the task.
        f.claimed_tasks.insert(TaskId(7));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let second = replan(&ctx, 3);
        assert_ne!(second.action, Some(PlanAction::Execute(TaskId(7))));
    }

    #[test]
    fn crashed_peer_changes_team_prediction() {
        let mut f = Fixture::new(grid());
        f.my_budget = 50.0;
        f.tasks
            .push(FoundTask::new(TaskId(0), static_class(2), Position::new(55.0, 35.0), 0.0));
        f.tasks
            .push(FoundTask::new(TaskId(1), static_class(3), Position::new(55.0, 35.0), 0.0));
        f.peers.push((Position::new(55.0, 35.0), 50.0));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let with_peer = team_reward(&ctx, ctx.my_position, ctx.my_budget, &ctx.selectable_tasks());
        f.peers.clear();
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let alone = team_reward(&ctx, ctx.my_position, ctx.my_budget, &ctx.selectable_tasks());
        assert!(alone < with_peer);
    }

    #[test]
    fn evaluation_ignores_object_ids() {
        let mut f = Fixture::new(grid());
        f.beliefs.push((
            BeliefGrid::point_mass(ObjectId(3), MotionKind::Static, &f.grid, CellIndex::new(6, 3)),
            static_class(3),
        ));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let action = enumerate_actions(&ctx, 1)
            .into_iter()
            .find(|a| a.cells_observed.contains(&CellIndex::new(6, 3)))
            .unwrap();
        let before = evaluate_action(&action, &ctx);

        f.beliefs[0].0 = BeliefGrid::point_mass(ObjectId(42), MotionKind::Static, &f.grid, CellIndex::new(6, 3));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let after = evaluate_action(&action, &ctx);
        assert_eq!(before, after);
    }

    #[test]
    fn off_path_mass_is_irrelevant() {
        let mut f = Fixture::new(grid());
        f.beliefs.push((grid_from_cells(0, &[(6, 3, 0.5), (0, 0, 0.5)]), static_class(2)));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let action = enumerate_actions(&ctx, 1)
            .into_iter()
            .find(|a| a.path == vec![CellIndex::new(5, 3), CellIndex::new(6, 3)])
            .unwrap();
        let before = evaluate_action(&action, &ctx);

        // Move the off-path half of the mass somewhere else off-path.
        f.beliefs[0].0 = grid_from_cells(0, &[(6, 3, 0.5), (9, 0, 0.5)]);
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let after = evaluate_action(&action, &ctx);
        assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn planning_is_deterministic_and_idempotent() {
        let mut f = Fixture::new(grid());
        f.my_budget = 700.0;
        f.beliefs
            .push((BeliefGrid::uniform(ObjectId(0), MotionKind::Static, &f.grid), static_class(2)));
        f.tasks
            .push(FoundTask::new(TaskId(0), static_class(1), Position::new(15.0, 5.0), 0.0));
        let mut targets = Vec::new();
        let ctx = f.ctx(&mut targets);
        let a = replan(&ctx, 3);
        let b = replan(&ctx, 3);
        assert_eq!(a.action, b.action);
        assert_eq!(a.top_candidates.len(), b.top_candidates.len());
        for (x, y) in a.top_candidates.iter().zip(b.top_candidates.iter()) {
            assert_eq!(x.action, y.action);
            assert_eq!(x.score, y.score);
        }
    }
}
