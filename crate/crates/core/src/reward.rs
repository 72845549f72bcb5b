//! Reward prediction: the best total score deliverable within a time budget.
//!
//! Given a set of found tasks, each with a reward and two costs — from the
//! drop box (successive pickups) and from the agent's current position
//! (first pickup) — the prediction is a budgeted selection problem solved
//! with two value tables. The first table prices every task from the drop
//! box; the second allows at most one task to be priced from the agent's
//! position, because after a delivery every later pickup starts at the box.
//! Each task ends up labeled: pick up first, pick up later, or skip.
//!
//! Budgets are discretized; costs round up to the next step so the predicted
//! reward is never optimistic. Exhaustive enumeration oracles for single and
//! multi-agent instances live here too, sharing nothing with the DP path.

use thiserror::Error;

use crate::grid::{GridSpec, Position};
use crate::ids::TaskId;
use crate::tasks::{task_cost_from, CostParams, FoundTask};

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("oracle refuses instance: {0}")]
    OracleTooLarge(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("quantizer step must be positive, got {0}")]
    InvalidStep(f64),
}

/// One selectable task as the DP sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct DpItem {
    pub task_id: TaskId,
    /// Pickup cost when starting from the drop box.
    pub cost_from_box: f64,
    /// Pickup cost when starting from the agent's current position.
    pub cost_from_agent: f64,
    pub reward: u32,
}

/// A single-agent instance: items plus the remaining time budget.
#[derive(Debug, Clone, PartialEq)]
pub struct DpInstance {
    pub items: Vec<DpItem>,
    pub budget: f64,
}

impl DpInstance {
    pub fn validate(&self) -> Result<(), RewardError> {
        if self.budget < 0.0 {
            return Err(RewardError::InvalidInstance(format!("negative budget {}", self.budget)));
        }
        for item in &self.items {
            if !(item.cost_from_box > 0.0) || !(item.cost_from_agent > 0.0) {
                return Err(RewardError::InvalidInstance(format!(
                    "task {} has non-positive cost",
                    item.task_id
                )));
            }
        }
        Ok(())
    }
}

/// Seconds per budget unit in the DP tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetQuantizer {
    pub step: f64,
}

impl BudgetQuantizer {
    pub fn new(step: f64) -> Result<Self, RewardError> {
        if !(step > 0.0) {
            return Err(RewardError::InvalidStep(step));
        }
        Ok(Self { step })
    }

    /// Costs round up: a selection the table considers affordable is
    /// affordable in real time.
    pub fn cost_units(&self, cost: f64) -> usize {
        (cost / self.step).ceil().max(0.0) as usize
    }

    /// Budgets round down, for the same reason.
    pub fn budget_units(&self, budget: f64) -> usize {
        (budget.max(0.0) / self.step).floor() as usize
    }
}

impl Default for BudgetQuantizer {
    fn default() -> Self {
        Self { step: 1.0 }
    }
}

/// Per-task decision in a solved instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    PickFirst,
    PickLater,
    Skip,
}

/// Result of a single-agent prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct DpSolution {
    pub value: u32,
    /// One label per instance item, in item order. At most one `PickFirst`.
    pub labels: Vec<Label>,
}

impl DpSolution {
    pub fn pick_first(&self) -> Option<usize> {
        self.labels.iter().position(|&l| l == Label::PickFirst)
    }
}

/// Both filled value tables, kept around for inspection and tests.
#[derive(Debug, Clone)]
pub struct DpTables {
    n: usize,
    width: usize,
    from_box: Vec<u32>,
    from_agent: Vec<u32>,
}

impl DpTables {
    pub fn items(&self) -> usize {
        self.n
    }

    pub fn budget_units(&self) -> usize {
        self.width - 1
    }

    /// Value using the first `k` items with all costs from the drop box.
    pub fn from_box(&self, k: usize, tau: usize) -> u32 {
        self.from_box[k * self.width + tau]
    }

    /// Value using the first `k` items with at most one first pickup priced
    /// from the agent position.
    pub fn from_agent(&self, k: usize, tau: usize) -> u32 {
        self.from_agent[k * self.width + tau]
    }

    pub fn value(&self) -> u32 {
        self.from_agent(self.n, self.width - 1)
    }

    /// Plain-text dump for debugging.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, table) in [("from_box", &self.from_box), ("from_agent", &self.from_agent)] {
            out.push_str(name);
            out.push('\n');
            for k in 0..=self.n {
                let row: Vec<String> = (0..self.width).map(|t| table[k * self.width + t].to_string()).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

/// Fills both tables for an instance without taking any shortcut.
pub fn solve_tables(inst: &DpInstance, q: &BudgetQuantizer) -> DpTables {
    let n = inst.items.len();
    let budget = q.budget_units(inst.budget);
    let width = budget + 1;
    let costs_box: Vec<usize> = inst.items.iter().map(|i| q.cost_units(i.cost_from_box)).collect();
    let costs_agent: Vec<usize> = inst.items.iter().map(|i| q.cost_units(i.cost_from_agent)).collect();

    let mut from_box = vec![0u32; (n + 1) * width];
    for k in 1..=n {
        let (c, r) = (costs_box[k - 1], inst.items[k - 1].reward);
        let (prev, cur) = from_box.split_at_mut(k * width);
        let prev = &prev[(k - 1) * width..];
        for tau in 0..width {
            let skip = prev[tau];
            cur[tau] = if c <= tau { skip.max(prev[tau - c] + r) } else { skip };
        }
    }

    let mut from_agent = vec![0u32; (n + 1) * width];
    for k in 1..=n {
        let (c, cs, r) = (costs_box[k - 1], costs_agent[k - 1], inst.items[k - 1].reward);
        let box_prev = &from_box[(k - 1) * width..k * width];
        let (prev, cur) = from_agent.split_at_mut(k * width);
        let prev = &prev[(k - 1) * width..];
        for tau in 0..width {
            let mut best = prev[tau];
            if cs <= tau {
                best = best.max(box_prev[tau - cs] + r);
            }
            if c <= tau {
                best = best.max(prev[tau - c] + r);
            }
            cur[tau] = best;
        }
    }

    DpTables {
        n,
        width,
        from_box,
        from_agent,
    }
}

fn backtrack_labels(inst: &DpInstance, q: &BudgetQuantizer, tables: &DpTables) -> Vec<Label> {
    let n = inst.items.len();
    let mut labels = vec![Label::Skip; n];
    let mut tau = tables.width - 1;
    let mut in_agent_table = true;
    for k in (1..=n).rev() {
        let c = q.cost_units(inst.items[k - 1].cost_from_box);
        let cs = q.cost_units(inst.items[k - 1].cost_from_agent);
        let r = inst.items[k - 1].reward;
        if in_agent_table {
            let v = tables.from_agent(k, tau);
            if v == tables.from_agent(k - 1, tau) {
                continue; // ties prefer skipping
            }
            if c <= tau && v == tables.from_agent(k - 1, tau - c) + r {
                labels[k - 1] = Label::PickLater; // ties prefer the later slot
                tau -= c;
                continue;
            }
            debug_assert!(cs <= tau && v == tables.from_box(k - 1, tau - cs) + r);
            labels[k - 1] = Label::PickFirst;
            tau -= cs;
            in_agent_table = false;
        } else {
            let v = tables.from_box(k, tau);
            if v == tables.from_box(k - 1, tau) {
                continue;
            }
            labels[k - 1] = Label::PickLater;
            tau -= c;
        }
    }
    labels
}

/// Best deliverable reward for one agent, with the decision labels that
/// achieve it.
pub fn predict_reward_single(inst: &DpInstance, q: &BudgetQuantizer) -> DpSolution {
    let n = inst.items.len();
    if n == 0 {
        return DpSolution {
            value: 0,
            labels: Vec::new(),
        };
    }
    let budget = q.budget_units(inst.budget);

    if n == 1 {
        let item = &inst.items[0];
        let (c, cs) = (q.cost_units(item.cost_from_box), q.cost_units(item.cost_from_agent));
        let (value, label) = if item.reward == 0 {
            (0, Label::Skip)
        } else if c <= budget {
            (item.reward, Label::PickLater)
        } else if cs <= budget {
            (item.reward, Label::PickFirst)
        } else {
            (0, Label::Skip)
        };
        return DpSolution {
            value,
            labels: vec![label],
        };
    }

    // When every task fits from the drop box the optimum is to take them
    // all; no table is needed.
    let total: usize = inst.items.iter().map(|i| q.cost_units(i.cost_from_box)).sum();
    if total <= budget {
        let value = inst.items.iter().map(|i| i.reward).sum();
        let labels = inst
            .items
            .iter()
            .map(|i| if i.reward > 0 { Label::PickLater } else { Label::Skip })
            .collect();
        return DpSolution { value, labels };
    }

    let tables = solve_tables(inst, q);
    let labels = backtrack_labels(inst, q, &tables);
    DpSolution {
        value: tables.value(),
        labels,
    }
}

/// A multi-agent instance: shared tasks, per-agent budgets, and per-agent
/// first-pickup costs.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiInstance {
    pub rewards: Vec<u32>,
    pub cost_from_box: Vec<f64>,
    /// `cost_from_agent[j][i]` is agent j's first-pickup cost for task i.
    pub cost_from_agent: Vec<Vec<f64>>,
    pub budgets: Vec<f64>,
}

impl MultiInstance {
    pub fn tasks(&self) -> usize {
        self.rewards.len()
    }

    pub fn agents(&self) -> usize {
        self.budgets.len()
    }
}

/// Sequential implicit-coordination allocation: agents solve their
/// single-agent prediction one at a time in the given order, and the tasks
/// an agent selects disappear before the next agent plans. Returns the
/// summed predicted reward. This approximates the joint optimum; it makes no
/// exactness claim.
pub fn sequential_allocation(inst: &MultiInstance, q: &BudgetQuantizer) -> u32 {
    let mut remaining: Vec<usize> = (0..inst.tasks()).collect();
    let mut total = 0u32;
    for agent in 0..inst.agents() {
        if remaining.is_empty() {
            break;
        }
        let items: Vec<DpItem> = remaining
            .iter()
            .map(|&i| DpItem {
                task_id: TaskId(i as u32),
                cost_from_box: inst.cost_from_box[i],
                cost_from_agent: inst.cost_from_agent[agent][i],
                reward: inst.rewards[i],
            })
            .collect();
        let solution = predict_reward_single(
            &DpInstance {
                items,
                budget: inst.budgets[agent],
            },
            q,
        );
        total += solution.value;
        remaining = remaining
            .iter()
            .zip(solution.labels.iter())
            .filter(|(_, &label)| label == Label::Skip)
            .map(|(&i, _)| i)
            .collect();
    }
    total
}

/// Team reward prediction from agent positions: each task is priced from
/// the drop box and from every agent's position, then allocated
/// sequentially in the order the agents are given.
pub fn predict_reward_multi(
    agents: &[(Position, f64)],
    tasks: &[FoundTask],
    params: &CostParams,
    grid: &GridSpec,
    q: &BudgetQuantizer,
) -> u32 {
    if agents.is_empty() || tasks.is_empty() {
        return 0;
    }
    let inst = MultiInstance {
        rewards: tasks.iter().map(|t| t.reward).collect(),
        cost_from_box: tasks.iter().map(|t| task_cost_from(grid.drop_box, t, params, grid)).collect(),
        cost_from_agent: agents
            .iter()
            .map(|(pos, _)| tasks.iter().map(|t| task_cost_from(*pos, t, params, grid)).collect())
            .collect(),
        budgets: agents.iter().map(|(_, b)| *b).collect(),
    };
    sequential_allocation(&inst, q)
}

/// Exact single-agent optimum by enumeration over every task subset and
/// every choice of first task (or none). Unquantized costs.
pub fn brute_force_single(inst: &DpInstance) -> Result<u32, RewardError> {
    let n = inst.items.len();
    if n > 12 {
        return Err(RewardError::OracleTooLarge(format!("{n} items exceeds the 12-item limit")));
    }
    let mut best = 0u32;
    for mask in 0u32..(1 << n) {
        let mut cost_all_later = 0.0;
        let mut reward = 0u32;
        for (i, item) in inst.items.iter().enumerate() {
            if mask & (1 << i) != 0 {
                cost_all_later += item.cost_from_box;
                reward += item.reward;
            }
        }
        if reward <= best {
            continue;
        }
        let mut feasible = cost_all_later <= inst.budget;
        if !feasible {
            for (i, item) in inst.items.iter().enumerate() {
                if mask & (1 << i) != 0
                    && cost_all_later - item.cost_from_box + item.cost_from_agent <= inst.budget
                {
                    feasible = true;
                    break;
                }
            }
        }
        if feasible {
            best = reward;
        }
    }
    Ok(best)
}

/// Exact multi-agent optimum by enumerating every assignment of tasks to
/// agents (or to nobody), with per-agent feasibility as in
/// [`brute_force_single`].
pub fn brute_force_multi(inst: &MultiInstance) -> Result<u32, RewardError> {
    let n = inst.tasks();
    let m = inst.agents();
    if n > 8 || m > 3 {
        return Err(RewardError::OracleTooLarge(format!(
            "{n} tasks x {m} agents exceeds the 8x3 limit"
        )));
    }
    if m == 0 {
        return Ok(0);
    }
    let base = m + 1;
    let mut assignment = vec![0usize; n];
    let mut best = 0u32;
    let total = (base as u64).pow(n as u32);
    for code in 0..total {
        let mut c = code;
        for slot in assignment.iter_mut() {
            *slot = (c % base as u64) as usize;
            c /= base as u64;
        }
        let mut reward = 0u32;
        let mut feasible = true;
        for agent in 1..=m {
            let mut cost_all_later = 0.0;
            let mut any = false;
            for (i, &a) in assignment.iter().enumerate() {
                if a == agent {
                    cost_all_later += inst.cost_from_box[i];
                    any = true;
                }
            }
            if !any {
                continue;
            }
            let budget = inst.budgets[agent - 1];
            let mut agent_ok = cost_all_later <= budget;
            if !agent_ok {
                for (i, &a) in assignment.iter().enumerate() {
                    if a == agent
                        && cost_all_later - inst.cost_from_box[i] + inst.cost_from_agent[agent - 1][i] <= budget
                    {
                        agent_ok = true;
                        break;
                    }
                }
            }
            if !agent_ok {
                feasible = false;
                break;
            }
        }
        if !feasible {
            continue;
        }
        for (i, &a) in assignment.iter().enumerate() {
            if a != 0 {
                reward += inst.rewards[i];
            }
        }
        best = best.max(reward);
    }
    Ok(best)
}
