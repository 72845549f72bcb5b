//! Decision making and deterministic mission simulation for multi-agent
//! search-and-delivery under a hard time budget.
//!
//! Agents explore a probabilistic target map while trading exploration off
//! against executing pickup-and-delivery tasks. Actions are scored by the
//! change they cause in a budget-constrained reward prediction, computed
//! with a two-table knapsack dynamic program, and agents coordinate
//! implicitly by planning one at a time against a shared claim board.
//!
//! Module layout:
//!
//! - [`grid`] — arena geometry: cells, travel times, adjacency
//! - [`belief`] — per-object probability grids with Bayesian updates
//! - [`tasks`] — task definitions, rewards, and pickup-delivery costs
//! - [`reward`] — the reward prediction DP and its exact oracle
//! - [`planner`] — action enumeration, evaluation, and selection
//! - [`sim`] — the event-driven mission simulator and benchmark policies
//! - [`harness`] — experiment sweeps, CSV emission, and replay verification

pub mod belief;
pub mod grid;
pub mod harness;
pub mod ids;
pub mod planner;
pub mod reward;
pub mod sim;
pub mod tasks;

pub use grid::{cell_center, cell_of, neighbors, travel_time, CellIndex, Connectivity, GridSpec, Position};
pub use ids::{AgentId, ObjectId, TaskId};
pub use sim::{run_mission, MissionReport, ScenarioConfig, Strategy};

