//! Deterministic event-driven 2D mission simulator.
//!
//! A mission runs a team of agents against a field of static and moving
//! objects until the time limit. Agents fly, sense the cell under them,
//! share detections, claim tasks, and deliver objects to the drop box for
//! points. Four decision strategies run in the same world model: the
//! reward-prediction planner and three rule-based benchmarks.
//!
//! Identical config and seed produce a byte-identical event log.

mod engine;
mod policies;
mod world;

use thiserror::Error;

use crate::belief::MotionKind;
use crate::grid::GridSpec;
use crate::tasks::{CostParams, ObjectClass};

pub use world::{
    class_name, format_line, path_text, Activity, AgentState, Leg, ObjectStatus, Phase, SimObject, World,
};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Decision-making strategy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Proposed,
    Random,
    CoverFieldFirst,
    CoverAndPickup,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Proposed,
        Strategy::Random,
        Strategy::CoverFieldFirst,
        Strategy::CoverAndPickup,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Proposed => "proposed",
            Strategy::Random => "random",
            Strategy::CoverFieldFirst => "cover-first",
            Strategy::CoverAndPickup => "cover-pickup",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "proposed" => Ok(Strategy::Proposed),
            "random" => Ok(Strategy::Random),
            "cover-first" => Ok(Strategy::CoverFieldFirst),
            "cover-pickup" => Ok(Strategy::CoverAndPickup),
            other => Err(ConfigError::Invalid(format!("unknown strategy '{other}'"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How many objects of each class the field contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectInventory {
    pub static_1pt: usize,
    pub static_2pt: usize,
    pub static_3pt: usize,
    pub moving_3pt: usize,
}

impl ObjectInventory {
    pub fn total(&self) -> usize {
        self.static_1pt + self.static_2pt + self.static_3pt + self.moving_3pt
    }
}

impl Default for ObjectInventory {
    fn default() -> Self {
        Self {
            static_1pt: 4,
            static_2pt: 3,
            static_3pt: 3,
            moving_3pt: 10,
        }
    }
}

/// Full description of one mission. The defaults reproduce the standard
/// 100 m x 60 m scenario: 4/3/3 static objects worth 1/2/3 points, ten
/// 3-point movers at 1 m/s, 10 m grid and camera footprint, 2 m/s agents,
/// 25/45 s pickups, 20 s drops, 10 s replan calculation time, and a 4 s
/// tracking timeout.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub grid: GridSpec,
    pub objects: ObjectInventory,
    pub object_speed: f64,
    pub uav_count: usize,
    pub cost: CostParams,
    /// Mission time limit (the initial budget), seconds.
    pub t0: f64,
    pub tracking_timeout: f64,
    pub calc_time: f64,
    pub p_out: f64,
    pub horizon: usize,
    pub seed: u64,
    pub strategy: Strategy,
    /// Scheduled agent failures as (agent index, time).
    pub crashes: Vec<(u32, f64)>,
    /// Fixed object positions instead of seeded-uniform placement; mostly
    /// for tests and replays of known layouts.
    pub placements: Option<Vec<crate::grid::Position>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            objects: ObjectInventory::default(),
            object_speed: 1.0,
            uav_count: 3,
            cost: CostParams::default(),
            t0: 1200.0,
            tracking_timeout: 4.0,
            calc_time: 10.0,
            p_out: 0.1,
            horizon: 3,
            seed: 0,
            strategy: Strategy::Proposed,
            crashes: Vec::new(),
            placements: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.cost
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.uav_count == 0 {
            return Err(ConfigError::Invalid("uav_count must be at least 1".into()));
        }
        if self.objects.total() == 0 {
            return Err(ConfigError::Invalid("object inventory is empty".into()));
        }
        if self.object_speed < 0.0 {
            return Err(ConfigError::Invalid(format!("object_speed {} negative", self.object_speed)));
        }
        if self.t0 < 0.0 {
            return Err(ConfigError::Invalid(format!("t0 {} negative", self.t0)));
        }
        if !(self.tracking_timeout > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "tracking_timeout {} not positive",
                self.tracking_timeout
            )));
        }
        if self.calc_time < 0.0 {
            return Err(ConfigError::Invalid(format!("calc_time {} negative", self.calc_time)));
        }
        if !(0.0..=1.0).contains(&self.p_out) {
            return Err(ConfigError::Invalid(format!("p_out {} outside [0, 1]", self.p_out)));
        }
        if self.horizon == 0 {
            return Err(ConfigError::Invalid("horizon must be at least 1".into()));
        }
        for &(agent, time) in &self.crashes {
            if agent as usize >= self.uav_count {
                return Err(ConfigError::Invalid(format!("crash names unknown agent {agent}")));
            }
            if time < 0.0 {
                return Err(ConfigError::Invalid(format!("crash time {time} negative")));
            }
        }
        if let Some(placements) = &self.placements {
            if placements.len() != self.objects.total() {
                return Err(ConfigError::Invalid(format!(
                    "{} placements for {} objects",
                    placements.len(),
                    self.objects.total()
                )));
            }
            for p in placements {
                if !self.grid.contains(*p) {
                    return Err(ConfigError::Invalid(format!("placement ({}, {}) outside arena", p.x, p.y)));
                }
            }
        }
        Ok(())
    }

    /// Schedules an agent failure.
    pub fn inject_crash(&mut self, agent: u32, time: f64) -> Result<(), ConfigError> {
        if agent as usize >= self.uav_count {
            return Err(ConfigError::Invalid(format!("crash names unknown agent {agent}")));
        }
        if time < 0.0 {
            return Err(ConfigError::Invalid(format!("crash time {time} negative")));
        }
        self.crashes.push((agent, time));
        Ok(())
    }

    /// Object classes in placement order: statics by ascending points, then
    /// the movers.
    pub fn object_classes(&self) -> Vec<ObjectClass> {
        let mut classes = Vec::with_capacity(self.objects.total());
        for _ in 0..self.objects.static_1pt {
            classes.push(ObjectClass::new(MotionKind::Static, 1).expect("valid class"));
        }
        for _ in 0..self.objects.static_2pt {
            classes.push(ObjectClass::new(MotionKind::Static, 2).expect("valid class"));
        }
        for _ in 0..self.objects.static_3pt {
            classes.push(ObjectClass::new(MotionKind::Static, 3).expect("valid class"));
        }
        for _ in 0..self.objects.moving_3pt {
            classes.push(ObjectClass::new(MotionKind::Moving, 3).expect("valid class"));
        }
        classes
    }
}

/// Everything a finished mission reports.
#[derive(Debug, Clone)]
pub struct MissionReport {
    pub final_score: u32,
    /// Score-change events as (time, score after the change).
    pub trace: Vec<(f64, u32)>,
    /// The replayable event log, one line per entry.
    pub log: Vec<String>,
    /// Time of the last processed event (at most t0).
    pub sim_end: f64,
}

impl MissionReport {
    pub fn log_text(&self) -> String {
        let mut text = self.log.join("\n");
        text.push('\n');
        text
    }

    /// Score at time `t` according to the trace.
    pub fn score_at(&self, t: f64) -> u32 {
        self.trace
            .iter()
            .take_while(|(when, _)| *when <= t)
            .last()
            .map(|(_, s)| *s)
            .unwrap_or(0)
    }
}

/// Runs one mission to completion.
pub fn run_mission(cfg: &ScenarioConfig) -> Result<MissionReport, ConfigError> {
    cfg.validate()?;
    Ok(engine::run(cfg))
}

fn run_with(cfg: &ScenarioConfig, strategy: Strategy) -> Result<MissionReport, ConfigError> {
    let mut cfg = cfg.clone();
    cfg.strategy = strategy;
    run_mission(&cfg)
}

/// Runs the mission under the random-walk benchmark policy.
pub fn run_strategy_random(cfg: &ScenarioConfig) -> Result<MissionReport, ConfigError> {
    run_with(cfg, Strategy::Random)
}

/// Runs the mission under the cover-field-first benchmark policy.
pub fn run_strategy_cover_first(cfg: &ScenarioConfig) -> Result<MissionReport, ConfigError> {
    run_with(cfg, Strategy::CoverFieldFirst)
}

/// Runs the mission under the cover-and-pickup benchmark policy.
pub fn run_strategy_cover_pickup(cfg: &ScenarioConfig) -> Result<MissionReport, ConfigError> {
    run_with(cfg, Strategy::CoverAndPickup)
}
