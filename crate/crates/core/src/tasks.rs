//! Task definitions: object classes, rewards, and pickup-and-delivery costs.
//!
//! A task is the job of picking up one located object and depositing it in
//! the drop box. Its time cost has four terms: approach flight, pickup,
//! transfer flight, and drop. The approach term depends on where the agent
//! starts, which is why the planner prices each task twice — once from the
//! drop box (for successive pickups) and once from the agent's current
//! position (for the first pickup).

use thiserror::Error;

use crate::belief::MotionKind;
use crate::grid::{travel_time, GridSpec, Position};
use crate::ids::TaskId;

#[derive(Debug, Error, PartialEq)]
pub enum TaskError {
    #[error("invalid object class: {0}")]
    InvalidClass(String),
    #[error("invalid cost params: {0}")]
    InvalidParams(String),
}

/// Score class of an object. Moving objects are always worth 3 points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectClass {
    pub kind: MotionKind,
    pub points: u32,
}

impl ObjectClass {
    pub fn new(kind: MotionKind, points: u32) -> Result<Self, TaskError> {
        if !(1..=3).contains(&points) {
            return Err(TaskError::InvalidClass(format!("points {points} outside 1..=3")));
        }
        if kind == MotionKind::Moving && points != 3 {
            return Err(TaskError::InvalidClass(format!("moving objects are worth 3 points, got {points}")));
        }
        Ok(Self { kind, points })
    }
}

/// Flight speed and the per-class pickup and drop durations.
#[derive(Debug, Clone, PartialEq)]
pub struct CostParams {
    pub uav_speed: f64,
    pub t_pick_static: f64,
    pub t_pick_moving: f64,
    pub t_drop_static: f64,
    pub t_drop_moving: f64,
}

impl CostParams {
    pub fn validate(&self) -> Result<(), TaskError> {
        for (name, v) in [
            ("uav_speed", self.uav_speed),
            ("t_pick_static", self.t_pick_static),
            ("t_pick_moving", self.t_pick_moving),
            ("t_drop_static", self.t_drop_static),
            ("t_drop_moving", self.t_drop_moving),
        ] {
            if !(v > 0.0) {
                return Err(TaskError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn t_pick(&self, kind: MotionKind) -> f64 {
        match kind {
            MotionKind::Static => self.t_pick_static,
            MotionKind::Moving => self.t_pick_moving,
        }
    }

    pub fn t_drop(&self, kind: MotionKind) -> f64 {
        match kind {
            MotionKind::Static => self.t_drop_static,
            MotionKind::Moving => self.t_drop_moving,
        }
    }
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            uav_speed: 2.0,
            t_pick_static: 25.0,
            t_pick_moving: 45.0,
            t_drop_static: 20.0,
            t_drop_moving: 20.0,
        }
    }
}

/// A located object the team knows about. `est_pos` is the center of the
/// detection cell; for moving objects the estimate goes stale and the task
/// expires once the object has been unobserved longer than the tracking
/// timeout.
#[derive(Debug, Clone, PartialEq)]
pub struct FoundTask {
    pub task_id: TaskId,
    pub class: ObjectClass,
    pub est_pos: Position,
    pub last_seen: f64,
    pub reward: u32,
}

impl FoundTask {
    pub fn new(task_id: TaskId, class: ObjectClass, est_pos: Position, last_seen: f64) -> Self {
        Self {
            task_id,
            class,
            est_pos,
            last_seen,
            reward: class.points,
        }
    }

    /// Moving tasks expire when unobserved for longer than `timeout`;
    /// static tasks never do.
    pub fn is_expired(&self, now: f64, timeout: f64) -> bool {
        self.class.kind == MotionKind::Moving && now - self.last_seen > timeout
    }
}

/// Pickup-and-delivery time cost starting from `pos`:
/// approach + pickup + transfer to the drop box + drop.
///
/// With `pos` at the drop box this is the successive-pickup cost; with `pos`
/// at the agent's current position it is the first-pickup cost. The caller
/// is responsible for filtering expired moving tasks (see [`expire_moving`]).
pub fn task_cost_from(pos: Position, task: &FoundTask, params: &CostParams, grid: &GridSpec) -> f64 {
    let approach = travel_time(pos, task.est_pos, params.uav_speed).expect("validated speed");
    let transfer = travel_time(task.est_pos, grid.drop_box, params.uav_speed).expect("validated speed");
    approach + params.t_pick(task.class.kind) + transfer + params.t_drop(task.class.kind)
}

/// Drops moving tasks whose last observation is older than `timeout`.
pub fn expire_moving(tasks: &[FoundTask], now: f64, timeout: f64) -> Vec<FoundTask> {
    tasks
        .iter()
        .filter(|t| !t.is_expired(now, timeout))
        .cloned()
        .collect()
}
