//! Per-object probability grids with Bayesian prediction and measurement
//! updates.
//!
//! Each undelivered object has its own grid holding the probability that the
//! object is in each arena cell. Static objects keep their distribution
//! unchanged under prediction; moving objects spread mass to the eight
//! surrounding cells as a random walk with a reflecting arena boundary.
//! Measurements use the perfect-detection sensor model: an object inside an
//! observed cell is always detected, so a non-detection zeroes the observed
//! cells and a detection collapses the grid to a point mass.
//!
//! Grids are immutable snapshots; every update returns a new grid.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::grid::{CellIndex, GridSpec};
use crate::ids::ObjectId;

#[derive(Debug, Error, PartialEq)]
pub enum BeliefError {
    #[error("transition expects a {expected:?} grid, got {actual:?}")]
    KindMismatch { expected: MotionKind, actual: MotionKind },
    #[error("observation contains no cells")]
    EmptyObservation,
    #[error("detection cell {0} not among the observed cells")]
    DetectionOutsideFov(CellIndex),
    #[error("detection is for object {detected}, grid tracks object {tracked}")]
    WrongObject { detected: ObjectId, tracked: ObjectId },
    #[error("invalid motion params: {0}")]
    InvalidParams(String),
    #[error("malformed grid text: {0}")]
    Parse(String),
}

/// Whether an object holds still or performs a random walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MotionKind {
    Static,
    Moving,
}

/// Random-walk parameters: the probability mass leaving a cell per predict
/// step and the step interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionParams {
    pub p_out: f64,
    pub step_dt: f64,
}

impl MotionParams {
    pub fn new(p_out: f64, step_dt: f64) -> Result<Self, BeliefError> {
        if !(0.0..=1.0).contains(&p_out) {
            return Err(BeliefError::InvalidParams(format!("p_out {p_out} outside [0, 1]")));
        }
        if !(step_dt > 0.0) {
            return Err(BeliefError::InvalidParams(format!("step_dt {step_dt} not positive")));
        }
        Ok(Self { p_out, step_dt })
    }
}

/// One sensing pass: the cells inside some agent's field of view and the
/// objects detected there.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    observed_cells: BTreeSet<CellIndex>,
    detections: BTreeMap<ObjectId, CellIndex>,
    pub time: f64,
}

impl Observation {
    pub fn new(
        observed_cells: BTreeSet<CellIndex>,
        detections: BTreeMap<ObjectId, CellIndex>,
        time: f64,
    ) -> Result<Self, BeliefError> {
        for cell in detections.values() {
            if !observed_cells.contains(cell) {
                return Err(BeliefError::DetectionOutsideFov(*cell));
            }
        }
        Ok(Self {
            observed_cells,
            detections,
            time,
        })
    }

    pub fn observed_cells(&self) -> &BTreeSet<CellIndex> {
        &self.observed_cells
    }

    pub fn detection_of(&self, object: ObjectId) -> Option<CellIndex> {
        self.detections.get(&object).copied()
    }
}

/// Discrete probability distribution over arena cells for one object.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefGrid {
    pub object_id: ObjectId,
    pub kind: MotionKind,
    cols: usize,
    rows: usize,
    probs: Vec<f64>,
}

impl BeliefGrid {
    /// Uniform prior over the whole arena.
    pub fn uniform(object_id: ObjectId, kind: MotionKind, spec: &GridSpec) -> Self {
        let n = spec.cell_count();
        Self {
            object_id,
            kind,
            cols: spec.cols(),
            rows: spec.rows(),
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// All mass concentrated in a single cell.
    pub fn point_mass(object_id: ObjectId, kind: MotionKind, spec: &GridSpec, cell: CellIndex) -> Self {
        let mut probs = vec![0.0; spec.cell_count()];
        probs[cell.row * spec.cols() + cell.col] = 1.0;
        Self {
            object_id,
            kind,
            cols: spec.cols(),
            rows: spec.rows(),
            probs,
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn prob_at(&self, cell: CellIndex) -> f64 {
        self.probs[cell.row * self.cols + cell.col]
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Cell with the highest probability; ties break toward the smaller
    /// (col, row) index.
    pub fn argmax_cell(&self) -> CellIndex {
        let mut best = CellIndex::new(0, 0);
        let mut best_p = f64::NEG_INFINITY;
        for col in 0..self.cols {
            for row in 0..self.rows {
                let cell = CellIndex::new(col, row);
                let p = self.prob_at(cell);
                if p > best_p {
                    best_p = p;
                    best = cell;
                }
            }
        }
        best
    }

    /// Row-major flat text: one line per row, one float per cell.
    pub fn to_flat_text(&self) -> String {
        let mut out = String::new();
        for row in 0..self.rows {
            for col in 0..self.cols {
                if col > 0 {
                    out.push(' ');
                }
                out.push_str(&format!("{}", self.probs[row * self.cols + col]));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_flat_text(
        object_id: ObjectId,
        kind: MotionKind,
        cols: usize,
        rows: usize,
        text: &str,
    ) -> Result<Self, BeliefError> {
        let mut probs = Vec::with_capacity(cols * rows);
        for (i, line) in text.lines().enumerate() {
            let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let row = row.map_err(|e| BeliefError::Parse(format!("row {i}: {e}")))?;
            if row.len() != cols {
                return Err(BeliefError::Parse(format!("row {i}: expected {cols} values, got {}", row.len())));
            }
            probs.extend(row);
        }
        if probs.len() != cols * rows {
            return Err(BeliefError::Parse(format!(
                "expected {} values, got {}",
                cols * rows,
                probs.len()
            )));
        }
        Ok(Self {
            object_id,
            kind,
            cols,
            rows,
            probs,
        })
    }

    fn with_probs(&self, probs: Vec<f64>) -> Self {
        Self {
            object_id: self.object_id,
            kind: self.kind,
            cols: self.cols,
            rows: self.rows,
            probs,
        }
    }
}

/// Identity transition for static objects.
pub fn predict_static(b: &BeliefGrid) -> Result<BeliefGrid, BeliefError> {
    if b.kind != MotionKind::Static {
        return Err(BeliefError::KindMismatch {
            expected: MotionKind::Static,
            actual: b.kind,
        });
    }
    Ok(b.clone())
}

/// Random-walk transition for moving objects: each cell keeps `1 - p_out` of
/// its mass and sends `p_out / 8` to every surrounding cell. Mass that would
/// cross the arena boundary stays in the source cell, so the total is
/// conserved exactly.
pub fn predict_moving(b: &BeliefGrid, params: &MotionParams) -> Result<BeliefGrid, BeliefError> {
    if b.kind != MotionKind::Moving {
        return Err(BeliefError::KindMismatch {
            expected: MotionKind::Moving,
            actual: b.kind,
        });
    }
    let share = params.p_out / 8.0;
    let (cols, rows) = (b.cols as i64, b.rows as i64);
    let mut next = vec![0.0; b.probs.len()];
    for row in 0..rows {
        for col in 0..cols {
            let src = (row * cols + col) as usize;
            let mass = b.probs[src];
            if mass == 0.0 {
                continue;
            }
            let mut kept = 1.0 - params.p_out;
            for dr in -1..=1i64 {
                for dc in -1..=1i64 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nc, nr) = (col + dc, row + dr);
                    if nc >= 0 && nr >= 0 && nc < cols && nr < rows {
                        next[(nr * cols + nc) as usize] += mass * share;
                    } else {
                        kept += share;
                    }
                }
            }
            next[src] += mass * kept;
        }
    }
    Ok(b.with_probs(next))
}

/// Applies one observation under the perfect-detection model.
///
/// A detection collapses the grid to a point mass at the detection cell. A
/// non-detection zeroes every observed cell and renormalizes; if that removes
/// all mass, the grid resets to uniform over the unobserved cells (or over
/// all cells when everything was observed).
pub fn measurement_update(b: &BeliefGrid, obs: &Observation) -> Result<BeliefGrid, BeliefError> {
    if obs.observed_cells.is_empty() {
        return Err(BeliefError::EmptyObservation);
    }
    for &id in obs.detections.keys() {
        if id != b.object_id {
            return Err(BeliefError::WrongObject {
                detected: id,
                tracked: b.object_id,
            });
        }
    }
    if let Some(cell) = obs.detection_of(b.object_id) {
        let mut probs = vec![0.0; b.probs.len()];
        probs[cell.row * b.cols + cell.col] = 1.0;
        return Ok(b.with_probs(probs));
    }
    let mut probs = b.probs.clone();
    for cell in &obs.observed_cells {
        probs[cell.row * b.cols + cell.col] = 0.0;
    }
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        for p in &mut probs {
            *p /= total;
        }
        return Ok(b.with_probs(probs));
    }
    // Everything we knew has been ruled out; fall back to uniform over the
    // cells not just observed, or over the whole arena if none remain.
    let observed: Vec<bool> = {
        let mut mask = vec![false; probs.len()];
        for cell in &obs.observed_cells {
            mask[cell.row * b.cols + cell.col] = true;
        }
        mask
    };
    let unobserved = observed.iter().filter(|&&m| !m).count();
    if unobserved > 0 {
        let p = 1.0 / unobserved as f64;
        for (slot, seen) in probs.iter_mut().zip(observed.iter()) {
            *slot = if *seen { 0.0 } else { p };
        }
    } else {
        let p = 1.0 / probs.len() as f64;
        probs.fill(p);
    }
    Ok(b.with_probs(probs))
}

/// Probability that the object is inside the given cell set.
pub fn mass_in(b: &BeliefGrid, cells: &BTreeSet<CellIndex>) -> f64 {
    cells.iter().map(|c| b.prob_at(*c)).sum()
}
