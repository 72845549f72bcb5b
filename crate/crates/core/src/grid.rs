//! Arena geometry: cell indexing, travel times, and grid adjacency.
//!
//! The arena is a rectangle divided into square cells of side
//! [`GridSpec::cell_size_m`]; one cell is exactly the ground footprint of an
//! agent's downward camera, so sensing and path planning both happen at cell
//! resolution. All operations here are pure value-level geometry.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("position ({x}, {y}) lies outside the arena")]
    OutOfArena { x: f64, y: f64 },
    #[error("cell ({col}, {row}) lies outside the grid")]
    InvalidCell { col: usize, row: usize },
    #[error("speed must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
}

/// A continuous position in arena coordinates, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A grid cell, addressed by column (x axis) and row (y axis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex {
    pub col: usize,
    pub row: usize,
}

impl CellIndex {
    pub fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

impl std::fmt::Display for CellIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.col, self.row)
    }
}

/// Neighborhood used for grid adjacency. Path planning moves are
/// axis-aligned (four-connected); the random-walk transition of moving
/// targets spreads to all eight surrounding cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Dimensions of the rectangular arena plus the drop box location.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub cell_size_m: f64,
    pub drop_box: Position,
}

impl GridSpec {
    /// Builds a spec, checking that the sides are positive integer multiples
    /// of the cell size and that the drop box lies inside the arena.
    pub fn new(width_m: f64, height_m: f64, cell_size_m: f64, drop_box: Position) -> Result<Self, GridError> {
        if !(width_m > 0.0) || !(height_m > 0.0) || !(cell_size_m > 0.0) {
            return Err(GridError::InvalidSpec(format!(
                "dimensions must be positive: {width_m} x {height_m}, cell {cell_size_m}"
            )));
        }
        for (name, side) in [("width", width_m), ("height", height_m)] {
            let ratio = side / cell_size_m;
            if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
                return Err(GridError::InvalidSpec(format!(
                    "{name} {side} is not an integer multiple of cell size {cell_size_m}"
                )));
            }
        }
        let spec = Self {
            width_m,
            height_m,
            cell_size_m,
            drop_box,
        };
        if !spec.contains(drop_box) {
            return Err(GridError::InvalidSpec(format!(
                "drop box ({}, {}) outside arena",
                drop_box.x, drop_box.y
            )));
        }
        Ok(spec)
    }

    pub fn cols(&self) -> usize {
        (self.width_m / self.cell_size_m).round() as usize
    }

    pub fn rows(&self) -> usize {
        (self.height_m / self.cell_size_m).round() as usize
    }

    pub fn cell_count(&self) -> usize {
        self.cols() * self.rows()
    }

    pub fn contains(&self, pos: Position) -> bool {
        pos.x >= 0.0 && pos.x <= self.width_m && pos.y >= 0.0 && pos.y <= self.height_m
    }

    pub fn cell_valid(&self, cell: CellIndex) -> bool {
        cell.col < self.cols() && cell.row < self.rows()
    }

    /// Iterates over all cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        let cols = self.cols();
        (0..self.cell_count()).map(move |i| CellIndex::new(i % cols, i / cols))
    }
}

impl Default for GridSpec {
    /// The 100 m x 60 m arena with 10 m cells and a central drop box.
    fn default() -> Self {
        Self::new(100.0, 60.0, 10.0, Position::new(50.0, 30.0)).expect("default spec is valid")
    }
}

/// Maps a position to the cell whose square footprint contains it. Points on
/// a shared cell boundary belong to the cell with the larger index; the outer
/// arena edge maps to the last cell.
pub fn cell_of(pos: Position, spec: &GridSpec) -> Result<CellIndex, GridError> {
    if !spec.contains(pos) {
        return Err(GridError::OutOfArena { x: pos.x, y: pos.y });
    }
    let col = ((pos.x / spec.cell_size_m).floor() as usize).min(spec.cols() - 1);
    let row = ((pos.y / spec.cell_size_m).floor() as usize).min(spec.rows() - 1);
    Ok(CellIndex::new(col, row))
}

/// Geometric center of a cell's square.
pub fn cell_center(cell: CellIndex, spec: &GridSpec) -> Result<Position, GridError> {
    if !spec.cell_valid(cell) {
        return Err(GridError::InvalidCell {
            col: cell.col,
            row: cell.row,
        });
    }
    Ok(Position::new(
        (cell.col as f64 + 0.5) * spec.cell_size_m,
        (cell.row as f64 + 0.5) * spec.cell_size_m,
    ))
}

/// Travel time between two positions at constant speed.
pub fn travel_time(from: Position, to: Position, speed: f64) -> Result<f64, GridError> {
    if !(speed > 0.0) {
        return Err(GridError::NonPositiveSpeed(speed));
    }
    Ok(from.distance_to(to) / speed)
}

/// All in-bounds neighbors of a cell under the requested connectivity,
/// ordered by (col, row).
pub fn neighbors(cell: CellIndex, spec: &GridSpec, connectivity: Connectivity) -> Result<Vec<CellIndex>, GridError> {
    if !spec.cell_valid(cell) {
        return Err(GridError::InvalidCell {
            col: cell.col,
            row: cell.row,
        });
    }
    let deltas: &[(i64, i64)] = match connectivity {
        Connectivity::Four => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
        Connectivity::Eight => &[
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ],
    };
    let mut out = Vec::with_capacity(deltas.len());
    for &(dc, dr) in deltas {
        let col = cell.col as i64 + dc;
        let row = cell.row as i64 + dr;
        if col >= 0 && row >= 0 && (col as usize) < spec.cols() && (row as usize) < spec.rows() {
            out.push(CellIndex::new(col as usize, row as usize));
        }
    }
    out.sort();
    Ok(out)
}
