//! Grid-world state, its 16-channel tensor encoding, and the text/cell-mask
//! serializations.

mod ascii;
mod mask;
mod tensor;

pub use mask::{cell_mask, CellMaskGrid};
pub use tensor::{FeatureTensor, CHANNELS};

use thiserror::Error;

/// Largest supported height and width.
pub const MAX_SIZE: usize = 18;
pub const MIN_SIZE: usize = 2;
pub const MAX_MARKERS: u8 = 10;

const CELLS: usize = MAX_SIZE * MAX_SIZE;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("cannot decode tensor: {0}")]
    Decode(String),
    #[error("bad grid text at line {line}: {message}")]
    Text { line: usize, message: String },
}

/// Agent heading. Discriminants follow the tensor channel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    North = 0,
    South = 1,
    West = 2,
    East = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::South, Direction::West, Direction::East];

    pub fn left(self) -> Direction {
        match self {
            Direction::North => Direction::West,
            Direction::West => Direction::South,
            Direction::South => Direction::East,
            Direction::East => Direction::North,
        }
    }

    pub fn right(self) -> Direction {
        match self {
            Direction::North => Direction::East,
            Direction::East => Direction::South,
            Direction::South => Direction::West,
            Direction::West => Direction::North,
        }
    }

    /// Row/column step; row 0 is the top (northernmost) row.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (-1, 0),
            Direction::South => (1, 0),
            Direction::West => (0, -1),
            Direction::East => (0, 1),
        }
    }

    pub(crate) fn from_index(i: usize) -> Direction {
        Direction::ALL[i]
    }
}

/// One Karel world: dimensions, agent pose, obstacles and marker counts.
///
/// Obstacles are per-row column bitmasks; markers are a dense row-major
/// array over the full 18x18 frame, zero outside the active region.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GridState {
    pub(crate) height: u8,
    pub(crate) width: u8,
    pub(crate) agent_row: u8,
    pub(crate) agent_col: u8,
    pub(crate) dir: Direction,
    pub(crate) obstacles: [u32; MAX_SIZE],
    pub(crate) markers: [u8; CELLS],
}

#[inline]
pub(crate) fn cell_index(row: usize, col: usize) -> usize {
    row * MAX_SIZE + col
}

impl GridState {
    /// An empty world with the agent at the top-left corner facing East.
    pub fn new(height: usize, width: usize) -> Result<GridState, WorldError> {
        if !(MIN_SIZE..=MAX_SIZE).contains(&height) || !(MIN_SIZE..=MAX_SIZE).contains(&width) {
            return Err(WorldError::Invalid(format!(
                "size {height}x{width} outside {MIN_SIZE}..={MAX_SIZE}"
            )));
        }
        Ok(GridState {
            height: height as u8,
            width: width as u8,
            agent_row: 0,
            agent_col: 0,
            dir: Direction::East,
            obstacles: [0; MAX_SIZE],
            markers: [0; CELLS],
        })
    }

    pub fn height(&self) -> usize {
        self.height as usize
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn agent(&self) -> (usize, usize) {
        (self.agent_row as usize, self.agent_col as usize)
    }

    pub fn direction(&self) -> Direction {
        self.dir
    }

    pub fn in_bounds(&self, row: i32, col: i32) -> bool {
        row >= 0 && col >= 0 && row < self.height as i32 && col < self.width as i32
    }

    pub fn is_obstacle(&self, row: usize, col: usize) -> bool {
        row < MAX_SIZE && col < MAX_SIZE && self.obstacles[row] & (1 << col) != 0
    }

    pub fn markers_at(&self, row: usize, col: usize) -> u8 {
        if row < MAX_SIZE && col < MAX_SIZE {
            self.markers[cell_index(row, col)]
        } else {
            0
        }
    }

    pub fn agent_markers(&self) -> u8 {
        self.markers[cell_index(self.agent_row as usize, self.agent_col as usize)]
    }

    /// Cells holding markers, row-major.
    pub fn marker_cells(&self) -> impl Iterator<Item = ((usize, usize), u8)> + '_ {
        (0..self.height()).flat_map(move |r| {
            (0..self.width()).filter_map(move |c| {
                let m = self.markers[cell_index(r, c)];
                (m > 0).then_some(((r, c), m))
            })
        })
    }

    pub fn obstacle_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height())
            .flat_map(move |r| (0..self.width()).map(move |c| (r, c)))
            .filter(|&(r, c)| self.is_obstacle(r, c))
    }

    fn check_cell(&self, row: usize, col: usize) -> Result<(), WorldError> {
        if row < self.height() && col < self.width() {
            Ok(())
        } else {
            Err(WorldError::Invalid(format!("cell ({row}, {col}) out of bounds")))
        }
    }

    pub fn set_agent(&mut self, row: usize, col: usize, dir: Direction) -> Result<(), WorldError> {
        self.check_cell(row, col)?;
        if self.is_obstacle(row, col) {
            return Err(WorldError::Invalid(format!("agent placed on obstacle at ({row}, {col})")));
        }
        self.agent_row = row as u8;
        self.agent_col = col as u8;
        self.dir = dir;
        Ok(())
    }

    pub fn set_obstacle(&mut self, row: usize, col: usize, present: bool) -> Result<(), WorldError> {
        self.check_cell(row, col)?;
        if present {
            if self.agent() == (row, col) {
                return Err(WorldError::Invalid(format!("obstacle on agent cell ({row}, {col})")));
            }
            self.obstacles[row] |= 1 << col;
        } else {
            self.obstacles[row] &= !(1 << col);
        }
        Ok(())
    }

    pub fn set_markers(&mut self, row: usize, col: usize, count: u8) -> Result<(), WorldError> {
        self.check_cell(row, col)?;
        if count > MAX_MARKERS {
            return Err(WorldError::Invalid(format!("marker count {count} exceeds {MAX_MARKERS}")));
        }
        self.markers[cell_index(row, col)] = count;
        Ok(())
    }

    /// Re-checks every invariant. Values built through the public setters
    /// always pass; this guards deserialized or hand-assembled states.
    pub fn validate(&self) -> Result<(), WorldError> {
        let (h, w) = (self.height(), self.width());
        if !(MIN_SIZE..=MAX_SIZE).contains(&h) || !(MIN_SIZE..=MAX_SIZE).contains(&w) {
            return Err(WorldError::Invalid(format!("size {h}x{w} outside {MIN_SIZE}..={MAX_SIZE}")));
        }
        let (ar, ac) = self.agent();
        if ar >= h || ac >= w {
            return Err(WorldError::Invalid("agent out of bounds".into()));
        }
        if self.is_obstacle(ar, ac) {
            return Err(WorldError::Invalid("agent on obstacle".into()));
        }
        let row_mask = if w == 32 { u32::MAX } else { (1u32 << w) - 1 };
        for r in 0..MAX_SIZE {
            let allowed = if r < h { row_mask } else { 0 };
            if self.obstacles[r] & !allowed != 0 {
                return Err(WorldError::Invalid(format!("obstacle outside bounds in row {r}")));
            }
            for c in 0..MAX_SIZE {
                let m = self.markers[cell_index(r, c)];
                if m > MAX_MARKERS {
                    return Err(WorldError::Invalid(format!("marker count {m} at ({r}, {c})")));
                }
                if m > 0 && (r >= h || c >= w) {
                    return Err(WorldError::Invalid(format!("markers outside bounds at ({r}, {c})")));
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for GridState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GridState({})", self.to_ascii())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turning_is_cyclic() {
        for d in Direction::ALL {
            assert_eq!(d.left().left().left().left(), d);
            assert_eq!(d.left().right(), d);
            assert_eq!(d.right().left(), d);
        }
    }

    #[test]
    fn setters_enforce_invariants() {
        let mut g = GridState::new(3, 4).unwrap();
        assert!(g.set_agent(3, 0, Direction::North).is_err());
        g.set_obstacle(1, 1, true).unwrap();
        assert!(g.set_agent(1, 1, Direction::North).is_err());
        assert!(g.set_obstacle(0, 0, true).is_err());
        assert!(g.set_markers(2, 3, 11).is_err());
        g.set_markers(2, 3, 10).unwrap();
        g.validate().unwrap();
        assert!(GridState::new(1, 5).is_err());
        assert!(GridState::new(5, 19).is_err());
    }

    #[test]
    fn equality_sees_every_component() {
        let mut a = GridState::new(4, 4).unwrap();
        a.set_markers(1, 2, 3).unwrap();
        let b = a.clone();
        assert_eq!(a, b);

        let mut c = a.clone();
        c.set_markers(1, 2, 4).unwrap();
        assert_ne!(a, c);

        let mut d = a.clone();
        d.set_agent(0, 0, Direction::East.left()).unwrap();
        assert_ne!(a, d);

        let mut e = a.clone();
        e.set_obstacle(3, 3, true).unwrap();
        assert_ne!(a, e);

        assert_ne!(GridState::new(4, 5).unwrap(), GridState::new(5, 4).unwrap());
    }
}
