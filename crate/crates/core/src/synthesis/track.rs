//! Incrementally maintained fingerprints and goal distances for grids
//! under execution.

use std::sync::OnceLock;

use rand::Rng;

use crate::lang::{Action, Predicate};
use crate::seed::rng;
use crate::vm::{eval_predicate, step, Crash};
use crate::world::{cell_index, GridState, MAX_MARKERS, MAX_SIZE};

const CELLS: usize = MAX_SIZE * MAX_SIZE;
const COUNTS: usize = MAX_MARKERS as usize + 1;

struct Zobrist {
    pose: Vec<u64>,
    marker: Vec<u64>,
}

fn zobrist() -> &'static Zobrist {
    static TABLE: OnceLock<Zobrist> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut r = rng(0x7a0b_7157);
        let pose = (0..CELLS * 4).map(|_| r.random()).collect();
        let marker = (0..CELLS * COUNTS)
            .map(|i| if i % COUNTS == 0 { 0 } else { r.random() })
            .collect();
        Zobrist { pose, marker }
    })
}

#[inline]
fn pose_key(g: &GridState) -> u64 {
    zobrist().pose[cell_index(g.agent_row as usize, g.agent_col as usize) * 4 + g.dir as usize]
}

#[inline]
fn marker_key(cell: usize, count: u8) -> u64 {
    zobrist().marker[cell * COUNTS + count as usize]
}

/// Fingerprint of the mutable part of a grid (pose and markers).
pub(crate) fn grid_hash(g: &GridState) -> u64 {
    let mut h = pose_key(g);
    for r in 0..g.height() {
        for c in 0..g.width() {
            let cell = cell_index(r, c);
            h ^= marker_key(cell, g.markers[cell]);
        }
    }
    h
}

/// Bit `i` set iff `Predicate::ALL[i]` holds.
#[inline]
pub(crate) fn predicate_mask(g: &GridState) -> u8 {
    let mut m = 0;
    for (i, p) in Predicate::ALL.iter().enumerate() {
        if eval_predicate(*p, g) {
            m |= 1 << i;
        }
    }
    m
}

#[inline]
fn turn_distance(a: crate::world::Direction, b: crate::world::Direction) -> u32 {
    if a == b {
        0
    } else if a.left().left() == b {
        2
    } else {
        1
    }
}

/// A grid paired with its target output.
#[derive(Clone)]
pub(crate) struct Tracked {
    pub grid: GridState,
    pub hash: u64,
    marker_diff: u32,
}

impl Tracked {
    pub fn new(grid: GridState, target: &GridState) -> Tracked {
        let mut marker_diff = 0;
        for r in 0..grid.height() {
            for c in 0..grid.width() {
                let cell = cell_index(r, c);
                marker_diff += grid.markers[cell].abs_diff(target.markers[cell]) as u32;
            }
        }
        Tracked { hash: grid_hash(&grid), grid, marker_diff }
    }

    /// Lower-bound-flavoured estimate of the actions still needed.
    #[inline]
    pub fn distance(&self, target: &GridState) -> u32 {
        let g = &self.grid;
        2 * self.marker_diff
            + g.agent_row.abs_diff(target.agent_row) as u32
            + g.agent_col.abs_diff(target.agent_col) as u32
            + turn_distance(g.dir, target.dir)
    }

    #[inline]
    pub fn step(&mut self, action: Action, target: &GridState) -> Result<(), Crash> {
        match action {
            Action::Move | Action::TurnLeft | Action::TurnRight => {
                let before = pose_key(&self.grid);
                step(&mut self.grid, action)?;
                self.hash ^= before ^ pose_key(&self.grid);
            }
            Action::PickMarker | Action::PutMarker => {
                let cell = cell_index(self.grid.agent_row as usize, self.grid.agent_col as usize);
                let old = self.grid.markers[cell];
                step(&mut self.grid, action)?;
                let new = self.grid.markers[cell];
                let t = target.markers[cell];
                self.hash ^= marker_key(cell, old) ^ marker_key(cell, new);
                self.marker_diff = self.marker_diff + new.abs_diff(t) as u32 - old.abs_diff(t) as u32;
            }
        }
        Ok(())
    }
}
