//! Cell-mask serialization shared by dataset files and the synthesis wire
//! protocol: `{"height": h, "width": w, "cells": [u16; h*w]}`, row-major,
//! bit `i` of a cell mask is tensor channel `i`.

use serde::{Deserialize, Serialize};

use super::tensor::{MARKER_BASE, OBSTACLE};
use super::{cell_index, Direction, GridState, WorldError, MAX_MARKERS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellMaskGrid {
    pub height: usize,
    pub width: usize,
    pub cells: Vec<u16>,
}

/// The 16-bit feature mask of one in-bounds cell.
pub fn cell_mask(grid: &GridState, row: usize, col: usize) -> u16 {
    let mut mask = 0u16;
    if grid.agent() == (row, col) {
        mask |= 1 << grid.dir as u16;
    }
    if grid.is_obstacle(row, col) {
        mask |= 1 << OBSTACLE;
    }
    let m = grid.markers_at(row, col);
    if m > 0 {
        mask |= 1 << (MARKER_BASE + m as usize - 1);
    }
    mask
}

impl From<&GridState> for CellMaskGrid {
    fn from(grid: &GridState) -> CellMaskGrid {
        let mut cells = Vec::with_capacity(grid.height() * grid.width());
        for r in 0..grid.height() {
            for c in 0..grid.width() {
                cells.push(cell_mask(grid, r, c));
            }
        }
        CellMaskGrid { height: grid.height(), width: grid.width(), cells }
    }
}

impl TryFrom<CellMaskGrid> for GridState {
    type Error = WorldError;

    fn try_from(value: CellMaskGrid) -> Result<GridState, WorldError> {
        let mut grid = GridState::new(value.height, value.width)?;
        if value.cells.len() != value.height * value.width {
            return Err(WorldError::Invalid(format!(
                "expected {} cells, found {}",
                value.height * value.width,
                value.cells.len()
            )));
        }
        let mut agent = None;
        for (i, &mask) in value.cells.iter().enumerate() {
            let (r, c) = (i / value.width, i % value.width);
            let bad = |m: &str| WorldError::Invalid(format!("cell ({r}, {c}): {m}"));
            if mask & (1 << 5) != 0 {
                return Err(bad("boundary bit set inside the grid"));
            }
            let dirs = mask & 0b1111;
            if dirs != 0 {
                if dirs.count_ones() != 1 || agent.is_some() {
                    return Err(bad("more than one agent bit"));
                }
                agent = Some((r, c, Direction::from_index(dirs.trailing_zeros() as usize)));
            }
            if mask & (1 << OBSTACLE) != 0 {
                grid.obstacles[r] |= 1 << c;
            }
            let markers = mask >> MARKER_BASE;
            if markers != 0 {
                if markers.count_ones() != 1 {
                    return Err(bad("conflicting marker bits"));
                }
                let count = markers.trailing_zeros() as u8 + 1;
                debug_assert!(count <= MAX_MARKERS);
                grid.markers[cell_index(r, c)] = count;
            }
        }
        let (r, c, d) = agent.ok_or_else(|| WorldError::Invalid("no agent".into()))?;
        grid.set_agent(r, c, d)?;
        Ok(grid)
    }
}

impl Serialize for GridState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        CellMaskGrid::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GridState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<GridState, D::Error> {
        let raw = CellMaskGrid::deserialize(deserializer)?;
        GridState::try_from(raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_layout() {
        let g = GridState::from_ascii("v3 # / . 1").unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"height":2,"width":2,"cells":[258,16,0,64]}"#);
        let back: GridState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn rejects_invalid_masks() {
        let two_agents = r#"{"height":2,"width":2,"cells":[1,1,0,0]}"#;
        assert!(serde_json::from_str::<GridState>(two_agents).is_err());
        let no_agent = r#"{"height":2,"width":2,"cells":[0,0,0,0]}"#;
        assert!(serde_json::from_str::<GridState>(no_agent).is_err());
        let short = r#"{"height":2,"width":2,"cells":[1]}"#;
        assert!(serde_json::from_str::<GridState>(short).is_err());
        let two_counts = r#"{"height":2,"width":2,"cells":[1,192,0,0]}"#;
        assert!(serde_json::from_str::<GridState>(two_counts).is_err());
        let on_obstacle = r#"{"height":2,"width":2,"cells":[17,0,0,0]}"#;
        assert!(serde_json::from_str::<GridState>(on_obstacle).is_err());
    }
}
