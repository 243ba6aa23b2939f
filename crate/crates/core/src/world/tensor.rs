use super::{cell_index, Direction, GridState, WorldError, MAX_MARKERS, MAX_SIZE, MIN_SIZE};

/// Channels per cell: 0-3 agent N/S/W/E, 4 obstacle, 5 grid boundary,
/// 6-15 marker counts 1-10.
pub const CHANNELS: usize = 16;

pub(crate) const OBSTACLE: usize = 4;
pub(crate) const BOUNDARY: usize = 5;
pub(crate) const MARKER_BASE: usize = 6;

/// Boolean occupancy tensor of shape 16 x 18 x 18, stored as one column
/// bitmask per (channel, row).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FeatureTensor {
    bits: [[u32; MAX_SIZE]; CHANNELS],
}

impl std::fmt::Debug for FeatureTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeatureTensor").field("set_bits", &self.count_set()).finish()
    }
}

impl Default for FeatureTensor {
    fn default() -> Self {
        FeatureTensor::zeros()
    }
}

impl FeatureTensor {
    pub const SHAPE: (usize, usize, usize) = (CHANNELS, MAX_SIZE, MAX_SIZE);

    pub fn zeros() -> FeatureTensor {
        FeatureTensor { bits: [[0; MAX_SIZE]; CHANNELS] }
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> bool {
        self.bits[channel][row] & (1 << col) != 0
    }

    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: bool) {
        if value {
            self.bits[channel][row] |= 1 << col;
        } else {
            self.bits[channel][row] &= !(1 << col);
        }
    }

    /// Channels set at one cell, ascending.
    pub fn channels_at(&self, row: usize, col: usize) -> Vec<usize> {
        (0..CHANNELS).filter(|&ch| self.get(ch, row, col)).collect()
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().flatten().map(|m| m.count_ones() as usize).sum()
    }

    /// Flattened channel-major `[channel][row][col]` view, for model inputs.
    pub fn to_dense(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CHANNELS * MAX_SIZE * MAX_SIZE);
        for ch in 0..CHANNELS {
            for r in 0..MAX_SIZE {
                for c in 0..MAX_SIZE {
                    out.push(self.get(ch, r, c) as u8);
                }
            }
        }
        out
    }

    pub fn encode(grid: &GridState) -> FeatureTensor {
        let mut t = FeatureTensor::zeros();
        for r in 0..MAX_SIZE {
            for c in 0..MAX_SIZE {
                if r >= grid.height() || c >= grid.width() {
                    t.set(BOUNDARY, r, c, true);
                    continue;
                }
                if grid.is_obstacle(r, c) {
                    t.set(OBSTACLE, r, c, true);
                }
                let m = grid.markers[cell_index(r, c)];
                if m > 0 {
                    t.set(MARKER_BASE + m as usize - 1, r, c, true);
                }
            }
        }
        let (ar, ac) = grid.agent();
        t.set(grid.dir as usize, ar, ac, true);
        t
    }

    pub fn decode(&self) -> Result<GridState, WorldError> {
        let err = |m: String| Err(WorldError::Decode(m));
        // The active region is the top-left rectangle free of boundary bits.
        let height = (0..MAX_SIZE).take_while(|&r| !self.get(BOUNDARY, r, 0)).count();
        let width = (0..MAX_SIZE).take_while(|&c| !self.get(BOUNDARY, 0, c)).count();
        if height < MIN_SIZE || width < MIN_SIZE {
            return err(format!("active region {height}x{width} too small"));
        }
        let mut grid = GridState::new(height, width)?;
        let mut agent = None;
        for r in 0..MAX_SIZE {
            for c in 0..MAX_SIZE {
                let inside = r < height && c < width;
                let chans = self.channels_at(r, c);
                if !inside {
                    if chans != [BOUNDARY] {
                        return err(format!("padding cell ({r}, {c}) has channels {chans:?}"));
                    }
                    continue;
                }
                let mut marker = None;
                for ch in chans {
                    match ch {
                        0..=3 => {
                            if agent.replace((r, c, Direction::from_index(ch))).is_some() {
                                return err("more than one agent bit".into());
                            }
                        }
                        OBSTACLE => grid.obstacles[r] |= 1 << c,
                        BOUNDARY => return err(format!("boundary bit inside region at ({r}, {c})")),
                        _ => {
                            let count = (ch - MARKER_BASE + 1) as u8;
                            if marker.replace(count).is_some() {
                                return err(format!("conflicting marker channels at ({r}, {c})"));
                            }
                        }
                    }
                }
                if let Some(m) = marker {
                    debug_assert!(m <= MAX_MARKERS);
                    grid.markers[cell_index(r, c)] = m;
                }
            }
        }
        let Some((r, c, d)) = agent else {
            return err("no agent bit".into());
        };
        if grid.is_obstacle(r, c) {
            return err(format!("agent on obstacle at ({r}, {c})"));
        }
        grid.agent_row = r as u8;
        grid.agent_col = c as u8;
        grid.dir = d;
        Ok(grid)
    }
}
