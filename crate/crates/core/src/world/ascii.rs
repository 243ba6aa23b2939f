//! Compact text form used by golden files, logs and the CLI.
//!
//! Cells are space separated, rows separated by `/` or newlines:
//! `.` empty, `#` obstacle, `1`..`10` marker count, `^ v < >` the agent
//! facing North/South/West/East, optionally followed by its cell's marker
//! count (`>2`).

use super::{Direction, GridState, WorldError};

fn agent_glyph(dir: Direction) -> char {
    match dir {
        Direction::North => '^',
        Direction::South => 'v',
        Direction::West => '<',
        Direction::East => '>',
    }
}

impl GridState {
    pub fn to_ascii(&self) -> String {
        let mut rows = Vec::with_capacity(self.height());
        for r in 0..self.height() {
            let cells: Vec<String> = (0..self.width())
                .map(|c| {
                    let m = self.markers_at(r, c);
                    if (r, c) == self.agent() {
                        let g = agent_glyph(self.dir);
                        if m > 0 { format!("{g}{m}") } else { g.to_string() }
                    } else if self.is_obstacle(r, c) {
                        "#".to_string()
                    } else if m > 0 {
                        m.to_string()
                    } else {
                        ".".to_string()
                    }
                })
                .collect();
            rows.push(cells.join(" "));
        }
        rows.join(" / ")
    }

    pub fn from_ascii(text: &str) -> Result<GridState, WorldError> {
        let rows: Vec<Vec<&str>> = text
            .split(['/', '\n'])
            .map(str::trim)
            .filter(|r| !r.is_empty())
            .map(|r| r.split_whitespace().collect())
            .collect();
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        let mut grid = GridState::new(height, width)
            .map_err(|e| WorldError::Text { line: 0, message: e.to_string() })?;
        let mut agent = None;
        for (r, row) in rows.iter().enumerate() {
            let bad = |message: String| WorldError::Text { line: r, message };
            if row.len() != width {
                return Err(bad(format!("row has {} cells, expected {width}", row.len())));
            }
            for (c, cell) in row.iter().enumerate() {
                let mut chars = cell.chars();
                let first = chars.next().unwrap_or('.');
                let dir = match first {
                    '^' => Some(Direction::North),
                    'v' => Some(Direction::South),
                    '<' => Some(Direction::West),
                    '>' => Some(Direction::East),
                    _ => None,
                };
                let count_text = if dir.is_some() { chars.as_str() } else { cell };
                if let Some(d) = dir {
                    if agent.replace((r, c, d)).is_some() {
                        return Err(bad("more than one agent".into()));
                    }
                }
                match count_text {
                    "" | "." => {}
                    "#" if dir.is_none() => {
                        grid.obstacles[r] |= 1 << c;
                    }
                    n => {
                        let m: u8 = n.parse().map_err(|_| bad(format!("bad cell `{cell}`")))?;
                        grid.set_markers(r, c, m).map_err(|e| bad(e.to_string()))?;
                    }
                }
            }
        }
        let (r, c, d) = agent.ok_or(WorldError::Text { line: 0, message: "no agent".into() })?;
        grid.set_agent(r, c, d)
            .map_err(|e| WorldError::Text { line: r, message: e.to_string() })?;
        Ok(grid)
    }
}

impl std::fmt::Display for GridState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.height() {
            if r > 0 {
                writeln!(f)?;
            }
            let line = self.to_ascii();
            f.write_str(line.split(" / ").nth(r).unwrap_or(""))?;
        }
        Ok(())
    }
}
