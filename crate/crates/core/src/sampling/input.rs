use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{IoPair, SamplingError};
use crate::lang::Program;
use crate::vm::{run, run_outcome, CoverageReport, ExecLimits, Outcome};
use crate::world::{Direction, GridState, MAX_MARKERS, MAX_SIZE, MIN_SIZE};

/// Attempts allowed per requested valid input.
pub const ATTEMPTS_PER_INPUT: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDistribution {
    pub height_min: usize,
    pub height_max: usize,
    pub width_min: usize,
    pub width_max: usize,
    pub obstacle_prob: f64,
    pub marker_prob: f64,
    pub marker_count_min: u8,
    pub marker_count_max: u8,
}

impl Default for InputDistribution {
    fn default() -> Self {
        InputDistribution {
            height_min: 2,
            height_max: 16,
            width_min: 2,
            width_max: 16,
            obstacle_prob: 0.1,
            marker_prob: 0.1,
            marker_count_min: 1,
            marker_count_max: 9,
        }
    }
}

impl InputDistribution {
    pub fn validate(&self) -> Result<(), SamplingError> {
        let bad = |m: &str| Err(SamplingError::Distribution(m.to_string()));
        let size_ok = |lo: usize, hi: usize| MIN_SIZE <= lo && lo <= hi && hi <= MAX_SIZE;
        if !size_ok(self.height_min, self.height_max) || !size_ok(self.width_min, self.width_max) {
            return bad("grid size range outside 2..=18");
        }
        if !(0.0..=1.0).contains(&self.obstacle_prob) || !(0.0..=1.0).contains(&self.marker_prob) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.obstacle_prob >= 1.0 {
            return bad("obstacle probability 1 leaves no room for the agent");
        }
        if self.marker_count_min == 0
            || self.marker_count_min > self.marker_count_max
            || self.marker_count_max > MAX_MARKERS
        {
            return bad("marker count range outside 1..=10");
        }
        Ok(())
    }
}

/// Draws one grid. Obstacles and markers are independent per cell
/// (markers only on free cells); the agent pose is uniform over free
/// cells and the four directions.
pub fn sample_grid<R: Rng + ?Sized>(dist: &InputDistribution, rng: &mut R) -> GridState {
    loop {
        let h = rng.random_range(dist.height_min..=dist.height_max);
        let w = rng.random_range(dist.width_min..=dist.width_max);
        let mut grid = GridState::new(h, w).expect("validated size range");
        let mut free = Vec::with_capacity(h * w);
        for r in 0..h {
            for c in 0..w {
                if rng.random_bool(dist.obstacle_prob) {
                    grid.obstacles[r] |= 1 << c;
                    continue;
                }
                free.push((r, c));
                if rng.random_bool(dist.marker_prob) {
                    let m = rng.random_range(dist.marker_count_min..=dist.marker_count_max);
                    grid.set_markers(r, c, m).expect("validated marker range");
                }
            }
        }
        if free.is_empty() {
            continue;
        }
        let (r, c) = free[rng.random_range(0..free.len())];
        let dir = Direction::ALL[rng.random_range(0..4)];
        grid.set_agent(r, c, dir).expect("free cell");
        return grid;
    }
}

/// Lazily draws inputs and keeps those on which the program runs to
/// completion. Crafted and random specifications read the same stream, so
/// for a given seed the random spec is a prefix of what crafting sees.
pub struct ValidInputStream<'a, R> {
    program: &'a Program,
    dist: &'a InputDistribution,
    limits: ExecLimits,
    rng: R,
    attempts: usize,
}

impl<'a, R: Rng> ValidInputStream<'a, R> {
    pub fn new(program: &'a Program, dist: &'a InputDistribution, rng: R, limits: ExecLimits) -> Self {
        ValidInputStream { program, dist, limits, rng, attempts: 0 }
    }

    pub fn attempts(&self) -> usize {
        self.attempts
    }

    /// Next valid pair, giving up once `cap` grids have been drawn in total.
    pub fn next_pair(&mut self, cap: usize) -> Option<IoPair> {
        while self.attempts < cap {
            self.attempts += 1;
            let input = sample_grid(self.dist, &mut self.rng);
            if let Outcome::Ok(output) = run_outcome(self.program, &input, self.limits) {
                return Some(IoPair { input, output });
            }
        }
        None
    }

    /// Like [`next_pair`](Self::next_pair), also returning the run's coverage.
    pub fn next_covered(&mut self, cap: usize) -> Option<(IoPair, CoverageReport)> {
        while self.attempts < cap {
            self.attempts += 1;
            let input = sample_grid(self.dist, &mut self.rng);
            let result = run(self.program, &input, self.limits);
            if let Outcome::Ok(output) = result.outcome {
                return Some((IoPair { input, output }, result.coverage));
            }
        }
        None
    }
}

pub fn sample_valid_inputs<R: Rng>(
    program: &Program,
    dist: &InputDistribution,
    count: usize,
    rng: R,
    limits: ExecLimits,
) -> Result<Vec<IoPair>, SamplingError> {
    sample_valid_inputs_capped(program, dist, count, rng, limits, ATTEMPTS_PER_INPUT * count)
}

pub fn sample_valid_inputs_capped<R: Rng>(
    program: &Program,
    dist: &InputDistribution,
    count: usize,
    rng: R,
    limits: ExecLimits,
    cap: usize,
) -> Result<Vec<IoPair>, SamplingError> {
    dist.validate()?;
    let mut stream = ValidInputStream::new(program, dist, rng, limits);
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        match stream.next_pair(cap) {
            Some(p) => pairs.push(p),
            None => {
                return Err(SamplingError::Exhausted {
                    wanted: count,
                    found: pairs.len(),
                    attempts: stream.attempts(),
                })
            }
        }
    }
    Ok(pairs)
}
