//! Deterministic interpreter for Karel programs with crash semantics, step
//! budgets and branch-coverage instrumentation.
//!
//! A crash (moving into a wall or obstacle, picking from an empty cell,
//! putting onto a full cell) invalidates the whole run: no output is
//! produced. Exhausting either budget yields `Timeout`.

mod coverage;
pub mod golden;

pub use coverage::{BranchOutcome, CoverageReport};

use serde::{Deserialize, Serialize};

use crate::lang::{block_sites, Action, Cond, Predicate, Program, Stmt};
use crate::sampling::IoPair;
use crate::world::{cell_index, GridState, MAX_MARKERS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExecLimits {
    /// Action budget.
    pub max_steps: u32,
    /// Condition-evaluation budget; bounds loops whose bodies execute no action.
    pub max_cond_evals: u32,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits { max_steps: 1000, max_cond_evals: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Crash {
    MoveBlocked,
    NothingToPick,
    CellFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecStatus {
    Ok,
    Crashed,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Outcome {
    Ok(GridState),
    Crashed,
    Timeout,
}

impl Outcome {
    pub fn status(&self) -> ExecStatus {
        match self {
            Outcome::Ok(_) => ExecStatus::Ok,
            Outcome::Crashed => ExecStatus::Crashed,
            Outcome::Timeout => ExecStatus::Timeout,
        }
    }

    pub fn output(&self) -> Option<&GridState> {
        match self {
            Outcome::Ok(g) => Some(g),
            _ => None,
        }
    }

    pub fn into_output(self) -> Option<GridState> {
        match self {
            Outcome::Ok(g) => Some(g),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecResult {
    pub outcome: Outcome,
    pub coverage: CoverageReport,
    pub steps_used: u32,
}

impl ExecResult {
    pub fn status(&self) -> ExecStatus {
        self.outcome.status()
    }

    pub fn output(&self) -> Option<&GridState> {
        self.outcome.output()
    }
}

/// Applies one action in place. On a crash the grid is left untouched.
#[inline]
pub(crate) fn step(grid: &mut GridState, action: Action) -> Result<(), Crash> {
    match action {
        Action::Move => {
            let (dr, dc) = grid.dir.delta();
            let r = grid.agent_row as i32 + dr;
            let c = grid.agent_col as i32 + dc;
            if !grid.in_bounds(r, c) || grid.is_obstacle(r as usize, c as usize) {
                return Err(Crash::MoveBlocked);
            }
            grid.agent_row = r as u8;
            grid.agent_col = c as u8;
        }
        Action::TurnLeft => grid.dir = grid.dir.left(),
        Action::TurnRight => grid.dir = grid.dir.right(),
        Action::PickMarker => {
            let cell = &mut grid.markers[cell_index(grid.agent_row as usize, grid.agent_col as usize)];
            if *cell == 0 {
                return Err(Crash::NothingToPick);
            }
            *cell -= 1;
        }
        Action::PutMarker => {
            let cell = &mut grid.markers[cell_index(grid.agent_row as usize, grid.agent_col as usize)];
            if *cell >= MAX_MARKERS {
                return Err(Crash::CellFull);
            }
            *cell += 1;
        }
    }
    Ok(())
}

pub fn apply_action(action: Action, grid: &GridState) -> Result<GridState, Crash> {
    let mut next = grid.clone();
    step(&mut next, action)?;
    Ok(next)
}

#[inline]
pub(crate) fn eval_predicate(pred: Predicate, grid: &GridState) -> bool {
    let clear = |dir: crate::world::Direction| {
        let (dr, dc) = dir.delta();
        let r = grid.agent_row as i32 + dr;
        let c = grid.agent_col as i32 + dc;
        grid.in_bounds(r, c) && !grid.is_obstacle(r as usize, c as usize)
    };
    match pred {
        Predicate::FrontIsClear => clear(grid.dir),
        Predicate::LeftIsClear => clear(grid.dir.left()),
        Predicate::RightIsClear => clear(grid.dir.right()),
        Predicate::MarkersPresent => grid.agent_markers() > 0,
        Predicate::NoMarkersPresent => grid.agent_markers() == 0,
    }
}

#[inline]
pub fn eval_cond(cond: Cond, grid: &GridState) -> bool {
    eval_predicate(cond.pred, grid) != cond.is_negated()
}

enum Halt {
    Crash,
    Timeout,
}

struct Machine<'c> {
    grid: GridState,
    steps: u32,
    cond_evals: u32,
    limits: ExecLimits,
    coverage: Option<&'c mut CoverageReport>,
}

impl Machine<'_> {
    fn action(&mut self, action: Action) -> Result<(), Halt> {
        if self.steps >= self.limits.max_steps {
            return Err(Halt::Timeout);
        }
        self.steps += 1;
        step(&mut self.grid, action).map_err(|_| Halt::Crash)
    }

    fn test(&mut self, cond: Cond) -> Result<bool, Halt> {
        if self.cond_evals >= self.limits.max_cond_evals {
            return Err(Halt::Timeout);
        }
        self.cond_evals += 1;
        Ok(eval_cond(cond, &self.grid))
    }

    fn hit(&mut self, site: u32, outcome: BranchOutcome) {
        if let Some(cov) = self.coverage.as_deref_mut() {
            cov.record(site, outcome);
        }
    }

    fn block(&mut self, body: &[Stmt], mut site: u32) -> Result<(), Halt> {
        let tracking = self.coverage.is_some();
        for s in body {
            self.stmt(s, site)?;
            if tracking {
                site += s.branch_sites();
            }
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt, site: u32) -> Result<(), Halt> {
        match s {
            Stmt::Action(a) => self.action(*a),
            Stmt::Repeat { count, body } => {
                for _ in 0..*count {
                    self.block(body, site)?;
                }
                Ok(())
            }
            Stmt::If { cond, body } => {
                if self.test(*cond)? {
                    self.hit(site, BranchOutcome::TrueArm);
                    self.block(body, site + 1)
                } else {
                    self.hit(site, BranchOutcome::FalseArm);
                    Ok(())
                }
            }
            Stmt::IfElse { cond, then_body, else_body } => {
                if self.test(*cond)? {
                    self.hit(site, BranchOutcome::TrueArm);
                    self.block(then_body, site + 1)
                } else {
                    self.hit(site, BranchOutcome::FalseArm);
                    let else_site = if self.coverage.is_some() {
                        site + 1 + block_sites(then_body)
                    } else {
                        0
                    };
                    self.block(else_body, else_site)
                }
            }
            Stmt::While { cond, body } => {
                if !self.test(*cond)? {
                    self.hit(site, BranchOutcome::Skipped);
                    return Ok(());
                }
                self.hit(site, BranchOutcome::Entered);
                loop {
                    self.block(body, site + 1)?;
                    if !self.test(*cond)? {
                        return Ok(());
                    }
                }
            }
        }
    }
}

fn execute(
    body: &[Stmt],
    input: &GridState,
    limits: ExecLimits,
    coverage: Option<&mut CoverageReport>,
) -> (Outcome, u32) {
    let mut m = Machine { grid: input.clone(), steps: 0, cond_evals: 0, limits, coverage };
    let outcome = match m.block(body, 0) {
        Ok(()) => Outcome::Ok(m.grid),
        Err(Halt::Crash) => Outcome::Crashed,
        Err(Halt::Timeout) => Outcome::Timeout,
    };
    (outcome, m.steps)
}

/// Runs a program and records the branch outcomes it exercised.
pub fn run(program: &Program, input: &GridState, limits: ExecLimits) -> ExecResult {
    let mut coverage = CoverageReport::default();
    let (outcome, steps_used) = execute(&program.body, input, limits, Some(&mut coverage));
    ExecResult { outcome, coverage, steps_used }
}

/// Runs without coverage bookkeeping.
pub fn run_outcome(program: &Program, input: &GridState, limits: ExecLimits) -> Outcome {
    execute(&program.body, input, limits, None).0
}

/// Runs a bare statement block (used by search code that assembles
/// programs incrementally).
pub(crate) fn run_block(body: &[Stmt], input: &GridState, limits: ExecLimits) -> Outcome {
    execute(body, input, limits, None).0
}

pub fn satisfies(program: &Program, io: &IoPair, limits: ExecLimits) -> bool {
    matches!(run_outcome(program, &io.input, limits), Outcome::Ok(ref out) if *out == io.output)
}

/// Union of the coverage of every run.
pub fn coverage_of<'a, I>(program: &Program, inputs: I, limits: ExecLimits) -> CoverageReport
where
    I: IntoIterator<Item = &'a GridState>,
{
    let mut cov = CoverageReport::default();
    for input in inputs {
        execute(&program.body, input, limits, Some(&mut cov));
    }
    cov
}
