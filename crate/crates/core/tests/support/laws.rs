//! Semantics-preserving rewrites. Each law maps a program to one that must
//! behave identically on every grid.

use ireen::sampling::{sample_grid, sample_program, InputDistribution, ProgramDistribution};
use ireen::seed::rng;
use ireen::vm::run_outcome;
use ireen::{Action, ExecLimits, Program, Stmt};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    /// `ifelse(c): A else: B` == `ifelse(not c): B else: A`
    IfElseSwap,
    /// `repeat(n): B` == `B; repeat(n - 1): B`
    RepeatUnroll,
    /// `while(c): B` == `if(c): { B; while(c): B }`
    WhileUnroll,
    /// `turnLeft()` four times is the identity.
    TurnLeft4,
}

impl Law {
    pub const ALL: [Law; 4] = [Law::IfElseSwap, Law::RepeatUnroll, Law::WhileUnroll, Law::TurnLeft4];

    pub fn name(self) -> &'static str {
        match self {
            Law::IfElseSwap => "ifelse-negation swap",
            Law::RepeatUnroll => "repeat unrolling",
            Law::WhileUnroll => "while one-step unrolling",
            Law::TurnLeft4 => "turnLeft^4 identity",
        }
    }

    /// Rewrites every applicable site; `None` when the program has none.
    pub fn apply<R: Rng>(self, program: &Program, rng: &mut R) -> Option<Program> {
        let body = match self {
            Law::TurnLeft4 => {
                let mut body = program.body.clone();
                let at = rng.random_range(0..=body.len());
                for _ in 0..4 {
                    body.insert(at, Stmt::Action(Action::TurnLeft));
                }
                body
            }
            _ => {
                let mut hits = 0;
                let body = rewrite(&program.body, self, &mut hits);
                if hits == 0 {
                    return None;
                }
                body
            }
        };
        Some(Program::new(body).expect("rewrites keep programs valid"))
    }
}

fn rewrite(block: &[Stmt], law: Law, hits: &mut usize) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(block.len());
    for stmt in block {
        match (law, stmt) {
            (Law::IfElseSwap, Stmt::IfElse { cond, then_body, else_body }) => {
                *hits += 1;
                out.push(Stmt::IfElse {
                    cond: cond.not(),
                    then_body: rewrite(else_body, law, hits),
                    else_body: rewrite(then_body, law, hits),
                });
            }
            (Law::RepeatUnroll, Stmt::Repeat { count, body }) if *count > 0 => {
                *hits += 1;
                let body = rewrite(body, law, hits);
                out.extend(body.iter().cloned());
                out.push(Stmt::Repeat { count: count - 1, body });
            }
            (Law::WhileUnroll, Stmt::While { cond, body }) => {
                *hits += 1;
                let body = rewrite(body, law, hits);
                let mut then_body = body.clone();
                then_body.push(Stmt::While { cond: *cond, body });
                out.push(Stmt::If { cond: *cond, body: then_body });
            }
            (_, Stmt::Action(a)) => out.push(Stmt::Action(*a)),
            (_, Stmt::Repeat { count, body }) => out.push(Stmt::Repeat { count: *count, body: rewrite(body, law, hits) }),
            (_, Stmt::While { cond, body }) => out.push(Stmt::While { cond: *cond, body: rewrite(body, law, hits) }),
            (_, Stmt::If { cond, body }) => out.push(Stmt::If { cond: *cond, body: rewrite(body, law, hits) }),
            (_, Stmt::IfElse { cond, then_body, else_body }) => out.push(Stmt::IfElse {
                cond: *cond,
                then_body: rewrite(then_body, law, hits),
                else_body: rewrite(else_body, law, hits),
            }),
        }
    }
    out
}

/// Checks `law` on `pairs` random (program, grid) pairs where it applies.
/// Returns the violations found, described.
pub fn check_law(law: Law, pairs: usize, seed: u64) -> Vec<String> {
    let limits = ExecLimits::default();
    let (programs, grids) = (ProgramDistribution::default(), InputDistribution::default());
    let mut r = rng(seed);
    let mut violations = Vec::new();
    let mut checked = 0;
    while checked < pairs {
        let program = sample_program(&programs, &mut r);
        let Some(rewritten) = law.apply(&program, &mut r) else { continue };
        let grid = sample_grid(&grids, &mut r);
        checked += 1;
        let before = run_outcome(&program, &grid, limits);
        let mut after = run_outcome(&rewritten, &grid, limits);
        if law == Law::TurnLeft4 && before != after {
            // Four extra actions may cross the step budget.
            let roomier = ExecLimits { max_steps: limits.max_steps + 4, ..limits };
            after = run_outcome(&rewritten, &grid, roomier);
        }
        if before != after {
            violations.push(format!(
                "{}: {} vs {} on\n{}",
                law.name(),
                program.emit(),
                rewritten.emit(),
                grid.to_ascii()
            ));
        }
    }
    violations
}
