//! Exhaustive enumeration oracle: is there a program within a syntactic
//! bound that satisfies every given pair?
//!
//! Programs are built one top-level statement at a time from a library of
//! every statement within the bound. Prefixes that reach the same grids on
//! every input are interchangeable, so only the first (shortest) of each is
//! extended. Each statement runs with a fresh execution budget; a witness
//! is re-checked with the whole-program budget before it is returned.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::lang::{Action, Cond, Predicate, Program, Stmt};
use crate::sampling::IoPair;
use crate::synthesis::track::grid_hash;
use crate::vm::{run_block, satisfies, ExecLimits, Outcome};
use crate::world::GridState;

/// Syntactic bound: statement nesting depth (an action has depth 1), the
/// longest statement list, and the repeat counts allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBound {
    pub max_depth: usize,
    pub max_body_len: usize,
    pub repeat_min: u8,
    pub repeat_max: u8,
}

impl OracleBound {
    pub fn new(max_depth: usize, max_body_len: usize) -> OracleBound {
        OracleBound { max_depth, max_body_len, repeat_min: 2, repeat_max: 9 }
    }

    pub fn contains(&self, program: &Program) -> bool {
        fn block_ok(block: &[Stmt], b: &OracleBound) -> bool {
            !block.is_empty() && block.len() <= b.max_body_len && block.iter().all(|s| stmt_ok(s, b))
        }
        fn stmt_ok(s: &Stmt, b: &OracleBound) -> bool {
            match s {
                Stmt::Action(_) => true,
                Stmt::Repeat { count, body } => (b.repeat_min..=b.repeat_max).contains(count) && block_ok(body, b),
                Stmt::While { body, .. } | Stmt::If { body, .. } => block_ok(body, b),
                Stmt::IfElse { then_body, else_body, .. } => block_ok(then_body, b) && block_ok(else_body, b),
            }
        }
        program.depth() <= self.max_depth && block_ok(&program.body, self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "witness", rename_all = "lowercase")]
pub enum Reachability {
    /// A consistent program exists; the first one found (fewest top-level
    /// statements, then library order).
    Reachable(Program),
    /// Enumeration finished without a consistent program.
    Unreachable,
    /// The budget ran out first.
    Unknown,
}

impl Reachability {
    pub fn is_reachable(&self) -> bool {
        matches!(self, Reachability::Reachable(_))
    }
}

fn conds() -> Vec<Cond> {
    Predicate::ALL
        .iter()
        .flat_map(|&p| [Cond::new(p), Cond::new(p).not()])
        .collect()
}

fn sequences(items: &[Stmt], max_len: usize) -> Vec<Vec<Stmt>> {
    let mut out: Vec<Vec<Stmt>> = Vec::new();
    let mut layer: Vec<Vec<Stmt>> = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|prefix| {
                items.iter().map(move |s| {
                    let mut next = prefix.clone();
                    next.push(s.clone());
                    next
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Every statement of depth at most `depth`. `ifelse` on a negated
/// condition is left out: it behaves exactly like the positive condition
/// with swapped arms, which is in the library.
pub fn statement_library(bound: &OracleBound, depth: usize) -> Vec<Stmt> {
    let mut stmts: Vec<Stmt> = Action::ALL.iter().map(|&a| Stmt::Action(a)).collect();
    if depth < 2 {
        return stmts;
    }
    let inner = statement_library(bound, depth - 1);
    let bodies = sequences(&inner, bound.max_body_len);
    for count in bound.repeat_min..=bound.repeat_max {
        stmts.extend(bodies.iter().map(|b| Stmt::Repeat { count, body: b.clone() }));
    }
    for cond in conds() {
        stmts.extend(bodies.iter().map(|b| Stmt::While { cond, body: b.clone() }));
        stmts.extend(bodies.iter().map(|b| Stmt::If { cond, body: b.clone() }));
    }
    for cond in conds().into_iter().filter(|c| !c.is_negated()) {
        for t in &bodies {
            stmts.extend(bodies.iter().map(|e| Stmt::IfElse { cond, then_body: t.clone(), else_body: e.clone() }));
        }
    }
    stmts.sort_by_key(crate::lang::stmt_token_len);
    stmts
}

struct Node {
    grids: Vec<GridState>,
    body: Vec<Stmt>,
}

/// Searches the bound for a program satisfying every pair. `budget` caps
/// the number of single-statement executions.
pub fn enumerate_consistent(ios: &[IoPair], bound: &OracleBound, budget: usize, limits: ExecLimits) -> Reachability {
    if ios.is_empty() {
        return Reachability::Reachable(Program::new(vec![Stmt::Action(Action::TurnLeft); 4]).expect("valid"));
    }
    let library = statement_library(bound, bound.max_depth);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut frontier = vec![Node { grids: ios.iter().map(|io| io.input.clone()).collect(), body: vec![] }];
    seen.insert(frontier[0].grids.iter().map(grid_hash).collect());
    let mut spent = 0usize;
    for _ in 0..bound.max_body_len {
        let mut next = Vec::new();
        for node in &frontier {
            'stmt: for stmt in &library {
                let mut grids = Vec::with_capacity(ios.len());
                for g in &node.grids {
                    spent += 1;
                    if spent > budget {
                        return Reachability::Unknown;
                    }
                    match run_block(std::slice::from_ref(stmt), g, limits) {
                        Outcome::Ok(out) => grids.push(out),
                        _ => continue 'stmt,
                    }
                }
                let mut body = node.body.clone();
                body.push(stmt.clone());
                if grids.iter().zip(ios).all(|(g, io)| *g == io.output) {
                    let program = Program::new(body.clone()).expect("library statements are valid");
                    if ios.iter().all(|io| satisfies(&program, io, limits)) {
                        return Reachability::Reachable(program);
                    }
                }
                if seen.insert(grids.iter().map(grid_hash).collect()) {
                    next.push(Node { grids, body });
                }
            }
        }
        frontier = next;
    }
    Reachability::Unreachable
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::sampling::{sample_valid_inputs, InputDistribution};
    use crate::seed::rng;

    fn spec_of(src: &str, n: usize, seed: u64) -> Vec<IoPair> {
        let p = parse(src).unwrap();
        sample_valid_inputs(&p, &InputDistribution::default(), n, rng(seed), ExecLimits::default()).unwrap()
    }

    #[test]
    fn library_sizes() {
        let b = OracleBound::new(1, 3);
        assert_eq!(statement_library(&b, 1).len(), 5);
        // 5 actions; bodies 5 + 25 = 30; repeat 8 * 30, while and if 10 * 30
        // each, ifelse 5 * 30 * 30.
        let b = OracleBound::new(2, 2);
        assert_eq!(statement_library(&b, 2).len(), 5 + 240 + 600 + 4500);
    }

    #[test]
    fn finds_single_move() {
        let ios = spec_of("def run(): move()", 5, 0);
        let r = enumerate_consistent(&ios, &OracleBound::new(1, 3), 1_000_000, ExecLimits::default());
        assert_eq!(r, Reachability::Reachable(parse("def run(): move()").unwrap()));
    }

    #[test]
    fn proves_unreachable() {
        // Two markers on one cell need two puts; one action is not enough.
        let ios = spec_of("def run(): { putMarker(); putMarker() }", 5, 1);
        let r = enumerate_consistent(&ios, &OracleBound::new(1, 1), 1_000_000, ExecLimits::default());
        assert_eq!(r, Reachability::Unreachable);
        let r = enumerate_consistent(&ios, &OracleBound::new(1, 2), 1_000_000, ExecLimits::default());
        assert!(r.is_reachable());
    }

    #[test]
    fn budget_gives_unknown() {
        let ios = spec_of("def run(): { move(); turnLeft(); move() }", 5, 2);
        assert_eq!(enumerate_consistent(&ios, &OracleBound::new(2, 3), 100, ExecLimits::default()), Reachability::Unknown);
    }

    #[test]
    fn bound_membership() {
        let b = OracleBound::new(2, 3);
        assert!(b.contains(&parse("def run(): { move(); repeat(3): turnLeft() }").unwrap()));
        assert!(!b.contains(&parse("def run(): repeat(3): if(frontIsClear()): move()").unwrap()));
        assert!(!b.contains(&parse("def run(): { move(); move(); move(); move() }").unwrap()));
        assert!(!b.contains(&parse("def run(): repeat(12): move()").unwrap()));
    }
}
