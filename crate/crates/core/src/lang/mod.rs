//! The Karel DSL: abstract syntax, parsing, canonical printing and tokens.
//!
//! Canonical surface form (one spelling per AST):
//!
//! ```text
//! def run(): { while(frontIsClear()): move(); ifelse(not markersPresent()): putMarker() else: pickMarker() }
//! ```
//!
//! A block holding exactly one statement is printed bare after the colon;
//! blocks with two or more statements are wrapped in `{ ... }` with `; `
//! separators. A bare body is always a single statement, so `;` always binds
//! to the innermost enclosing braces and the form is unambiguous on one line.

mod lexer;
mod parser;
mod printer;

use std::fmt;

pub use lexer::{Token, TokenSeq};
pub use parser::{parse, parse_tokens};

use thiserror::Error;

/// Largest literal accepted by `repeat(r)`.
pub const MAX_REPEAT: u8 = 19;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("parse error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("invalid program: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Move,
    TurnRight,
    TurnLeft,
    PickMarker,
    PutMarker,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Move,
        Action::TurnRight,
        Action::TurnLeft,
        Action::PickMarker,
        Action::PutMarker,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::Move => "move",
            Action::TurnRight => "turnRight",
            Action::TurnLeft => "turnLeft",
            Action::PickMarker => "pickMarker",
            Action::PutMarker => "putMarker",
        }
    }

    pub fn from_name(name: &str) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.name() == name)
    }
}

/// The five primitive sensor predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    FrontIsClear,
    LeftIsClear,
    RightIsClear,
    MarkersPresent,
    NoMarkersPresent,
}

impl Predicate {
    pub const ALL: [Predicate; 5] = [
        Predicate::FrontIsClear,
        Predicate::LeftIsClear,
        Predicate::RightIsClear,
        Predicate::MarkersPresent,
        Predicate::NoMarkersPresent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::FrontIsClear => "frontIsClear",
            Predicate::LeftIsClear => "leftIsClear",
            Predicate::RightIsClear => "rightIsClear",
            Predicate::MarkersPresent => "markersPresent",
            Predicate::NoMarkersPresent => "noMarkersPresent",
        }
    }

    pub fn from_name(name: &str) -> Option<Predicate> {
        Predicate::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// A condition: a predicate under zero or more `not`s.
///
/// `not not b` is grammatical and kept distinct from `b`, so the negation
/// depth is part of the structure rather than a boolean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cond {
    pub pred: Predicate,
    pub negations: u8,
}

impl Cond {
    pub const fn new(pred: Predicate) -> Cond {
        Cond { pred, negations: 0 }
    }

    pub const fn not(self) -> Cond {
        Cond {
            pred: self.pred,
            negations: self.negations + 1,
        }
    }

    pub fn is_negated(self) -> bool {
        self.negations % 2 == 1
    }
}

impl From<Predicate> for Cond {
    fn from(pred: Predicate) -> Cond {
        Cond::new(pred)
    }
}

/// A non-empty, flat statement sequence.
pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stmt {
    Action(Action),
    While { cond: Cond, body: Block },
    Repeat { count: u8, body: Block },
    If { cond: Cond, body: Block },
    IfElse { cond: Cond, then_body: Block, else_body: Block },
}

impl Stmt {
    /// Whether this node owns a branch site (`while`, `if`, `ifelse`).
    pub fn is_branch(&self) -> bool {
        matches!(self, Stmt::While { .. } | Stmt::If { .. } | Stmt::IfElse { .. })
    }

    /// Number of branch sites in this statement's subtree.
    pub fn branch_sites(&self) -> u32 {
        match self {
            Stmt::Action(_) => 0,
            Stmt::Repeat { body, .. } => block_sites(body),
            Stmt::While { body, .. } | Stmt::If { body, .. } => 1 + block_sites(body),
            Stmt::IfElse { then_body, else_body, .. } => {
                1 + block_sites(then_body) + block_sites(else_body)
            }
        }
    }

    /// Nesting depth: 1 for an action, one more per enclosing control node.
    pub fn depth(&self) -> usize {
        match self {
            Stmt::Action(_) => 1,
            Stmt::While { body, .. } | Stmt::Repeat { body, .. } | Stmt::If { body, .. } => {
                1 + block_depth(body)
            }
            Stmt::IfElse { then_body, else_body, .. } => {
                1 + block_depth(then_body).max(block_depth(else_body))
            }
        }
    }
}

pub(crate) fn block_sites(block: &[Stmt]) -> u32 {
    block.iter().map(Stmt::branch_sites).sum()
}

fn block_depth(block: &[Stmt]) -> usize {
    block.iter().map(Stmt::depth).max().unwrap_or(0)
}

/// Identifier of a branch-bearing node: its index in a pre-order walk over
/// `while`/`if`/`ifelse` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct BranchSiteId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteKind {
    While,
    If,
    IfElse,
}

/// `def run(): s`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Program {
    pub body: Block,
}

impl Program {
    pub fn new(body: Block) -> Result<Program, LangError> {
        let program = Program { body };
        program.validate()?;
        Ok(program)
    }

    /// Checks the structural invariants that the type system does not:
    /// non-empty blocks and repeat literals within `0..=19`.
    pub fn validate(&self) -> Result<(), LangError> {
        fn check_block(block: &[Stmt]) -> Result<(), LangError> {
            if block.is_empty() {
                return Err(LangError::Validation("empty statement block".into()));
            }
            block.iter().try_for_each(check_stmt)
        }
        fn check_stmt(stmt: &Stmt) -> Result<(), LangError> {
            match stmt {
                Stmt::Action(_) => Ok(()),
                Stmt::Repeat { count, body } => {
                    if *count > MAX_REPEAT {
                        return Err(LangError::Validation(format!(
                            "repeat count {count} exceeds {MAX_REPEAT}"
                        )));
                    }
                    check_block(body)
                }
                Stmt::While { body, .. } | Stmt::If { body, .. } => check_block(body),
                Stmt::IfElse { then_body, else_body, .. } => {
                    check_block(then_body)?;
                    check_block(else_body)
                }
            }
        }
        check_block(&self.body)
    }

    pub fn emit(&self) -> String {
        printer::emit(self)
    }

    pub fn tokenize(&self) -> TokenSeq {
        lexer::lex(&self.emit()).expect("canonical print always lexes")
    }

    pub fn depth(&self) -> usize {
        block_depth(&self.body)
    }

    /// All branch sites in pre-order.
    pub fn branch_sites(&self) -> Vec<(BranchSiteId, SiteKind)> {
        fn walk(block: &[Stmt], out: &mut Vec<(BranchSiteId, SiteKind)>) {
            for stmt in block {
                let id = BranchSiteId(out.len() as u32);
                match stmt {
                    Stmt::Action(_) => {}
                    Stmt::Repeat { body, .. } => walk(body, out),
                    Stmt::While { body, .. } => {
                        out.push((id, SiteKind::While));
                        walk(body, out);
                    }
                    Stmt::If { body, .. } => {
                        out.push((id, SiteKind::If));
                        walk(body, out);
                    }
                    Stmt::IfElse { then_body, else_body, .. } => {
                        out.push((id, SiteKind::IfElse));
                        walk(then_body, out);
                        walk(else_body, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.body, &mut out);
        out
    }

    /// Token count of the canonical print, computed without printing.
    pub fn token_len(&self) -> usize {
        5 + block_token_len(&self.body)
    }
}

pub(crate) fn cond_token_len(cond: Cond) -> usize {
    3 + cond.negations as usize
}

pub(crate) fn stmt_token_len(stmt: &Stmt) -> usize {
    match stmt {
        Stmt::Action(_) => 3,
        Stmt::While { cond, body } | Stmt::If { cond, body } => {
            4 + cond_token_len(*cond) + block_token_len(body)
        }
        Stmt::Repeat { body, .. } => 5 + block_token_len(body),
        Stmt::IfElse { cond, then_body, else_body } => {
            6 + cond_token_len(*cond) + block_token_len(then_body) + block_token_len(else_body)
        }
    }
}

pub(crate) fn block_token_len(block: &[Stmt]) -> usize {
    let inner: usize = block.iter().map(stmt_token_len).sum();
    if block.len() == 1 {
        inner
    } else {
        inner + 2 + block.len().saturating_sub(1)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.emit())
    }
}

impl std::str::FromStr for Program {
    type Err = LangError;

    fn from_str(s: &str) -> Result<Program, LangError> {
        parse(s)
    }
}

impl serde::Serialize for Program {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.emit())
    }
}

impl<'de> serde::Deserialize<'de> for Program {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Program, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_len_matches_tokenizer() {
        let sources = [
            "def run(): move()",
            "def run(): { move(); turnLeft() }",
            "def run(): repeat(4): { turnLeft(); move() }",
            "def run(): ifelse(not not frontIsClear()): move() else: { putMarker(); turnRight() }",
            "def run(): { while(noMarkersPresent()): if(leftIsClear()): turnLeft(); pickMarker() }",
        ];
        for src in sources {
            let p = parse(src).unwrap();
            assert_eq!(p.token_len(), p.tokenize().len(), "{src}");
        }
    }

    #[test]
    fn branch_sites_are_preorder() {
        let p = parse(
            "def run(): { if(frontIsClear()): while(markersPresent()): pickMarker(); \
             repeat(2): ifelse(leftIsClear()): move() else: if(rightIsClear()): turnRight() }",
        )
        .unwrap();
        let kinds: Vec<_> = p.branch_sites().into_iter().map(|(_, k)| k).collect();
        assert_eq!(kinds, vec![SiteKind::If, SiteKind::While, SiteKind::IfElse, SiteKind::If]);
        assert_eq!(block_sites(&p.body), 4);
    }

    #[test]
    fn depth_counts_control_nesting() {
        assert_eq!(parse("def run(): move()").unwrap().depth(), 1);
        assert_eq!(parse("def run(): repeat(3): move()").unwrap().depth(), 2);
        assert_eq!(
            parse("def run(): while(frontIsClear()): if(markersPresent()): move()").unwrap().depth(),
            3
        );
    }

    #[test]
    fn validate_rejects_large_repeat_and_empty_block() {
        let p = Program {
            body: vec![Stmt::Repeat { count: 20, body: vec![Stmt::Action(Action::Move)] }],
        };
        assert!(matches!(p.validate(), Err(LangError::Validation(_))));
        let p = Program { body: vec![] };
        assert!(p.validate().is_err());
    }
}
