//! Reverse-engineering black-box Karel programs from input-output queries.
//!
//! The pipeline: [`sampling`] draws programs and valid inputs, [`synthesis`]
//! proposes candidate programs for a specification, [`iterative`] scores
//! candidates against the black box's I/Os and re-conditions the generator
//! on the pairs the best candidate misses, and [`metrics`] reports exact
//! match, generalization and functional equivalence.

pub mod digest;
pub mod harness;
pub mod iterative;
pub mod lang;
pub mod metrics;
pub mod oracle;
pub mod sampling;
pub mod seed;
pub mod synthesis;
pub mod vm;
pub mod world;

pub use iterative::{iterative_synthesis, score, select_best, IreenConfig, IterationState, ScoredCandidate};
pub use lang::{parse, Action, Cond, LangError, Predicate, Program, Stmt, TokenSeq};
pub use sampling::{IoPair, SpecSet};
pub use synthesis::{CandidateSet, Generator, GeneratorParams};
pub use vm::{run, satisfies, CoverageReport, ExecLimits, ExecResult, ExecStatus};
pub use world::{Direction, FeatureTensor, GridState};
