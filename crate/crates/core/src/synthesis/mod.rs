//! The candidate-generator contract and its implementations: a built-in
//! grammar-guided beam search, a memoizing wrapper, and a client for a
//! remote synthesis service.

mod cache;
pub mod remote;
mod search;
pub(crate) mod track;

pub use cache::CachedGenerator;
pub use remote::RemoteGenerator;
pub use search::{SearchConfig, SearchGenerator};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Program;
use crate::sampling::SpecSet;

/// Pairs a generator is conditioned on; longer specs are cut to their
/// first `CONDITIONING_PAIRS` pairs by the caller.
pub const CONDITIONING_PAIRS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("generator unavailable: {0}")]
    Unavailable(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("empty specification")]
    EmptySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub beam_width: usize,
    pub top_k: usize,
    pub seed: u64,
    /// Maximum number of partial-program expansions per call.
    pub per_call_budget: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams { beam_width: 64, top_k: 50, seed: 0, per_call_budget: 400_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub program: Program,
    pub score: f64,
}

/// Candidates in generator order, best first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    /// Candidates the generator produced but that failed to parse.
    pub dropped: usize,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Candidate> {
        self.candidates.iter()
    }

    pub fn programs(&self) -> impl Iterator<Item = &Program> {
        self.candidates.iter().map(|c| &c.program)
    }

    /// The first `k` candidates.
    pub fn top(&self, k: usize) -> CandidateSet {
        CandidateSet { candidates: self.candidates.iter().take(k).cloned().collect(), dropped: self.dropped }
    }
}

/// Ψ: maps a specification to ranked candidate programs. Implementations
/// must be deterministic in (spec, params).
pub trait Generator: Send + Sync {
    fn name(&self) -> &str;

    fn generate(&self, spec: &SpecSet, params: &GeneratorParams) -> Result<CandidateSet, SynthesisError>;
}

impl<G: Generator + ?Sized> Generator for &G {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn generate(&self, spec: &SpecSet, params: &GeneratorParams) -> Result<CandidateSet, SynthesisError> {
        (**self).generate(spec, params)
    }
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn generate(&self, spec: &SpecSet, params: &GeneratorParams) -> Result<CandidateSet, SynthesisError> {
        (**self).generate(spec, params)
    }
}

impl<G: Generator + ?Sized> Generator for std::sync::Arc<G> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn generate(&self, spec: &SpecSet, params: &GeneratorParams) -> Result<CandidateSet, SynthesisError> {
        (**self).generate(spec, params)
    }
}

/// Returns a fixed candidate list regardless of the spec; for tests and
/// for replaying recorded generator output.
#[derive(Debug, Clone)]
pub struct FixedGenerator {
    pub programs: Vec<Program>,
}

impl Generator for FixedGenerator {
    fn name(&self) -> &str {
        "fixed"
    }

    fn generate(&self, spec: &SpecSet, params: &GeneratorParams) -> Result<CandidateSet, SynthesisError> {
        if spec.is_empty() {
            return Err(SynthesisError::EmptySpec);
        }
        let n = self.programs.len();
        let candidates = self
            .programs
            .iter()
            .take(params.top_k)
            .enumerate()
            .map(|(i, p)| Candidate { program: p.clone(), score: (n - i) as f64 })
            .collect();
        Ok(CandidateSet { candidates, dropped: 0 })
    }
}
