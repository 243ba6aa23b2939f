//! Sample rejection and the iterative refinement loop.
//!
//! Each iteration conditions the generator on a window of `k` pairs, scores
//! every candidate against the full I/O set, keeps the global best under a
//! strict-improvement rule, and builds the next window from the pairs the
//! iteration's best candidate gets wrong.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Program;
use crate::sampling::{IoPair, SpecSet};
use crate::synthesis::{CandidateSet, Generator, GeneratorParams, SynthesisError};
use crate::vm::{satisfies, ExecLimits};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub program: Program,
    /// Number of satisfied pairs; always the popcount of `satisfied`.
    pub score: usize,
    pub satisfied: Vec<bool>,
    /// Position in the generator's ranking, 0 = most likely.
    pub generator_rank: usize,
}

impl ScoredCandidate {
    pub fn unsatisfied(&self) -> impl Iterator<Item = usize> + '_ {
        self.satisfied.iter().enumerate().filter(|(_, s)| !**s).map(|(i, _)| i)
    }
}

/// Scores a program by the number of pairs it satisfies. Crashes and
/// timeouts count as unsatisfied.
pub fn score(program: &Program, ios: &[IoPair], limits: ExecLimits) -> ScoredCandidate {
    let satisfied: Vec<bool> = ios.iter().map(|io| satisfies(program, io, limits)).collect();
    ScoredCandidate {
        program: program.clone(),
        score: satisfied.iter().filter(|s| **s).count(),
        satisfied,
        generator_rank: 0,
    }
}

/// Outcome of one round of sample rejection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub best: ScoredCandidate,
    /// Indices into the I/O list forming the next conditioning window.
    pub next: Vec<usize>,
}

impl Selection {
    pub fn next_spec(&self, ios: &[IoPair]) -> SpecSet {
        SpecSet::new(self.next.iter().map(|&i| ios[i].clone()).collect())
    }
}

/// The next window: up to `k` unsatisfied indices in ascending order, padded
/// with satisfied ones in ascending order.
pub fn next_window(satisfied: &[bool], k: usize) -> Vec<usize> {
    let k = k.min(satisfied.len());
    let mut next: Vec<usize> = (0..satisfied.len()).filter(|&i| !satisfied[i]).take(k).collect();
    next.extend((0..satisfied.len()).filter(|&i| satisfied[i]).take(k - next.len()));
    next
}

/// Picks the highest-scoring candidate (ties: earlier generator rank, then
/// token text) and the next conditioning window.
pub fn select_best(
    candidates: &CandidateSet,
    ios: &[IoPair],
    limits: ExecLimits,
    k: usize,
) -> Result<Selection, IreenError> {
    if candidates.is_empty() {
        return Err(IreenError::EmptyCandidateSet);
    }
    if ios.is_empty() {
        return Err(IreenError::EmptyIos);
    }
    let scored: Vec<ScoredCandidate> = candidates
        .candidates
        .par_iter()
        .enumerate()
        .map(|(rank, c)| ScoredCandidate { generator_rank: rank, ..score(&c.program, ios, limits) })
        .collect();
    let best = scored
        .into_iter()
        .reduce(|a, b| {
            let b_wins = b.score > a.score
                || (b.score == a.score
                    && (b.generator_rank, b.program.emit()) < (a.generator_rank, a.program.emit()));
            if b_wins { b } else { a }
        })
        .expect("non-empty");
    let next = next_window(&best.satisfied, k);
    Ok(Selection { best, next })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IreenConfig {
    pub iterations: usize,
    pub conditioning_size: usize,
    pub scoring_ios: usize,
    pub generator: GeneratorParams,
    pub limits: ExecLimits,
    pub seed: u64,
    /// Stop once every scoring pair is satisfied. Later iterations could
    /// not change the result, so this only saves time.
    pub early_exit: bool,
    /// Fill padding slots of the conditioning window with fresh black-box
    /// queries instead of already-satisfied pairs.
    pub requery: bool,
}

impl Default for IreenConfig {
    fn default() -> Self {
        IreenConfig {
            iterations: 10,
            conditioning_size: 5,
            scoring_ios: 50,
            generator: GeneratorParams::default(),
            limits: ExecLimits::default(),
            seed: 0,
            early_exit: false,
            requery: false,
        }
    }
}

impl IreenConfig {
    pub fn validate(&self) -> Result<(), IreenError> {
        let bad = |m: &str| Err(IreenError::Config(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.conditioning_size == 0 {
            return bad("conditioning_size must be at least 1");
        }
        if self.conditioning_size > self.scoring_ios {
            return bad("conditioning_size must not exceed scoring_ios");
        }
        if self.generator.beam_width == 0 || self.generator.top_k == 0 || self.generator.per_call_budget == 0 {
            return bad("generator parameters must be positive");
        }
        Ok(())
    }
}

/// One iteration of the loop as recorded in run artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Indices of the pairs the generator was conditioned on. Indices at or
    /// beyond the scoring set size refer to `IterationState::requeried`.
    pub conditioning: Vec<usize>,
    pub candidates: usize,
    /// Score of this iteration's best candidate.
    pub candidate_score: usize,
    /// Global best score after this iteration.
    pub best_score: usize,
    /// Global best program after this iteration.
    pub best_program: String,
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    pub best_program: Option<Program>,
    pub best_score: usize,
    pub iteration: usize,
    /// Window for the next iteration; not persisted (the history keeps
    /// its indices).
    #[serde(skip)]
    pub conditioning: SpecSet,
    pub history: Vec<IterationRecord>,
    /// Fresh pairs obtained in requery mode, in query order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requeried: Vec<IoPair>,
}

impl IterationState {
    /// Global best after iteration `i` (1-based), carrying the last value
    /// forward past an early exit.
    pub fn best_after(&self, i: usize) -> Option<&IterationRecord> {
        self.history.iter().take_while(|r| r.iteration <= i).last()
    }
}

#[derive(Debug, Error)]
pub enum IreenError {
    #[error("generator returned no candidates")]
    EmptyCandidateSet,
    #[error("no I/O pairs to score against")]
    EmptyIos,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("iteration {}: {source}", partial.iteration + 1)]
    Generator {
        source: SynthesisError,
        partial: Box<IterationState>,
    },
}

/// Source of fresh black-box pairs for requery mode.
pub trait FreshPairs {
    fn fresh_pair(&mut self) -> Option<IoPair>;
}

impl<F: FnMut() -> Option<IoPair>> FreshPairs for F {
    fn fresh_pair(&mut self) -> Option<IoPair> {
        self()
    }
}

/// Runs the loop with the default (no requery) setting.
pub fn iterative_synthesis<G: Generator + ?Sized>(
    generator: &G,
    ios: &[IoPair],
    config: &IreenConfig,
) -> Result<IterationState, IreenError> {
    iterative_synthesis_with(generator, ios, config, None)
}

pub fn iterative_synthesis_with<G: Generator + ?Sized>(
    generator: &G,
    ios: &[IoPair],
    config: &IreenConfig,
    mut fresh: Option<&mut dyn FreshPairs>,
) -> Result<IterationState, IreenError> {
    config.validate()?;
    if ios.is_empty() {
        return Err(IreenError::EmptyIos);
    }
    let k = config.conditioning_size.min(ios.len());
    let mut window: Vec<usize> = (0..k).collect();
    let mut state = IterationState {
        best_program: None,
        best_score: 0,
        iteration: 0,
        conditioning: SpecSet::new(ios[..k].to_vec()),
        history: Vec::with_capacity(config.iterations),
        requeried: Vec::new(),
    };
    let params = GeneratorParams { seed: config.seed, ..config.generator };
    for i in 1..=config.iterations {
        let candidates = match generator.generate(&state.conditioning, &params) {
            Ok(c) if c.is_empty() => return Err(IreenError::EmptyCandidateSet),
            Ok(c) => c,
            Err(source) => return Err(IreenError::Generator { source, partial: Box::new(state) }),
        };
        let selection = select_best(&candidates, ios, config.limits, k)?;
        let improved = state.best_program.is_none() || state.best_score < selection.best.score;
        if improved {
            state.best_score = selection.best.score;
            state.best_program = Some(selection.best.program.clone());
        }
        state.iteration = i;
        state.history.push(IterationRecord {
            iteration: i,
            conditioning: window.clone(),
            candidates: candidates.len(),
            candidate_score: selection.best.score,
            best_score: state.best_score,
            best_program: state.best_program.as_ref().map(Program::emit).unwrap_or_default(),
            improved,
        });
        if i == config.iterations || (config.early_exit && state.best_score == ios.len()) {
            break;
        }
        window = selection.next.clone();
        let mut pairs: Vec<IoPair> = window.iter().map(|&j| ios[j].clone()).collect();
        if let (true, Some(src)) = (config.requery, fresh.as_deref_mut()) {
            let unsatisfied = selection.best.unsatisfied().take(k).count();
            for slot in unsatisfied..k {
                if let Some(pair) = src.fresh_pair() {
                    window[slot] = ios.len() + state.requeried.len();
                    pairs[slot] = pair.clone();
                    state.requeried.push(pair);
                }
            }
        }
        state.conditioning = SpecSet::new(pairs);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::synthesis::{Candidate, FixedGenerator};
    use crate::world::GridState;

    fn pair(input: &str, output: &str) -> IoPair {
        IoPair { input: GridState::from_ascii(input).unwrap(), output: GridState::from_ascii(output).unwrap() }
    }

    fn set(programs: &[&str]) -> CandidateSet {
        CandidateSet {
            candidates: programs.iter().map(|p| Candidate { program: parse(p).unwrap(), score: 0.0 }).collect(),
            dropped: 0,
        }
    }

    // Outputs of `if(frontIsClear()): move()`.
    fn ios() -> Vec<IoPair> {
        vec![
            pair("> . . / . . .", ". > . / . . ."),
            pair(". > # / . . .", ". > # / . . ."),
            pair("v . / . .", ". . / v ."),
            pair("^ . / . .", "^ . / . ."),
        ]
    }

    #[test]
    fn score_counts_satisfied_pairs() {
        // Crashes on the two blocked inputs.
        let s = score(&parse("def run(): move()").unwrap(), &ios(), ExecLimits::default());
        assert_eq!(s.satisfied, vec![true, false, true, false]);
        assert_eq!(s.score, 2);
        let s = score(&parse("def run(): turnLeft()").unwrap(), &ios(), ExecLimits::default());
        assert_eq!(s.score, 0);
        let s = score(&parse("def run(): if(frontIsClear()): move()").unwrap(), &ios(), ExecLimits::default());
        assert_eq!(s.score, 4);
    }

    #[test]
    fn window_prefers_unsatisfied_then_pads() {
        let mut sat = vec![true; 50];
        for i in [7, 12, 30] {
            sat[i] = false;
        }
        assert_eq!(next_window(&sat, 5), vec![7, 12, 30, 0, 1]);
        assert_eq!(next_window(&[true; 50], 5), vec![0, 1, 2, 3, 4]);
        assert_eq!(next_window(&[false; 3], 5), vec![0, 1, 2]);
    }

    #[test]
    fn select_best_takes_argmax_with_rank_ties() {
        let ios = ios();
        let sel = select_best(&set(&["def run(): turnRight()", "def run(): move()"]), &ios, ExecLimits::default(), 2)
            .unwrap();
        assert_eq!(sel.best.generator_rank, 1);
        assert_eq!(sel.next, vec![1, 3]);
        let sel = select_best(
            &set(&["def run(): if(frontIsClear()): move()", "def run(): move()"]),
            &ios,
            ExecLimits::default(),
            2,
        )
        .unwrap();
        assert_eq!(sel.best.generator_rank, 0);
        assert!(matches!(
            select_best(&CandidateSet::default(), &ios, ExecLimits::default(), 2),
            Err(IreenError::EmptyCandidateSet)
        ));
    }

    #[test]
    fn perfect_first_iteration_is_a_fixed_point() {
        let generator = FixedGenerator { programs: vec![parse("def run(): if(frontIsClear()): move()").unwrap()] };
        let config = IreenConfig { early_exit: false, conditioning_size: 2, scoring_ios: 4, ..Default::default() };
        let state = iterative_synthesis(&generator, &ios(), &config).unwrap();
        assert_eq!(state.history.len(), 10);
        assert!(state.history.iter().all(|r| r.best_score == 4));
        assert!(state.history[0].improved && state.history[1..].iter().all(|r| !r.improved));
        let early = iterative_synthesis(&generator, &ios(), &IreenConfig { early_exit: true, ..config }).unwrap();
        assert_eq!(early.history.len(), 1);
        assert_eq!(early.best_program, state.best_program);
        assert_eq!(early.best_after(10).unwrap().best_score, 4);
    }

    #[test]
    fn equal_scores_never_replace_the_incumbent() {
        struct Alternating;
        impl Generator for Alternating {
            fn name(&self) -> &str {
                "alternating"
            }
            fn generate(&self, spec: &SpecSet, _: &GeneratorParams) -> Result<CandidateSet, SynthesisError> {
                // Both programs satisfy exactly the first two pairs.
                let p = if spec.pairs[0].input.agent() == (0, 0) {
                    "def run(): move()"
                } else {
                    "def run(): { move(); turnLeft(); turnRight() }"
                };
                Ok(set(&[p]))
            }
        }
        let ios = vec![pair("> . . / . . .", ". > . / . . ."), pair("v . / . .", ". . / v ."), pair(". > # / . . .", ". < # / . . .")];
        let config = IreenConfig { conditioning_size: 1, scoring_ios: 3, ..Default::default() };
        let state = iterative_synthesis(&Alternating, &ios, &config).unwrap();
        assert_eq!(state.best_program.unwrap().emit(), "def run(): move()");
        assert!(state.history.windows(2).all(|w| w[0].best_score <= w[1].best_score));
        assert_eq!(state.history[1].conditioning, vec![2]);
    }

    #[test]
    fn generator_failure_keeps_partial_history() {
        struct Flaky(std::sync::atomic::AtomicUsize);
        impl Generator for Flaky {
            fn name(&self) -> &str {
                "flaky"
            }
            fn generate(&self, _: &SpecSet, _: &GeneratorParams) -> Result<CandidateSet, SynthesisError> {
                match self.0.fetch_add(1, std::sync::atomic::Ordering::SeqCst) {
                    0 => Ok(set(&["def run(): turnLeft()"])),
                    _ => Err(SynthesisError::Unavailable("down".into())),
                }
            }
        }
        let config = IreenConfig { conditioning_size: 2, scoring_ios: 4, ..Default::default() };
        match iterative_synthesis(&Flaky(0.into()), &ios(), &config) {
            Err(IreenError::Generator { partial, .. }) => assert_eq!(partial.history.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn requery_fills_padding_with_fresh_pairs() {
        let generator = FixedGenerator { programs: vec![parse("def run(): if(frontIsClear()): move()").unwrap()] };
        let mut ios = ios();
        ios.push(pair("> # . / . . .", "v # . / . . ."));
        let config = IreenConfig { conditioning_size: 3, scoring_ios: 5, requery: true, ..Default::default() };
        let mut fresh = || Some(pair("< . / . .", "< . / . ."));
        let state = iterative_synthesis_with(&generator, &ios, &config, Some(&mut fresh)).unwrap();
        assert_eq!(state.history[1].conditioning, vec![4, 5, 6]);
        assert_eq!(state.requeried.len(), 2 * 9);
    }

    #[test]
    fn config_validation() {
        assert!(IreenConfig::default().validate().is_ok());
        assert!(IreenConfig { iterations: 0, ..Default::default() }.validate().is_err());
        assert!(IreenConfig { conditioning_size: 60, ..Default::default() }.validate().is_err());
    }
}
