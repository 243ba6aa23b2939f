//! Exact match, generalization and functional equivalence, plus the
//! tables and statistics built from them.

mod stats;
mod table;

pub use stats::{sign_test, PairedComparison};
pub use table::{CurvePoint, MetricRow, MetricsTable};

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lang::Program;
use crate::sampling::{IoPair, InputDistribution, SamplingError, SpecSet, ValidInputStream};
use crate::sampling::ATTEMPTS_PER_INPUT;
use crate::vm::{satisfies, BranchOutcome, CoverageReport, ExecLimits};

/// Default eval-set size.
pub const EVAL_PAIRS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ExactMatch,
    Generalization,
    FunctionalEquivalence,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Generalization, Metric::FunctionalEquivalence, Metric::ExactMatch];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ExactMatch => "exact_match",
            Metric::Generalization => "generalization",
            Metric::FunctionalEquivalence => "functional_equivalence",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    /// Full names or the short forms `em`, `gen`, `fe`.
    fn from_str(s: &str) -> Result<Metric, String> {
        match s {
            "em" | "exact_match" => Ok(Metric::ExactMatch),
            "gen" | "generalization" => Ok(Metric::Generalization),
            "fe" | "functional_equivalence" => Ok(Metric::FunctionalEquivalence),
            other => Err(format!("unknown metric `{other}` (expected em, gen or fe)")),
        }
    }
}

/// Token-level equality.
pub fn exact_match(pred: &Program, target: &Program) -> bool {
    pred.tokenize() == target.tokenize()
}

/// Satisfies every spec pair and the held-out pair.
pub fn generalization(pred: &Program, spec: &SpecSet, heldout: &IoPair, limits: ExecLimits) -> bool {
    spec.iter().all(|io| satisfies(pred, io, limits)) && satisfies(pred, heldout, limits)
}

/// Fresh pairs for judging functional equivalence against one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSet {
    pub pairs: Vec<IoPair>,
    /// Whether the inputs jointly hit every branch outcome of the target.
    pub coverage_complete: bool,
    pub coverage: CoverageReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSetOptions {
    pub count: usize,
    /// Total grids drawn before giving up on complete coverage.
    pub attempt_cap: usize,
}

impl Default for EvalSetOptions {
    fn default() -> Self {
        EvalSetOptions { count: EVAL_PAIRS, attempt_cap: 10_000 }
    }
}

/// Draws `count` valid pairs, then keeps drawing while coverage is
/// incomplete, swapping each pair that adds an outcome in for the latest
/// pair whose outcomes are all hit elsewhere.
pub fn build_eval_set<R: Rng>(
    target: &Program,
    dist: &InputDistribution,
    rng: R,
    limits: ExecLimits,
    options: EvalSetOptions,
) -> Result<EvalSet, SamplingError> {
    dist.validate()?;
    let count = options.count;
    let cap = options.attempt_cap.max(ATTEMPTS_PER_INPUT * count);
    let universe = CoverageReport::universe(target);
    let mut stream = ValidInputStream::new(target, dist, rng, limits);
    let mut pairs = Vec::with_capacity(count);
    let mut covs = Vec::with_capacity(count);
    let mut hits: BTreeMap<(u32, BranchOutcome), usize> = BTreeMap::new();
    while pairs.len() < count {
        let Some((pair, cov)) = stream.next_covered(ATTEMPTS_PER_INPUT * count) else {
            return Err(SamplingError::Exhausted { wanted: count, found: pairs.len(), attempts: stream.attempts() });
        };
        for h in cov.hits() {
            *hits.entry(h).or_default() += 1;
        }
        pairs.push(pair);
        covs.push(cov);
    }
    let complete = |hits: &BTreeMap<_, usize>| universe.hits().all(|h| hits.contains_key(&h));
    while !complete(&hits) && count > 0 {
        let Some((pair, cov)) = stream.next_covered(cap) else { break };
        if cov.hits().all(|h| hits.contains_key(&h)) {
            continue;
        }
        let Some(j) = (0..count).rev().find(|&j| covs[j].hits().all(|h| hits[&h] >= 2)) else { continue };
        for h in covs[j].hits() {
            *hits.get_mut(&h).expect("counted") -= 1;
        }
        for h in cov.hits() {
            *hits.entry(h).or_default() += 1;
        }
        pairs[j] = pair;
        covs[j] = cov;
    }
    let mut coverage = CoverageReport::default();
    for c in &covs {
        coverage.union_with(c);
    }
    Ok(EvalSet { coverage_complete: coverage.is_complete_for(target), coverage, pairs })
}

/// Satisfies every pair of the eval set.
pub fn functional_equivalence(pred: &Program, eval: &EvalSet, limits: ExecLimits) -> bool {
    eval.pairs.iter().all(|io| satisfies(pred, io, limits))
}

/// All three verdicts for one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Verdict {
    pub exact_match: bool,
    pub generalization: bool,
    pub functional_equivalence: bool,
}

impl Verdict {
    pub fn judge(
        pred: &Program,
        target: &Program,
        spec: &SpecSet,
        heldout: &IoPair,
        eval: &EvalSet,
        limits: ExecLimits,
    ) -> Verdict {
        Verdict {
            exact_match: exact_match(pred, target),
            generalization: generalization(pred, spec, heldout, limits),
            functional_equivalence: functional_equivalence(pred, eval, limits),
        }
    }

    pub fn get(&self, metric: Metric) -> bool {
        match metric {
            Metric::ExactMatch => self.exact_match,
            Metric::Generalization => self.generalization,
            Metric::FunctionalEquivalence => self.functional_equivalence,
        }
    }

    /// Exact match implies the other two.
    pub fn is_consistent(&self) -> bool {
        !self.exact_match || (self.generalization && self.functional_equivalence)
    }
}
