use rand::Rng;

use super::input::{ValidInputStream, ATTEMPTS_PER_INPUT};
use super::{InputDistribution, IoPair, SamplingError, SpecSet};
use crate::lang::Program;
use crate::vm::{CoverageReport, ExecLimits};

#[derive(Debug, Clone)]
pub struct CraftedSpec {
    pub spec: SpecSet,
    pub coverage: CoverageReport,
    /// Whether `coverage` is the program's whole branch-outcome universe.
    pub complete: bool,
}

/// White-box specification crafting.
///
/// Reads the same valid-input stream as [`sample_valid_inputs`] would for
/// `rng`. A pair is kept while fewer than `k` are held iff it adds new
/// coverage; once `k` are held, a new pair replaces the first held pair
/// whose removal still leaves a coverage superset. Sampling stops when
/// coverage is complete or the attempt cap is reached, and the spec is then
/// topped up with the earliest unused valid pairs. Because the random spec
/// is the first `k` pairs of the stream, the crafted spec's coverage always
/// contains it.
///
/// [`sample_valid_inputs`]: super::sample_valid_inputs
pub fn craft_spec<R: Rng>(
    program: &Program,
    dist: &InputDistribution,
    k: usize,
    rng: R,
    limits: ExecLimits,
) -> Result<CraftedSpec, SamplingError> {
    dist.validate()?;
    let universe = CoverageReport::universe(program);
    let cap = ATTEMPTS_PER_INPUT * k;
    let mut stream = ValidInputStream::new(program, dist, rng, limits);
    let mut kept: Vec<(usize, CoverageReport)> = Vec::with_capacity(k);
    let mut seen: Vec<(IoPair, CoverageReport)> = Vec::new();
    let mut union = CoverageReport::default();

    loop {
        if seen.len() >= k && universe.is_subset(&union) {
            break;
        }
        let Some((pair, cov)) = stream.next_covered(cap) else { break };
        let idx = seen.len();
        seen.push((pair, cov.clone()));
        if cov.difference_len(&union) == 0 {
            continue;
        }
        if kept.len() < k {
            union.union_with(&cov);
            kept.push((idx, cov));
            continue;
        }
        for j in 0..kept.len() {
            let mut swapped = cov.clone();
            for (i, (_, c)) in kept.iter().enumerate() {
                if i != j {
                    swapped.union_with(c);
                }
            }
            if union.is_subset(&swapped) {
                kept[j] = (idx, cov);
                union = swapped;
                break;
            }
        }
    }

    let mut chosen: Vec<usize> = kept.iter().map(|(i, _)| *i).collect();
    for i in 0..seen.len() {
        if chosen.len() >= k {
            break;
        }
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    if chosen.len() < k {
        return Err(SamplingError::Exhausted { wanted: k, found: chosen.len(), attempts: stream.attempts() });
    }
    let mut coverage = CoverageReport::default();
    for &i in &chosen {
        coverage.union_with(&seen[i].1);
    }
    let complete = universe.is_subset(&coverage);
    let spec = SpecSet::new(chosen.into_iter().map(|i| seen[i].0.clone()).collect());
    Ok(CraftedSpec { spec, coverage, complete })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::sampling::sample_valid_inputs;
    use crate::seed::rng;
    use crate::vm::{coverage_of, satisfies};

    #[test]
    fn branch_free_matches_random_spec() {
        let p = parse("def run(): { move(); putMarker() }").unwrap();
        let d = InputDistribution::default();
        let l = ExecLimits::default();
        let crafted = craft_spec(&p, &d, 5, rng(4), l).unwrap();
        let random = sample_valid_inputs(&p, &d, 5, rng(4), l).unwrap();
        assert_eq!(crafted.spec.pairs, random);
        assert!(crafted.complete);
    }

    #[test]
    fn if_markers_gets_both_outcomes() {
        let p = parse("def run(): if(markersPresent()): pickMarker()").unwrap();
        let crafted = craft_spec(&p, &InputDistribution::default(), 5, rng(8), ExecLimits::default()).unwrap();
        assert!(crafted.complete);
        assert_eq!(crafted.spec.len(), 5);
        assert!(crafted.spec.iter().any(|io| io.input.agent_markers() > 0));
        assert!(crafted.spec.iter().any(|io| io.input.agent_markers() == 0));
    }

    #[test]
    fn dominates_random_spec_of_same_seed() {
        let p = parse(
            "def run(): { while(frontIsClear()): move(); ifelse(markersPresent()): pickMarker() else: turnLeft(); \
             if(not leftIsClear()): turnRight() }",
        )
        .unwrap();
        let d = InputDistribution::default();
        let l = ExecLimits::default();
        for s in 0..20 {
            let crafted = craft_spec(&p, &d, 5, rng(s), l).unwrap();
            let random = sample_valid_inputs(&p, &d, 5, rng(s), l).unwrap();
            let rc = coverage_of(&p, random.iter().map(|io| &io.input), l);
            let cc = coverage_of(&p, crafted.spec.iter().map(|io| &io.input), l);
            assert!(rc.is_subset(&cc), "seed {s}");
            assert_eq!(cc, crafted.coverage);
            assert!(crafted.spec.iter().all(|io| satisfies(&p, io, l)));
        }
    }
}
