use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SamplingError;
use crate::lang::{Action, Block, Cond, Predicate, Program, Stmt, MAX_REPEAT};

/// Relative weights of the statement productions at the top level.
/// Control-flow weights are multiplied by `nest_decay` per nesting level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionWeights {
    pub action: f64,
    pub repeat: f64,
    pub while_: f64,
    pub if_: f64,
    pub ifelse: f64,
}

impl Default for ProductionWeights {
    fn default() -> Self {
        ProductionWeights { action: 5.0, repeat: 0.8, while_: 0.6, if_: 0.8, ifelse: 0.6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramDistribution {
    /// Maximum statement depth; 1 allows only action sequences.
    pub max_depth: usize,
    /// Maximum statements per block.
    pub max_body_len: usize,
    pub weights: ProductionWeights,
    pub nest_decay: f64,
    /// Probability of appending one more statement to the top-level block.
    pub continue_prob: f64,
    /// Same, for nested blocks.
    pub nested_continue_prob: f64,
    pub repeat_min: u8,
    pub repeat_max: u8,
    pub not_prob: f64,
}

impl Default for ProgramDistribution {
    fn default() -> Self {
        ProgramDistribution {
            max_depth: 4,
            max_body_len: 6,
            weights: ProductionWeights::default(),
            nest_decay: 0.5,
            continue_prob: 0.55,
            nested_continue_prob: 0.3,
            repeat_min: 2,
            repeat_max: 9,
            not_prob: 0.2,
        }
    }
}

impl ProgramDistribution {
    /// Bounded shape used for oracle experiments.
    pub fn small(max_depth: usize, max_body_len: usize) -> ProgramDistribution {
        ProgramDistribution { max_depth, max_body_len, ..ProgramDistribution::default() }
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        let bad = |m: &str| Err(SamplingError::Distribution(m.to_string()));
        let w = &self.weights;
        if [w.action, w.repeat, w.while_, w.if_, w.ifelse].iter().any(|&x| x.is_nan() || x <= 0.0) {
            return bad("production weights must be positive");
        }
        if self.max_depth == 0 || self.max_body_len == 0 {
            return bad("depth and body length must be at least 1");
        }
        if self.repeat_min > self.repeat_max || self.repeat_max > MAX_REPEAT {
            return bad("repeat range outside 0..=19");
        }
        for p in [self.continue_prob, self.nested_continue_prob, self.not_prob] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if !(0.0..=1.0).contains(&self.nest_decay) || self.nest_decay == 0.0 {
            return bad("nest_decay must lie in (0, 1]");
        }
        Ok(())
    }
}

pub fn sample_program<R: Rng + ?Sized>(dist: &ProgramDistribution, rng: &mut R) -> Program {
    let body = sample_block(dist, rng, 0);
    Program::new(body).expect("sampler emits valid programs")
}

fn sample_block<R: Rng + ?Sized>(dist: &ProgramDistribution, rng: &mut R, level: usize) -> Block {
    let p = if level == 0 { dist.continue_prob } else { dist.nested_continue_prob };
    let mut len = 1;
    while len < dist.max_body_len && rng.random_bool(p) {
        len += 1;
    }
    (0..len).map(|_| sample_stmt(dist, rng, level)).collect()
}

fn sample_cond<R: Rng + ?Sized>(dist: &ProgramDistribution, rng: &mut R) -> Cond {
    let c = Cond::new(Predicate::ALL[rng.random_range(0..Predicate::ALL.len())]);
    if rng.random_bool(dist.not_prob) {
        c.not()
    } else {
        c
    }
}

fn sample_stmt<R: Rng + ?Sized>(dist: &ProgramDistribution, rng: &mut R, level: usize) -> Stmt {
    let action = |rng: &mut R| Stmt::Action(Action::ALL[rng.random_range(0..Action::ALL.len())]);
    // A statement at `level` has depth at most `max_depth - level`.
    if level + 1 >= dist.max_depth {
        return action(rng);
    }
    let w = &dist.weights;
    let decay = dist.nest_decay.powi(level as i32);
    let weights = [w.action, w.repeat * decay, w.while_ * decay, w.if_ * decay, w.ifelse * decay];
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    let mut choice = 0;
    for (i, wi) in weights.iter().enumerate() {
        if x < *wi {
            choice = i;
            break;
        }
        x -= wi;
        choice = i;
    }
    let next = level + 1;
    match choice {
        0 => action(rng),
        1 => Stmt::Repeat {
            count: rng.random_range(dist.repeat_min..=dist.repeat_max),
            body: sample_block(dist, rng, next),
        },
        2 => Stmt::While { cond: sample_cond(dist, rng), body: sample_block(dist, rng, next) },
        3 => Stmt::If { cond: sample_cond(dist, rng), body: sample_block(dist, rng, next) },
        _ => Stmt::IfElse {
            cond: sample_cond(dist, rng),
            then_body: sample_block(dist, rng, next),
            else_body: sample_block(dist, rng, next),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;
    use std::collections::BTreeSet;

    #[test]
    fn depth_one_gives_action_sequences() {
        let d = ProgramDistribution { max_depth: 1, ..Default::default() };
        let mut r = rng(5);
        for _ in 0..200 {
            let p = sample_program(&d, &mut r);
            assert!(p.body.iter().all(|s| matches!(s, Stmt::Action(_))));
        }
    }

    #[test]
    fn bounds_hold() {
        let d = ProgramDistribution::small(2, 3);
        let mut r = rng(6);
        fn max_block(b: &[Stmt]) -> usize {
            b.iter()
                .map(|s| match s {
                    Stmt::Action(_) => 0,
                    Stmt::While { body, .. } | Stmt::Repeat { body, .. } | Stmt::If { body, .. } => max_block(body),
                    Stmt::IfElse { then_body, else_body, .. } => max_block(then_body).max(max_block(else_body)),
                })
                .max()
                .unwrap_or(0)
                .max(b.len())
        }
        for _ in 0..500 {
            let p = sample_program(&d, &mut r);
            assert!(p.depth() <= 2);
            assert!(max_block(&p.body) <= 3);
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let d = ProgramDistribution::default();
        assert_eq!(sample_program(&d, &mut rng(11)), sample_program(&d, &mut rng(11)));
    }

    #[test]
    fn defaults_cover_all_actions_and_condition_forms() {
        let d = ProgramDistribution::default();
        let mut r = rng(0);
        let mut terminals = BTreeSet::new();
        for _ in 0..1000 {
            for t in sample_program(&d, &mut r).tokenize().terminals() {
                terminals.insert(t);
            }
        }
        for name in Action::ALL.iter().map(|a| a.name()).chain(Predicate::ALL.iter().map(|p| p.name())) {
            assert!(terminals.contains(name), "{name} never sampled");
        }
        assert!(terminals.contains("not"));
    }

    #[test]
    fn validate_rejects_bad_parameters() {
        let mut d = ProgramDistribution::default();
        d.weights.while_ = 0.0;
        assert!(d.validate().is_err());
        let d = ProgramDistribution { repeat_max: 20, ..Default::default() };
        assert!(d.validate().is_err());
        let d = ProgramDistribution { max_depth: 0, ..Default::default() };
        assert!(d.validate().is_err());
    }
}
