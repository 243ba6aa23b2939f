use ireen::oracle::{enumerate_consistent, OracleBound, Reachability};
use ireen::sampling::{sample_program, sample_valid_inputs, InputDistribution, ProgramDistribution};
use ireen::seed::rng;
use ireen::synthesis::SearchGenerator;
use ireen::{parse, satisfies, Action, ExecLimits, Generator, GeneratorParams, IoPair, Program, SpecSet, Stmt};

fn spec(program: &Program, seed: u64) -> Vec<IoPair> {
    sample_valid_inputs(program, &InputDistribution::default(), 5, rng(seed), ExecLimits::default()).unwrap()
}

fn consistent(program: &Program, ios: &[IoPair]) -> bool {
    ios.iter().all(|io| satisfies(program, io, ExecLimits::default()))
}

/// Every program of one or two actions.
fn short_programs() -> Vec<Program> {
    let mut out = Vec::new();
    for a in Action::ALL {
        out.push(Program::new(vec![Stmt::Action(a)]).unwrap());
        for b in Action::ALL {
            out.push(Program::new(vec![Stmt::Action(a), Stmt::Action(b)]).unwrap());
        }
    }
    out
}

#[test]
fn move_is_reachable_and_found() {
    let target = parse("def run(): move()").unwrap();
    let ios = spec(&target, 0);
    let verdict = enumerate_consistent(&ios, &OracleBound::new(1, 3), 1_000_000, ExecLimits::default());
    assert!(verdict.is_reachable());
    let set = SearchGenerator::default().generate(&SpecSet::new(ios.clone()), &GeneratorParams::default()).unwrap();
    assert!(set.programs().any(|p| consistent(p, &ios)));
}

#[test]
fn two_action_targets_recovered_at_top1() {
    let g = SearchGenerator::default();
    let all = short_programs();
    assert_eq!(all.len(), 30);
    let mut recovered = 0;
    for (i, target) in all.iter().enumerate() {
        let ios = spec(target, 100 + i as u64);
        // The oracle's answer: the ≤2-action programs that fit the spec.
        let fitting: Vec<&Program> = all.iter().filter(|p| consistent(p, &ios)).collect();
        assert!(fitting.contains(&target));
        let set = g.generate(&SpecSet::new(ios.clone()), &GeneratorParams::default()).unwrap();
        let top1 = &set.candidates[0].program;
        if consistent(top1, &ios) {
            recovered += 1;
        } else {
            eprintln!("missed {} (top-1 {})", target.emit(), top1.emit());
        }
    }
    assert_eq!(recovered, all.len());
}

#[test]
fn widening_the_beam_never_loses_spec_satisfaction() {
    let g = SearchGenerator::default();
    let dist = ProgramDistribution::default();
    let mut r = rng(7);
    let mut specs = 0;
    while specs < 100 {
        let program = sample_program(&dist, &mut r);
        let Ok(ios) = sample_valid_inputs(&program, &InputDistribution::default(), 5, rng(specs), ExecLimits::default())
        else {
            continue;
        };
        specs += 1;
        let spec = SpecSet::new(ios.clone());
        let best = |beam_width: usize| {
            let params = GeneratorParams { beam_width, seed: specs, ..Default::default() };
            let set = g.generate(&spec, &params).unwrap();
            set.programs()
                .map(|p| ios.iter().filter(|io| satisfies(p, io, ExecLimits::default())).count())
                .max()
                .unwrap_or(0)
        };
        let (narrow, wide) = (best(8), best(64));
        assert!(wide >= narrow, "spec {specs}: beam 8 satisfies {narrow}, beam 64 only {wide}");
    }
}

#[test]
fn small_bound_targets_are_reachable() {
    let dist = ProgramDistribution::small(2, 3);
    let bound = OracleBound::new(2, 3);
    let mut r = rng(11);
    let mut seen = 0;
    while seen < 10 {
        let program = sample_program(&dist, &mut r);
        assert!(bound.contains(&program), "{}", program.emit());
        let Ok(ios) = sample_valid_inputs(&program, &InputDistribution::default(), 6, rng(seen), ExecLimits::default())
        else {
            continue;
        };
        seen += 1;
        let verdict = enumerate_consistent(&ios, &bound, 20_000_000, ExecLimits::default());
        assert_ne!(verdict, Reachability::Unreachable, "{}", program.emit());
        if let Reachability::Reachable(witness) = verdict {
            assert!(consistent(&witness, &ios));
            assert!(bound.contains(&witness));
        }
    }
}
