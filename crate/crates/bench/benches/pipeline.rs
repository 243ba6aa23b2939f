use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ireen::iterative::{iterative_synthesis, select_best, IreenConfig};
use ireen::sampling::{sample_program, sample_valid_inputs, InputDistribution, ProgramDistribution};
use ireen::seed::rng;
use ireen::synthesis::SearchGenerator;
use ireen::{parse, run, ExecLimits, Generator, GeneratorParams, IoPair, Program, SpecSet};

const TARGET: &str = "def run(): { turnLeft(); while(frontIsClear()): { putMarker(); move() }; \
                      ifelse(markersPresent()): pickMarker() else: turnRight() }";

fn programs(n: usize) -> Vec<Program> {
    let mut r = rng(1);
    (0..n).map(|_| sample_program(&ProgramDistribution::default(), &mut r)).collect()
}

fn ios(program: &Program, n: usize) -> Vec<IoPair> {
    sample_valid_inputs(program, &InputDistribution::default(), n, rng(2), ExecLimits::default()).unwrap()
}

fn language(c: &mut Criterion) {
    let progs = programs(200);
    let texts: Vec<String> = progs.iter().map(Program::emit).collect();
    c.bench_function("parse_200", |b| b.iter(|| texts.iter().map(|t| parse(black_box(t)).unwrap().token_len()).sum::<usize>()));
    c.bench_function("emit_200", |b| b.iter(|| progs.iter().map(|p| black_box(p).emit().len()).sum::<usize>()));
}

fn interpreter(c: &mut Criterion) {
    let target = parse(TARGET).unwrap();
    let pairs = ios(&target, 50);
    c.bench_function("run_50_inputs", |b| {
        b.iter(|| pairs.iter().filter(|io| run(&target, black_box(&io.input), ExecLimits::default()).output().is_some()).count())
    });
    c.bench_function("sample_50_valid_inputs", |b| b.iter(|| ios(black_box(&target), 50).len()));
}

fn synthesis(c: &mut Criterion) {
    let target = parse(TARGET).unwrap();
    let pairs = ios(&target, 50);
    let spec = SpecSet::new(pairs[..5].to_vec());
    let generator = SearchGenerator::default();
    let params = GeneratorParams::default();
    let mut group = c.benchmark_group("synthesis");
    group.sample_size(20);
    group.bench_function("generate_top50", |b| b.iter(|| generator.generate(black_box(&spec), &params).unwrap().len()));
    let candidates = generator.generate(&spec, &params).unwrap();
    group.bench_function("select_best_50x50", |b| {
        b.iter(|| select_best(black_box(&candidates), &pairs, ExecLimits::default(), 5).map(|s| s.best.score))
    });
    group.bench_function("ireen_10_iterations", |b| {
        b.iter(|| iterative_synthesis(&generator, black_box(&pairs), &IreenConfig::default()).unwrap().best_score)
    });
    group.finish();
}

criterion_group!(benches, language, interpreter, synthesis);
criterion_main!(benches);
