mod config;

use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ireen::harness::{
    batch_check, build_eval_sets, compare, evaluate, load_dataset, metrics_table, read_run, read_verdicts, run_tasks,
    sweep, write_evaluation, write_run, ExperimentConfig, HarnessError, RunManifest, Setting,
};
use ireen::metrics::Metric;
use ireen::sampling::build_dataset;
use toml::Value;

use config::{ConfigError, Overrides};

/// Reverse-engineer black-box Karel programs from input-output queries.
#[derive(Debug, Parser)]
#[command(name = "ireen", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample programs and specifications into split JSONL files plus a manifest.
    GenDataset {
        #[arg(long)]
        train: Option<usize>,
        #[arg(long)]
        val: Option<usize>,
        #[arg(long)]
        test: Option<usize>,
        #[arg(long)]
        finetune: Option<usize>,
    },
    /// Run iterative synthesis on every test record; one run directory per setting and seed.
    Synthesize {
        /// Run one single-setting pass per scoring-set size instead of `--scoring-ios`.
        #[arg(long, value_delimiter = ',')]
        scoring_sweep: Vec<usize>,
    },
    /// Judge a run directory against the dataset and write tables and curves into it.
    Evaluate { run: PathBuf },
    /// Paired win/tie/loss comparison of two evaluated runs with a sign test.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// em, gen, fe or all.
        #[arg(long, default_value = "all")]
        metric: String,
        /// Compare top-1 verdicts instead of top-k.
        #[arg(long)]
        top1: bool,
    },
    /// Crafted baseline, scoring-set sweep and refinement runs, evaluated and compared.
    Sweep,
    /// Check candidate programs against I/O pairs, one JSON request per line.
    BatchCheck {
        /// Read requests from a file instead of stdin.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

/// Exit status for configuration problems; runs over the failure threshold
/// exit with 3.
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.downcast_ref::<ConfigError>().is_some()
                || matches!(e.downcast_ref::<HarnessError>(), Some(HarnessError::Config(_)));
            ExitCode::from(if config { EXIT_CONFIG } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut extra: Vec<(&'static str, Value)> = Vec::new();
    if let Command::GenDataset { train, val, test, finetune } = &cli.command {
        for (key, v) in [("train", train), ("val", val), ("test", test), ("finetune", finetune)] {
            if let Some(v) = v {
                extra.push((key, Value::Integer(*v as i64)));
            }
        }
    }
    let cfg = config::resolve(&cli.overrides, extra, std::env::vars())?;
    cfg.validate()?;
    match cli.command {
        Command::GenDataset { .. } => gen_dataset(&cfg),
        Command::Synthesize { scoring_sweep } => synthesize(&cfg, &scoring_sweep),
        Command::Evaluate { run } => evaluate_run(&cfg, &run),
        Command::Compare { a, b, metric, top1 } => compare_runs(&cfg, &a, &b, &metric, top1),
        Command::Sweep => run_sweep(&cfg),
        Command::BatchCheck { input } => check(&cfg, input.as_deref()),
    }
}

fn dataset_path(cfg: &ExperimentConfig) -> Result<&Path> {
    cfg.dataset
        .as_deref()
        .ok_or_else(|| HarnessError::Config("no dataset given (--dataset or the `dataset` key)".into()).into())
}

fn over_threshold(cfg: &ExperimentConfig, manifests: &[&RunManifest]) -> ExitCode {
    let worst = manifests.iter().map(|m| m.failure_rate()).fold(0.0, f64::max);
    if worst > cfg.failure_threshold {
        eprintln!("failure rate {:.1}% exceeds threshold {:.1}%", 100.0 * worst, 100.0 * cfg.failure_threshold);
        ExitCode::from(EXIT_PARTIAL)
    } else {
        ExitCode::SUCCESS
    }
}

fn gen_dataset(cfg: &ExperimentConfig) -> Result<ExitCode> {
    let manifest = build_dataset(&cfg.dataset_config(), &cfg.out)?;
    for f in &manifest.files {
        println!("{}: {} records", cfg.out.join(&f.path).display(), f.records);
    }
    println!("config {}", manifest.config_hash);
    Ok(ExitCode::SUCCESS)
}

fn synthesize(cfg: &ExperimentConfig, scoring_sweep: &[usize]) -> Result<ExitCode> {
    let (records, data) = load_dataset(dataset_path(cfg)?)?;
    let settings: Vec<Setting> = if scoring_sweep.is_empty() {
        vec![cfg.setting()]
    } else {
        scoring_sweep.iter().map(|&s| Setting::new(cfg.mode, cfg.iterations, s)).collect()
    };
    let generator = cfg.make_generator();
    let mut manifests = Vec::new();
    for &seed in &cfg.seeds {
        for (manifest, runs) in run_tasks(&*generator, &records, &data.inputs, &settings, cfg, seed) {
            let dir = cfg.out.join(&manifest.identity.setting.name).join(format!("seed-{seed}"));
            write_run(&dir, &manifest, &runs)?;
            println!(
                "{}: {} records, {} failed, config {}",
                dir.display(),
                manifest.records,
                manifest.failures,
                manifest.config_hash
            );
            manifests.push(manifest);
        }
    }
    Ok(over_threshold(cfg, &manifests.iter().collect::<Vec<_>>()))
}

fn evaluate_run(cfg: &ExperimentConfig, dir: &Path) -> Result<ExitCode> {
    let (manifest, runs) = read_run(dir)?;
    let (records, data) = load_dataset(dataset_path(cfg)?)?;
    let sets = build_eval_sets(&records, &data.inputs, cfg, manifest.identity.seed);
    let evals = evaluate(&manifest, &runs, &records, &sets, cfg)?;
    let table = metrics_table(&manifest, &evals);
    write_evaluation(dir, &evals, &table)?;
    print!("{}", table.render());
    Ok(ExitCode::SUCCESS)
}

fn compare_runs(cfg: &ExperimentConfig, a: &Path, b: &Path, metric: &str, top1: bool) -> Result<ExitCode> {
    let metrics: Vec<Metric> = if metric == "all" {
        Metric::ALL.to_vec()
    } else {
        vec![metric.parse().map_err(|e: String| HarnessError::Config(e))?]
    };
    let (ea, eb) = (read_verdicts(a)?, read_verdicts(b)?);
    let k = if top1 { 1 } else { cfg.top_k };
    println!("{:<24} {:>6} {:>6} {:>6} {:>12}", format!("metric@{k}"), "wins", "ties", "losses", "p");
    for m in metrics {
        let c = compare(&ea, &eb, m, !top1)?;
        println!("{:<24} {:>6} {:>6} {:>6} {:>12.3e}", m.name(), c.wins, c.ties, c.losses, c.p_value);
    }
    Ok(ExitCode::SUCCESS)
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<ExitCode> {
    let (records, data) = load_dataset(dataset_path(cfg)?)?;
    let generator = cfg.make_generator();
    let report = sweep(&*generator, &records, &data.inputs, cfg, Some(&cfg.out))?;
    print!("{}", report.table.render());
    for c in &report.comparisons {
        println!(
            "seed {} {} vs {} {}@{}: +{} ={} -{} p={:.3e}",
            c.seed,
            c.a,
            c.b,
            c.metric.name(),
            c.topk,
            c.result.wins,
            c.result.ties,
            c.result.losses,
            c.result.p_value
        );
    }
    let manifests: Vec<&RunManifest> = report.runs.iter().map(|r| &r.manifest).collect();
    Ok(over_threshold(cfg, &manifests))
}

fn check(cfg: &ExperimentConfig, input: Option<&Path>) -> Result<ExitCode> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let (lines, errors) = match input {
        Some(path) => {
            let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            batch_check(BufReader::new(file), &mut out, cfg.limits())?
        }
        None => batch_check(std::io::stdin().lock(), &mut out, cfg.limits())?,
    };
    out.flush()?;
    log::info!("{lines} requests, {errors} unparseable");
    Ok(ExitCode::SUCCESS)
}
