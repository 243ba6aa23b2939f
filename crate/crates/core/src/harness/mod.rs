//! Experiment plumbing shared by the command-line front end and the
//! acceptance suite: configuration, synthesis runs over a dataset,
//! evaluation, paired comparison, sweeps and batch satisfaction checks.

mod batch;
mod eval;
mod run;
mod sweep;

pub use batch::{batch_check, CheckRequest, CheckResult};
pub use eval::{
    build_eval_sets, compare, evaluate, metrics_table, read_verdicts, write_evaluation, RecordEval, RecordEvalSets,
};
pub use run::{read_run, run_tasks, write_run, RunIdentity, RunManifest, TaskRun};
pub use sweep::{crafted_baseline, sweep, sweep_settings, ComparisonRow, SweepReport, SweepRun};

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iterative::IreenConfig;
use crate::sampling::dataset::{read_jsonl, DatasetError, DatasetManifest};
use crate::sampling::{DatasetConfig, DatasetRecord, ProgramDistribution, SpecMode};
use crate::synthesis::{Generator, GeneratorParams, RemoteGenerator, SearchGenerator};
use crate::vm::ExecLimits;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("missing record: {0}")]
    MissingRecord(String),
    #[error("runs are not aligned: {0}")]
    Alignment(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Builtin,
    Remote,
}

impl std::str::FromStr for GeneratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "builtin" => Ok(GeneratorKind::Builtin),
            "remote" => Ok(GeneratorKind::Remote),
            other => Err(format!("unknown generator `{other}` (expected builtin or remote)")),
        }
    }
}

/// Every knob of an experiment, as one flat set of keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset directory (with `test.jsonl`) or a JSONL file.
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    pub generator: GeneratorKind,
    #[serde(alias = "synth.endpoint")]
    pub endpoint: String,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    pub seeds: Vec<u64>,
    /// Spec provenance for `gen-dataset`; conditioning source for runs.
    pub mode: SpecMode,
    pub iterations: usize,
    pub conditioning_size: usize,
    pub scoring_ios: usize,
    pub beam_width: usize,
    pub top_k: usize,
    pub per_call_budget: usize,
    pub early_exit: bool,
    pub requery: bool,
    pub max_steps: u32,
    pub max_cond_evals: u32,
    pub eval_ios: usize,
    pub eval_attempt_cap: usize,
    pub eval_sizes: Vec<usize>,
    pub scoring_sweep: Vec<usize>,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Fraction of failed records above which a run exits non-zero.
    pub failure_threshold: f64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub finetune: usize,
    pub spec_size: usize,
    pub max_depth: usize,
    pub max_body_len: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ireen = IreenConfig::default();
        let data = DatasetConfig::default();
        ExperimentConfig {
            dataset: None,
            out: PathBuf::from("runs"),
            generator: GeneratorKind::Builtin,
            endpoint: "http://127.0.0.1:8080".to_string(),
            max_in_flight: 4,
            timeout_secs: 60,
            seeds: vec![0],
            mode: SpecMode::Random,
            iterations: ireen.iterations,
            conditioning_size: ireen.conditioning_size,
            scoring_ios: ireen.scoring_ios,
            beam_width: ireen.generator.beam_width,
            top_k: ireen.generator.top_k,
            per_call_budget: ireen.generator.per_call_budget,
            early_exit: ireen.early_exit,
            requery: ireen.requery,
            max_steps: ireen.limits.max_steps,
            max_cond_evals: ireen.limits.max_cond_evals,
            eval_ios: crate::metrics::EVAL_PAIRS,
            eval_attempt_cap: 10_000,
            eval_sizes: vec![10, 25, 50, 100, 200],
            scoring_sweep: vec![5, 10, 25, 50],
            workers: 0,
            failure_threshold: 0.01,
            train: 0,
            val: 0,
            test: data.test,
            finetune: 0,
            spec_size: data.spec_size,
            max_depth: data.programs.max_depth,
            max_body_len: data.programs.max_body_len,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if !(0.0..=1.0).contains(&self.failure_threshold) {
            return bad("failure_threshold must lie in [0, 1]".into());
        }
        if self.eval_ios == 0 {
            return bad("eval_ios must be positive".into());
        }
        if self.scoring_sweep.iter().any(|&s| s < self.conditioning_size) {
            return bad("every scoring_sweep entry must be at least conditioning_size".into());
        }
        if let Some(path) = &self.dataset {
            if !path.exists() {
                return bad(format!("dataset {} does not exist", path.display()));
            }
        }
        self.ireen(self.scoring_ios, self.iterations, 0)
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn limits(&self) -> ExecLimits {
        ExecLimits { max_steps: self.max_steps, max_cond_evals: self.max_cond_evals }
    }

    pub fn generator_params(&self, seed: u64) -> GeneratorParams {
        GeneratorParams { beam_width: self.beam_width, top_k: self.top_k, seed, per_call_budget: self.per_call_budget }
    }

    pub fn ireen(&self, scoring_ios: usize, iterations: usize, seed: u64) -> IreenConfig {
        IreenConfig {
            iterations,
            conditioning_size: self.conditioning_size,
            scoring_ios,
            generator: self.generator_params(seed),
            limits: self.limits(),
            seed,
            early_exit: self.early_exit,
            requery: self.requery,
        }
    }

    pub fn dataset_config(&self) -> DatasetConfig {
        let base = DatasetConfig::default();
        DatasetConfig {
            seed: self.seeds[0],
            mode: self.mode,
            train: self.train,
            val: self.val,
            test: self.test,
            finetune: self.finetune,
            spec_size: self.spec_size,
            programs: ProgramDistribution { max_depth: self.max_depth, max_body_len: self.max_body_len, ..base.programs },
            limits: self.limits(),
            ..base
        }
    }

    /// The setting a plain `synthesize` run uses.
    pub fn setting(&self) -> Setting {
        Setting::new(self.mode, self.iterations, self.scoring_ios)
    }

    pub fn make_generator(&self) -> Box<dyn Generator> {
        match self.generator {
            GeneratorKind::Builtin => Box::new(SearchGenerator::default()),
            GeneratorKind::Remote => Box::new(RemoteGenerator::new(
                &self.endpoint,
                self.max_in_flight,
                Duration::from_secs(self.timeout_secs),
            )),
        }
    }

    pub fn thread_pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(self.workers).build().expect("thread pool")
    }
}

/// One experimental condition: where the first conditioning window comes
/// from, how many refinement iterations run, and how many black-box pairs
/// score candidates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Setting {
    pub name: String,
    pub conditioning: SpecMode,
    pub iterations: usize,
    pub scoring_ios: usize,
}

impl Setting {
    pub fn new(conditioning: SpecMode, iterations: usize, scoring_ios: usize) -> Setting {
        Setting {
            name: format!("{}-n{iterations}-s{scoring_ios}", conditioning.name()),
            conditioning,
            iterations,
            scoring_ios,
        }
    }
}

/// Test records plus the configuration that generated them (defaults when
/// no manifest sits next to the file).
pub fn load_dataset(path: &Path) -> Result<(Vec<DatasetRecord>, DatasetConfig), HarnessError> {
    let (file, dir) = if path.is_dir() { (path.join("test.jsonl"), path.to_path_buf()) } else {
        (path.to_path_buf(), path.parent().map(Path::to_path_buf).unwrap_or_default())
    };
    let records = read_jsonl(&file)?;
    let manifest = dir.join("manifest.json");
    let config = if manifest.exists() {
        let text = std::fs::read_to_string(&manifest).map_err(io_err(&manifest))?;
        let m: DatasetManifest = serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
            path: manifest.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        m.config
    } else {
        DatasetConfig::default()
    };
    Ok((records, config))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    std::fs::write(path, text).map_err(io_err(path))
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), HarnessError> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("serializable"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(io_err(path))
}

pub(crate) fn read_jsonl_as<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HarnessError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
