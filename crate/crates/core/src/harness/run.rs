use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{io_err, read_jsonl_as, write_json, write_jsonl, ExperimentConfig, HarnessError, Setting};
use crate::digest::config_hash;
use crate::iterative::{iterative_synthesis_with, FreshPairs, IreenConfig, IterationState};
use crate::sampling::{sample_valid_inputs, DatasetRecord, InputDistribution, IoPair, SpecMode, ValidInputStream, ATTEMPTS_PER_INPUT};
use crate::seed::{derive, rng, stream};
use crate::synthesis::{CachedGenerator, Generator, GeneratorParams};

/// Result of running one setting on one black-box task. Both chains run
/// the full loop; `top1` only ever sees the generator's first candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRun {
    pub id: String,
    pub setting: String,
    pub seed: u64,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top1: Option<IterationState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topk: Option<IterationState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TaskRun {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunIdentity {
    pub setting: Setting,
    pub seed: u64,
    pub generator: String,
    pub ireen: IreenConfig,
    pub top_k: usize,
    pub dataset_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub identity: RunIdentity,
    pub records: usize,
    pub failures: usize,
}

impl RunManifest {
    pub fn failure_rate(&self) -> f64 {
        if self.records == 0 { 0.0 } else { self.failures as f64 / self.records as f64 }
    }
}

fn identity(cfg: &ExperimentConfig, setting: &Setting, seed: u64, generator: &str, records: &[DatasetRecord]) -> RunIdentity {
    let ids: Vec<(&str, u64)> = records.iter().map(|r| (r.id.as_str(), r.seed)).collect();
    RunIdentity {
        setting: setting.clone(),
        seed,
        generator: generator.to_string(),
        ireen: cfg.ireen(setting.scoring_ios, setting.iterations, seed),
        top_k: cfg.top_k,
        dataset_hash: config_hash(&ids),
    }
}

/// Pairs the black box answers for this task and seed, in query order.
/// Scoring sets of different sizes are prefixes of one stream.
fn blackbox_pairs(
    record: &DatasetRecord,
    dist: &InputDistribution,
    count: usize,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<Vec<IoPair>, String> {
    let r = rng(derive(&[record.seed, stream::SCORING, seed]));
    sample_valid_inputs(&record.program, dist, count, r, cfg.limits()).map_err(|e| e.to_string())
}

/// Scoring set for a setting: black-box pairs, or the record's crafted
/// spec followed by black-box pairs.
fn scoring_set(record: &DatasetRecord, setting: &Setting, queried: &[IoPair]) -> Vec<IoPair> {
    match setting.conditioning {
        SpecMode::Random => queried[..setting.scoring_ios].to_vec(),
        SpecMode::Crafted => {
            record.spec.iter().chain(queried).take(setting.scoring_ios).cloned().collect()
        }
    }
}

struct Requery<'a> {
    stream: ValidInputStream<'a, rand_chacha::ChaCha8Rng>,
}

impl FreshPairs for Requery<'_> {
    fn fresh_pair(&mut self) -> Option<IoPair> {
        let cap = self.stream.attempts() + ATTEMPTS_PER_INPUT;
        self.stream.next_pair(cap)
    }
}

fn run_record<G: Generator + ?Sized>(
    generator: &G,
    record: &DatasetRecord,
    dist: &InputDistribution,
    settings: &[Setting],
    hashes: &[String],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Vec<TaskRun> {
    // Settings of one task share generator calls (identical first windows,
    // the top-1 chain's prefix of the top-k list).
    let cache = CachedGenerator::new(generator, cfg.top_k);
    let most = settings.iter().map(|s| s.scoring_ios).max().unwrap_or(0);
    let queried = blackbox_pairs(record, dist, most, seed, cfg);
    settings
        .iter()
        .zip(hashes)
        .map(|(setting, hash)| {
            let mut run = TaskRun {
                id: record.id.clone(),
                setting: setting.name.clone(),
                seed,
                config_hash: hash.clone(),
                top1: None,
                topk: None,
                error: None,
            };
            let queried = match &queried {
                Ok(q) => q,
                Err(e) => {
                    run.error = Some(format!("querying the black box: {e}"));
                    return run;
                }
            };
            let ios = scoring_set(record, setting, queried);
            let config = cfg.ireen(ios.len(), setting.iterations, seed);
            let chain = |top_k: usize| {
                let config = IreenConfig { generator: GeneratorParams { top_k, ..config.generator }, ..config.clone() };
                let mut fresh = Requery {
                    stream: ValidInputStream::new(
                        &record.program,
                        dist,
                        rng(derive(&[record.seed, stream::REQUERY, seed, top_k as u64])),
                        cfg.limits(),
                    ),
                };
                iterative_synthesis_with(&cache, &ios, &config, Some(&mut fresh))
            };
            match (chain(1), chain(cfg.top_k)) {
                (Ok(a), Ok(b)) => {
                    run.top1 = Some(a);
                    run.topk = Some(b);
                }
                (Err(e), _) | (_, Err(e)) => run.error = Some(e.to_string()),
            }
            run
        })
        .collect()
}

/// Runs every setting on every record for one seed. Returns one run per
/// setting, records in input order.
pub fn run_tasks<G: Generator + ?Sized>(
    generator: &G,
    records: &[DatasetRecord],
    dist: &InputDistribution,
    settings: &[Setting],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Vec<(RunManifest, Vec<TaskRun>)> {
    let identities: Vec<RunIdentity> =
        settings.iter().map(|s| identity(cfg, s, seed, generator.name(), records)).collect();
    let hashes: Vec<String> = identities.iter().map(config_hash).collect();
    let per_record: Vec<Vec<TaskRun>> = cfg.thread_pool().install(|| {
        records
            .par_iter()
            .map(|record| run_record(generator, record, dist, settings, &hashes, cfg, seed))
            .collect()
    });
    let mut out: Vec<(RunManifest, Vec<TaskRun>)> = identities
        .into_iter()
        .zip(hashes)
        .map(|(identity, config_hash)| {
            (RunManifest { config_hash, identity, records: records.len(), failures: 0 }, Vec::with_capacity(records.len()))
        })
        .collect();
    for runs in per_record {
        for (slot, run) in out.iter_mut().zip(runs) {
            if let Some(e) = &run.error {
                log::warn!("{} [{}]: {e}", run.id, run.setting);
                slot.0.failures += 1;
            }
            slot.1.push(run);
        }
    }
    out
}

/// `<dir>/manifest.json` and `<dir>/runs.jsonl`.
pub fn write_run(dir: &Path, manifest: &RunManifest, runs: &[TaskRun]) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join("manifest.json"), manifest)?;
    write_jsonl(&dir.join("runs.jsonl"), runs)
}

pub fn read_run(dir: &Path) -> Result<(RunManifest, Vec<TaskRun>), HarnessError> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest = serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
        path: path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    Ok((manifest, read_jsonl_as(&dir.join("runs.jsonl"))?))
}
