use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{read_jsonl_as, write_json, write_jsonl, ExperimentConfig, HarnessError, RunManifest, TaskRun};
use crate::iterative::IterationState;
use crate::lang::{parse, Program};
use crate::metrics::{
    build_eval_set, functional_equivalence, CurvePoint, EvalSet, EvalSetOptions, Metric, MetricRow, MetricsTable,
    PairedComparison, Verdict,
};
use crate::sampling::{DatasetRecord, InputDistribution};
use crate::seed::{derive, rng, stream};

/// Evaluation-time pairs for one task: the main eval set plus one set per
/// size of the stability probe.
#[derive(Debug, Clone)]
pub struct RecordEvalSets {
    pub id: String,
    pub main: Result<EvalSet, String>,
    pub sized: Vec<(usize, Result<EvalSet, String>)>,
}

pub fn build_eval_sets(
    records: &[DatasetRecord],
    dist: &InputDistribution,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Vec<RecordEvalSets> {
    let build = |r: &DatasetRecord, count: usize, salt: u64| {
        let options = EvalSetOptions { count, attempt_cap: cfg.eval_attempt_cap };
        let stream_rng = rng(derive(&[r.seed, stream::EVAL, seed, salt]));
        build_eval_set(&r.program, dist, stream_rng, cfg.limits(), options).map_err(|e| e.to_string())
    };
    cfg.thread_pool().install(|| {
        records
            .par_iter()
            .map(|r| RecordEvalSets {
                id: r.id.clone(),
                main: build(r, cfg.eval_ios, 0),
                sized: cfg.eval_sizes.iter().map(|&n| (n, build(r, n, 1 + n as u64))).collect(),
            })
            .collect()
    })
}

/// Verdicts for one task under one setting. `top1[i]` and `topk[i]` judge
/// the global best after iteration `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEval {
    pub id: String,
    pub setting: String,
    pub seed: u64,
    pub config_hash: String,
    pub run_ok: bool,
    pub eval_complete: bool,
    pub top1: Vec<Verdict>,
    pub topk: Vec<Verdict>,
    /// Functional equivalence of the final top-k program per eval-set size.
    pub fe_by_size: Vec<(usize, bool)>,
}

impl RecordEval {
    pub fn chain(&self, topk: bool) -> &[Verdict] {
        if topk { &self.topk } else { &self.top1 }
    }

    pub fn last(&self, topk: bool) -> Verdict {
        self.chain(topk).last().copied().unwrap_or_default()
    }
}

fn judge_chain(
    state: Option<&IterationState>,
    iterations: usize,
    record: &DatasetRecord,
    eval: Option<&EvalSet>,
    cfg: &ExperimentConfig,
    memo: &mut HashMap<String, Verdict>,
) -> Vec<Verdict> {
    let Some(state) = state else { return vec![Verdict::default(); iterations] };
    (1..=iterations)
        .map(|i| {
            let Some(entry) = state.best_after(i) else { return Verdict::default() };
            if let Some(v) = memo.get(&entry.best_program) {
                return *v;
            }
            let v = match parse(&entry.best_program) {
                Ok(p) => judge(&p, record, eval, cfg),
                Err(_) => Verdict::default(),
            };
            memo.insert(entry.best_program.clone(), v);
            v
        })
        .collect()
}

fn judge(pred: &Program, record: &DatasetRecord, eval: Option<&EvalSet>, cfg: &ExperimentConfig) -> Verdict {
    let limits = cfg.limits();
    match eval {
        Some(eval) => Verdict::judge(pred, &record.program, &record.spec, &record.heldout, eval, limits),
        None => Verdict {
            exact_match: crate::metrics::exact_match(pred, &record.program),
            generalization: crate::metrics::generalization(pred, &record.spec, &record.heldout, limits),
            functional_equivalence: false,
        },
    }
}

/// Judges every task of a run against the dataset. Generalization uses the
/// record's stored spec and held-out pair whatever the run conditioned on.
pub fn evaluate(
    manifest: &RunManifest,
    runs: &[TaskRun],
    records: &[DatasetRecord],
    sets: &[RecordEvalSets],
    cfg: &ExperimentConfig,
) -> Result<Vec<RecordEval>, HarnessError> {
    if runs.is_empty() {
        return Err(HarnessError::MissingRecord("run contains no task results".into()));
    }
    let by_id: HashMap<&str, (&DatasetRecord, &RecordEvalSets)> = records
        .iter()
        .map(|r| r.id.as_str())
        .zip(records.iter().zip(sets))
        .collect();
    let n = manifest.identity.setting.iterations;
    cfg.thread_pool().install(|| {
        runs.par_iter()
            .map(|run| {
                let (record, sets) = by_id.get(run.id.as_str()).ok_or_else(|| HarnessError::MissingRecord(run.id.clone()))?;
                if sets.id != record.id {
                    return Err(HarnessError::Alignment(format!("eval sets for {} attached to {}", sets.id, record.id)));
                }
                let eval = sets.main.as_ref().ok();
                let mut memo = HashMap::new();
                let top1 = judge_chain(run.top1.as_ref(), n, record, eval, cfg, &mut memo);
                let topk = judge_chain(run.topk.as_ref(), n, record, eval, cfg, &mut memo);
                let last = run
                    .topk
                    .as_ref()
                    .and_then(|s| s.best_program.as_ref());
                let fe_by_size = sets
                    .sized
                    .iter()
                    .map(|(size, set)| {
                        let ok = match (last, set) {
                            (Some(p), Ok(set)) => functional_equivalence(p, set, cfg.limits()),
                            _ => false,
                        };
                        (*size, ok)
                    })
                    .collect();
                Ok(RecordEval {
                    id: run.id.clone(),
                    setting: run.setting.clone(),
                    seed: run.seed,
                    config_hash: run.config_hash.clone(),
                    run_ok: run.is_ok(),
                    eval_complete: eval.is_some_and(|e| e.coverage_complete),
                    top1,
                    topk,
                    fe_by_size,
                })
            })
            .collect()
    })
}

fn percent(hits: usize, n: usize) -> f64 {
    if n == 0 { 0.0 } else { 100.0 * hits as f64 / n as f64 }
}

/// Table rows (final iteration, top-1 and top-k) and curves (per
/// iteration, per eval-set size) for one run.
pub fn metrics_table(manifest: &RunManifest, evals: &[RecordEval]) -> MetricsTable {
    let setting = &manifest.identity.setting;
    let (seed, hash, k) = (manifest.identity.seed, &manifest.config_hash, manifest.identity.top_k);
    let n = evals.len();
    let mut table = MetricsTable::default();
    for metric in Metric::ALL {
        for (topk, use_k) in [(1, false), (k, true)] {
            let hits = evals.iter().filter(|e| e.last(use_k).get(metric)).count();
            table.rows.push(MetricRow {
                setting: setting.name.clone(),
                metric,
                topk,
                accuracy: percent(hits, n),
                n,
                seed,
                config_hash: hash.clone(),
            });
            for i in 0..setting.iterations {
                let hits = evals.iter().filter(|e| e.chain(use_k).get(i).is_some_and(|v| v.get(metric))).count();
                table.curves.push(CurvePoint {
                    setting: setting.name.clone(),
                    series: "iteration".into(),
                    x: i + 1,
                    metric,
                    topk,
                    accuracy: percent(hits, n),
                    n,
                    seed,
                    config_hash: hash.clone(),
                });
            }
        }
    }
    let sizes: Vec<usize> = evals.first().map(|e| e.fe_by_size.iter().map(|(s, _)| *s).collect()).unwrap_or_default();
    for (j, size) in sizes.into_iter().enumerate() {
        let hits = evals.iter().filter(|e| e.fe_by_size.get(j).is_some_and(|(_, ok)| *ok)).count();
        table.curves.push(CurvePoint {
            setting: setting.name.clone(),
            series: "eval_size".into(),
            x: size,
            metric: Metric::FunctionalEquivalence,
            topk: k,
            accuracy: percent(hits, n),
            n,
            seed,
            config_hash: hash.clone(),
        });
    }
    table
}

/// `verdicts.jsonl`, `metrics.csv`, `metrics.json` and `curves.csv`.
pub fn write_evaluation(dir: &Path, evals: &[RecordEval], table: &MetricsTable) -> Result<(), HarnessError> {
    write_jsonl(&dir.join("verdicts.jsonl"), evals)?;
    write_json(&dir.join("metrics.json"), table)?;
    let csv = dir.join("metrics.csv");
    std::fs::write(&csv, table.rows_csv()).map_err(super::io_err(&csv))?;
    let curves = dir.join("curves.csv");
    std::fs::write(&curves, table.curves_csv()).map_err(super::io_err(&curves))
}

pub fn read_verdicts(dir: &Path) -> Result<Vec<RecordEval>, HarnessError> {
    read_jsonl_as(&dir.join("verdicts.jsonl"))
}

/// Paired comparison of the final verdicts of two runs over the same tasks.
pub fn compare(a: &[RecordEval], b: &[RecordEval], metric: Metric, topk: bool) -> Result<PairedComparison, HarnessError> {
    let b_by_id: HashMap<&str, &RecordEval> = b.iter().map(|e| (e.id.as_str(), e)).collect();
    if a.len() != b.len() {
        return Err(HarnessError::Alignment(format!("{} vs {} records", a.len(), b.len())));
    }
    let mut pairs = Vec::with_capacity(a.len());
    for ea in a {
        let eb = b_by_id.get(ea.id.as_str()).ok_or_else(|| HarnessError::Alignment(format!("{} missing from second run", ea.id)))?;
        pairs.push((ea.last(topk).get(metric), eb.last(topk).get(metric)));
    }
    Ok(PairedComparison::from_pairs(pairs))
}
