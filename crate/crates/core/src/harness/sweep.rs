use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    build_eval_sets, compare, evaluate, metrics_table, write_evaluation, write_json, write_run, ExperimentConfig,
    HarnessError, RecordEval, RunManifest, Setting, TaskRun,
};
use crate::metrics::{CurvePoint, Metric, MetricsTable, PairedComparison};
use crate::sampling::{DatasetRecord, InputDistribution, SpecMode};
use crate::synthesis::Generator;

/// The crafted baseline: conditioned and scored on the record's own spec,
/// without querying the black box.
pub fn crafted_baseline(cfg: &ExperimentConfig) -> Setting {
    Setting::new(SpecMode::Crafted, 1, cfg.conditioning_size)
}

/// The settings behind the main results table and the scoring-set curve:
/// the crafted baseline, random single-shot per scoring-set size, and
/// random with refinement.
pub fn sweep_settings(cfg: &ExperimentConfig) -> Vec<Setting> {
    let mut settings = vec![crafted_baseline(cfg)];
    for &s in &cfg.scoring_sweep {
        settings.push(Setting::new(SpecMode::Random, 1, s));
    }
    if !cfg.scoring_sweep.contains(&cfg.scoring_ios) {
        settings.push(Setting::new(SpecMode::Random, 1, cfg.scoring_ios));
    }
    settings.push(Setting::new(SpecMode::Random, cfg.iterations, cfg.scoring_ios));
    settings.dedup();
    settings
}

/// One evaluated run of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub manifest: RunManifest,
    pub runs: Vec<TaskRun>,
    pub evals: Vec<RecordEval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub a: String,
    pub b: String,
    pub metric: Metric,
    pub topk: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub result: PairedComparison,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub table: MetricsTable,
    pub comparisons: Vec<ComparisonRow>,
    pub runs: Vec<SweepRun>,
}

impl SweepReport {
    pub fn run(&self, setting: &str, seed: u64) -> Option<&SweepRun> {
        self.runs.iter().find(|r| r.manifest.identity.setting.name == setting && r.manifest.identity.seed == seed)
    }
}

fn scoring_curve(cfg: &ExperimentConfig, table: &MetricsTable, seed: u64) -> Vec<CurvePoint> {
    let mut out = Vec::new();
    for metric in Metric::ALL {
        for topk in [1, cfg.top_k] {
            for &s in &cfg.scoring_sweep {
                let name = Setting::new(SpecMode::Random, 1, s).name;
                if let Some(row) = table
                    .rows
                    .iter()
                    .find(|r| r.setting == name && r.metric == metric && r.topk == topk && r.seed == seed)
                {
                    out.push(CurvePoint {
                        setting: "random-n1".into(),
                        series: "scoring_ios".into(),
                        x: s,
                        metric,
                        topk,
                        accuracy: row.accuracy,
                        n: row.n,
                        seed,
                        config_hash: row.config_hash.clone(),
                    });
                }
            }
        }
    }
    out
}

/// Runs and evaluates every sweep setting for every configured seed on one
/// test set. With `out` set, each run lands in `<out>/<setting>/seed-<s>/`
/// and the combined table, curves and comparisons in `<out>/`.
pub fn sweep(
    generator: &dyn Generator,
    records: &[DatasetRecord],
    dist: &InputDistribution,
    cfg: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<SweepReport, HarnessError> {
    cfg.validate()?;
    let settings = sweep_settings(cfg);
    let mut report = SweepReport { table: MetricsTable::default(), comparisons: Vec::new(), runs: Vec::new() };
    for &seed in &cfg.seeds {
        let sets = build_eval_sets(records, dist, cfg, seed);
        let mut seed_table = MetricsTable::default();
        for (manifest, runs) in super::run_tasks(generator, records, dist, &settings, cfg, seed) {
            let evals = evaluate(&manifest, &runs, records, &sets, cfg)?;
            let table = metrics_table(&manifest, &evals);
            if let Some(out) = out {
                let dir = out.join(&manifest.identity.setting.name).join(format!("seed-{seed}"));
                write_run(&dir, &manifest, &runs)?;
                write_evaluation(&dir, &evals, &table)?;
            }
            seed_table.extend(table);
            report.runs.push(SweepRun { manifest, runs, evals });
        }
        seed_table.curves.extend(scoring_curve(cfg, &seed_table, seed));
        report.table.extend(seed_table);

        let crafted = crafted_baseline(cfg).name;
        let random = Setting::new(SpecMode::Random, 1, cfg.scoring_ios).name;
        let refined = Setting::new(SpecMode::Random, cfg.iterations, cfg.scoring_ios).name;
        let (Some(c), Some(r), Some(i)) = (report.run(&crafted, seed), report.run(&random, seed), report.run(&refined, seed))
        else {
            continue;
        };
        let mut rows = Vec::new();
        for metric in Metric::ALL {
            rows.push(ComparisonRow {
                a: crafted.clone(),
                b: random.clone(),
                metric,
                topk: cfg.top_k,
                seed,
                result: compare(&c.evals, &r.evals, metric, true)?,
            });
            rows.push(ComparisonRow {
                a: refined.clone(),
                b: random.clone(),
                metric,
                topk: cfg.top_k,
                seed,
                result: compare(&i.evals, &r.evals, metric, true)?,
            });
        }
        report.comparisons.extend(rows);
    }
    if let Some(out) = out {
        write_json(&out.join("metrics.json"), &report.table)?;
        write_json(&out.join("comparisons.json"), &report.comparisons)?;
        let csv = out.join("metrics.csv");
        std::fs::write(&csv, report.table.rows_csv()).map_err(super::io_err(&csv))?;
        let curves = out.join("curves.csv");
        std::fs::write(&curves, report.table.curves_csv()).map_err(super::io_err(&curves))?;
        let summary = out.join("summary.txt");
        std::fs::write(&summary, report.table.render()).map_err(super::io_err(&summary))?;
    }
    Ok(report)
}
