//! JSONL datasets: one record per program with its token stream, a
//! specification of `spec_size` pairs and one held-out pair.
//!
//! Per-record randomness derives from (global seed, split, index), so
//! records can be built in any order or in parallel. The program and the
//! held-out pair do not depend on the spec mode: a crafted and a random
//! dataset with the same seed describe the same programs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    craft_spec, sample_program, sample_valid_inputs, InputDistribution, IoPair, ProgramDistribution, SamplingError,
    SpecSet,
};
use crate::digest::{config_hash, sha256_hex};
use crate::lang::Program;
use crate::seed::{derive, rng, stream};
use crate::vm::{coverage_of, satisfies, ExecLimits};

/// Programs whose probe, spec or held-out sampling fails are redrawn up to
/// this many times per record.
const PROGRAM_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecMode {
    Random,
    Crafted,
}

impl SpecMode {
    pub fn name(self) -> &'static str {
        match self {
            SpecMode::Random => "random",
            SpecMode::Crafted => "crafted",
        }
    }
}

impl std::str::FromStr for SpecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<SpecMode, String> {
        match s {
            "random" => Ok(SpecMode::Random),
            "crafted" => Ok(SpecMode::Crafted),
            other => Err(format!("unknown mode `{other}` (expected random or crafted)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Finetune,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Val, Split::Test, Split::Finetune];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Finetune => "finetune",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub seed: u64,
    pub mode: SpecMode,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// Random-mode records for fine-tuning, built regardless of `mode`.
    pub finetune: usize,
    pub spec_size: usize,
    /// Valid inputs a sampled program must admit before it is accepted.
    pub probe_size: usize,
    pub inputs: InputDistribution,
    pub programs: ProgramDistribution,
    pub limits: ExecLimits,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            seed: 0,
            mode: SpecMode::Crafted,
            train: 20_000,
            val: 500,
            test: 500,
            finetune: 2_000,
            spec_size: 5,
            probe_size: 6,
            inputs: InputDistribution::default(),
            programs: ProgramDistribution::default(),
            limits: ExecLimits::default(),
        }
    }
}

impl DatasetConfig {
    pub fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
            Split::Finetune => self.finetune,
        }
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        self.inputs.validate()?;
        self.programs.validate()?;
        if self.spec_size == 0 {
            return Err(SamplingError::Distribution("spec_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub program: Program,
    /// Whitespace-separated terminals of the canonical print.
    pub tokens: String,
    pub spec: SpecSet,
    pub heldout: IoPair,
    pub mode: SpecMode,
    pub coverage_complete: bool,
    /// Per-record seed; downstream streams (scoring I/Os, eval sets) derive from it.
    pub seed: u64,
}

impl DatasetRecord {
    /// Re-checks a loaded record against its program.
    pub fn validate(&self, limits: ExecLimits) -> Result<(), String> {
        if self.tokens != self.program.tokenize().to_string() {
            return Err(format!("{}: tokens do not match program", self.id));
        }
        if self.spec.is_empty() {
            return Err(format!("{}: empty spec", self.id));
        }
        for (i, io) in self.spec.iter().chain(std::iter::once(&self.heldout)).enumerate() {
            if !satisfies(&self.program, io, limits) {
                return Err(format!("{}: pair {i} not produced by the program", self.id));
            }
        }
        let cov = coverage_of(&self.program, self.spec.iter().map(|io| &io.input), limits);
        if cov.is_complete_for(&self.program) != self.coverage_complete {
            return Err(format!("{}: coverage_complete flag is stale", self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("record {split}-{index}: {source}")]
    Sampling { split: &'static str, index: usize, source: SamplingError },
    #[error(transparent)]
    Config(#[from] SamplingError),
}

pub fn record_seed(global: u64, split: Split, index: usize) -> u64 {
    derive(&[global, split as u64, index as u64])
}

pub fn build_record(config: &DatasetConfig, split: Split, index: usize, mode: SpecMode) -> Result<DatasetRecord, SamplingError> {
    let seed = record_seed(config.seed, split, index);
    let mut program_rng = rng(derive(&[seed, stream::PROGRAM]));
    let mut probe_rng = rng(derive(&[seed, stream::PROBE]));
    let mut last_err = None;
    for attempt in 0..PROGRAM_ATTEMPTS {
        let program = sample_program(&config.programs, &mut program_rng);
        if let Err(e) =
            sample_valid_inputs(&program, &config.inputs, config.probe_size, &mut probe_rng, config.limits)
        {
            last_err = Some(e);
            continue;
        }
        let spec_rng = rng(derive(&[seed, stream::SPEC, attempt]));
        let spec = match mode {
            SpecMode::Random => {
                sample_valid_inputs(&program, &config.inputs, config.spec_size, spec_rng, config.limits).map(SpecSet::new)
            }
            SpecMode::Crafted => {
                craft_spec(&program, &config.inputs, config.spec_size, spec_rng, config.limits).map(|c| c.spec)
            }
        };
        let heldout_rng = rng(derive(&[seed, stream::HELDOUT, attempt]));
        let heldout = sample_valid_inputs(&program, &config.inputs, 1, heldout_rng, config.limits);
        let (spec, mut heldout) = match (spec, heldout) {
            (Ok(s), Ok(h)) => (s, h),
            (Err(e), _) | (_, Err(e)) => {
                last_err = Some(e);
                continue;
            }
        };
        let cov = coverage_of(&program, spec.iter().map(|io| &io.input), config.limits);
        return Ok(DatasetRecord {
            id: format!("{}-{index:05}", split.name()),
            tokens: program.tokenize().to_string(),
            coverage_complete: cov.is_complete_for(&program),
            program,
            spec,
            heldout: heldout.remove(0),
            mode,
            seed,
        });
    }
    Err(last_err.expect("at least one attempt"))
}

/// Builds every record of one split, in index order.
pub fn build_split(config: &DatasetConfig, split: Split) -> Result<Vec<DatasetRecord>, DatasetError> {
    config.validate()?;
    let mode = if split == Split::Finetune { SpecMode::Random } else { config.mode };
    (0..config.count(split))
        .into_par_iter()
        .map(|index| {
            build_record(config, split, index, mode).map_err(|source| DatasetError::Sampling {
                split: split.name(),
                index,
                source,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub split: Split,
    pub path: String,
    pub records: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config_hash: String,
    pub config: DatasetConfig,
    pub files: Vec<ManifestFile>,
}

pub fn write_jsonl(path: &Path, records: &[DatasetRecord]) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io { path: path.to_path_buf(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes `<split>.jsonl` for every split with a non-zero count, plus
/// `manifest.json`.
pub fn build_dataset(config: &DatasetConfig, out_dir: &Path) -> Result<DatasetManifest, DatasetError> {
    std::fs::create_dir_all(out_dir).map_err(|source| DatasetError::Io { path: out_dir.to_path_buf(), source })?;
    let mut files = Vec::new();
    for split in Split::ALL {
        if config.count(split) == 0 {
            continue;
        }
        let records = build_split(config, split)?;
        let name = format!("{}.jsonl", split.name());
        let path = out_dir.join(&name);
        write_jsonl(&path, &records)?;
        let bytes = std::fs::read(&path).map_err(|source| DatasetError::Io { path: path.clone(), source })?;
        files.push(ManifestFile { split, path: name, records: records.len(), sha256: sha256_hex(&bytes) });
    }
    let manifest = DatasetManifest { config_hash: config_hash(config), config: config.clone(), files };
    let path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json + "\n").map_err(|source| DatasetError::Io { path, source })?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(mode: SpecMode) -> DatasetConfig {
        DatasetConfig { mode, train: 0, val: 0, test: 12, finetune: 3, ..Default::default() }
    }

    #[test]
    fn records_validate_and_follow_layout() {
        for mode in [SpecMode::Random, SpecMode::Crafted] {
            let records = build_split(&tiny(mode), Split::Test).unwrap();
            assert_eq!(records.len(), 12);
            for r in &records {
                assert_eq!(r.spec.len(), 5);
                assert_eq!(r.mode, mode);
                r.validate(ExecLimits::default()).unwrap();
            }
            if mode == SpecMode::Crafted {
                let complete = records.iter().filter(|r| r.coverage_complete).count();
                // Sampled programs may contain dead branches; those stay flagged.
                assert!(complete * 2 >= records.len(), "only {complete} complete");
            }
        }
    }

    #[test]
    fn modes_share_programs_and_heldout() {
        let a = build_split(&tiny(SpecMode::Random), Split::Test).unwrap();
        let b = build_split(&tiny(SpecMode::Crafted), Split::Test).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.program, y.program);
            assert_eq!(x.heldout, y.heldout);
            assert_eq!(x.seed, y.seed);
        }
    }

    #[test]
    fn jsonl_round_trip_and_schema() {
        let records = build_split(&tiny(SpecMode::Crafted), Split::Finetune).unwrap();
        assert!(records.iter().all(|r| r.mode == SpecMode::Random));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        write_jsonl(&path, &records).unwrap();
        assert_eq!(read_jsonl(&path).unwrap(), records);
        let first = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
        let mut keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["coverage_complete", "heldout", "id", "mode", "program", "seed", "spec", "tokens"]);
        assert!(value["spec"][0]["in"]["cells"].is_array());
    }

    #[test]
    fn read_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "\n{not json}\n").unwrap();
        match read_jsonl(&path) {
            Err(DatasetError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
