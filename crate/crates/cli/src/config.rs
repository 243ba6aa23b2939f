//! Layered configuration: defaults, then a flat TOML file, then `IREEN_*`
//! environment variables, then command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use ireen::harness::ExperimentConfig;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Flags that override configuration keys. Any key can also be set through
/// `IREEN_<KEY>` (upper case), e.g. `IREEN_EVAL_IOS=200`.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat key-value TOML file; nested tables are read as dotted keys.
    #[arg(long, global = true, env = "IREEN_CONFIG")]
    pub config: Option<PathBuf>,
    /// Dataset directory (containing test.jsonl) or a JSONL file.
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seeds, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub seed: Vec<u64>,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[arg(long, global = true)]
    pub conditioning_size: Option<usize>,
    #[arg(long, global = true)]
    pub scoring_ios: Option<usize>,
    #[arg(long, global = true)]
    pub beam_width: Option<usize>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// builtin or remote.
    #[arg(long, global = true)]
    pub generator: Option<String>,
    /// Base URL of the remote synthesis service.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// random or crafted.
    #[arg(long, global = true)]
    pub mode: Option<String>,
}

impl Overrides {
    fn entries(&self) -> Vec<(&'static str, Value)> {
        let int = |v: usize| Value::Integer(v as i64);
        let mut out = Vec::new();
        let mut put = |key: &'static str, value: Option<Value>| {
            if let Some(v) = value {
                out.push((key, v));
            }
        };
        put("dataset", self.dataset.as_ref().map(|p| Value::String(p.display().to_string())));
        put("out", self.out.as_ref().map(|p| Value::String(p.display().to_string())));
        if !self.seed.is_empty() {
            put("seeds", Some(Value::Array(self.seed.iter().map(|&s| Value::Integer(s as i64)).collect())));
        }
        put("iterations", self.iterations.map(int));
        put("conditioning_size", self.conditioning_size.map(int));
        put("scoring_ios", self.scoring_ios.map(int));
        put("beam_width", self.beam_width.map(int));
        put("top_k", self.top_k.map(int));
        put("generator", self.generator.clone().map(Value::String));
        put("endpoint", self.endpoint.clone().map(Value::String));
        put("workers", self.workers.map(int));
        put("mode", self.mode.clone().map(Value::String));
        out
    }
}

fn flatten(prefix: &str, table: Table, out: &mut Table) {
    for (key, value) in table {
        let key = if prefix.is_empty() { key } else { format!("{prefix}.{key}") };
        match value {
            Value::Table(inner) => flatten(&key, inner, out),
            other => {
                out.insert(key, other);
            }
        }
    }
}

/// Dotted spellings accepted for flat keys.
fn canonical(key: &str) -> String {
    match key {
        "synth.endpoint" => "endpoint".into(),
        "seed" => "seeds".into(),
        other => other.replace('-', "_"),
    }
}

pub fn read_file(path: &Path) -> Result<Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    let parsed: Table =
        toml::from_str(&text).map_err(|e| ConfigError::Syntax { path: path.to_path_buf(), message: e.to_string() })?;
    let mut flat = Table::new();
    flatten("", parsed, &mut flat);
    Ok(flat.into_iter().map(|(k, v)| (canonical(&k), v)).collect())
}

/// A raw environment value as a TOML value: numbers, booleans and arrays
/// as written, comma lists for `seeds`, anything else as a string.
fn env_value(key: &str, raw: &str) -> Value {
    if key == "seeds" && !raw.trim_start().starts_with('[') {
        let parts: Result<Vec<i64>, _> = raw.split(',').map(|s| s.trim().parse()).collect();
        if let Ok(parts) = parts {
            return Value::Array(parts.into_iter().map(Value::Integer).collect());
        }
    }
    match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn env_entries<I: IntoIterator<Item = (String, String)>>(vars: I) -> Vec<(String, Value)> {
    let mut out: Vec<(String, Value)> = vars
        .into_iter()
        .filter_map(|(k, v)| {
            let key = k.strip_prefix("IREEN_")?;
            if key == "CONFIG" {
                return None;
            }
            let key = canonical(&key.to_ascii_lowercase());
            let value = env_value(&key, &v);
            Some((key, value))
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn resolve<I>(overrides: &Overrides, extra: Vec<(&'static str, Value)>, env: I) -> Result<ExperimentConfig, ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut table = match &overrides.config {
        Some(path) => read_file(path)?,
        None => Table::new(),
    };
    for (key, value) in env_entries(env) {
        table.insert(key, value);
    }
    for (key, value) in overrides.entries().into_iter().chain(extra) {
        table.insert(key.to_string(), value);
    }
    Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Invalid(e.message().to_string()))
}
