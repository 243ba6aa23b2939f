//! Random programs, random valid inputs, coverage-guided ("crafted")
//! specifications, and dataset construction.

mod craft;
pub mod dataset;
mod input;
mod program;

pub use craft::{craft_spec, CraftedSpec};
pub use dataset::{build_dataset, DatasetConfig, DatasetRecord, SpecMode};
pub use input::{sample_grid, ATTEMPTS_PER_INPUT, sample_valid_inputs, sample_valid_inputs_capped, InputDistribution, ValidInputStream};
pub use program::{sample_program, ProductionWeights, ProgramDistribution};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::GridState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplingError {
    #[error("found {found} of {wanted} valid inputs after {attempts} attempts")]
    Exhausted { wanted: usize, found: usize, attempts: usize },
    #[error("invalid distribution: {0}")]
    Distribution(String),
}

/// One observation of a program: `output = run(program, input)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IoPair {
    #[serde(rename = "in")]
    pub input: GridState,
    #[serde(rename = "out")]
    pub output: GridState,
}

/// Ordered specification pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpecSet {
    pub pairs: Vec<IoPair>,
}

impl SpecSet {
    pub fn new(pairs: Vec<IoPair>) -> SpecSet {
        SpecSet { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, IoPair> {
        self.pairs.iter()
    }

    /// The first `k` pairs in order.
    pub fn truncated(&self, k: usize) -> SpecSet {
        SpecSet { pairs: self.pairs.iter().take(k).cloned().collect() }
    }
}

impl From<Vec<IoPair>> for SpecSet {
    fn from(pairs: Vec<IoPair>) -> SpecSet {
        SpecSet { pairs }
    }
}

impl<'a> IntoIterator for &'a SpecSet {
    type Item = &'a IoPair;
    type IntoIter = std::slice::Iter<'a, IoPair>;

    fn into_iter(self) -> Self::IntoIter {
        self.pairs.iter()
    }
}
