use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use super::{CandidateSet, Generator, GeneratorParams, SynthesisError};
use crate::sampling::SpecSet;

/// Memoizes a generator whose ranking does not depend on `top_k`.
///
/// Entries are keyed on the spec and every parameter except `top_k`; the
/// inner generator is always asked for `capacity` candidates and results
/// are truncated on the way out. Sweeps that revisit a specification (for
/// example the first iteration of runs that differ only in their scoring
/// set) then share one search.
pub struct CachedGenerator<G> {
    inner: G,
    capacity: usize,
    name: String,
    entries: Mutex<HashMap<[u8; 32], Arc<CandidateSet>>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<G: Generator> CachedGenerator<G> {
    pub fn new(inner: G, capacity: usize) -> CachedGenerator<G> {
        let name = format!("{}+cache", inner.name());
        CachedGenerator {
            inner,
            capacity,
            name,
            entries: Mutex::new(HashMap::new()),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn clear(&self) {
        self.entries.lock().expect("cache lock").clear();
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }

    fn key(spec: &SpecSet, params: &GeneratorParams) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(spec).expect("spec serializes"));
        for word in [params.beam_width as u64, params.seed, params.per_call_budget as u64] {
            h.update(word.to_le_bytes());
        }
        h.finalize().into()
    }
}

impl<G: Generator> Generator for CachedGenerator<G> {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&self, spec: &SpecSet, params: &GeneratorParams) -> Result<CandidateSet, SynthesisError> {
        if params.top_k > self.capacity {
            return self.inner.generate(spec, params);
        }
        let key = Self::key(spec, params);
        if let Some(hit) = self.entries.lock().expect("cache lock").get(&key).cloned() {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit.top(params.top_k));
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let full = self.inner.generate(spec, &GeneratorParams { top_k: self.capacity, ..*params })?;
        let out = full.top(params.top_k);
        self.entries.lock().expect("cache lock").insert(key, Arc::new(full));
        Ok(out)
    }
}
