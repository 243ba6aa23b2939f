//! Criterion benchmarks for the ireen pipeline live in `benches/`.
