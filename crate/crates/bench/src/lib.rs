//! Benchmarks for the iteration engine; see `benches/`.
